#!/usr/bin/env python3
"""Deviation-bound demonstration.

Runs a small convex experiment, measures the per-step distance between
the averaged distributed weights and the restarted centralized sequence,
and prints it next to the closed-form bound evaluated with empirically
estimated smoothness and divergence constants.

Usage: python3 scripts/deviation_check.py [--kappa1 4] [--kappa2 3]
"""

import argparse

from hierfl import bounds, datasets, divergence, hierfavg, models


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappa1", type=int, default=4)
    ap.add_argument("--kappa2", type=int, default=3)
    ap.add_argument("--intervals", type=int, default=4)
    args = ap.parse_args()

    train = datasets.generate_synthetic(6, 5, 40, seed=21)
    topo = datasets.Topology(num_clients=12, num_edges=3)
    part = datasets.partition(train, topo, "simple_niid", seed=7)
    spec = models.ModelSpec(kind="logistic_regression", input_dim=5, num_classes=6)

    sm = models.estimate_smoothness(spec, train, probes=16, seed=3)
    eta = min(0.9 / sm.beta, 0.1)
    total = args.kappa1 * args.kappa2 * args.intervals
    sched = hierfavg.Schedule(args.kappa1, args.kappa2, total,
                              hierfavg.FixedStep(eta))
    res = hierfavg.run_hierfavg(train, part, spec, sched, batch_size=20,
                                mode="full_gradient", seed=0)
    est = divergence.estimate_divergence(
        train, part, spec, probes=8 + len(res.checkpoints),
        probe_source="trajectory",
        trajectory=divergence.random_probes(spec.param_dim, 8, 0) + res.checkpoints,
    )
    bp = bounds.BoundParams(beta=sm.beta, delta=est.client_edge,
                            Delta=est.edge_cloud, eta=eta,
                            kappa1=args.kappa1, kappa2=args.kappa2,
                            total_updates=total)
    print(f"beta={sm.beta:.4f}  eta={eta:.4f}  "
          f"delta={est.client_edge:.4f}  Delta={est.edge_cloud:.4f}")
    print(f"{'k':>4}  {'measured':>12}  {'bound':>12}  within")
    for k in range(1, total + 1):
        g = bounds.convex_deviation_bound(k, bp, sched.cloud_interval_of(k))
        d = float(res.deviations[k - 1])
        print(f"{k:>4}  {d:12.3e}  {g:12.3e}  {'yes' if d <= g else 'NO'}")


if __name__ == "__main__":
    main()
