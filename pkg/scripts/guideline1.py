#!/usr/bin/env python3
"""Edge-aggregation frequency experiment.

Holds the cloud period kappa1*kappa2 fixed at 12 and varies how that
budget is split between local steps (kappa1) and edge rounds (kappa2) on
a 20-client / 4-edge non-IID topology.  Reports the training epochs
needed to reach the accuracy that the least-communicative setting
(kappa1=12) achieves at the end of its budget.

Usage: python3 scripts/guideline1.py [--seeds 5] [--updates 1200]
"""

import argparse
import math

from hierfl import datasets, hierfavg, models


def run_once(seed, kappa1, total_updates):
    train = datasets.generate_synthetic(10, 8, 50, seed=100 + seed, cluster_std=0.12)
    test = datasets.generate_synthetic(10, 8, 30, seed=100 + seed, split=1,
                                       cluster_std=0.12)
    topo = datasets.Topology(num_clients=20, num_edges=4)
    part = datasets.partition(train, topo, "edge_niid", seed=seed)
    spec = models.ModelSpec(kind="mlp", input_dim=8, num_classes=10, hidden_dim=16)
    sched = hierfavg.Schedule(kappa1, 12 // kappa1, total_updates,
                              hierfavg.FixedStep(1.0))
    return hierfavg.run_hierfavg(train, part, spec, sched, batch_size=20,
                                 mode="full_gradient", seed=seed, test_set=test,
                                 track_virtual=False)


def epochs_to(res, target):
    for r in res.trace:
        if not math.isnan(r.test_accuracy) and r.test_accuracy >= target:
            return res.epochs_at(r.k)
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--updates", type=int, default=1200)
    args = ap.parse_args()

    splits = (12, 6, 3, 1)
    print("seed  target  " + "  ".join(f"k1={k1:>2}" for k1 in splits))
    for seed in range(args.seeds):
        results = {k1: run_once(seed, k1, args.updates) for k1 in splits}
        target = results[12].trace[-1].test_accuracy
        cells = []
        for k1 in splits:
            e = epochs_to(results[k1], target)
            cells.append("   --" if e is None else f"{e:5.0f}")
        print(f"{seed:>4}  {target:6.3f}  " + "  ".join(cells))
    print("\ncolumns: epochs to reach the target accuracy "
          "(-- means never reached)")


if __name__ == "__main__":
    main()
