#!/usr/bin/env python3
"""Cloud-aggregation period experiment.

Fixes kappa1=12 local steps per edge round and varies the cloud period
kappa2 on a 20-client / 2-edge topology.  Under an edge-IID partition
(each edge covers all classes) the accuracy curves should nearly
coincide; under an edge-NIID partition (each edge covers half the
classes) a rare cloud sync should end measurably lower.

Usage: python3 scripts/guideline2.py [--seeds 5]
"""

import argparse

import numpy as np

from hierfl import datasets, hierfavg, models


def run_once(seed, kappa2, scheme):
    train = datasets.generate_synthetic(10, 8, 50, seed=100 + seed, cluster_std=0.12)
    test = datasets.generate_synthetic(10, 8, 60, seed=100 + seed, split=1,
                                       cluster_std=0.12)
    topo = datasets.Topology(num_clients=20, num_edges=2)
    part = datasets.partition(train, topo, scheme, seed=seed)
    spec = models.ModelSpec(kind="logistic_regression", input_dim=8, num_classes=10)
    sched = hierfavg.Schedule(12, kappa2, 144, hierfavg.FixedStep(2.0))
    return hierfavg.run_hierfavg(train, part, spec, sched, batch_size=20,
                                 mode="full_gradient", seed=seed, test_set=test,
                                 track_virtual=False)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    print("seed  iid max curve gap   niid end acc k2=1 / k2=4   niid gap")
    for seed in range(args.seeds):
        curves = {}
        for k2 in (1, 2, 4):
            res = run_once(seed, k2, "edge_iid")
            curves[k2] = np.array([r.test_accuracy for r in res.trace])
        iid_gap = max(
            float(np.max(np.abs(curves[a] - curves[b])))
            for a in (1, 2, 4) for b in (1, 2, 4) if a < b
        )
        fast = run_once(seed, 1, "edge_niid").trace[-1].test_accuracy
        slow = run_once(seed, 4, "edge_niid").trace[-1].test_accuracy
        print(f"{seed:>4}  {iid_gap:17.3f}   {fast:10.3f} / {slow:.3f}"
              f"   {fast - slow:8.3f}")


if __name__ == "__main__":
    main()
