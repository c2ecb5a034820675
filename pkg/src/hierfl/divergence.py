"""Empirical gradient-divergence measurement.

For probe points w, compares each client's full-shard gradient against its
edge's weighted-mean gradient (client-edge divergence) and each edge's
gradient against the global weighted-mean gradient (edge-cloud
divergence).  The definitional constants are suprema over all w; we report
maxima over a finite probe set, i.e. empirical lower bounds, evaluated
where the bounds are actually applied (around the start point and along
trajectory checkpoints).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import models
from .datasets import Dataset, Partition

PROBE_SOURCES = ("random", "trajectory")


@dataclass(frozen=True)
class DivergenceEstimate:
    per_client: np.ndarray   # max_w ||g_i - g_edge(i)|| per client
    per_edge: np.ndarray     # max_w ||g_edge - g_global|| per edge
    client_edge: float       # size-weighted mean of per_client
    edge_cloud: float        # size-weighted mean of per_edge
    probe_count: int


def random_probes(dim: int, probes: int, seed: int, center=None, scales=(0.1, 1.0)):
    """Prefix-stable probe sequence: center plus scaled Gaussian offsets."""
    rng = np.random.default_rng([seed, 0xD1])
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=np.float64)
    points = [center]
    for j in range(probes - 1):
        points.append(center + scales[j % len(scales)] * rng.standard_normal(dim))
    return points


def estimate_divergence(
    dataset: Dataset,
    part: Partition,
    spec: models.ModelSpec,
    probes: int,
    probe_source: str = "random",
    trajectory=None,
    seed: int = 0,
) -> DivergenceEstimate:
    """Measure client-edge and edge-cloud gradient divergences."""
    if probe_source not in PROBE_SOURCES:
        raise ValueError(f"unknown probe_source {probe_source!r}")
    if probes < 1:
        raise ValueError("need at least one probe point")
    if probe_source == "trajectory":
        if not trajectory:
            raise ValueError("trajectory probe source needs a non-empty trajectory")
        points = [np.asarray(w, dtype=np.float64) for w in trajectory[:probes]]
    else:
        points = random_probes(spec.param_dim, probes, seed)

    sizes = part.shard_sizes().astype(np.float64)
    N, L = part.num_clients, part.num_edges
    edge_clients = [part.clients_of_edge(l) for l in range(L)]
    edge_sizes = np.array([sizes[cs].sum() for cs in edge_clients])
    total = sizes.sum()
    shards = [(dataset.features[s], dataset.labels[s]) for s in part.client_shards]

    per_client = np.zeros(N)
    per_edge = np.zeros(L)
    for w in points:
        grads = [models.gradient(spec, w, X, y) for X, y in shards]
        edge_grads = []
        for cs in edge_clients:
            ge = sum(sizes[i] * grads[i] for i in cs) / edge_sizes[len(edge_grads)]
            edge_grads.append(ge)
        g_global = sum(edge_sizes[l] * edge_grads[l] for l in range(L)) / total
        for l, cs in enumerate(edge_clients):
            for i in cs:
                per_client[i] = max(
                    per_client[i], float(np.linalg.norm(grads[i] - edge_grads[l]))
                )
            per_edge[l] = max(
                per_edge[l], float(np.linalg.norm(edge_grads[l] - g_global))
            )

    edge_of_client = part.edge_assignment
    client_edge = float(np.dot(sizes, per_client) / total)
    edge_cloud = float(np.dot(edge_sizes, per_edge) / total)
    # Equivalent client-summed form of the edge-cloud aggregate; the two
    # must agree because edge sizes are sums of their clients' sizes.
    alt = float(np.dot(sizes, per_edge[edge_of_client]) / total)
    assert abs(alt - edge_cloud) <= 8 * np.spacing(max(abs(alt), abs(edge_cloud), 1.0))
    return DivergenceEstimate(
        per_client=per_client,
        per_edge=per_edge,
        client_edge=client_edge,
        edge_cloud=edge_cloud,
        probe_count=len(points),
    )


def export_divergence(est: DivergenceEstimate, path) -> None:
    """Structured text report: aggregates, then per-edge and per-client rows."""
    with open(path, "w") as f:
        f.write(f"# probes={est.probe_count}\n")
        f.write(f"client_edge\t{est.client_edge!r}\n")
        f.write(f"edge_cloud\t{est.edge_cloud!r}\n")
        for l, v in enumerate(est.per_edge):
            f.write(f"edge\t{l}\t{v!r}\n")
        for i, v in enumerate(est.per_client):
            f.write(f"client\t{i}\t{v!r}\n")
