"""Datasets, client/edge topologies, and non-IID partitioning schemes.

Supported partition schemes:

* ``iid``         -- uniform random disjoint shards.
* ``simple_niid`` -- sort by label, slice into 2N shards, deal two shards
                     per client, clients randomly assigned to edges.
* ``edge_iid``    -- each client holds one class; the clients of every
                     edge jointly cover all classes, so edges are IID.
* ``edge_niid``   -- each client holds one class; every edge covers only
                     ceil(C/2) distinct classes, so edges are non-IID.

Every partitioner produces equal per-client shard sizes by truncating the
dataset to a divisible size.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError

SCHEMES = ("iid", "simple_niid", "edge_iid", "edge_niid")

# Distinct RNG stream tags so different schemes never share random draws.
_SCHEME_TAG = {s: i + 1 for i, s in enumerate(SCHEMES)}


@dataclass(frozen=True)
class Dataset:
    """Labeled samples with features normalized to [0, 1] per coordinate."""

    features: np.ndarray  # (n, d) float64
    labels: np.ndarray    # (n,) int64 in [0, num_classes)
    num_classes: int

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise ValueError("features must be (n, d), labels (n,)")
        if len(self.features) != len(self.labels):
            raise ValueError("features/labels length mismatch")
        if len(self.labels) and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            raise ValueError("label out of range")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.features[indices], self.labels[indices], self.num_classes)


@dataclass(frozen=True)
class Topology:
    """Client-edge-cloud hierarchy with equal-size edge client groups."""

    num_clients: int
    num_edges: int

    def __post_init__(self):
        if self.num_clients <= 0 or self.num_edges <= 0:
            raise ConfigError("num_clients and num_edges must be positive")
        if self.num_clients % self.num_edges != 0:
            raise ConfigError(
                f"num_edges={self.num_edges} must divide num_clients={self.num_clients}"
            )

    @property
    def clients_per_edge(self) -> int:
        return self.num_clients // self.num_edges

    def default_edge_assignment(self) -> np.ndarray:
        """Contiguous client blocks: client i belongs to edge i // P."""
        return np.arange(self.num_clients) // self.clients_per_edge


@dataclass(frozen=True)
class Partition:
    """Disjoint per-client sample shards plus a client-to-edge map."""

    client_shards: tuple  # tuple of int index arrays, one per client
    edge_assignment: np.ndarray  # (N,) int, client -> edge
    num_edges: int

    def __post_init__(self):
        seen: set[int] = set()
        for shard in self.client_shards:
            ids = set(int(i) for i in shard)
            if len(ids) != len(shard):
                raise ValueError("duplicate index inside a shard")
            if seen & ids:
                raise ValueError("client shards are not disjoint")
            seen |= ids
        if len(self.edge_assignment) != len(self.client_shards):
            raise ValueError("edge_assignment length != number of clients")
        if np.any(self.edge_assignment < 0) or np.any(
            self.edge_assignment >= self.num_edges
        ):
            raise ValueError("edge index out of range")

    @property
    def num_clients(self) -> int:
        return len(self.client_shards)

    def clients_of_edge(self, edge: int) -> np.ndarray:
        return np.flatnonzero(self.edge_assignment == edge)

    def shard_sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.client_shards], dtype=np.int64)

    def assigned_indices(self) -> np.ndarray:
        """Union of all shards, in client order."""
        return np.concatenate([np.asarray(s) for s in self.client_shards])


def generate_synthetic(
    num_classes: int, dim: int, samples_per_class: int, seed: int,
    cluster_std: float = 0.06, cluster_radius: float = 0.35, split: int = 0,
) -> Dataset:
    """Deterministic Gaussian-mixture dataset: one isotropic cluster per
    class, class means on a sphere around the feature-box center, features
    clipped to [0, 1].  Identical arguments give identical bytes.

    The class means depend only on ``seed``; the sample noise additionally
    depends on ``split``, so e.g. split=0/split=1 yield disjoint train/test
    draws from the *same* mixture.
    """
    if num_classes <= 0 or dim <= 0 or samples_per_class <= 0:
        raise ValueError("num_classes, dim and samples_per_class must be positive")
    mean_rng = np.random.default_rng([seed, 0xD5])
    dirs = mean_rng.standard_normal((num_classes, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    means = 0.5 + cluster_radius * dirs
    rng = np.random.default_rng([seed, 0xD5, int(split)])
    feats = np.empty((num_classes * samples_per_class, dim))
    labels = np.empty(num_classes * samples_per_class, dtype=np.int64)
    for c in range(num_classes):
        lo = c * samples_per_class
        hi = lo + samples_per_class
        feats[lo:hi] = means[c] + cluster_std * rng.standard_normal(
            (samples_per_class, dim)
        )
        labels[lo:hi] = c
    np.clip(feats, 0.0, 1.0, out=feats)
    return Dataset(feats, labels, num_classes)


_IMAGES_MAGIC = 0x00000803
_LABELS_MAGIC = 0x00000801


def _read_exact(f, n: int, path: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise FormatError(f"{path}: truncated file (wanted {n} bytes, got {len(data)})")
    return data


def load_mnist_idx(images_path, labels_path, limit: int | None = None) -> Dataset:
    """Load an MNIST-style IDX image/label file pair.

    Big-endian layout: images carry magic 0x00000803 then count/rows/cols,
    labels carry magic 0x00000801 then count.  Pixels are scaled to [0, 1].
    """
    images_path = str(images_path)
    labels_path = str(labels_path)
    with open(images_path, "rb") as f:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, images_path))
        if magic != _IMAGES_MAGIC:
            raise FormatError(
                f"{images_path}: bad magic 0x{magic:08x} (expected 0x{_IMAGES_MAGIC:08x})"
            )
        n = count if limit is None else min(limit, count)
        raw = _read_exact(f, n * rows * cols, images_path)
    with open(labels_path, "rb") as f:
        magic, label_count = struct.unpack(">II", _read_exact(f, 8, labels_path))
        if magic != _LABELS_MAGIC:
            raise FormatError(
                f"{labels_path}: bad magic 0x{magic:08x} (expected 0x{_LABELS_MAGIC:08x})"
            )
        if label_count != count:
            raise FormatError(
                f"{labels_path}: {label_count} labels for {count} images in {images_path}"
            )
        raw_labels = _read_exact(f, n, labels_path)
    feats = np.frombuffer(raw, dtype=np.uint8).astype(np.float64) / 255.0
    feats = feats.reshape(n, rows * cols)
    labels = np.frombuffer(raw_labels, dtype=np.uint8).astype(np.int64)
    return Dataset(feats, labels, 10)


def partition(dataset: Dataset, topology: Topology, scheme: str, seed: int) -> Partition:
    """Split a dataset across clients and edges per the requested scheme."""
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    rng = np.random.default_rng([seed, _SCHEME_TAG[scheme]])
    n_total = len(dataset)
    N = topology.num_clients
    if scheme == "iid":
        return _partition_iid(dataset, topology, rng)
    if scheme == "simple_niid":
        return _partition_simple_niid(dataset, topology, rng)
    return _partition_one_class(dataset, topology, scheme, rng)


def _partition_iid(dataset, topology, rng) -> Partition:
    N = topology.num_clients
    m = len(dataset) // N
    if m == 0:
        raise ConfigError(f"{len(dataset)} samples cannot feed {N} clients")
    perm = rng.permutation(len(dataset))
    shards = tuple(np.sort(perm[i * m:(i + 1) * m]) for i in range(N))
    return Partition(shards, topology.default_edge_assignment(), topology.num_edges)


def _partition_simple_niid(dataset, topology, rng) -> Partition:
    N = topology.num_clients
    s = len(dataset) // (2 * N)
    if s == 0:
        raise ConfigError(
            f"{len(dataset)} samples cannot be cut into {2 * N} label-sorted shards"
        )
    order = np.argsort(dataset.labels, kind="stable")[: 2 * N * s]
    deal = rng.permutation(2 * N)
    shards = tuple(
        np.sort(np.concatenate([
            order[deal[2 * i] * s:(deal[2 * i] + 1) * s],
            order[deal[2 * i + 1] * s:(deal[2 * i + 1] + 1) * s],
        ]))
        for i in range(N)
    )
    # Random client-to-edge placement, equal group sizes.
    client_perm = rng.permutation(N)
    edges = np.empty(N, dtype=np.int64)
    edges[client_perm] = np.arange(N) // topology.clients_per_edge
    return Partition(shards, edges, topology.num_edges)


def _edge_class_sets(num_edges: int, num_classes: int, per_edge_classes: int):
    """Rotating class windows so edges cover different class subsets."""
    return [
        [(e * per_edge_classes + j) % num_classes for j in range(per_edge_classes)]
        for e in range(num_edges)
    ]


def _partition_one_class(dataset, topology, scheme, rng) -> Partition:
    C = dataset.num_classes
    N = topology.num_clients
    L = topology.num_edges
    P = topology.clients_per_edge
    if scheme == "edge_iid":
        if P != C:
            raise ConfigError(
                f"edge_iid needs clients_per_edge == num_classes, got {P} != {C}"
            )
        class_sets = [list(range(C)) for _ in range(L)]
    else:  # edge_niid
        H = -(-C // 2)  # ceil(C/2) distinct classes per edge
        if P < H or P % H != 0:
            raise ConfigError(
                f"edge_niid needs clients_per_edge divisible by ceil(C/2)={H}, got {P}"
            )
        base_sets = _edge_class_sets(L, C, H)
        class_sets = [sum(([c] * (P // H) for c in s), []) for s in base_sets]

    # class_of_client in client order (clients grouped contiguously per edge)
    class_of_client = np.concatenate(
        [np.asarray(s, dtype=np.int64) for s in class_sets]
    )
    assert len(class_of_client) == N
    holders = np.bincount(class_of_client, minlength=C)
    pools = []
    for c in range(C):
        idx = np.flatnonzero(dataset.labels == c)
        pools.append(idx[rng.permutation(len(idx))])
    counts = np.array([len(p) for p in pools])
    used = holders > 0
    if not np.all(counts[used] >= holders[used]):
        raise ConfigError("not enough samples in some class for its holder clients")
    m = int(np.min(counts[used] // holders[used]))
    if m == 0:
        raise ConfigError("per-client shard size would be zero")
    cursor = np.zeros(C, dtype=np.int64)
    shards = []
    for i in range(N):
        c = int(class_of_client[i])
        shards.append(np.sort(pools[c][cursor[c]:cursor[c] + m]))
        cursor[c] += m
    return Partition(tuple(shards), topology.default_edge_assignment(), L)


def export_partition(dataset: Dataset, part: Partition, path) -> None:
    """Write a partition audit file: header with dims/counts, then one row
    per assigned sample (index, label, edge, client)."""
    with open(path, "w") as f:
        f.write(
            f"# samples={len(dataset)} dim={dataset.dim} "
            f"classes={dataset.num_classes} clients={part.num_clients} "
            f"edges={part.num_edges}\n"
        )
        f.write("index\tlabel\tedge\tclient\n")
        for client, shard in enumerate(part.client_shards):
            edge = int(part.edge_assignment[client])
            for idx in shard:
                f.write(f"{int(idx)}\t{int(dataset.labels[idx])}\t{edge}\t{client}\n")
