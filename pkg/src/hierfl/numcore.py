"""Dense float64 vector algebra for flat model parameter vectors.

All operations are pure, deterministic, and accumulate left-to-right so
repeated runs are bit-reproducible.  Averaging is anchored at the first
vector, which makes averaging identical vectors (and the single-vector
case) exact rather than merely close.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np


def as_vector(values) -> np.ndarray:
    """Validate and return a finite 1-D float64 parameter vector."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("parameter vector contains NaN or Inf")
    return v


def weighted_average(vectors: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    """Weighted mean sum_i w_i v_i / sum_i w_i.

    Weights need not be normalized (raw dataset sizes are fine).  Computed
    as v_0 + sum_i (w_i/W)(v_i - v_0): identical inputs average to the
    input exactly, and a single vector is returned unchanged.
    """
    if len(vectors) == 0:
        raise ValueError("weighted_average of zero vectors")
    if len(weights) != len(vectors):
        raise ValueError(
            f"{len(weights)} weights for {len(vectors)} vectors"
        )
    vs = [as_vector(v) for v in vectors]
    dim = vs[0].size
    for v in vs[1:]:
        if v.size != dim:
            raise ValueError(f"dimension mismatch: {v.size} != {dim}")
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0.0):
        raise ValueError("negative weight")
    total = float(np.add.reduce(w))
    if total <= 0.0:
        raise ValueError("total weight must be positive")

    base = vs[0]
    acc = np.zeros(dim)
    for wi, vi in zip(w, vs):
        if wi != 0.0:
            acc += wi * (vi - base)
    out = base + acc / total
    if not np.all(np.isfinite(out)):
        raise ValueError("weighted_average produced non-finite values")
    return out


def axpy(w: np.ndarray, g: np.ndarray, eta: float) -> np.ndarray:
    """Gradient step w - eta * g."""
    w = as_vector(w)
    g = as_vector(g)
    if w.size != g.size:
        raise ValueError(f"dimension mismatch: {w.size} != {g.size}")
    if eta <= 0.0:
        raise ValueError("step size must be positive")
    out = w - eta * g
    if not np.all(np.isfinite(out)):
        raise ValueError("axpy produced non-finite values")
    return out


def l2_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean norm of a - b."""
    a = as_vector(a)
    b = as_vector(b)
    if a.size != b.size:
        raise ValueError(f"dimension mismatch: {a.size} != {b.size}")
    return float(np.linalg.norm(a - b))
