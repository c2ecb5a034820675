"""Differentiable model zoo: loss/gradient oracles and smoothness probes.

Two model families over a flat parameter vector:

* ``logistic_regression`` -- multinomial softmax regression (convex loss).
* ``mlp``                 -- one hidden tanh layer (non-convex loss).

Losses are mean cross-entropy plus an optional (l2_reg/2)*||w||^2 ridge
term.  Gradients are exact analytic derivatives of the loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("logistic_regression", "mlp")


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    input_dim: int
    num_classes: int
    hidden_dim: int = 0
    l2_reg: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.input_dim <= 0 or self.num_classes <= 1:
            raise ValueError("input_dim must be positive and num_classes > 1")
        if self.kind == "mlp" and self.hidden_dim <= 0:
            raise ValueError("mlp requires hidden_dim > 0")
        if self.l2_reg < 0:
            raise ValueError("l2_reg must be nonnegative")

    @property
    def param_dim(self) -> int:
        d, c, h = self.input_dim, self.num_classes, self.hidden_dim
        if self.kind == "logistic_regression":
            return c * (d + 1)
        return h * (d + 1) + c * (h + 1)


@dataclass(frozen=True)
class SmoothnessParams:
    """Empirical Lipschitz constants: rho for the loss value, beta for the
    gradient.  Both are maxima of finite difference quotients, hence lower
    bounds on the true constants over the probed region."""

    rho: float
    beta: float


def _check_w(spec: ModelSpec, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (spec.param_dim,):
        raise ValueError(f"parameter vector has dim {w.shape}, expected ({spec.param_dim},)")
    return w


def _unpack_logistic(spec, w):
    d, c = spec.input_dim, spec.num_classes
    W = w[: c * d].reshape(c, d)
    b = w[c * d:]
    return W, b


def _unpack_mlp(spec, w):
    d, c, h = spec.input_dim, spec.num_classes, spec.hidden_dim
    o = 0
    W1 = w[o:o + h * d].reshape(h, d); o += h * d
    b1 = w[o:o + h]; o += h
    W2 = w[o:o + c * h].reshape(c, h); o += c * h
    b2 = w[o:o + c]
    return W1, b1, W2, b2


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _forward(spec, w, X):
    """Logits plus cached hidden activations (mlp only)."""
    if spec.kind == "logistic_regression":
        W, b = _unpack_logistic(spec, w)
        return X @ W.T + b, None
    W1, b1, W2, b2 = _unpack_mlp(spec, w)
    H = np.tanh(X @ W1.T + b1)
    return H @ W2.T + b2, H


def loss(spec: ModelSpec, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Mean cross-entropy over the batch plus the ridge term."""
    w = _check_w(spec, w)
    if len(X) == 0:
        raise ValueError("empty batch")
    logits, _ = _forward(spec, w, X)
    lsm = _log_softmax(logits)
    ce = -float(np.mean(lsm[np.arange(len(y)), y]))
    return ce + 0.5 * spec.l2_reg * float(w @ w)


def gradient(spec: ModelSpec, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact analytic gradient of `loss` at w."""
    w = _check_w(spec, w)
    if len(X) == 0:
        raise ValueError("empty batch")
    m = len(X)
    logits, H = _forward(spec, w, X)
    probs = np.exp(_log_softmax(logits))
    probs[np.arange(m), y] -= 1.0
    dlogits = probs / m
    if spec.kind == "logistic_regression":
        gW = dlogits.T @ X
        gb = dlogits.sum(axis=0)
        g = np.concatenate([gW.ravel(), gb])
    else:
        W1, b1, W2, b2 = _unpack_mlp(spec, w)
        gW2 = dlogits.T @ H
        gb2 = dlogits.sum(axis=0)
        dH = (dlogits @ W2) * (1.0 - H * H)
        gW1 = dH.T @ X
        gb1 = dH.sum(axis=0)
        g = np.concatenate([gW1.ravel(), gb1, gW2.ravel(), gb2])
    return g + spec.l2_reg * w


def predict(spec: ModelSpec, w: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Top-1 class per sample; argmax ties break to the lowest class index."""
    logits, _ = _forward(spec, _check_w(spec, w), X)
    return np.argmax(logits, axis=1)


def init_weights(spec: ModelSpec, seed: int) -> np.ndarray:
    """Common starting point w0: zeros for the convex model, a seeded
    Gaussian with std 0.01 for the mlp (zero init would be degenerate)."""
    if spec.kind == "logistic_regression":
        return np.zeros(spec.param_dim)
    rng = np.random.default_rng([seed, 0x17])
    return 0.01 * rng.standard_normal(spec.param_dim)


def estimate_smoothness_fn(
    loss_fn, grad_fn, dim: int, probes: int, seed: int,
    scales=(0.1, 1.0), center: np.ndarray | None = None,
) -> SmoothnessParams:
    """Estimate (rho, beta) for arbitrary callables.

    Probe points are the center (origin by default) followed by scaled
    Gaussian perturbations; the point sequence is prefix-stable in the
    number of probes, so more probes never decrease either estimate.
    """
    if probes < 2:
        raise ValueError("need at least 2 probe points")
    rng = np.random.default_rng([seed, 0x5E])
    if center is None:
        center = np.zeros(dim)
    points = [np.asarray(center, dtype=np.float64)]
    for j in range(probes - 1):
        scale = scales[j % len(scales)]
        points.append(center + scale * rng.standard_normal(dim))
    vals = [loss_fn(p) for p in points]
    grads = [grad_fn(p) for p in points]
    rho = 0.0
    beta = 0.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            dist = float(np.linalg.norm(points[i] - points[j]))
            if dist == 0.0:
                continue
            rho = max(rho, abs(vals[i] - vals[j]) / dist)
            beta = max(beta, float(np.linalg.norm(grads[i] - grads[j])) / dist)
    return SmoothnessParams(rho=rho, beta=beta)


def estimate_smoothness(spec: ModelSpec, dataset, probes: int, seed: int) -> SmoothnessParams:
    """Estimate (rho, beta) of the full-dataset loss for a model spec."""
    X, y = dataset.features, dataset.labels
    return estimate_smoothness_fn(
        lambda w: loss(spec, w, X, y),
        lambda w: gradient(spec, w, X, y),
        spec.param_dim, probes, seed,
    )


def softmax_beta_upper_bound(spec: ModelSpec, X: np.ndarray) -> float:
    """Analytic smoothness upper bound for softmax regression: the softmax
    Jacobian has spectral norm at most 1/2, so beta <= max_j ||x_j||^2 / 2
    (bias included as a constant-1 feature) plus the ridge strength."""
    if spec.kind != "logistic_regression":
        raise ValueError("analytic bound only applies to logistic_regression")
    sq = float(np.max(np.sum(X * X, axis=1))) + 1.0
    return 0.5 * sq + spec.l2_reg
