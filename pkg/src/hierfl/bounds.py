"""Closed-form deviation and convergence bounds for two-level averaging.

The central building block is the drift term

    drift(x, d, eta, beta) = (d/beta) * ((eta*beta + 1)**x - 1) - eta*d*x

which bounds how far x uncoordinated gradient steps can wander when the
per-step gradient disagreement is at most d.  The published closed form
ends in ``- eta*beta*x``; that variant is negative at d = 0, which would
contradict both nonnegativity of a norm bound and the required collapse
to zero under IID data, so the default final term uses d.  The printed
variant stays available behind ``as_printed`` for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class BoundParams:
    """Inputs to the deviation/convergence bounds.

    delta is the client-edge divergence, Delta the edge-cloud divergence.
    omega, epsilon, f_star and f0 cannot be known a priori; they are
    calibrated from traces (see the CLI) and only needed by the gap bounds.
    """

    beta: float
    rho: float = 0.0
    delta: float = 0.0
    Delta: float = 0.0
    eta: float = 0.0
    kappa1: int = 1
    kappa2: int = 1
    total_updates: int = 0
    epsilon: float | None = None
    omega: float | None = None
    f_star: float | None = None
    f0: float | None = None

    @property
    def phi(self) -> float | None:
        if self.omega is None:
            return None
        return self.omega * (1.0 - self.beta * self.eta / 2.0)

    @property
    def num_cloud_intervals(self) -> int:
        return self.total_updates // (self.kappa1 * self.kappa2)

    def with_eta(self, eta: float) -> "BoundParams":
        return replace(self, eta=eta)


def drift(x: int, div: float, eta: float, beta: float, as_printed: bool = False) -> float:
    """Deviation accumulated over x local steps with divergence div.

    Nonnegative, zero at x <= 1 or div = 0, and exactly linear in div.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    if div < 0:
        raise ValueError("divergence must be nonnegative")
    if eta <= 0 or beta <= 0:
        raise ValueError("eta and beta must be positive")
    growth = (div / beta) * ((eta * beta + 1.0) ** x - 1.0)
    if as_printed:
        return growth - eta * beta * x
    return growth - eta * div * x


def edge_interval_index(k: int, kappa1: int, kappa2: int, q: int) -> int:
    """Position of local step k among the kappa2 edge intervals of cloud
    interval q: ceil(k/kappa1 - (q-1)*kappa2), in [1, kappa2]."""
    lo = (q - 1) * kappa1 * kappa2
    hi = q * kappa1 * kappa2
    if not (lo < k <= hi):
        raise ValueError(f"step {k} outside cloud interval {q} ({lo}, {hi}]")
    return math.ceil(k / kappa1 - (q - 1) * kappa2)


def convex_deviation_bound(k: int, p: BoundParams, q: int, as_printed: bool = False) -> float:
    """Bound on ||w(k) - u_q(k)|| for convex losses at local step k."""
    k1, k2 = p.kappa1, p.kappa2
    pi = edge_interval_index(k, k1, k2, q)
    return (
        drift(k - (q - 1) * k1 * k2, p.Delta, p.eta, p.beta, as_printed)
        + drift(k - ((q - 1) * k2 + pi - 1) * k1, p.delta, p.eta, p.beta, as_printed)
        + 0.5 * k1 * (pi * pi + pi - 2) * drift(k1, p.delta, p.eta, p.beta, as_printed)
    )


def convex_deviation_bound_end(p: BoundParams, as_printed: bool = False) -> float:
    """Interval-end closed form: bounds the convex deviation over a whole
    cloud interval of kappa1*kappa2 steps."""
    k1, k2 = p.kappa1, p.kappa2
    return (
        drift(k1 * k2, p.Delta, p.eta, p.beta, as_printed)
        + 0.5 * (k2 * k2 + k2 - 1) * (k1 + 1) * drift(k1, p.delta, p.eta, p.beta, as_printed)
    )


def nonconvex_deviation_bound(p: BoundParams, as_printed: bool = False) -> float:
    """Bound on ||w(k) - u_q(k)|| for non-convex (merely smooth) losses."""
    k1, k2 = p.kappa1, p.kappa2
    if k1 <= 0 or p.eta <= 0:
        raise ValueError("kappa1 and eta must be positive")
    denom = (1.0 + p.eta * p.beta) ** k1 - 1.0
    ratio = k1 * k2 * ((1.0 + p.eta * p.beta) ** (k1 * k2) - 1.0) / denom
    return (
        drift(k1 * k2, p.Delta, p.eta, p.beta, as_printed)
        + ratio * drift(k1, p.delta, p.eta, p.beta, as_printed)
        + drift(k1, p.delta, p.eta, p.beta, as_printed)
    )


@dataclass(frozen=True)
class GapBoundResult:
    """Outcome of a convergence-gap bound: either a finite value or a
    conditions-violated report naming what failed."""

    value: float | None
    feasible: bool
    violated: str | None = None


def convex_gap_bound(p: BoundParams) -> GapBoundResult:
    """Fixed-step optimality-gap bound F(w(K)) - F(w*) for convex losses."""
    if p.omega is None or p.epsilon is None:
        raise ValueError("omega and epsilon are required")
    if p.eta > 1.0 / p.beta:
        return GapBoundResult(None, False, f"eta={p.eta} exceeds 1/beta={1.0 / p.beta}")
    b = p.num_cloud_intervals
    if b <= 0:
        raise ValueError("total_updates must cover at least one cloud interval")
    term = _gap_denominator_term(p)
    if term <= 0:
        return GapBoundResult(
            None, False,
            f"eta*phi - rho*G/(kappa1*kappa2*eps^2) = {term} is not positive",
        )
    return GapBoundResult(1.0 / (b * term), True)


def _gap_denominator_term(p: BoundParams) -> float:
    g_end = convex_deviation_bound_end(p)
    return p.eta * p.phi - p.rho * g_end / (p.kappa1 * p.kappa2 * p.epsilon ** 2)


def convex_gap_bound_diminishing(
    p: BoundParams, etas, omegas, epsilons
) -> GapBoundResult:
    """Per-interval-step-size gap bound: reciprocal of the summed
    per-interval denominators; shrinks as intervals accumulate."""
    if not (len(etas) == len(omegas) == len(epsilons)):
        raise ValueError("etas, omegas and epsilons must have equal length")
    if len(etas) == 0:
        raise ValueError("need at least one cloud interval")
    total = 0.0
    for q, (eta, om, eps) in enumerate(zip(etas, omegas, epsilons), start=1):
        pq = replace(p, eta=eta, omega=om, epsilon=eps)
        term = _gap_denominator_term(pq)
        if term <= 0:
            return GapBoundResult(
                None, False, f"non-positive denominator term {term} in interval {q}"
            )
        total += term
    return GapBoundResult(1.0 / total, True)


def avg_grad_sq_bound(p: BoundParams, etas, f0: float, f_star: float) -> float:
    """Bound on the step-size-weighted average of ||grad F(w(k))||^2 for
    non-convex losses with one constant step size per cloud interval."""
    if len(etas) == 0:
        raise ValueError("need at least one cloud interval")
    k1k2 = p.kappa1 * p.kappa2
    sum_eta = k1k2 * math.fsum(etas)
    g_values = [nonconvex_deviation_bound(replace(p, eta=e)) for e in etas]
    term1 = 4.0 * (f0 - f_star) / sum_eta
    term2 = 4.0 * p.rho * math.fsum(g_values) / sum_eta
    term3 = 2.0 * p.beta ** 2 * k1k2 * math.fsum(g * g for g in g_values) / sum_eta
    return term1 + term2 + term3
