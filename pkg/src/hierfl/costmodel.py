"""Latency and energy accounting over run traces.

Unit costs per event:

* one local iteration: T = c*D/f seconds, E = (alpha/2)*c*D*f^2 joules;
* one client-to-edge upload: T = M / (B * log2(1 + g*p/sigma)) seconds,
  E = p*T joules;
* one edge-to-cloud upload: latency is a configured multiple of the edge
  upload; by default its energy is charged to the edge servers (i.e. not
  to clients), selectable via ``energy_scope``.

``accumulate`` prices a simulated trace; ``reprice_edge_records`` prices
an aggregation-indexed accuracy series under a different schedule, which
is how fixed-cloud-period schedules are compared on equal footing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

ENERGY_SCOPES = ("per_client", "fleet")


@dataclass(frozen=True)
class CostParams:
    """Wireless/compute constants; defaults follow the MNIST setting."""

    cycles_per_bit: float = 20.0
    cpu_freq: float = 1e9
    capacitance: float = 2e-28
    tx_power: float = 0.5
    noise_power: float = 1e-10
    bandwidth: float = 1e6
    channel_gain: float = 1e-8
    model_bits: float = 21840 * 32
    data_bits_per_iteration: float = 1.2e6
    cloud_latency_multiplier: float = 10.0

    def __post_init__(self):
        for name in (
            "cycles_per_bit", "cpu_freq", "capacitance", "tx_power", "noise_power",
            "bandwidth", "channel_gain", "model_bits", "data_bits_per_iteration",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.cloud_latency_multiplier < 1:
            raise ValueError("cloud_latency_multiplier must be >= 1")


@dataclass(frozen=True)
class UnitCosts:
    t_comp: float
    e_comp: float
    t_comm_edge: float
    e_comm_edge: float
    t_comm_cloud: float


def unit_costs(params: CostParams) -> UnitCosts:
    """Per-event latency/energy of one local iteration and one upload."""
    t_comp = params.cycles_per_bit * params.data_bits_per_iteration / params.cpu_freq
    e_comp = (
        0.5 * params.capacitance * params.cycles_per_bit
        * params.data_bits_per_iteration * params.cpu_freq ** 2
    )
    snr = params.channel_gain * params.tx_power / params.noise_power
    t_comm = params.model_bits / (params.bandwidth * math.log2(1.0 + snr))
    return UnitCosts(
        t_comp=t_comp,
        e_comp=e_comp,
        t_comm_edge=t_comm,
        e_comm_edge=params.tx_power * t_comm,
        t_comm_cloud=params.cloud_latency_multiplier * t_comm,
    )


@dataclass(frozen=True)
class CostPoint:
    k: int
    cumulative_seconds: float
    cumulative_joules: float
    accuracy: float


@dataclass(frozen=True)
class CostReport:
    per_round_latency: float        # one cloud round (kappa1*kappa2 steps)
    per_round_client_energy: float
    alpha: float
    t_alpha: float | None           # None when alpha was never reached
    e_alpha: float | None
    points: tuple

    @property
    def reached(self) -> bool:
        return self.t_alpha is not None


def per_round_costs(kappa1: int, kappa2: int, params: CostParams,
                    energy_scope: str = "per_client") -> tuple[float, float]:
    """(latency, client energy) of one full cloud round: kappa1*kappa2
    local steps, kappa2 client-edge uploads, one edge-cloud upload.
    Clients compute in parallel, so fleet latency equals client latency."""
    u = unit_costs(params)
    lat = kappa1 * kappa2 * u.t_comp + kappa2 * u.t_comm_edge + u.t_comm_cloud
    energy = kappa1 * kappa2 * u.e_comp + kappa2 * u.e_comm_edge
    if energy_scope == "fleet":
        energy += params.tx_power * u.t_comm_cloud
    return lat, energy


def accumulate(trace, schedule, params: CostParams, alpha: float,
               energy_scope: str = "per_client") -> CostReport:
    """Price a run trace: cumulative wall-clock and client energy at every
    trace point, plus time/energy to first reach test accuracy alpha."""
    if energy_scope not in ENERGY_SCOPES:
        raise ValueError(f"unknown energy_scope {energy_scope!r}")
    u = unit_costs(params)
    lat_round, energy_round = per_round_costs(
        schedule.kappa1, schedule.kappa2, params, energy_scope
    )
    points = []
    t = 0.0
    e = 0.0
    prev_k = 0
    t_alpha = e_alpha = None
    for r in sorted(trace, key=lambda r: r.k):
        steps = r.k - prev_k
        prev_k = r.k
        t += steps * u.t_comp
        e += steps * u.e_comp
        if r.event in ("edge_agg", "cloud_agg"):
            t += u.t_comm_edge
            e += u.e_comm_edge
        if r.event == "cloud_agg":
            t += u.t_comm_cloud
            if energy_scope == "fleet":
                e += params.tx_power * u.t_comm_cloud
        points.append(CostPoint(r.k, t, e, r.test_accuracy))
        if t_alpha is None and not math.isnan(r.test_accuracy) and r.test_accuracy >= alpha:
            t_alpha, e_alpha = t, e
    return CostReport(
        per_round_latency=lat_round,
        per_round_client_energy=energy_round,
        alpha=alpha,
        t_alpha=t_alpha,
        e_alpha=e_alpha,
        points=tuple(points),
    )


def reprice_edge_records(accuracies, kappa1: int, kappa2: int, params: CostParams,
                         alpha: float, energy_scope: str = "per_client") -> CostReport:
    """Price an edge-aggregation-indexed accuracy series under a schedule.

    Record n is treated as the n-th edge aggregation: kappa1 local steps
    plus one client-edge upload, with an edge-cloud upload every kappa2
    records.  Used to compare schedules with the same cloud period on a
    shared accuracy-per-aggregation series.
    """
    if energy_scope not in ENERGY_SCOPES:
        raise ValueError(f"unknown energy_scope {energy_scope!r}")
    u = unit_costs(params)
    points = []
    t = e = 0.0
    t_alpha = e_alpha = None
    for n, acc in enumerate(accuracies, start=1):
        t += kappa1 * u.t_comp + u.t_comm_edge
        e += kappa1 * u.e_comp + u.e_comm_edge
        if n % kappa2 == 0:
            t += u.t_comm_cloud
            if energy_scope == "fleet":
                e += params.tx_power * u.t_comm_cloud
        points.append(CostPoint(n * kappa1, t, e, acc))
        if t_alpha is None and not math.isnan(acc) and acc >= alpha:
            t_alpha, e_alpha = t, e
    lat_round, energy_round = per_round_costs(kappa1, kappa2, params, energy_scope)
    return CostReport(lat_round, energy_round, alpha, t_alpha, e_alpha, tuple(points))


def write_cost_csv(report: CostReport, path) -> None:
    with open(path, "w") as f:
        f.write("k,cumulative_seconds,cumulative_joules,accuracy\n")
        for p in report.points:
            f.write(
                f"{p.k},{p.cumulative_seconds!r},{p.cumulative_joules!r},{p.accuracy!r}\n"
            )


def summary_dict(reports) -> dict:
    """JSON-ready summary with T_alpha/E_alpha per requested accuracy."""
    out = {}
    for rep in reports:
        out[f"alpha={rep.alpha}"] = {
            "reached": rep.reached,
            "t_alpha_seconds": rep.t_alpha,
            "e_alpha_joules": rep.e_alpha,
            "per_round_latency_seconds": rep.per_round_latency,
            "per_round_client_energy_joules": rep.per_round_client_energy,
        }
    return out
