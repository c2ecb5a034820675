"""Deterministic client-edge-cloud federated averaging simulator and
analysis toolkit: two-level aggregation engine, gradient-divergence
measurement, closed-form deviation/convergence bounds, and a wireless
latency/energy cost model."""

from .bounds import (
    BoundParams,
    GapBoundResult,
    avg_grad_sq_bound,
    convex_deviation_bound,
    convex_deviation_bound_end,
    convex_gap_bound,
    convex_gap_bound_diminishing,
    drift,
    edge_interval_index,
    nonconvex_deviation_bound,
)
from .costmodel import CostParams, CostReport, UnitCosts, accumulate, unit_costs
from .datasets import (
    Dataset,
    Partition,
    Topology,
    generate_synthetic,
    load_mnist_idx,
    partition,
)
from .divergence import DivergenceEstimate, estimate_divergence
from .errors import ConfigError, FormatError
from .hierfavg import (
    EpochDecayStep,
    FixedStep,
    PerIntervalStep,
    RunResult,
    Schedule,
    TraceRecord,
    evaluate,
    run_hierfavg,
)
from .models import ModelSpec, SmoothnessParams, estimate_smoothness, gradient, loss
from .numcore import axpy, l2_distance, weighted_average

__version__ = "0.1.0"
