"""Two-level federated averaging engine.

Executes K local updates across N clients grouped under L edge servers.
Every kappa1 local steps each edge averages its clients' weights
(data-size weighted) and redistributes; every kappa1*kappa2 steps the
cloud averages the edge models and redistributes to everyone.

Alongside the real run the engine can maintain the centralized full-batch
gradient-descent sequence that restarts from the averaged weights at each
cloud synchronization; the per-step distance between the averaged real
weights and that sequence is the deviation that the closed-form bounds in
`hierfl.bounds` upper-bound.

Determinism contract: every random draw comes from a stream keyed by
(seed, client id, epoch), aggregation reduces clients in stable index
order, so identical configurations give byte-identical traces regardless
of how client work would be scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import models, numcore
from .datasets import Dataset, Partition
from .errors import ConfigError

MODES = ("minibatch_sgd", "full_gradient")

EVENT_LOCAL = "local_step"
EVENT_EDGE = "edge_agg"
EVENT_CLOUD = "cloud_agg"

TRACE_COLUMNS = ("k", "event", "global_loss", "test_accuracy", "deviation",
                 "grad_norm_sq", "eta")


@dataclass(frozen=True)
class FixedStep:
    eta: float


@dataclass(frozen=True)
class PerIntervalStep:
    """One constant step size per cloud interval."""
    etas: tuple


@dataclass(frozen=True)
class EpochDecayStep:
    """eta0 * decay**epoch, epoch = completed passes over a client shard."""
    eta0: float
    decay: float = 0.995


StepPlan = FixedStep | PerIntervalStep | EpochDecayStep


@dataclass(frozen=True)
class Schedule:
    kappa1: int
    kappa2: int
    total_updates: int
    step_plan: StepPlan

    def __post_init__(self):
        if self.kappa1 <= 0 or self.kappa2 <= 0 or self.total_updates <= 0:
            raise ConfigError("kappa1, kappa2 and total_updates must be positive")
        if self.total_updates % (self.kappa1 * self.kappa2) != 0:
            raise ConfigError(
                f"total_updates={self.total_updates} must be a multiple of "
                f"kappa1*kappa2={self.kappa1 * self.kappa2}"
            )
        if isinstance(self.step_plan, PerIntervalStep):
            if len(self.step_plan.etas) != self.num_cloud_intervals:
                raise ConfigError(
                    f"per-interval plan needs {self.num_cloud_intervals} step sizes, "
                    f"got {len(self.step_plan.etas)}"
                )
            if any(e <= 0 for e in self.step_plan.etas):
                raise ConfigError("step sizes must be positive")
        elif isinstance(self.step_plan, FixedStep):
            if self.step_plan.eta <= 0:
                raise ConfigError("step size must be positive")
        elif isinstance(self.step_plan, EpochDecayStep):
            if self.step_plan.eta0 <= 0 or not (0 < self.step_plan.decay <= 1):
                raise ConfigError("eta0 must be positive and decay in (0, 1]")
        else:
            raise ConfigError(f"unknown step plan {self.step_plan!r}")

    @property
    def num_cloud_intervals(self) -> int:
        return self.total_updates // (self.kappa1 * self.kappa2)

    def cloud_interval_of(self, k: int) -> int:
        """1-based cloud interval index holding local step k."""
        return (k - 1) // (self.kappa1 * self.kappa2) + 1

    def eta_at(self, k: int, steps_per_epoch: int) -> float:
        """Step size used for local update k (1-based)."""
        plan = self.step_plan
        if isinstance(plan, FixedStep):
            return plan.eta
        if isinstance(plan, PerIntervalStep):
            return float(plan.etas[self.cloud_interval_of(k) - 1])
        epoch = (k - 1) // steps_per_epoch
        return plan.eta0 * plan.decay ** epoch


@dataclass(frozen=True)
class TraceRecord:
    k: int
    event: str
    global_loss: float
    test_accuracy: float
    deviation: float
    grad_norm_sq: float
    eta: float


@dataclass
class RunResult:
    trace: list
    final_weights: np.ndarray
    steps_per_epoch: int
    schedule: Schedule
    # Per-step arrays (length K), populated when the matching track flag is on.
    deviations: np.ndarray | None = None      # ||w(k) - u_q(k)||, pre-sync
    grad_norms_sq: np.ndarray | None = None   # ||grad F(w(k))||^2
    etas: np.ndarray | None = None
    checkpoints: list = field(default_factory=list)  # w(k) at aggregation events
    virtual_endpoint_losses: list = field(default_factory=list)  # F(u_q) at interval ends

    def epochs_at(self, k: int) -> float:
        return k / self.steps_per_epoch


def minibatch_order(shard_size: int, seed: int, client: int, epoch: int) -> np.ndarray:
    """Per-epoch sample order for one client: sampling without replacement
    from a stream keyed by (seed, client, epoch)."""
    rng = np.random.default_rng([seed, 101, client, epoch])
    return rng.permutation(shard_size)


def steps_per_epoch_of(shard_size: int, batch_size: int, mode: str) -> int:
    if mode == "full_gradient":
        return 1
    return max(1, math.ceil(shard_size / batch_size))


class _ClientBatcher:
    """Sequential without-replacement mini-batches for one client."""

    def __init__(self, shard_size, batch_size, seed, client):
        self.shard_size = shard_size
        self.batch_size = batch_size
        self.seed = seed
        self.client = client
        self.epoch = 0
        self.pos = 0
        self.order = minibatch_order(shard_size, seed, client, 0)

    def next_batch(self) -> np.ndarray:
        if self.pos >= self.shard_size:
            self.epoch += 1
            self.pos = 0
            self.order = minibatch_order(self.shard_size, self.seed, self.client, self.epoch)
        batch = self.order[self.pos:self.pos + self.batch_size]
        self.pos += self.batch_size
        return batch


def evaluate(spec: models.ModelSpec, w: np.ndarray, test_set: Dataset):
    """Mean loss and top-1 accuracy on held-out data."""
    if len(test_set) == 0:
        raise ValueError("empty test set")
    X, y = test_set.features, test_set.labels
    pred = models.predict(spec, w, X)
    return models.loss(spec, w, X, y), float(np.mean(pred == y))


def run_hierfavg(
    dataset: Dataset,
    part: Partition,
    spec: models.ModelSpec,
    schedule: Schedule,
    batch_size: int,
    mode: str,
    seed: int,
    test_set: Dataset | None = None,
    track_virtual: bool = True,
    track_grad_norm: bool = False,
) -> RunResult:
    """Run the full two-level averaging schedule and return its trace."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    if batch_size <= 0:
        raise ConfigError("batch_size must be positive")
    sizes = part.shard_sizes()
    if np.any(sizes == 0):
        raise ConfigError("every client needs a non-empty shard")
    N = part.num_clients
    L = part.num_edges
    k1, k2 = schedule.kappa1, schedule.kappa2
    K = schedule.total_updates

    shards = [
        (dataset.features[s], dataset.labels[s]) for s in part.client_shards
    ]
    union = part.assigned_indices()
    gX, gy = dataset.features[union], dataset.labels[union]
    edge_clients = [part.clients_of_edge(l) for l in range(L)]
    edge_sizes = np.array([int(sizes[c].sum()) for c in edge_clients], dtype=np.float64)
    client_sizes = sizes.astype(np.float64)

    steps_per_epoch = steps_per_epoch_of(int(sizes[0]), batch_size, mode)
    w0 = models.init_weights(spec, seed)
    client_w = [w0.copy() for _ in range(N)]
    virtual = w0.copy() if track_virtual else None

    batchers = None
    if mode == "minibatch_sgd":
        batchers = [_ClientBatcher(int(sizes[i]), batch_size, seed, i) for i in range(N)]

    trace: list[TraceRecord] = []
    deviations = np.zeros(K) if track_virtual else None
    grad_norms = np.zeros(K) if track_grad_norm else None
    etas = np.zeros(K)
    checkpoints: list[np.ndarray] = []
    virtual_endpoint_losses: list[float] = []
    result = RunResult([], w0, steps_per_epoch, schedule)

    def global_average() -> np.ndarray:
        return numcore.weighted_average(client_w, client_sizes)

    for k in range(1, K + 1):
        eta = schedule.eta_at(k, steps_per_epoch)
        etas[k - 1] = eta
        for i in range(N):
            X, y = shards[i]
            if mode == "full_gradient":
                g = models.gradient(spec, client_w[i], X, y)
            else:
                b = batchers[i].next_batch()
                g = models.gradient(spec, client_w[i], X[b], y[b])
            client_w[i] = numcore.axpy(client_w[i], g, eta)
        if track_virtual:
            virtual = numcore.axpy(virtual, models.gradient(spec, virtual, gX, gy), eta)

        is_edge = k % k1 == 0
        is_cloud = k % (k1 * k2) == 0
        need_stats = is_edge or track_virtual or track_grad_norm
        gw = global_average() if need_stats else None

        if track_virtual:
            deviations[k - 1] = numcore.l2_distance(gw, virtual)
        if track_grad_norm:
            gg = models.gradient(spec, gw, gX, gy)
            grad_norms[k - 1] = float(gg @ gg)

        if is_edge:
            edge_w = [
                numcore.weighted_average([client_w[i] for i in cs], client_sizes[cs])
                for cs in edge_clients
            ]
            if is_cloud:
                gw_cloud = numcore.weighted_average(edge_w, edge_sizes)
                for i in range(N):
                    client_w[i] = gw_cloud.copy()
                if track_virtual:
                    virtual_endpoint_losses.append(models.loss(spec, virtual, gX, gy))
                    virtual = gw_cloud.copy()
                gw = gw_cloud
            else:
                for l, cs in enumerate(edge_clients):
                    for i in cs:
                        client_w[i] = edge_w[l].copy()

            test_loss, test_acc = (math.nan, math.nan)
            if test_set is not None:
                test_loss, test_acc = evaluate(spec, gw, test_set)
            gnorm = grad_norms[k - 1] if track_grad_norm else _grad_norm_sq(spec, gw, gX, gy)
            trace.append(TraceRecord(
                k=k,
                event=EVENT_CLOUD if is_cloud else EVENT_EDGE,
                global_loss=models.loss(spec, gw, gX, gy),
                test_accuracy=test_acc,
                deviation=float(deviations[k - 1]) if track_virtual else math.nan,
                grad_norm_sq=gnorm,
                eta=eta,
            ))
            checkpoints.append(gw.copy())

    result.trace = trace
    result.final_weights = global_average()
    result.deviations = deviations
    result.grad_norms_sq = grad_norms
    result.etas = etas
    result.checkpoints = checkpoints
    result.virtual_endpoint_losses = virtual_endpoint_losses
    return result


def _grad_norm_sq(spec, w, X, y) -> float:
    g = models.gradient(spec, w, X, y)
    return float(g @ g)


def write_trace_csv(trace, path) -> None:
    """Append-only run trace, one row per aggregation event."""
    with open(path, "w") as f:
        f.write(",".join(TRACE_COLUMNS) + "\n")
        for r in trace:
            f.write(
                f"{r.k},{r.event},{r.global_loss!r},{r.test_accuracy!r},"
                f"{r.deviation!r},{r.grad_norm_sq!r},{r.eta!r}\n"
            )


def read_trace_csv(path) -> list:
    records = []
    with open(path) as f:
        header = f.readline().strip().split(",")
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected trace header {header}")
        for line in f:
            k, event, gl, ta, dev, gn, eta = line.strip().split(",")
            records.append(TraceRecord(
                int(k), event, float(gl), float(ta), float(dev), float(gn), float(eta)
            ))
    return records
