"""Experiment execution: single runs, sweeps, artifact and manifest output.

Artifacts of a run (all deterministic functions of the resolved config):

* ``trace.csv``          -- aggregation-event trace of the simulation.
* ``partition.txt``      -- sample-to-client/edge assignment audit.
* ``divergence.txt``     -- measured gradient-divergence report.
* ``bound_check.csv``    -- per-step deviation vs. closed-form bound.
* ``cost.csv`` / ``cost_summary.json`` -- priced trace and T/E-to-accuracy.
* ``manifest.json``      -- resolved config, seed, artifact checksums.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os

from . import bounds, config as cfgmod, costmodel, datasets, divergence, hierfavg, models
from .errors import ConfigError

SWEEP_COLUMNS = (
    "kappa1", "kappa2", "eta", "scheme", "status", "final_accuracy",
    "epochs_to_target", "t_alpha", "e_alpha", "g_c_end", "max_deviation",
)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(cfg, seed, out_dir, names) -> dict:
    manifest = {
        "config": cfg,
        "config_sha256": cfgmod.config_hash(cfg),
        "seed": seed,
        "artifacts": {
            name: _sha256(os.path.join(out_dir, name)) for name in sorted(names)
        },
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


def _prepare(cfg):
    train, test = cfgmod.build_datasets(cfg)
    topo = cfgmod.build_topology(cfg)
    part = datasets.partition(train, topo, cfg["partition"]["scheme"],
                              int(cfg["partition"]["seed"]))
    spec = cfgmod.build_model_spec(cfg, train)
    schedule = cfgmod.build_schedule(cfg)
    return train, test, topo, part, spec, schedule


def run_experiment(cfg: dict, out_dir, seed: int | None = None) -> dict:
    """Execute one configured run and write all artifacts.

    Returns the manifest dictionary.
    """
    os.makedirs(out_dir, exist_ok=True)
    if seed is not None:
        cfg = dict(cfg, training=dict(cfg["training"], seed=int(seed)))
    run_seed = int(cfg["training"]["seed"])
    train, test, topo, part, spec, schedule = _prepare(cfg)
    tr = cfg["training"]

    result = hierfavg.run_hierfavg(
        train, part, spec, schedule,
        batch_size=int(tr["batch_size"]),
        mode=tr["mode"],
        seed=run_seed,
        test_set=test,
        track_virtual=bool(tr["track_virtual"]),
        track_grad_norm=bool(tr["track_grad_norm"]),
    )

    names = ["trace.csv", "partition.txt", "cost.csv", "cost_summary.json"]
    hierfavg.write_trace_csv(result.trace, os.path.join(out_dir, "trace.csv"))
    datasets.export_partition(train, part, os.path.join(out_dir, "partition.txt"))

    est = None
    if cfg["bounds"]["enabled"]:
        probes = int(cfg["bounds"]["probes"])
        est = divergence.estimate_divergence(
            train, part, spec, probes=probes + len(result.checkpoints),
            probe_source="trajectory" if result.checkpoints else "random",
            trajectory=(
                divergence.random_probes(spec.param_dim, probes, run_seed)
                + result.checkpoints
            ),
            seed=run_seed,
        )
        divergence.export_divergence(est, os.path.join(out_dir, "divergence.txt"))
        names.append("divergence.txt")
        if tr["track_virtual"]:
            _write_bound_check(cfg, train, spec, schedule, result, est, out_dir)
            names.append("bound_check.csv")

    params = costmodel.CostParams(**cfg["cost"])
    reports = [
        costmodel.accumulate(result.trace, schedule, params, float(a))
        for a in cfg["eval_alphas"]
    ]
    costmodel.write_cost_csv(reports[0], os.path.join(out_dir, "cost.csv"))
    with open(os.path.join(out_dir, "cost_summary.json"), "w") as f:
        json.dump(costmodel.summary_dict(reports), f, indent=2, sort_keys=True)
        f.write("\n")

    return _write_manifest(cfg, run_seed, out_dir, names)


def _write_bound_check(cfg, train, spec, schedule, result, est, out_dir):
    sm = models.estimate_smoothness(spec, train, probes=int(cfg["bounds"]["probes"]),
                                    seed=int(cfg["training"]["seed"]))
    bp = bounds.BoundParams(
        beta=sm.beta, rho=sm.rho, delta=est.client_edge, Delta=est.edge_cloud,
        kappa1=schedule.kappa1, kappa2=schedule.kappa2,
        total_updates=schedule.total_updates,
    )
    with open(os.path.join(out_dir, "bound_check.csv"), "w") as f:
        f.write("k,deviation,bound,within\n")
        for k in range(1, schedule.total_updates + 1):
            q = schedule.cloud_interval_of(k)
            eta = float(result.etas[k - 1])
            g = bounds.convex_deviation_bound(k, bp.with_eta(eta), q)
            dev = float(result.deviations[k - 1])
            f.write(f"{k},{dev!r},{g!r},{int(dev <= g)}\n")


def _sweep_axes(cfg):
    sweep = cfg.get("sweep", {})
    axes = {
        "kappa1": sweep.get("kappa1", [cfg["schedule"]["kappa1"]]),
        "kappa2": sweep.get("kappa2", [cfg["schedule"]["kappa2"]]),
        "eta": sweep.get("eta", [None]),
        "scheme": sweep.get("scheme", [cfg["partition"]["scheme"]]),
    }
    for name, values in axes.items():
        if not values:
            raise ConfigError(f"sweep axis {name} is empty")
    return axes, sweep


def _point_config(cfg, k1, k2, eta, scheme):
    doc = json.loads(cfgmod.canonical_json(cfg))
    doc.pop("sweep", None)
    doc["schedule"]["kappa1"] = int(k1)
    doc["schedule"]["kappa2"] = int(k2)
    if eta is not None:
        doc["schedule"]["step_plan"] = {"kind": "fixed", "eta": float(eta)}
    doc["partition"]["scheme"] = scheme
    return cfgmod.resolve_config(doc)


def sweep(cfg: dict, out_dir, seed: int | None = None) -> list:
    """Run the cartesian grid from the config's sweep section and write a
    combined summary CSV.  Failed points become failed rows; the sweep
    continues."""
    os.makedirs(out_dir, exist_ok=True)
    axes, sweep_spec = _sweep_axes(cfg)
    target = sweep_spec.get("target_accuracy", cfg["eval_alphas"][0])
    rows = []
    grid = sorted(
        itertools.product(axes["kappa1"], axes["kappa2"], axes["eta"], axes["scheme"]),
        key=lambda p: (p[0], p[1], -1.0 if p[2] is None else p[2], p[3]),
    )
    for k1, k2, eta, scheme in grid:
        row = {
            "kappa1": k1, "kappa2": k2,
            "eta": "" if eta is None else eta, "scheme": scheme,
        }
        try:
            rows.append(row | _sweep_point(cfg, k1, k2, eta, scheme, seed, target))
        except Exception as exc:  # per-point isolation
            rows.append(row | {"status": f"failed:{type(exc).__name__}"})
    path = os.path.join(out_dir, "sweep_summary.csv")
    with open(path, "w") as f:
        f.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            f.write(",".join(str(row.get(c, "")) for c in SWEEP_COLUMNS) + "\n")
    _write_manifest(cfg, seed if seed is not None else int(cfg["training"]["seed"]),
                    out_dir, ["sweep_summary.csv"])
    return rows


def _sweep_point(cfg, k1, k2, eta, scheme, seed, target):
    pcfg = _point_config(cfg, k1, k2, eta, scheme)
    if seed is not None:
        pcfg = dict(pcfg, training=dict(pcfg["training"], seed=int(seed)))
    run_seed = int(pcfg["training"]["seed"])
    train, test, topo, part, spec, schedule = _prepare(pcfg)
    tr = pcfg["training"]
    result = hierfavg.run_hierfavg(
        train, part, spec, schedule,
        batch_size=int(tr["batch_size"]), mode=tr["mode"], seed=run_seed,
        test_set=test, track_virtual=bool(tr["track_virtual"]),
    )
    final_acc = result.trace[-1].test_accuracy
    epochs = ""
    for r in result.trace:
        if not math.isnan(r.test_accuracy) and r.test_accuracy >= target:
            epochs = result.epochs_at(r.k)
            break
    params = costmodel.CostParams(**pcfg["cost"])
    rep = costmodel.accumulate(result.trace, schedule, params, float(target))
    g_end = ""
    if pcfg["bounds"]["enabled"]:
        est = divergence.estimate_divergence(
            train, part, spec, probes=int(pcfg["bounds"]["probes"]), seed=run_seed,
        )
        sm = models.estimate_smoothness(spec, train, int(pcfg["bounds"]["probes"]), run_seed)
        g_end = bounds.convex_deviation_bound_end(bounds.BoundParams(
            beta=sm.beta, delta=est.client_edge, Delta=est.edge_cloud,
            eta=float(result.etas[0]), kappa1=k1, kappa2=k2,
        ))
    max_dev = (
        float(result.deviations.max()) if result.deviations is not None else ""
    )
    return {
        "status": "ok",
        "final_accuracy": final_acc,
        "epochs_to_target": epochs,
        "t_alpha": "" if rep.t_alpha is None else rep.t_alpha,
        "e_alpha": "" if rep.e_alpha is None else rep.e_alpha,
        "g_c_end": g_end,
        "max_deviation": max_dev,
    }
