"""Experiment configuration: one JSON document drives a whole run.

Defaults follow the reference wireless/MNIST setting: 50 clients, 5 edge
servers, mini-batch SGD with batch size 20, initial learning rate 0.01
decaying by 0.995 per epoch.  Flags only override; sweeps and manifests
serialize the resolved configuration verbatim so runs are reproducible.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field

from . import costmodel, datasets, hierfavg, models
from .errors import ConfigError

DEFAULT_CONFIG = {
    "dataset": {
        "source": "synthetic",
        "num_classes": 10,
        "dim": 8,
        "samples_per_class": 120,
        "test_samples_per_class": 40,
        "seed": 1,
        # mnist-only keys: images, labels, test_images, test_labels,
        # limit, test_limit
    },
    "topology": {"num_clients": 50, "num_edges": 5},
    "partition": {"scheme": "iid", "seed": 2},
    "model": {"kind": "logistic_regression", "hidden_dim": 0, "l2_reg": 0.0},
    "schedule": {
        "kappa1": 6,
        "kappa2": 10,
        "total_updates": 600,
        "step_plan": {"kind": "epoch_decay", "eta0": 0.01, "decay": 0.995},
    },
    "training": {
        "batch_size": 20,
        "mode": "minibatch_sgd",
        "seed": 0,
        "track_virtual": True,
        "track_grad_norm": False,
    },
    "bounds": {"enabled": True, "probes": 8},
    "cost": {},          # CostParams field overrides
    "eval_alphas": [0.85],
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path) -> dict:
    with open(path) as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    if "artifacts" in doc and "config" in doc:  # a manifest; re-run its config
        doc = doc["config"]
    return resolve_config(doc)


def resolve_config(doc: dict) -> dict:
    cfg = _merge(DEFAULT_CONFIG, doc)
    validate_config(cfg)
    return cfg


def apply_overrides(cfg: dict, assignments) -> dict:
    """Apply --set dotted.key=json_value overrides."""
    doc = copy.deepcopy(cfg)
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw  # bare strings allowed
        node = doc
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return resolve_config(doc)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def validate_config(cfg: dict) -> None:
    """Referential consistency checks; raises ConfigError before any work."""
    ds = cfg["dataset"]
    if ds["source"] not in ("synthetic", "mnist"):
        raise ConfigError(f"dataset.source must be synthetic or mnist, got {ds['source']!r}")
    if ds["source"] == "mnist":
        for key in ("images", "labels"):
            if key not in ds:
                raise ConfigError(f"dataset.{key} is required for mnist")
    topo = build_topology(cfg)  # raises on bad divisibility
    sched = build_schedule(cfg)  # raises on bad divisibility / step plan
    scheme = cfg["partition"]["scheme"]
    if scheme not in datasets.SCHEMES:
        raise ConfigError(f"unknown partition scheme {scheme!r}")
    num_classes = 10 if ds["source"] == "mnist" else int(ds["num_classes"])
    if scheme == "edge_iid" and topo.clients_per_edge != num_classes:
        raise ConfigError(
            f"edge_iid needs clients_per_edge == num_classes "
            f"({topo.clients_per_edge} != {num_classes})"
        )
    if scheme == "edge_niid":
        half = -(-num_classes // 2)
        if topo.clients_per_edge < half or topo.clients_per_edge % half != 0:
            raise ConfigError(
                f"edge_niid needs clients_per_edge divisible by ceil(C/2)={half}"
            )
    tr = cfg["training"]
    if tr["mode"] not in hierfavg.MODES:
        raise ConfigError(f"unknown training mode {tr['mode']!r}")
    if tr["batch_size"] <= 0:
        raise ConfigError("training.batch_size must be positive")
    kind = cfg["model"]["kind"]
    if kind not in models.KINDS:
        raise ConfigError(f"unknown model kind {kind!r}")
    if not cfg["eval_alphas"]:
        raise ConfigError("eval_alphas must not be empty")
    costmodel.CostParams(**cfg["cost"])  # raises on bad values


def build_topology(cfg: dict) -> datasets.Topology:
    t = cfg["topology"]
    return datasets.Topology(int(t["num_clients"]), int(t["num_edges"]))


def build_schedule(cfg: dict) -> hierfavg.Schedule:
    s = cfg["schedule"]
    plan = s["step_plan"]
    kind = plan.get("kind")
    if kind == "fixed":
        step = hierfavg.FixedStep(float(plan["eta"]))
    elif kind == "per_interval":
        step = hierfavg.PerIntervalStep(tuple(float(e) for e in plan["etas"]))
    elif kind == "epoch_decay":
        step = hierfavg.EpochDecayStep(float(plan["eta0"]), float(plan.get("decay", 0.995)))
    else:
        raise ConfigError(f"unknown step_plan kind {kind!r}")
    return hierfavg.Schedule(
        int(s["kappa1"]), int(s["kappa2"]), int(s["total_updates"]), step
    )


def build_datasets(cfg: dict):
    """(train, test) pair per the dataset section."""
    ds = cfg["dataset"]
    if ds["source"] == "synthetic":
        train = datasets.generate_synthetic(
            int(ds["num_classes"]), int(ds["dim"]),
            int(ds["samples_per_class"]), int(ds["seed"]),
        )
        test = datasets.generate_synthetic(
            int(ds["num_classes"]), int(ds["dim"]),
            int(ds["test_samples_per_class"]), int(ds["seed"]), split=1,
        )
        return train, test
    train = datasets.load_mnist_idx(ds["images"], ds["labels"], ds.get("limit"))
    if "test_images" in ds:
        test = datasets.load_mnist_idx(
            ds["test_images"], ds["test_labels"], ds.get("test_limit")
        )
    else:
        test = train
    return train, test


def build_model_spec(cfg: dict, train: datasets.Dataset) -> models.ModelSpec:
    m = cfg["model"]
    return models.ModelSpec(
        kind=m["kind"],
        input_dim=train.dim,
        num_classes=train.num_classes,
        hidden_dim=int(m.get("hidden_dim", 0)),
        l2_reg=float(m.get("l2_reg", 0.0)),
    )
