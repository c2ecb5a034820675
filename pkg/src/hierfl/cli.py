"""Command-line entry point.

Subcommands:

* ``run``      -- execute one configured experiment, write artifacts.
* ``sweep``    -- run the config's sweep grid, write a summary CSV.
* ``bounds``   -- evaluate the closed-form bounds over a parameter grid.
* ``cost``     -- re-price an existing trace CSV.
* ``validate`` -- check a config file without running anything.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bounds, config as cfgmod, costmodel, hierfavg, runner
from .errors import ConfigError, FormatError


def _floats(text: str):
    return [float(x) for x in text.split(",") if x]


def _ints(text: str):
    return [int(x) for x in text.split(",") if x]


def _load(args) -> dict:
    cfg = cfgmod.load_config(args.config)
    if args.set:
        cfg = cfgmod.apply_overrides(cfg, args.set)
    return cfg


def _add_config_args(p):
    p.add_argument("config", help="experiment config JSON (or a manifest.json)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override training seed")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (dotted path, JSON value)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hierfl",
        description="Hierarchical federated averaging simulator and bound evaluator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_config_args(sub.add_parser("run", help="execute one experiment"))
    _add_config_args(sub.add_parser("sweep", help="run the config's sweep grid"))

    b = sub.add_parser("bounds", help="evaluate deviation bounds on a grid")
    b.add_argument("--out", default="bounds_grid.csv")
    b.add_argument("--kappa1", type=_ints, default=[1, 2, 4, 8])
    b.add_argument("--kappa2", type=_ints, default=[1, 2, 4, 8])
    b.add_argument("--eta", type=_floats, default=[0.01, 0.1])
    b.add_argument("--delta", type=_floats, default=[0.0, 0.5, 1.0])
    b.add_argument("--edge-delta", type=_floats, default=[0.0, 0.5, 1.0],
                   help="edge-cloud divergence values")
    b.add_argument("--beta", type=float, default=1.0)
    b.add_argument("--rho", type=float, default=1.0)
    b.add_argument("--omega", type=float, default=1.0)
    b.add_argument("--epsilon", type=float, default=1.0)
    b.add_argument("--intervals", type=int, default=10,
                   help="number of cloud intervals for the gap bound")

    c = sub.add_parser("cost", help="re-price an existing trace CSV")
    c.add_argument("trace")
    c.add_argument("--out", default=None, help="cost CSV output (default: stdout summary only)")
    c.add_argument("--kappa1", type=int, required=True)
    c.add_argument("--kappa2", type=int, required=True)
    c.add_argument("--alpha", type=_floats, default=[0.85])
    c.add_argument("--energy-scope", choices=costmodel.ENERGY_SCOPES,
                   default="per_client")
    c.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a CostParams field, e.g. tx_power=0.5")

    v = sub.add_parser("validate", help="validate a config file")
    v.add_argument("config")
    v.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    return parser


def cmd_run(args) -> int:
    manifest = runner.run_experiment(_load(args), args.out, seed=args.seed)
    print(f"run complete: {len(manifest['artifacts'])} artifacts in {args.out}")
    return 0


def cmd_sweep(args) -> int:
    rows = runner.sweep(_load(args), args.out, seed=args.seed)
    failed = sum(1 for r in rows if r.get("status") != "ok")
    print(f"sweep complete: {len(rows)} points ({failed} failed) -> {args.out}")
    return 1 if failed == len(rows) else 0


def cmd_bounds(args) -> int:
    with open(args.out, "w") as f:
        f.write("kappa1,kappa2,eta,delta,Delta,beta,g_c_end,g_nc,gap_bound,feasible\n")
        for k1 in args.kappa1:
            for k2 in args.kappa2:
                for eta in args.eta:
                    for d in args.delta:
                        for dd in args.edge_delta:
                            p = bounds.BoundParams(
                                beta=args.beta, rho=args.rho, delta=d, Delta=dd,
                                eta=eta, kappa1=k1, kappa2=k2,
                                total_updates=args.intervals * k1 * k2,
                                omega=args.omega, epsilon=args.epsilon,
                            )
                            g_end = bounds.convex_deviation_bound_end(p)
                            g_nc = bounds.nonconvex_deviation_bound(p)
                            gap = bounds.convex_gap_bound(p)
                            f.write(
                                f"{k1},{k2},{eta!r},{d!r},{dd!r},{args.beta!r},"
                                f"{g_end!r},{g_nc!r},"
                                f"{'' if gap.value is None else repr(gap.value)},"
                                f"{int(gap.feasible)}\n"
                            )
    print(f"bounds grid -> {args.out}")
    return 0


def cmd_cost(args) -> int:
    trace = hierfavg.read_trace_csv(args.trace)
    overrides = {}
    for item in args.set:
        key, _, raw = item.partition("=")
        overrides[key] = float(raw)
    params = costmodel.CostParams(**overrides)
    period = args.kappa1 * args.kappa2
    total = max(r.k for r in trace)
    total = ((total + period - 1) // period) * period
    schedule = hierfavg.Schedule(args.kappa1, args.kappa2, total, hierfavg.FixedStep(1.0))
    reports = [
        costmodel.accumulate(trace, schedule, params, a, args.energy_scope)
        for a in args.alpha
    ]
    if args.out:
        costmodel.write_cost_csv(reports[0], args.out)
    print(json.dumps(costmodel.summary_dict(reports), indent=2, sort_keys=True))
    return 0


def cmd_validate(args) -> int:
    cfg = cfgmod.load_config(args.config)
    if args.set:
        cfg = cfgmod.apply_overrides(cfg, args.set)
    print(f"config ok (hash {cfgmod.config_hash(cfg)})")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "sweep": cmd_sweep,
        "bounds": cmd_bounds,
        "cost": cmd_cost,
        "validate": cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, FormatError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
