"""Command line entry point: ``wienerchaos {list,describe,run,verify-identities}``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for an
invalid configuration and 3 for a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .experiments import IDENTITY_TOL, REGISTRY, gencs_slacks, identity_errors, summary
from .timeseries import GridError, InvalidModelError

OUTPUT_ROOT_ENV = "WIENERCHAOS_OUTPUT_ROOT"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(Exception):
    pass


def load_schema(name: str) -> dict:
    return json.loads(resources.files("wienerchaos").joinpath("schemas", f"{name}.schema.json").read_text())


def _parse_overrides(extra: list[str]) -> dict[str, str]:
    out = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--") or len(tok) == 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            val = next(it, None)
            if val is None:
                raise ConfigError(f"flag --{key} needs a value")
        out[key.replace("-", "_")] = val
    return out


def build_config(args: argparse.Namespace, extra: list[str]) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        try:
            jsonschema.validate(cfg, load_schema("config"))
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid config: {exc.message}") from exc
    name = args.experiment or cfg.get("experiment")
    if name is None:
        raise ConfigError("no experiment named")
    if cfg.get("experiment") not in (None, name):
        raise ConfigError(f"config is for {cfg['experiment']!r}, command line asks for {name!r}")
    if name not in REGISTRY:
        raise ConfigError(f"unknown experiment {name!r}")
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise ConfigError("a seed is required (--seed or \"seed\" in the config)")
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    params = dict(cfg.get("params", {}))
    params.update(_parse_overrides(extra))
    try:
        params = REGISTRY[name].resolve(params)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameter value: {exc}") from exc
    workers = args.workers if args.workers is not None else cfg.get("workers", 1)
    if workers < 1:
        raise ConfigError("workers must be at least 1")
    out = args.out or cfg.get("output_dir")
    if out is None:
        out = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs")) / f"{name}-seed{seed}"
    return {"experiment": name, "seed": int(seed), "params": params, "workers": int(workers), "output_dir": str(out)}


def cmd_list(args, extra) -> int:
    rows = [{"name": e.name, "summary": e.summary} for e in REGISTRY.values()]
    print(json.dumps(rows, indent=2))
    return EXIT_OK


def cmd_describe(args, extra) -> int:
    if args.name not in REGISTRY:
        print(f"error: unknown experiment {args.name!r}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(REGISTRY[args.name].describe(), indent=2))
    return EXIT_OK


def cmd_run(args, extra) -> int:
    args.experiment = None
    if extra and not extra[0].startswith("-"):
        args.experiment = extra.pop(0)
    cfg = build_config(args, extra)
    exp = REGISTRY[cfg["experiment"]]
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        result = exp.run(cfg["params"], cfg["seed"], cfg["workers"])
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    doc = summary(exp.name, cfg["params"], cfg["seed"], result)
    jsonschema.validate(doc, load_schema("summary"))
    (out / "results.csv").write_text(result.csv_text())
    (out / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for m in result.metrics:
        print(f"{'PASS' if m.passed else 'FAIL'}  {m.name}  value={m.value:.6g}  target={m.target:.6g}")
    print(f"wrote {out / 'results.csv'} and {out / 'summary.json'}")
    return EXIT_OK if result.passed else EXIT_FAIL


def verify_identities(seed: int, trials: int, gencs_trials: int | None = None) -> dict:
    errs = identity_errors(seed, trials)
    slacks = gencs_slacks(seed, trials if gencs_trials is None else gencs_trials)
    checks = {name: max(v, default=0.0) for name, v in errs.items()}
    report = {
        "seed": seed,
        "trials": trials,
        "tol": IDENTITY_TOL,
        "max_rel_err": checks,
        "gencs_min_slack": min((min(s) for s in slacks), default=0.0),
    }
    report["pass"] = all(v <= IDENTITY_TOL for v in checks.values()) and report["gencs_min_slack"] >= -1e-12
    return report


def cmd_verify(args, extra) -> int:
    if extra:
        raise ConfigError(f"unexpected arguments {extra}")
    if args.trials < 0:
        raise ConfigError("trials must be non-negative")
    report = verify_identities(args.seed, args.trials)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if report["pass"] else EXIT_FAIL


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wienerchaos", description="Wiener chaos numerics and limit-theorem experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("list", help="list experiments as JSON")
    p.set_defaults(func=cmd_list)
    p = sub.add_parser("describe", help="print a config template for one experiment")
    p.add_argument("name")
    p.set_defaults(func=cmd_describe)
    p = sub.add_parser(
        "run",
        help="run an experiment",
        usage="wienerchaos run [EXPERIMENT] [--config FILE] [--seed S] [--workers W] [--out DIR] [--param value ...]",
        description="Run an experiment. Experiment parameters are given as --name value flags and override the config file.",
    )
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ROOT_ENV}/<experiment>-seed<seed>)")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("verify-identities", help="randomized check of the contraction norm identities")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if extra and args.command != "run":
        print(f"error: unrecognized arguments: {' '.join(extra)}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args, extra)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidModelError, GridError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
