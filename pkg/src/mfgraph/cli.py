"""Command-line experiment driver.

Subcommands map onto experiment kinds; the JSON config supplies the model
(inline, file path, or preset name) and sweep parameters, and flags
override seed, output directory, event budget, and worker threads.

Exit codes: 0 success, 2 validation failure, 3 event budget exceeded,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import nsystem
from .experiments import ExperimentConfig, run_experiment
from .model import ModelSpec, validate
from .presets import PRESETS, get_preset

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_NUMERICAL = 4

_DEFAULT_EXPERIMENT = {
    "simulate": "simulate",
    "lln": "lln_rate_fixed_beta",
    "avg": "lln_rate_accel",
    "poc": "poc",
    "compare-beta": "beta_comparison",
    "riccati": "riccati",
    "clt": "clt",
    "trace": "trace",
}

_ALLOWED_EXPERIMENTS = {
    "simulate": {"simulate"},
    "lln": {"lln_rate_fixed_beta", "lln_rate_iid"},
    "avg": {"lln_rate_accel"},
    "poc": {"poc"},
    "compare-beta": {"beta_comparison"},
    "riccati": {"riccati"},
    "clt": {"clt", "clt_mixture"},
    "trace": {"trace"},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfgraph",
        description="simulate mean-field jump systems on dynamic multi-color "
                    "graphs and verify their limit theorems numerically")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "lln", "poc", "avg", "compare-beta", "riccati",
                 "clt", "trace", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="JSON experiment config (or model JSON / preset "
                            "name for `validate`)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--budget", type=float, default=None)
        p.add_argument("--threads", type=int, default=None)
        if name == "lln":
            p.add_argument("--dry-run", action="store_true",
                           help="skip simulation; fit synthetic 1/sqrt(n) "
                                "errors as a harness self-test")
    return parser


def _load_config(args) -> ExperimentConfig:
    with open(args.config) as fh:
        obj = json.load(fh)
    obj.setdefault("experiment", _DEFAULT_EXPERIMENT[args.command])
    if obj["experiment"] not in _ALLOWED_EXPERIMENTS[args.command]:
        raise ValueError(
            f"experiment {obj['experiment']!r} not valid for subcommand "
            f"{args.command!r}")
    cfg = ExperimentConfig.from_json_dict(
        obj, base_dir=os.path.dirname(os.path.abspath(args.config)))
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    if args.budget is not None:
        cfg.budget = args.budget
    if args.threads is not None:
        cfg.threads = args.threads
    if getattr(args, "dry_run", False):
        cfg.dry_run = True
    return cfg


def _cmd_validate(args) -> int:
    name = args.config
    if name in PRESETS:
        spec = get_preset(name)
    else:
        with open(name) as fh:
            obj = json.load(fh)
        spec = (ModelSpec.from_json_dict(obj["model"])
                if "model" in obj and isinstance(obj["model"], dict)
                else ModelSpec.from_json_dict(obj))
    report = validate(spec, check_clt=spec.clt_example is not None)
    print(report)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        cfg = _load_config(args)
        report = run_experiment(cfg)
    except nsystem.BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ArithmeticError, AssertionError, nsystem.SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    summary = {k: v for k, v in report.items()
               if not str(k).startswith("_") and not isinstance(v, (list, dict))}
    print(json.dumps(summary, sort_keys=True, default=str))
    if "fit" in report:
        fit = report["fit"]
        print(f"log-log slope: {fit['slope']:+.4f} "
              f"[{fit['ci_low']:+.4f}, {fit['ci_high']:+.4f}]")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
