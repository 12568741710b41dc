"""Command line entry point ``typelab``.

Exit codes: 0 every check passed, 1 some check failed, 2 no failure but some
check inconclusive, 3 configuration or output error.
"""
from __future__ import annotations

import argparse
import sys

from .bounds import growth_factor, solve_t0, upper_bound_U
from .config import ConfigError, load_config
from .report import EXIT_CONFIG, OutputError, emit_report, fmt, run_experiment


def _parser():
    p = argparse.ArgumentParser(prog="typelab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="sample curves, profile every model, run the checks")
    run.add_argument("config")
    run.add_argument("--csv", help="override output.csv")
    run.add_argument("--json", help="override output.json")
    run.add_argument("--jobs", type=int, help="worker threads")
    sub.add_parser("thresholds", help="print the threshold constants")
    chk = sub.add_parser("check", help="run the consistency battery only")
    chk.add_argument("config")
    chk.add_argument("--seed", type=int, default=None)
    chk.add_argument("--json", help="override output.json")
    chk.add_argument("--jobs", type=int)
    return p


def _thresholds(out):
    th = solve_t0()
    rows = [
        ("t0", th.t0),
        ("4*t0^2", th.four_t0_sq),
        ("4*log(2+sqrt(3))^2", th.lemma34_threshold),
        ("C2(4*log(2+sqrt(3))^2)", growth_factor(th.lemma34_threshold)),
        ("U(1)", upper_bound_U(1.0)),
        ("U(2)", upper_bound_U(2.0)),
    ]
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {fmt(value)}", file=out)
    return 0


def _print_checks(result, out):
    for c in result.checks:
        print(f"{c.verdict:<12} {c.check_id:<17} {c.model_id:<36} {c.narrative}", file=out)
    counts = {}
    for c in result.checks:
        counts[c.verdict] = counts.get(c.verdict, 0) + 1
    summary = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    print(f"summary: {summary or 'no checks'}", file=out)


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = _parser().parse_args(argv)
    if args.command == "thresholds":
        return _thresholds(out)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs:
        config.jobs = args.jobs
    seed = getattr(args, "seed", None)
    result = run_experiment(config, seed=seed)
    _print_checks(result, out)
    csv_path = getattr(args, "csv", None) or (config.output.get("csv") if args.command == "run" else None)
    json_path = args.json or config.output.get("json")
    try:
        return emit_report(result, csv_path, json_path)
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
