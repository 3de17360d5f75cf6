"""Command line entry point: orient-bench {table,run,selftest}.

Exit codes: 0 success, 2 configuration problem, 3 numerical failure.
"""

import argparse
import sys
from dataclasses import replace

from .errors import ConfigError, IoError, OrientBenchError
from .harness import parse_config, run_experiment
from .normconst import build_table, default_axis


def _cmd_table(args) -> int:
    axis = default_axis(zmin=args.axis_min, points=args.axis_points)
    table = build_table(axis=axis, path=args.out)
    print(f"wrote {len(table.logF)} nodes to {args.out}")
    return 0


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        cfg = replace(cfg, **overrides)
    result = run_experiment(cfg)
    for name, stats in result["summary"].items():
        print(
            f"{name:8s} mean={stats['mean_err']:.4f} median={stats['median_err']:.4f} "
            f"p90={stats['p90_err']:.4f} rad  ({stats['mean_ms']:.2f} ms/step)"
        )
    print(f"metrics: {result['metrics_path']}")
    print(f"summary: {result['summary_path']}")
    for p in result["figure_paths"]:
        print(f"figure:  {p}")
    if result["failures"]:
        print(f"{len(result['failures'])} filter failure(s); see warnings above")
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    rc = run_selftest()
    return 0 if rc == 0 else 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="orient-bench",
        description="Bingham orientation filter benchmark",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table", help="precompute the normalization lookup table")
    t.add_argument("--out", required=True, help="output CSV path")
    t.add_argument("--axis-min", type=float, default=-50.0)
    t.add_argument("--axis-points", type=int, default=26)
    t.set_defaults(fn=_cmd_table)

    r = sub.add_parser("run", help="run a benchmark scenario")
    r.add_argument("--config", required=True, help="scenario config file")
    r.add_argument("--out", help="output directory (overrides config)")
    r.add_argument("--seed", type=int)
    r.add_argument("--runs", type=int)
    r.add_argument("--steps", type=int)
    r.set_defaults(fn=_cmd_run)

    s = sub.add_parser("selftest", help="run the quick oracle checks")
    s.set_defaults(fn=_cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, IoError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OrientBenchError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
