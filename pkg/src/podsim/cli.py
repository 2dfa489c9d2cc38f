"""Command-line entry point.

    podsim run --config plan.yaml [--out DIR] [--parallel N]
    podsim layouts
    podsim validate --config plan.yaml

Output directory precedence: --out flag, then $PODSIM_OUT, then the
config's output_dir. Exit code is 0 only when every run succeeded.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, parse_config
from .harness import run_plan
from .layout import BUILTIN_LAYOUTS, grid_dimensions, storage_location_count


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="podsim",
                                     description="Pod repositioning simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment plan")
    p_run.add_argument("--config", required=True, help="plan YAML file")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--parallel", type=int, default=None,
                       help="worker processes (overrides config parallelism)")

    sub.add_parser("layouts", help="list built-in layouts")

    p_val = sub.add_parser("validate", help="parse and check a plan without running")
    p_val.add_argument("--config", required=True, help="plan YAML file")
    return parser


def _print_layouts() -> None:
    print(f"{'name':<8}{'pick':>6}{'repl':>6}{'aisles':>10}{'pods':>7}{'locations':>11}{'grid':>10}")
    for name, spec in BUILTIN_LAYOUTS.items():
        w, h = grid_dimensions(spec)
        aisles = f"{spec.aisles_horizontal}x{spec.aisles_vertical}"
        print(f"{name:<8}{spec.pick_stations:>6}{spec.replenish_stations:>6}"
              f"{aisles:>10}{spec.pods:>7}{storage_location_count(spec):>11}{f'{w}x{h}':>10}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "layouts":
        _print_layouts()
        return 0

    try:
        plan = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print(f"plan ok: {len(plan.cells)} cell(s) x {plan.repetitions} repetition(s)")
        for cell_id, _ in plan.cells:
            print(f"  {cell_id}")
        return 0

    out = args.out or os.environ.get("PODSIM_OUT") or plan.output_dir
    if args.parallel is not None:
        plan.parallelism = args.parallel
    summary = run_plan(plan, out)
    for cell in summary.cells:
        print(cell.row())
    print(f"summary: {summary.output_dir / 'summary.csv'}")
    return 1 if summary.failed else 0


if __name__ == "__main__":
    sys.exit(main())
