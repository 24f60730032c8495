"""Command-line entry point: ``banditlab run|list-policies|plot|report``.

Exit codes: 0 success, 2 invalid configuration, 3 failure while running.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import POLICY_ENTRIES, ConfigError, ExperimentConfig
from .harness import CSV_NAME, JSON_NAME, SVG_NAME, bound_table, emit_outputs, run_experiment, write_svg

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("banditlab")


def _results_dir(path: str) -> Path:
    p = Path(path)
    return p.parent if p.is_file() else p


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    out = Path(args.out or cfg.out)
    result = run_experiment(cfg, workers=args.workers)
    paths = emit_outputs(result, out, ("csv", "json", "svg") if cfg.svg else ("csv", "json"))
    log.info("%d replications x %d steps in %.1fs", cfg.replications, cfg.horizon, result.wall_time)
    for kind, p in paths.items():
        print(f"{kind}: {p}")
    if result.bounds:
        print(bound_table({"bounds": result.bounds}))
    return EXIT_OK


def cmd_list(args) -> int:
    width = max(len(e.name) for e in POLICY_ENTRIES)
    for e in POLICY_ENTRIES:
        print(f"{e.name:<{width}}  {e.family:<14}{e.summary}")
    return EXIT_OK


def cmd_plot(args) -> int:
    d = _results_dir(args.results)
    svg = write_svg(d / CSV_NAME, Path(args.output) if args.output else d / SVG_NAME, args.metrics)
    print(f"svg: {svg}")
    return EXIT_OK


def cmd_report(args) -> int:
    d = _results_dir(args.results)
    with open(d / JSON_NAME) as fh:
        data = json.load(fh)
    print(bound_table(data))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="banditlab", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, help="override the master seed of the config")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", help="output directory (default: experiment.out)")
    run.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the master seed")
    run.set_defaults(func=cmd_run)

    sub.add_parser("list-policies", help="list registered policies").set_defaults(func=cmd_list)

    plot = sub.add_parser("plot", help="draw the SVG chart from a results directory")
    plot.add_argument("results")
    plot.add_argument("--metrics", nargs="+")
    plot.add_argument("-o", "--output")
    plot.set_defaults(func=cmd_plot)

    report = sub.add_parser("report", help="print the bound-check table of a results directory")
    report.add_argument("results")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - the exit code is the contract
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
