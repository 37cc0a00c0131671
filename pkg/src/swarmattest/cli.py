"""Experiment runner command line.

    swarmattest SCENARIO.json [--seeds 1,2,3] [--out-dir DIR] [--jobs N]
                [--baseline] [--trace] [-v]

The default output directory comes from $SWARMATTEST_OUTPUT_DIR, falling back
to ./results. Exit codes: 0 on success, 1 on configuration errors, 2 on a
runtime failure (partial results are left in place).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import traceback

from . import config as config_mod
from .errors import ConfigError
from .runner import run_batch

log = logging.getLogger("swarmattest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmattest",
        description="Run collective-attestation swarm simulations from a scenario file.")
    parser.add_argument("scenario", help="path to a JSON scenario file")
    parser.add_argument("--seeds", default=None,
                        help="comma-separated seed list overriding the scenario's seeds")
    parser.add_argument("--out-dir", default=None,
                        help="output directory (default: $SWARMATTEST_OUTPUT_DIR or ./results)")
    parser.add_argument("--jobs", type=int, default=1,
                        help="run up to N seeds in parallel worker processes")
    parser.add_argument("--baseline", action="store_true",
                        help="also run the naive tree-aggregation baseline "
                             "(static_tree topologies only)")
    parser.add_argument("--trace", action="store_true",
                        help="write a per-run event trace log")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log verbosity (-v info, -vv debug)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")

    out_dir = args.out_dir or os.environ.get("SWARMATTEST_OUTPUT_DIR", "results")
    try:
        cfg = config_mod.parse_config(args.scenario)
        if args.seeds is not None:
            seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
            if not seeds:
                raise ConfigError("--seeds: expected a comma-separated integer list")
            cfg.seeds = list(dict.fromkeys(seeds))
        if args.baseline and cfg.topology.kind != "static_tree":
            raise ConfigError("--baseline requires a static_tree topology")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except (ConfigError, ValueError) as exc:
        log.error("configuration error: %s", exc)
        print(f"swarmattest: configuration error: {exc}", file=sys.stderr)
        return 1

    try:
        summaries = run_batch(cfg, out_dir, jobs=args.jobs, trace=args.trace,
                              baseline=args.baseline)
    except Exception:
        print("swarmattest: run failed", file=sys.stderr)
        traceback.print_exc()
        return 2

    log.info("completed %d runs into %s", len(summaries), out_dir)
    print(f"{len(summaries)} run(s) completed, results in {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
