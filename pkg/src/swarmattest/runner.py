"""Batch execution and CSV export.

Output layout for a batch (CSV schema version 1):

    <out_dir>/run_<seed>/coverage.csv   run_id,t_us,x,y
    <out_dir>/run_<seed>/summary.csv    one row per coverage target
    <out_dir>/run_<seed>/verifier.csv   one row per verifier query (if any)
    <out_dir>/run_<seed>/events.log     event trace (only with trace enabled)
    <out_dir>/aggregate.csv             mean/stddev of MCT per target
    <out_dir>/baseline.csv              tree-aggregation completion (if enabled)

A target that was never reached carries the literal sentinel ``not-reached``
in its mct_us column. Files are written atomically (temp file + rename) and
all contents are pure functions of (scenario, seed), so re-running a batch
reproduces every byte.
"""

from __future__ import annotations

import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .baseline import run_tree_baseline
from .config import ScenarioConfig
from .engine import RunResult, run_scenario

NOT_REACHED = "not-reached"

SUMMARY_HEADER = ("run_id,target_x,target_y,mct_us,messages_sent,messages_delivered,"
                  "frames_sent,bytes_sent,energy_total_uj,rej_bad_mac,rej_wrong_epoch,"
                  "rej_stale_timestamp,rej_malformed")
COVERAGE_HEADER = "run_id,t_us,x,y"
VERIFIER_HEADER = ("run_id,t_query_us,status,queried_node,r,rho,"
                   "n_healthy,n_compromised,n_unknown")
AGGREGATE_HEADER = "target_x,target_y,n_runs,n_reached,mct_mean_us,mct_std_us"
BASELINE_HEADER = "n,branching,completion_us"


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def coverage_csv(result: RunResult, run_id: int) -> str:
    lines = [COVERAGE_HEADER]
    for s in result.ledger.coverage_series:
        lines.append(f"{run_id},{s.t_us},{s.x:.6f},{s.y:.6f}")
    return "\n".join(lines) + "\n"


def summary_csv(result: RunResult, run_id: int) -> str:
    led = result.ledger
    rej = led.rejections
    lines = [SUMMARY_HEADER]
    for (x, y), mct in sorted(led.mct_us.items()):
        mct_field = NOT_REACHED if mct is None else str(mct)
        lines.append(
            f"{run_id},{x:.6f},{y:.6f},{mct_field},{led.messages_sent},"
            f"{led.messages_delivered},{led.frames_sent},{led.bytes_sent},"
            f"{led.energy.total_uj():.3f},{rej['bad_mac']},{rej['wrong_epoch']},"
            f"{rej['stale_timestamp']},{rej['malformed']}")
    return "\n".join(lines) + "\n"


def verifier_csv(result: RunResult, run_id: int) -> str:
    lines = [VERIFIER_HEADER]
    rows = []
    for o in result.outcomes:
        counts = {"healthy": 0, "compromised": 0, "unknown": 0}
        for c in o.classification:
            counts[c] += 1
        rows.append((o.t_query_us,
                     f"{run_id},{o.t_query_us},ok,{o.queried_node},{o.r},{o.rho:.6f},"
                     f"{counts['healthy']},{counts['compromised']},{counts['unknown']}"))
    for t_us, _reason in result.query_failures:
        rows.append((t_us, f"{run_id},{t_us},failed,,,,,,"))
    for _, line in sorted(rows):
        lines.append(line)
    return "\n".join(lines) + "\n"


@dataclass
class RunSummary:
    seed: int
    mct_us: dict[tuple[float, float], int | None]


def _execute_one(args: tuple) -> RunSummary:
    cfg, seed, run_dir, trace = args
    result = run_scenario(cfg, seed, trace=trace)
    os.makedirs(run_dir, exist_ok=True)
    _atomic_write(os.path.join(run_dir, "coverage.csv"), coverage_csv(result, seed))
    _atomic_write(os.path.join(run_dir, "summary.csv"), summary_csv(result, seed))
    if result.outcomes or result.query_failures:
        _atomic_write(os.path.join(run_dir, "verifier.csv"), verifier_csv(result, seed))
    if trace:
        _atomic_write(os.path.join(run_dir, "events.log"), "\n".join(result.trace) + "\n")
    return RunSummary(seed, dict(result.ledger.mct_us))


def aggregate_csv(cfg: ScenarioConfig, summaries: list[RunSummary]) -> str:
    lines = [AGGREGATE_HEADER]
    for x, y in cfg.coverage_targets:
        reached = [s.mct_us[(x, y)] for s in summaries if s.mct_us.get((x, y)) is not None]
        mean = statistics.fmean(reached) if reached else float("nan")
        std = statistics.stdev(reached) if len(reached) >= 2 else 0.0
        mean_field = f"{mean:.3f}" if reached else NOT_REACHED
        lines.append(f"{x:.6f},{y:.6f},{len(summaries)},{len(reached)},"
                     f"{mean_field},{std:.3f}")
    return "\n".join(lines) + "\n"


def run_batch(cfg: ScenarioConfig, out_dir: str, jobs: int = 1,
              trace: bool = False, baseline: bool = False) -> list[RunSummary]:
    """Execute one simulation per seed and write per-run plus aggregate CSVs."""
    os.makedirs(out_dir, exist_ok=True)
    tasks = [(cfg, seed, os.path.join(out_dir, f"run_{seed}"), trace)
             for seed in cfg.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_execute_one, tasks))
    else:
        summaries = [_execute_one(t) for t in tasks]
    _atomic_write(os.path.join(out_dir, "aggregate.csv"), aggregate_csv(cfg, summaries))
    if baseline or cfg.baseline != "none":
        res = run_tree_baseline(cfg)
        _atomic_write(os.path.join(out_dir, "baseline.csv"),
                      BASELINE_HEADER + f"\n{res.n},{res.branching},{res.completion_us}\n")
    return summaries
