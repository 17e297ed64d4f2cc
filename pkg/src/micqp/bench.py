"""Suite runner: solver configurations over instance sets, tables, profiles.

Six named configurations cover the solver variants:

* ``OA``              -- flat tangent cuts around exact MILP rounds.
* ``LiftedLP-branch`` -- static tower rows, branch-based refinement.
* ``LiftedLP-cut``    -- static tower rows, cut-based refinement.
* ``SepLP``           -- per-coordinate split reformulation, then the
  dynamic cut-based tree.
* ``TowerLP``         -- tower reformulation, dynamic cut-based tree.
* ``TowerSepLP``      -- tower with split gadgets, dynamic cut-based tree.

``run_suite`` produces one :class:`RunRecord` per (instance, config) pair;
``summarize`` renders per-config time statistics with win counts, and
``profile`` builds ratio-to-best performance curves.  Records round-trip
through CSV with columns exactly::

    instance,config,status,time_s,nodes,cuts,lp_solves,conic_solves,objective,max_violation
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .bnb import Limits, RefineStrategy, solve_lifted, solve_oa
from .model import MicqpInstance, Status, max_cone_violation
from .reform import reform_sep, reform_tower, reform_towersep

__all__ = [
    "RunRecord",
    "SummaryRow",
    "ProfileCurve",
    "CONFIGS",
    "CSV_COLUMNS",
    "run_one",
    "run_suite",
    "summarize",
    "profile",
    "write_records",
    "read_records",
    "write_summary",
    "write_profile",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("instance", "config", "status", "time_s", "nodes", "cuts",
               "lp_solves", "conic_solves", "objective", "max_violation")

#: statuses that count as a conclusive answer for wins and profile ratios
SOLVED = frozenset({Status.OPTIMAL, Status.INFEASIBLE, Status.UNBOUNDED})


@dataclass
class RunRecord:
    instance: str
    config: str
    status: Status
    time_s: float
    nodes: int
    cuts: int
    lp_solves: int
    conic_solves: int
    objective: float
    max_violation: float | None

    def __post_init__(self):
        if self.time_s < 0.0:
            raise ValueError("time_s must be nonnegative")


@dataclass
class SummaryRow:
    config: str
    n_records: int
    solved: int
    min_time: float
    avg_time: float
    max_time: float
    std_time: float
    wins: int
    win_1pct: int
    win_10pct: int


@dataclass
class ProfileCurve:
    config: str
    points: list[tuple[float, float]]   # (ratio tau, fraction rho(tau))


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------


def _run_oa(inst, limits):
    res = solve_oa(inst, limits=limits)
    return res, res.x


def _run_lifted_branch(inst, limits):
    res = solve_lifted(inst, strategy=RefineStrategy.BRANCH_BASED,
                       use_static=True, limits=limits)
    return res, res.x


def _run_lifted_cut(inst, limits):
    res = solve_lifted(inst, strategy=RefineStrategy.CUT_BASED,
                       use_static=True, sep_gammas=(), limits=limits)
    return res, res.x


def _reform_runner(transform):
    def run(inst, limits):
        ref = transform(inst)
        res = solve_lifted(ref.inst, strategy=RefineStrategy.CUT_BASED,
                           use_static=False, limits=limits)
        x = None if res.x is None else ref.back_map(res.x)
        return res, x
    return run


CONFIGS = {
    "OA": _run_oa,
    "LiftedLP-branch": _run_lifted_branch,
    "LiftedLP-cut": _run_lifted_cut,
    "SepLP": _reform_runner(reform_sep),
    "TowerLP": _reform_runner(reform_tower),
    "TowerSepLP": _reform_runner(reform_towersep),
}


def _config_rank(config_id: str) -> tuple:
    """Canonical config order: registry order first, unknown ids after."""
    known = list(CONFIGS)
    if config_id in known:
        return (0, known.index(config_id))
    return (1, config_id)


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def run_one(instance_id: str, inst: MicqpInstance, config_id: str,
            time_limit: float | None = 60.0) -> RunRecord:
    """Solve one instance under one configuration and record the outcome.

    Unexpected solver errors are logged and recorded as IterLimit rather
    than aborting a suite.
    """
    runner = CONFIGS[config_id]
    limits = Limits(time_limit=time_limit)
    t0 = time.perf_counter()
    try:
        res, x = runner(inst, limits)
    except Exception:
        log.exception("config %s failed on %s", config_id, instance_id)
        return RunRecord(instance_id, config_id, Status.ITER_LIMIT,
                         time.perf_counter() - t0, 0, 0, 0, 0, -math.inf, None)
    elapsed = time.perf_counter() - t0
    # the per-record quality column clips strictly feasible points to 0
    viol = None if x is None else max(0.0, max_cone_violation(inst, x))
    return RunRecord(
        instance=instance_id, config=config_id, status=res.status,
        time_s=elapsed, nodes=res.stats.nodes, cuts=res.stats.cuts,
        lp_solves=res.stats.lp_solves, conic_solves=res.stats.conic_solves,
        objective=res.objective, max_violation=viol,
    )


def _run_task(args):
    return run_one(*args)


def run_suite(instances, configs=None, time_limit: float | None = 60.0,
              threads: int = 1) -> list[RunRecord]:
    """One record per (instance, config); order follows the inputs.

    ``instances`` is an iterable of (id, MicqpInstance) pairs or a dict.
    With ``threads > 1`` records are computed by a process pool; each
    worker owns its solver state, and results are merged back in task
    order, so the output is identical to a serial run except for time_s.
    """
    if isinstance(instances, dict):
        items = list(instances.items())
    else:
        items = list(instances)
    config_ids = list(CONFIGS) if configs is None else list(configs)
    for cid in config_ids:
        if cid not in CONFIGS:
            raise KeyError(f"unknown config {cid!r}")
    tasks = [(iid, inst, cid, time_limit)
             for iid, inst in items for cid in config_ids]
    if threads <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_task, tasks))


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def _by_instance(records):
    table: dict[str, dict[str, RunRecord]] = {}
    for rec in records:
        table.setdefault(rec.instance, {})[rec.config] = rec
    return table


def summarize(records) -> list[SummaryRow]:
    """Per-config time statistics plus win counts.

    A config wins an instance when its time is strictly smallest there;
    exact ties go to the earliest config in registry order.  The p% win
    columns count instances where the config finished within (1 + p/100)
    times the fastest.  Output rows follow registry order and do not
    depend on record order.
    """
    records = list(records)
    config_ids = sorted({r.config for r in records}, key=_config_rank)
    table = _by_instance(records)
    rows = []
    for cid in config_ids:
        # sorted so the mean/std are bit-identical under record reordering
        times = np.sort([r.time_s for r in records if r.config == cid])
        solved = sum(1 for r in records if r.config == cid and r.status in SOLVED)
        wins = win1 = win10 = 0
        for per_config in table.values():
            if cid not in per_config:
                continue
            best = min(r.time_s for r in per_config.values())
            winner = min((c for c, r in per_config.items() if r.time_s == best),
                         key=_config_rank)
            t = per_config[cid].time_s
            wins += winner == cid
            win1 += t <= 1.01 * best
            win10 += t <= 1.10 * best
        rows.append(SummaryRow(
            config=cid, n_records=times.size, solved=solved,
            min_time=float(times.min()), avg_time=float(times.mean()),
            max_time=float(times.max()), std_time=float(times.std()),
            wins=wins, win_1pct=win1, win_10pct=win10,
        ))
    return rows


def profile(records) -> list[ProfileCurve]:
    """Ratio-to-best curves: rho_c(tau) = fraction of instances where
    config c's time is within tau times the fastest conclusive time.

    Records whose status is not conclusive get ratio infinity, as does
    every record of an instance nobody solved.  All curves share the
    breakpoint grid (the sorted finite ratios), so the CSV lines up.
    """
    records = list(records)
    config_ids = sorted({r.config for r in records}, key=_config_rank)
    table = _by_instance(records)
    n_inst = len(table)
    ratios: dict[str, list[float]] = {cid: [] for cid in config_ids}
    for per_config in table.values():
        solved_times = [r.time_s for r in per_config.values() if r.status in SOLVED]
        best = min(solved_times) if solved_times else None
        for cid, rec in per_config.items():
            if best is None or rec.status not in SOLVED:
                ratios[cid].append(math.inf)
            else:
                ratios[cid].append(max(1.0, rec.time_s / best) if best > 0
                                   else 1.0)
    grid = sorted({r for rs in ratios.values() for r in rs if math.isfinite(r)})
    if not grid or grid[0] > 1.0:
        grid = [1.0] + grid
    curves = []
    for cid in config_ids:
        rs = ratios[cid]
        points = [(tau, sum(r <= tau for r in rs) / n_inst) for tau in grid]
        curves.append(ProfileCurve(config=cid, points=points))
    return curves


# ---------------------------------------------------------------------------
# CSV input/output
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Status):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, col)) for col in CSV_COLUMNS])


def read_records(path) -> list[RunRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header!r}")
        for row in reader:
            vals = dict(zip(CSV_COLUMNS, row))
            records.append(RunRecord(
                instance=vals["instance"], config=vals["config"],
                status=Status(vals["status"]), time_s=float(vals["time_s"]),
                nodes=int(vals["nodes"]), cuts=int(vals["cuts"]),
                lp_solves=int(vals["lp_solves"]),
                conic_solves=int(vals["conic_solves"]),
                objective=float(vals["objective"]),
                max_violation=(None if vals["max_violation"] == ""
                               else float(vals["max_violation"])),
            ))
    return records


def write_summary(rows, path) -> None:
    cols = [f.name for f in fields(SummaryRow)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(getattr(row, col)) for col in cols])


def write_profile(curves, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config", "tau", "rho"])
        for curve in curves:
            for tau, rho in curve.points:
                writer.writerow([curve.config, repr(tau), repr(rho)])
