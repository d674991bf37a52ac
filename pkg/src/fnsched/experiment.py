"""Experiment matrix: fn-EDF versus BF on identical random task sets.

Each task set is drawn from its own generator seeded by
``(seed, M, 10 * ratio, set index)``, so rows do not depend on worker count
or scheduling order.  Rows are sorted by ``(set_id, scheduler)`` before
they are written.
"""
from __future__ import annotations

import csv
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

import numpy as np

from .sim import make_scheduler, run
from .taskgen import GenConfig, gen_taskset
from .tasks import CONTINUOUS, DISCRETE, TaskSet

log = logging.getLogger(__name__)

WORKERS_ENV = "FNSCHED_WORKERS"
COLUMNS = ("set_id", "scheduler", "model", "M", "N", "U", "U_decimal", "preempt_per_job",
           "migrate_per_job", "deadline_misses", "hyperperiod", "wall_ms")
PAPER_PROCS = (2, 4, 6, 8)
PAPER_RATIOS = ("2", "2.5", "3", "3.5", "4")


@dataclass(frozen=True)
class ExperimentConfig:
    procs: Sequence[int] = PAPER_PROCS
    ratios: Sequence[str] = PAPER_RATIOS  # tasks per processor
    sets: int = 100
    seed: int = 0
    hyperperiod_cap: int = 600_000
    period_lo: int = 5
    period_hi: int = 20
    continuous: bool = False  # also run fn-EDF on the continuous model
    timing: bool = False


@dataclass
class ExperimentRow:
    set_id: str
    scheduler: str
    model: str
    M: int
    N: int
    U: Fraction
    preempt_per_job: float | None
    migrate_per_job: float | None
    deadline_misses: int  # -1 when the run failed
    hyperperiod: int
    wall_ms: float | None = None
    error: str | None = field(default=None, compare=False)

    def as_csv(self) -> list[str]:
        def num(x):
            return "" if x is None else f"{x:.6f}"
        return [self.set_id, self.scheduler, self.model, str(self.M), str(self.N),
                f"{self.U.numerator}/{self.U.denominator}", f"{float(self.U):.6f}",
                num(self.preempt_per_job), num(self.migrate_per_job), str(self.deadline_misses),
                str(self.hyperperiod), "" if self.wall_ms is None else f"{self.wall_ms:.1f}"]

    def as_dict(self) -> dict[str, str]:
        return dict(zip(COLUMNS, self.as_csv()))


def task_count(m: int, ratio: str | float) -> int:
    """``ratio * M`` rounded half up."""
    return int(Fraction(str(ratio)) * m + Fraction(1, 2))


def set_id(m: int, n: int, index: int) -> str:
    return f"m{m:02d}-n{n:03d}-s{index:04d}"


@dataclass(frozen=True)
class SetSpec:
    m: int
    ratio: str
    index: int
    seed: int
    hyperperiod_cap: int
    period_lo: int
    period_hi: int

    @property
    def n(self) -> int:
        return task_count(self.m, self.ratio)

    @property
    def id(self) -> str:
        return set_id(self.m, self.n, self.index)

    def taskset(self) -> TaskSet:
        ratio10 = int(Fraction(str(self.ratio)) * 10)
        rng = np.random.default_rng([self.seed, self.m, ratio10, self.index])
        cfg = GenConfig(self.m, self.n, self.period_lo, self.period_hi,
                        hyperperiod_cap=self.hyperperiod_cap)
        return gen_taskset(cfg, rng)


def set_specs(cfg: ExperimentConfig) -> list[SetSpec]:
    return [SetSpec(m, str(r), i, cfg.seed, cfg.hyperperiod_cap, cfg.period_lo, cfg.period_hi)
            for m in cfg.procs for r in cfg.ratios for i in range(cfg.sets)]


def _run_row(ts: TaskSet, sid: str, name: str, model: str, timing: bool) -> ExperimentRow:
    h = ts.hyperperiod
    start = time.perf_counter()
    try:
        rep = run(ts, make_scheduler(name, model))
    except Exception as exc:  # recorded per row, the matrix goes on
        log.warning("%s %s/%s failed: %s", sid, name, model, exc)
        return ExperimentRow(sid, name, model, ts.processors, ts.n, ts.utilization, None, None,
                             -1, h, error=f"{type(exc).__name__}: {exc}")
    wall = (time.perf_counter() - start) * 1000 if timing else None
    return ExperimentRow(sid, name, model, ts.processors, ts.n, ts.utilization,
                         rep.preemptions_per_job, rep.migrations_per_job,
                         len(rep.deadline_misses), h, wall)


def run_set(spec: SetSpec, continuous: bool = False, timing: bool = False) -> list[ExperimentRow]:
    ts = spec.taskset()
    rows = [_run_row(ts, spec.id, "bf", DISCRETE, timing),
            _run_row(ts, spec.id, "fnedf", DISCRETE, timing)]
    if continuous:
        rows.append(_run_row(ts, spec.id, "fnedf", CONTINUOUS, timing))
    return rows


def _run_set_args(args):
    return run_set(*args)


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> list[ExperimentRow]:
    workers = default_workers() if workers is None else workers
    jobs = [(spec, cfg.continuous, cfg.timing) for spec in set_specs(cfg)]
    if workers <= 1 or len(jobs) <= 1:
        results = [_run_set_args(j) for j in jobs]
    else:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_set_args, jobs, chunksize=4))
    rows = [r for rs in results for r in rs]
    rows.sort(key=lambda r: (r.set_id, r.scheduler, r.model))
    return rows


def write_csv(rows: Iterable[ExperimentRow], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.as_csv())


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(rows: Sequence[dict[str, str]]) -> dict[tuple[int, int], dict[str, float]]:
    """Per ``(M, N)``: mean metrics per scheduler and mean per-set preemption ratio."""
    by_set: dict[str, dict[str, dict[str, str]]] = {}
    for r in rows:
        if r["model"] == DISCRETE:
            by_set.setdefault(r["set_id"], {})[r["scheduler"]] = r
    groups: dict[tuple[int, int], dict[str, list[float]]] = {}
    for pair in by_set.values():
        if set(pair) != {"bf", "fnedf"} or any(p["preempt_per_job"] == "" for p in pair.values()):
            continue
        b, f = pair["bf"], pair["fnedf"]
        g = groups.setdefault((int(b["M"]), int(b["N"])), {k: [] for k in
                              ("bf_preempt", "fn_preempt", "bf_migrate", "fn_migrate", "ratio")})
        bp, fp = float(b["preempt_per_job"]), float(f["preempt_per_job"])
        g["bf_preempt"].append(bp)
        g["fn_preempt"].append(fp)
        g["bf_migrate"].append(float(b["migrate_per_job"]))
        g["fn_migrate"].append(float(f["migrate_per_job"]))
        if bp > 0:
            g["ratio"].append(fp / bp)
    out = {}
    for key, g in sorted(groups.items()):
        out[key] = {k: float(np.mean(v)) if v else float("nan") for k, v in g.items()}
        out[key]["sets"] = len(g["bf_preempt"])
    return out
