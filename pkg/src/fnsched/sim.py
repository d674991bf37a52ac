"""Boundary-driven simulation of online schedulers over a hyperperiod.

Scheduling events are job releases/deadlines.  At each event the scheduler
returns the work every job receives up to the next event; the work is laid
out with McNaughton's algorithm and the job table advanced.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Protocol, Sequence, TextIO

from .bf import BfShadow, bf_scheduler_step, compute_window_capacities_discrete, next_boundary
from .dispatch import MetricCounters, MetricTracker, Segment, mcnaughton
from .flownet import build_fnrt_edf, job_node, scale_to_integers, window_node
from .mcmf import SolverStats, is_complete, min_cost_max_flow
from .tasks import (CONTINUOUS, DISCRETE, JobState, TaskSet, Time, active_job_area,
                    boundaries, release_jobs, window_capacities_continuous)

# windows per discrete-model event before we refuse to build the network
DEFAULT_WINDOW_BUDGET = 10_000


class SchedulingError(RuntimeError):
    pass


class IncompleteFlow(SchedulingError):
    """No flow saturates every job: contradicts optimality when U <= M."""


@dataclass
class StepResult:
    allocations: dict[int, Time]
    window_end: Time
    complete: bool = True
    stats: SolverStats | None = None
    windows: int = 1


class Scheduler(Protocol):
    name: str
    model: str

    def reset(self, ts: TaskSet) -> None: ...

    def step(self, ts: TaskSet, jobs: Sequence[JobState], t: Time) -> StepResult: ...


def _first_window(net, result) -> dict[int, Time]:
    """Flow on every job -> W_1 edge, keyed by task id."""
    w1 = net.index.get(window_node(1))
    nodes = net.nodes
    return {nodes[u].key: result.value(i)
            for i, (u, v) in enumerate(zip(net.tails, net.heads)) if v == w1}


def fnedf_continuous_step(ts: TaskSet, jobs: Sequence[JobState], t: Time,
                          strict: bool = True) -> StepResult:
    """Min-cost flow over active deadlines with fluid reservations for future jobs."""
    aja = active_job_area(ts, jobs, t, CONTINUOUS)
    caps = window_capacities_continuous(aja, ts)
    net = build_fnrt_edf(aja, caps)
    scaled, factor = scale_to_integers(net)
    result = min_cost_max_flow(scaled)
    complete = is_complete(scaled, result)
    if strict and not complete:
        raise IncompleteFlow(f"t={t}: flow {result.total} < demand {scaled.demand}")
    result = result.unscale(factor)
    alloc = _first_window(net, result)
    return StepResult(alloc, aja.windows[0].end, complete, result.stats, len(aja.windows))


def window_budget(ts: TaskSet) -> int:
    """Upper bound on discrete-model windows per event: sum of ceil(P_max / P_i)."""
    p_max = max(t.period for t in ts.tasks)
    return sum(-(-p_max // t.period) for t in ts.tasks)


def fnedf_discrete_step(ts: TaskSet, jobs: Sequence[JobState], t: int,
                        shadow: BfShadow | None = None, strict: bool = True,
                        max_windows: int = DEFAULT_WINDOW_BUDGET) -> StepResult:
    """Integral min-cost flow over all job deadlines, capacities reserved by BF."""
    if shadow is None:
        shadow = BfShadow(ts)
    bounds = boundaries(ts, jobs, t, DISCRETE)
    k = len(bounds) - 1
    if k > window_budget(ts) or k > max_windows:
        raise SchedulingError(f"t={t}: {k} windows exceed the budget")
    aja = active_job_area(ts, jobs, t, DISCRETE, bounds)
    caps = compute_window_capacities_discrete(ts, t, bounds, shadow, aja.deadlines)
    aja = aja.with_capacities(caps)
    net = build_fnrt_edf(aja)
    result = min_cost_max_flow(net)
    complete = is_complete(net, result)
    if strict and not complete:
        raise IncompleteFlow(f"t={t}: flow {result.total} < demand {net.demand}")
    shadow.forget_before(t)
    alloc = _first_window(net, result)
    return StepResult(alloc, bounds[1], complete, result.stats, k)


class FnEdfContinuous:
    name = "fnedf"
    model = CONTINUOUS

    def __init__(self, strict: bool = True):
        self.strict = strict

    def reset(self, ts):
        pass

    def step(self, ts, jobs, t):
        return fnedf_continuous_step(ts, jobs, t, self.strict)


class FnEdfDiscrete:
    name = "fnedf"
    model = DISCRETE

    def __init__(self, strict: bool = True, max_windows: int = DEFAULT_WINDOW_BUDGET):
        self.strict = strict
        self.max_windows = max_windows
        self.shadow: BfShadow | None = None

    def reset(self, ts):
        self.shadow = BfShadow(ts)

    def step(self, ts, jobs, t):
        return fnedf_discrete_step(ts, jobs, t, self.shadow, self.strict, self.max_windows)


class BoundaryFair:
    name = "bf"
    model = DISCRETE

    def __init__(self):
        self.shadow: BfShadow | None = None

    def reset(self, ts):
        self.shadow = BfShadow(ts)

    @property
    def max_abs_lag(self) -> Fraction:
        return self.shadow.max_abs_lag

    def step(self, ts, jobs, t):
        alloc = bf_scheduler_step(ts, self.shadow, t, jobs)
        return StepResult(dict(alloc), next_boundary(ts, t))


SCHEDULERS = {
    ("fnedf", CONTINUOUS): FnEdfContinuous,
    ("fnedf", DISCRETE): FnEdfDiscrete,
    ("bf", DISCRETE): BoundaryFair,
}


def make_scheduler(name: str, model: str | None = None, **kwargs) -> Scheduler:
    if name == "bf":
        if model not in (None, DISCRETE):
            raise ValueError("bf runs on the discrete model only")
        model = DISCRETE
    if model is None:
        raise ValueError(f"scheduler {name!r} needs a time model")
    try:
        return SCHEDULERS[name, model](**kwargs)
    except KeyError:
        raise ValueError(f"unknown scheduler {name!r}/{model!r}") from None


@dataclass
class DeadlineMiss:
    task_id: int
    job_index: int
    remaining: Time


@dataclass
class Event:
    time: Time
    window_end: Time
    allocations: dict[int, Time]
    complete: bool
    segments: list[Segment]
    windows: int


@dataclass
class SimReport:
    scheduler: str
    model: str
    horizon: int
    deadline_misses: list[DeadlineMiss] = field(default_factory=list)
    counters: MetricCounters = field(default_factory=MetricCounters)
    events: int = 0
    incomplete_events: int = 0
    solver: list[SolverStats] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.deadline_misses

    @property
    def jobs(self) -> int:
        return self.counters.jobs_completed

    @property
    def preemptions_per_job(self) -> float:
        return self.counters.preemptions / self.jobs if self.jobs else 0.0

    @property
    def migrations_per_job(self) -> float:
        return self.counters.migrations / self.jobs if self.jobs else 0.0

    def summary(self) -> str:
        return (f"{self.scheduler}/{self.model}: horizon={self.horizon} events={self.events} "
                f"jobs={self.jobs} misses={len(self.deadline_misses)} "
                f"preemptions={self.counters.preemptions} ({self.preemptions_per_job:.4f}/job) "
                f"migrations={self.counters.migrations} ({self.migrations_per_job:.4f}/job)")


def _check_allocations(alloc, jobs_by_task, t, end, m):
    length = end - t
    total = 0
    for tid, x in alloc.items():
        job = jobs_by_task.get(tid)
        if job is None or x < 0 or x > length or x > job.remaining:
            raise SchedulingError(f"t={t}: invalid allocation {x} for task {tid}")
        total += x
    if total > m * length:
        raise SchedulingError(f"t={t}: allocations {total} exceed capacity {m * length}")


def run(ts: TaskSet, scheduler: Scheduler, horizon: int | None = None, *,
        trace: TextIO | None = None, on_event: Callable[[Event], None] | None = None,
        admit: bool = True) -> SimReport:
    """Simulate ``scheduler`` on ``ts`` from 0 to ``horizon`` (default: hyperperiod).

    With ``admit`` the task set is rejected up front when U > M.
    """
    if admit:
        ts.check_schedulable()
    if not ts.tasks:
        return SimReport(scheduler.name, scheduler.model, horizon or 0)
    if horizon is None:
        horizon = ts.hyperperiod
    scheduler.reset(ts)
    report = SimReport(scheduler.name, scheduler.model, horizon)
    m = ts.processors
    tracker = MetricTracker()
    jobs = {j.task_id: j for j in release_jobs(ts, 0)}
    if scheduler.model == CONTINUOUS:
        for j in jobs.values():
            j.remaining = Fraction(j.remaining)
    periods = {t.id: t.period for t in ts.tasks}
    wcet = {t.id: t.wcet for t in ts.tasks}
    t: Time = 0
    while t < horizon:
        current = list(jobs.values())
        res = scheduler.step(ts, current, t)
        end = res.window_end
        if end != min(j.abs_deadline for j in current):
            raise SchedulingError(f"t={t}: window ends at {end}, not the next boundary")
        alloc = {tid: x for tid, x in res.allocations.items() if x}
        _check_allocations(alloc, jobs, t, end, m)
        order = [j.task_id for j in sorted(current, key=lambda j: (j.abs_deadline, j.task_id))]
        segments = mcnaughton(t, end, alloc, m, order, {tid: j.index for tid, j in jobs.items()})
        tracker.observe(segments)
        if trace is not None:
            for s in segments:
                trace.write(f"{s.start} {s.end} {s.processor} {s.task_id} {s.job_index}\n")
        for tid, x in alloc.items():
            jobs[tid].remaining -= x
        report.events += 1
        report.incomplete_events += not res.complete
        if res.stats is not None:
            report.solver.append(res.stats)
        if on_event is not None:
            on_event(Event(t, end, alloc, res.complete, segments, res.windows))
        t = end
        for tid, job in list(jobs.items()):
            if job.abs_deadline != t:
                continue
            if job.remaining > 0:
                report.deadline_misses.append(DeadlineMiss(tid, job.index, job.remaining))
            tracker.finish_job(tid, job.index)
            c = Fraction(wcet[tid]) if scheduler.model == CONTINUOUS else wcet[tid]
            jobs[tid] = JobState(tid, t, t + periods[tid], c, job.index + 1)
    report.counters = tracker.totals
    return report
