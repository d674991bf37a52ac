"""Periodic task model, active job areas and the fluid reference schedule.

All times are integers or :class:`fractions.Fraction`; nothing in this module
touches floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

CONTINUOUS = "continuous"
DISCRETE = "discrete"
MODELS = (CONTINUOUS, DISCRETE)

# largest hyperperiod representable in a signed 64-bit time counter
TIME_LIMIT = 2**63 - 1

Time = int | Fraction


class TaskSetError(ValueError):
    pass


class HyperperiodOverflow(TaskSetError):
    pass


@dataclass(frozen=True)
class Task:
    id: int
    wcet: int
    period: int

    def __post_init__(self):
        if not (isinstance(self.wcet, int) and isinstance(self.period, int)):
            raise TaskSetError(f"task {self.id}: parameters must be integers")
        if self.wcet < 1 or self.period < 1 or self.wcet > self.period:
            raise TaskSetError(
                f"task {self.id}: need 1 <= C <= P, got C={self.wcet} P={self.period}")

    @cached_property
    def utilization(self) -> Fraction:
        return Fraction(self.wcet, self.period)


@dataclass(frozen=True)
class TaskSet:
    tasks: tuple[Task, ...]
    processors: int

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if self.processors < 1:
            raise TaskSetError("need at least one processor")
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise TaskSetError("duplicate task ids")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]], processors: int) -> "TaskSet":
        """Build a set from ``(C, P)`` pairs, numbering tasks from 1."""
        return cls(tuple(Task(i, c, p) for i, (c, p) in enumerate(pairs, start=1)), processors)

    @property
    def n(self) -> int:
        return len(self.tasks)

    @property
    def utilization(self) -> Fraction:
        return sum((t.utilization for t in self.tasks), Fraction(0))

    @property
    def hyperperiod(self) -> int:
        return hyperperiod(self)

    @cached_property
    def by_id(self) -> dict[int, Task]:
        return {t.id: t for t in self.tasks}

    def task(self, task_id: int) -> Task:
        return self.by_id[task_id]

    def is_schedulable(self) -> bool:
        return self.utilization <= self.processors

    def check_schedulable(self) -> None:
        if not self.is_schedulable():
            raise TaskSetError(
                f"total utilization {self.utilization} exceeds {self.processors} processors")


def hyperperiod(ts: TaskSet, limit: int = TIME_LIMIT) -> int:
    if not ts.tasks:
        raise TaskSetError("hyperperiod of an empty task set")
    h = 1
    for t in ts.tasks:
        h = math.lcm(h, t.period)
        if h > limit:
            raise HyperperiodOverflow(f"hyperperiod exceeds {limit}")
    return h


@dataclass
class JobState:
    task_id: int
    arrival: int
    abs_deadline: int
    remaining: Time
    index: int = 0  # 0-based job number within its task

    @property
    def done(self) -> bool:
        return self.remaining == 0


def release_jobs(ts: TaskSet, t: int = 0) -> list[JobState]:
    """Current job of every task at boundary ``t``, as if nothing had run yet."""
    jobs = []
    for task in ts.tasks:
        j = t // task.period
        a = j * task.period
        jobs.append(JobState(task.id, a, a + task.period, task.wcet, j))
    return jobs


@dataclass(frozen=True)
class Window:
    index: int  # 1-based, local to one active job area
    start: Time
    end: Time
    capacity: Time | None = None

    @property
    def length(self) -> Time:
        return self.end - self.start


@dataclass(frozen=True)
class ActiveJobArea:
    """Windows between the current time and the latest active deadline.

    ``deadlines`` maps every task id to the deadline of its current job,
    including jobs that have already finished; those still decide which
    windows a task is active in.  ``jobs`` holds only jobs with work left.
    """

    now: Time
    jobs: tuple[JobState, ...]
    windows: tuple[Window, ...]
    deadlines: Mapping[int, Time] = field(default_factory=dict)
    model: str = CONTINUOUS

    @property
    def d_max(self) -> Time:
        return self.windows[-1].end if self.windows else self.now

    @property
    def boundaries(self) -> list[Time]:
        return [self.now] + [w.end for w in self.windows]

    def is_active(self, task_id: int, window: Window) -> bool:
        # window inside [a_i(t), d_i(t)]
        return window.end <= self.deadlines[task_id]

    def windows_of(self, job: JobState) -> list[Window]:
        return [w for w in self.windows if w.end <= job.abs_deadline]

    def with_capacities(self, capacities: Sequence[Time]) -> "ActiveJobArea":
        if len(capacities) != len(self.windows):
            raise ValueError("one capacity per window required")
        ws = tuple(Window(w.index, w.start, w.end, c) for w, c in zip(self.windows, capacities))
        return replace(self, windows=ws)

    def edf_jobs(self) -> list[JobState]:
        return sorted(self.jobs, key=lambda j: (j.abs_deadline, j.task_id))


def boundaries(ts: TaskSet, jobs: Sequence[JobState], t: Time, model: str = CONTINUOUS) -> list[Time]:
    """Sorted, deduplicated scheduling boundaries of the area starting at ``t``.

    Continuous model: ``t`` plus the deadline of every current job.  Discrete
    model: additionally every deadline of a future job falling before the
    latest current deadline.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    points = {t}
    points.update(j.abs_deadline for j in jobs)
    if model == DISCRETE and jobs:
        d_max = max(j.abs_deadline for j in jobs)
        by_id = ts.by_id
        for j in jobs:
            p = by_id[j.task_id].period
            d = j.abs_deadline + p
            while d <= d_max:
                points.add(d)
                d += p
    return sorted(points)


def windows_from_boundaries(bounds: Sequence[Time]) -> tuple[Window, ...]:
    return tuple(Window(k, a, b) for k, (a, b) in enumerate(zip(bounds, bounds[1:]), start=1))


def active_job_area(ts: TaskSet, jobs: Sequence[JobState], t: Time,
                    model: str = CONTINUOUS, bounds: Sequence[Time] | None = None) -> ActiveJobArea:
    if bounds is None:
        bounds = boundaries(ts, jobs, t, model)
    return ActiveJobArea(
        now=t,
        jobs=tuple(j for j in jobs if j.remaining > 0),
        windows=windows_from_boundaries(bounds),
        deadlines={j.task_id: j.abs_deadline for j in jobs},
        model=model,
    )


Allocation = dict[tuple[int, int], Time]  # (task id, window index) -> work


def fluid_allocation(aja: ActiveJobArea, ts: TaskSet) -> Allocation:
    """Allocation of the fluid schedule: ``u_i * l_k`` in every window of job i."""
    x: Allocation = {}
    for job in aja.jobs:
        u = ts.task(job.task_id).utilization
        for w in aja.windows_of(job):
            x[job.task_id, w.index] = u * w.length
    return x


def window_capacities_continuous(aja: ActiveJobArea, ts: TaskSet) -> list[Fraction]:
    """Capacity of each window after reserving fluid shares for future jobs.

    A task whose current deadline precedes the end of ``W_k`` is inactive
    there and keeps ``u_i * l_k`` for its next jobs.
    """
    m = ts.processors
    by_id = ts.by_id
    den = 1
    for i in aja.deadlines:
        den = math.lcm(den, by_id[i].period)
    # utilizations as integer shares of 1/den, in deadline order
    shares = sorted((d, by_id[i].wcet * (den // by_id[i].period)) for i, d in aja.deadlines.items())
    caps = []
    reserved = p = 0
    for w in aja.windows:
        while p < len(shares) and shares[p][0] < w.end:
            reserved += shares[p][1]
            p += 1
        num = (m * den - reserved) * w.length
        if num < 0:
            raise AssertionError(f"negative capacity in window {w.index}; is U > M?")
        caps.append(Fraction(num, den))
    return caps


@dataclass
class ConstraintReport:
    jcc: list[tuple[int, Time]] = field(default_factory=list)  # (task, allocated - remaining)
    pcc: list[tuple[int, Time]] = field(default_factory=list)  # (window, excess)
    nip: list[tuple[int, int, Time]] = field(default_factory=list)  # (task, window, excess)
    negative: list[tuple[int, int, Time]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not (self.jcc or self.pcc or self.nip or self.negative)

    def __bool__(self) -> bool:
        # truthy when something is violated
        return not self.feasible


def check_constraints(aja: ActiveJobArea, x: Mapping[tuple[int, int], Time]) -> ConstraintReport:
    """Evaluate job completion, processing capacity and intra-task parallelism."""
    report = ConstraintReport()
    windows = {w.index: w for w in aja.windows}
    for job in aja.jobs:
        allowed = {w.index for w in aja.windows_of(job)}
        total = 0
        for (i, k), v in x.items():
            if i != job.task_id:
                continue
            if k not in allowed and v != 0:
                # work placed after the job's deadline can never count
                report.nip.append((i, k, v))
                continue
            total += v
        if total != job.remaining:
            report.jcc.append((job.task_id, total - job.remaining))
    for (i, k), v in x.items():
        if v < 0:
            report.negative.append((i, k, v))
        elif k in windows and v > windows[k].length:
            report.nip.append((i, k, v - windows[k].length))
    for w in aja.windows:
        if w.capacity is None:
            continue
        load = sum((v for (i, k), v in x.items() if k == w.index), 0)
        if load > w.capacity:
            report.pcc.append((w.index, load - w.capacity))
    return report


# -- task set files ---------------------------------------------------------

def parse_taskset(text: str) -> TaskSet:
    """Parse the line format ``M <int>`` followed by ``C <int> P <int>`` lines."""
    processors = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if processors is None:
                if len(parts) != 2 or parts[0] != "M":
                    raise ValueError("expected 'M <int>'")
                processors = _int(parts[1])
            else:
                if len(parts) != 4 or parts[0] != "C" or parts[2] != "P":
                    raise ValueError("expected 'C <int> P <int>'")
                pairs.append((_int(parts[1]), _int(parts[3])))
        except ValueError as exc:
            raise TaskSetError(f"line {lineno}: {exc}") from None
    if processors is None:
        raise TaskSetError("missing 'M <int>' line")
    return TaskSet.from_pairs(pairs, processors)


def _int(s: str) -> int:
    if not s.lstrip("-").isdigit():
        raise ValueError(f"not an integer: {s!r}")
    return int(s)


def format_taskset(ts: TaskSet) -> str:
    lines = [f"M {ts.processors}"]
    lines += [f"C {t.wcet} P {t.period}" for t in ts.tasks]
    return "\n".join(lines) + "\n"


def load_taskset(path) -> TaskSet:
    with open(path) as fh:
        return parse_taskset(fh.read())
