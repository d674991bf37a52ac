"""Boundary-fair (BF) scheduling on the discrete-time model.

At every boundary each task receives its mandatory units (the integral part
of what it still owes the fluid schedule at the next boundary); the spare
units of the window go, one each, to tasks whose fractional remainder is
positive.  The result keeps every task within one unit of its fluid
entitlement at every boundary, so each job finishes exactly at its deadline
(the entitlement is integral there).

The same schedule doubles as the reservation oracle for the discrete flow
network: :class:`BfShadow` replays it forward and
:func:`compute_window_capacities_discrete` subtracts the units it grants to
future jobs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .tasks import JobState, Task, TaskSet

PD2 = "pd2"
LARGEST_LAG = "lag"


class BfInfeasible(RuntimeError):
    pass


def next_boundary(ts: TaskSet, t: int) -> int:
    return min((t // task.period + 1) * task.period for task in ts.tasks)


@dataclass
class BfState:
    time: int = 0
    allocated: dict[int, int] = field(default_factory=dict)  # units since time 0

    @classmethod
    def initial(cls, ts: TaskSet) -> "BfState":
        return cls(0, {t.id: 0 for t in ts.tasks})

    def entitlement(self, task: Task) -> Fraction:
        return Fraction(task.wcet * self.time, task.period)

    def lag(self, task: Task) -> Fraction:
        return self.entitlement(task) - self.allocated[task.id]

    def lags(self, ts: TaskSet) -> dict[int, Fraction]:
        return {t.id: self.lag(t) for t in ts.tasks}


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def pd2_key(task: Task, next_unit: int, state: BfState, end: int):
    """PD^2 priority of the task's next subtask (1-based unit ``next_unit``).

    Earlier pseudo-deadline first, then a set b-bit, then the later group
    deadline (heavy tasks only), then task id.
    """
    c, p = task.wcet, task.period
    deadline = _ceil_div(next_unit * p, c)
    bbit = 1 if (next_unit * p) % c else 0
    group = 0
    if 2 * c >= p and c < p:
        # D = ceil(ceil(d * (1 - u)) / (1 - u)) with u = c / p
        group = _ceil_div(_ceil_div(deadline * (p - c), p) * p, p - c)
    return (deadline, -bbit, -group, task.id)


def lag_key(task: Task, next_unit: int, state: BfState, end: int):
    """Largest pending fraction first, then earliest next deadline, then id."""
    frac = Fraction((task.wcet * end - task.period * (next_unit - 1)) % task.period, task.period)
    deadline = (state.time // task.period + 1) * task.period
    return (-frac, deadline, task.id)


RULES: dict[str, Callable] = {PD2: pd2_key, LARGEST_LAG: lag_key}


def run_bf(ts: TaskSet, state: BfState, b: int | None = None, rule: str = PD2) -> dict[int, int]:
    """Integral allocations for the window starting at ``b``; advances ``state``."""
    if b is None:
        b = state.time
    if b != state.time:
        raise ValueError(f"BF state is at {state.time}, not at boundary {b}")
    end = next_boundary(ts, b)
    length = end - b
    key = RULES[rule]
    alloc: dict[int, int] = {}
    candidates = []
    done_by = state.allocated
    for task in ts.tasks:
        done = done_by[task.id]
        # owed work times P, kept integral
        owed_p = task.wcet * end - task.period * done
        mandatory = min(max(owed_p // task.period, 0), length)
        alloc[task.id] = mandatory
        if owed_p > task.period * mandatory and mandatory < length:
            candidates.append((key(task, done + mandatory + 1, state, end), task.id))
    spare = ts.processors * length - sum(alloc.values())
    if spare < 0:
        raise BfInfeasible(f"mandatory units exceed capacity in [{b}, {end})")
    candidates.sort()
    for _, tid in candidates[:spare]:
        alloc[tid] += 1
    state.time = end
    for task in ts.tasks:
        done_by[task.id] += alloc[task.id]
        lag_p = task.wcet * end - task.period * done_by[task.id]
        if not -task.period < lag_p < task.period:
            raise BfInfeasible(f"task {task.id} lag {Fraction(lag_p, task.period)} at {end}")
    return alloc


class BfShadow:
    """BF schedule replayed lazily forward in time, one window per boundary."""

    def __init__(self, ts: TaskSet, rule: str = PD2):
        self.ts = ts
        self.rule = rule
        self.state = BfState.initial(ts)
        self._windows: dict[int, tuple[int, dict[int, int]]] = {}
        self._lag = (0, 1)  # largest |lag| seen, as (numerator, denominator)

    @property
    def max_abs_lag(self) -> Fraction:
        return Fraction(*self._lag)

    def window(self, start: int) -> tuple[int, dict[int, int]]:
        """``(end, allocations)`` of the BF window beginning at ``start``."""
        while start not in self._windows:
            if self.state.time > start:
                raise ValueError(f"{start} is not a boundary or was already discarded")
            b = self.state.time
            alloc = run_bf(self.ts, self.state, b, self.rule)
            end = self.state.time
            self._windows[b] = (end, alloc)
            num, den = self._lag
            for task in self.ts.tasks:
                lag = abs(task.wcet * end - task.period * self.state.allocated[task.id])
                if lag * den > num * task.period:
                    num, den = lag, task.period
            self._lag = (num, den)
        return self._windows[start]

    def forget_before(self, t: int) -> None:
        for b in [b for b in self._windows if b < t]:
            del self._windows[b]


def compute_window_capacities_discrete(ts: TaskSet, t: int, bounds: Sequence[int],
                                       shadow: BfShadow | None = None,
                                       deadlines: dict[int, int] | None = None) -> list[int]:
    """Integral window capacities: ``M * l_k`` minus BF units of tasks inactive in ``W_k``."""
    if shadow is None:
        shadow = BfShadow(ts)
    if deadlines is None:
        deadlines = {task.id: (t // task.period + 1) * task.period for task in ts.tasks}
    caps = []
    for start, end in zip(bounds, bounds[1:]):
        bf_end, alloc = shadow.window(start)
        if bf_end != end:
            raise ValueError(f"window [{start}, {end}) does not match BF boundary {bf_end}")
        cap = ts.processors * (end - start)
        for tid, d in deadlines.items():
            if end > d:
                cap -= alloc[tid]
        if cap < 0:
            raise BfInfeasible(f"negative capacity in [{start}, {end})")
        caps.append(cap)
    return caps


def bf_scheduler_step(ts: TaskSet, shadow: BfShadow, t: int,
                      jobs: Sequence[JobState] = ()) -> dict[int, int]:
    """Allocations the BF baseline dispatches in the window starting at ``t``."""
    _, alloc = shadow.window(t)
    for job in jobs:
        if alloc[job.task_id] > job.remaining:
            raise BfInfeasible(f"BF over-allocates task {job.task_id} at {t}")
    shadow.forget_before(t)
    return alloc
