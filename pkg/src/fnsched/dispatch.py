"""McNaughton wrap-around dispatch and preemption/migration counting."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .tasks import Time


class DispatchError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    processor: int  # 0-based
    task_id: int
    start: Time
    end: Time
    job_index: int = 0

    @property
    def length(self) -> Time:
        return self.end - self.start


@dataclass
class MetricCounters:
    preemptions: int = 0
    migrations: int = 0
    jobs_completed: int = 0

    def __iadd__(self, other: "MetricCounters"):
        self.preemptions += other.preemptions
        self.migrations += other.migrations
        self.jobs_completed += other.jobs_completed
        return self


def mcnaughton(start: Time, end: Time, alloc: Mapping[int, Time], processors: int,
               order: Sequence[int], job_index: Mapping[int, int] | None = None) -> list[Segment]:
    """Pack per-task work into ``[start, end)`` on ``processors`` processors.

    Tasks are laid out in ``order``, filling processor 0 first.  A task that
    crosses a processor's end is split: its tail runs at the end of processor
    ``p`` and its head at the start of ``p + 1``; the two pieces are disjoint
    in time because no task gets more than the window length.
    """
    length = end - start
    total = 0
    for tid in order:
        x = alloc.get(tid, 0)
        if x < 0 or x > length:
            raise DispatchError(f"task {tid}: allocation {x} outside [0, {length}]")
        total += x
    if total > processors * length:
        raise DispatchError(f"allocations {total} exceed {processors} x {length}")
    jidx = job_index or {}
    den = 1
    for v in (start, end, *alloc.values()):
        if isinstance(v, Fraction):
            den = math.lcm(den, v.denominator)
    if den == 1:
        return _pack(start, end, alloc, order, jidx, lambda v: v)
    # lay out exact integers in units of 1/den
    alloc = {tid: int(x * den) for tid, x in alloc.items()}
    return _pack(int(start * den), int(end * den), alloc, order, jidx, lambda v: Fraction(v, den))


def _pack(start, end, alloc, order, jidx, conv) -> list[Segment]:
    segments = []
    proc, pos = 0, start
    for tid in order:
        x = alloc.get(tid, 0)
        if x == 0:
            continue
        j = jidx.get(tid, 0)
        if pos + x <= end:
            segments.append(Segment(proc, tid, conv(pos), conv(pos + x), j))
            pos += x
        else:
            head = x - (end - pos)
            segments.append(Segment(proc, tid, conv(pos), conv(end), j))
            proc += 1
            segments.append(Segment(proc, tid, conv(start), conv(start + head), j))
            pos = start + head
        if pos == end:
            proc, pos = proc + 1, start
    return segments


class MetricTracker:
    """Remembers where each job last ran and counts the disruptions.

    A job that leaves its processor with work left is preempted, whether it
    resumes later or at once elsewhere; a job resuming on a different
    processor also migrated.  Continuing on the same processor at the
    instant it stopped counts as neither.
    """

    def __init__(self):
        self.last: dict[tuple[int, int], tuple[int, Time]] = {}
        self.totals = MetricCounters()

    def observe(self, segments: Iterable[Segment]) -> MetricCounters:
        delta = MetricCounters()
        for seg in sorted(segments, key=lambda s: (s.task_id, s.job_index, s.start, s.processor)):
            key = (seg.task_id, seg.job_index)
            prev = self.last.get(key)
            if prev is not None:
                proc, stopped = prev
                if seg.processor != proc:
                    delta.preemptions += 1
                    delta.migrations += 1
                elif seg.start > stopped:
                    delta.preemptions += 1
            self.last[key] = (seg.processor, seg.end)
        self.totals += delta
        return delta

    def finish_job(self, task_id: int, job_index: int) -> None:
        self.last.pop((task_id, job_index), None)
        self.totals.jobs_completed += 1


def count_metrics(previous: Iterable[Segment], current: Iterable[Segment]) -> MetricCounters:
    """Preemptions and migrations incurred by ``current`` given the earlier timeline."""
    tracker = MetricTracker()
    for seg in sorted(previous, key=lambda s: s.end):
        tracker.last[seg.task_id, seg.job_index] = (seg.processor, seg.end)
    return tracker.observe(current)


def check_timeline(segments: Sequence[Segment]) -> None:
    """Raise if a processor runs two things at once or a task runs on two processors."""
    by_proc: dict[int, list[Segment]] = {}
    by_task: dict[int, list[Segment]] = {}
    for s in segments:
        if not s.start < s.end:
            raise DispatchError(f"empty or reversed segment {s}")
        by_proc.setdefault(s.processor, []).append(s)
        by_task.setdefault(s.task_id, []).append(s)
    for groups, what in ((by_proc, "processor"), (by_task, "task")):
        for key, segs in groups.items():
            segs = sorted(segs, key=lambda s: s.start)
            for a, b in zip(segs, segs[1:]):
                if b.start < a.end:
                    raise DispatchError(f"{what} {key} overlaps: {a} / {b}")
