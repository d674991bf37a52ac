from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import TABLE1, tasksets
from fnsched.tasks import (CONTINUOUS, DISCRETE, HyperperiodOverflow, JobState, Task, TaskSet,
                           TaskSetError, Window, active_job_area, boundaries, check_constraints,
                           fluid_allocation, format_taskset, hyperperiod, parse_taskset,
                           release_jobs, window_capacities_continuous, windows_from_boundaries)


def test_task_validation():
    assert Task(1, 2, 3).utilization == Fraction(2, 3)
    for c, p in [(0, 3), (4, 3), (1, 0)]:
        with pytest.raises(TaskSetError):
            Task(1, c, p)
    with pytest.raises(TaskSetError):
        Task(1, 1.5, 3)
    with pytest.raises(TaskSetError):
        TaskSet((Task(1, 1, 2), Task(1, 1, 3)), 1)
    with pytest.raises(TaskSetError):
        TaskSet.from_pairs([(1, 2)], 0)


@pytest.mark.parametrize("periods, h", [((3, 6, 6, 9, 9), 18), ((5,), 5), ((4, 6), 12)])
def test_hyperperiod(periods, h):
    assert TaskSet.from_pairs([(1, p) for p in periods], 1).hyperperiod == h


def test_hyperperiod_overflow():
    ts = TaskSet.from_pairs([(1, p) for p in (997, 991, 983, 977)], 4)
    with pytest.raises(HyperperiodOverflow):
        hyperperiod(ts, limit=10**9)
    with pytest.raises(TaskSetError):
        hyperperiod(TaskSet((), 1))


def test_utilization_is_exact(table1):
    assert table1.utilization == 2
    assert isinstance(table1.utilization, Fraction)
    assert table1.is_schedulable()
    over = TaskSet.from_pairs(TABLE1 + [(1, 3)], 2)
    assert over.utilization == Fraction(7, 3)
    with pytest.raises(TaskSetError):
        over.check_schedulable()


@pytest.mark.parametrize("model", [CONTINUOUS, DISCRETE])
def test_table1_boundaries(table1, model):
    assert boundaries(table1, release_jobs(table1, 0), 0, model) == [0, 3, 6, 9]


@pytest.mark.parametrize("model", [CONTINUOUS, DISCRETE])
def test_single_task_boundaries(model):
    ts = TaskSet.from_pairs([(2, 3)], 1)
    assert boundaries(ts, release_jobs(ts, 0), 0, model) == [0, 3]
    assert boundaries(ts, [], 5, model) == [5]


def test_discrete_boundaries_include_future_jobs():
    ts = TaskSet.from_pairs([(1, 2), (1, 7)], 1)
    jobs = release_jobs(ts, 0)
    assert boundaries(ts, jobs, 0, CONTINUOUS) == [0, 2, 7]
    assert boundaries(ts, jobs, 0, DISCRETE) == [0, 2, 4, 6, 7]


def test_release_jobs_mid_hyperperiod(table1):
    jobs = {j.task_id: j for j in release_jobs(table1, 6)}
    assert (jobs[1].arrival, jobs[1].abs_deadline, jobs[1].index) == (6, 9, 2)
    assert (jobs[4].arrival, jobs[4].abs_deadline, jobs[4].index) == (0, 9, 0)


def test_table1_fluid_allocation(table1):
    aja = active_job_area(table1, release_jobs(table1, 0), 0)
    x = fluid_allocation(aja, table1)
    assert x[1, 1] == 2
    assert x[2, 1] == x[2, 2] == 1
    assert x[4, 1] == x[4, 2] == x[4, 3] == 1
    assert (1, 2) not in x
    assert not check_constraints(aja.with_capacities(window_capacities_continuous(aja, table1)), x)


def test_full_rate_fluid():
    ts = TaskSet.from_pairs([(4, 4), (1, 2)], 2)
    aja = active_job_area(ts, release_jobs(ts, 0), 0)
    x = fluid_allocation(aja, ts)
    assert x[1, 1] == 2 and x[1, 2] == 2


def test_table2_fluid_share(table2):
    aja = active_job_area(table2, release_jobs(table2, 0), 0)
    assert fluid_allocation(aja, table2)[4, 1] == Fraction(1, 3)


def test_table1_continuous_capacities(table1):
    aja = active_job_area(table1, release_jobs(table1, 0), 0)
    assert window_capacities_continuous(aja, table1) == [6, 4, 2]


def test_common_deadline_capacity():
    ts = TaskSet.from_pairs([(1, 4), (2, 4), (3, 4)], 2)
    aja = active_job_area(ts, release_jobs(ts, 0), 0)
    assert window_capacities_continuous(aja, ts) == [8]


def test_table2_capacity_after_first_deadline(table2):
    aja = active_job_area(table2, release_jobs(table2, 0), 0)
    caps = window_capacities_continuous(aja, table2)
    assert caps[1] == (2 - Fraction(1, 3)) * 3 == 5


def test_negative_capacity_is_loud():
    ts = TaskSet.from_pairs([(1, 1), (1, 2), (1, 4)], 1)  # U > M
    aja = active_job_area(ts, release_jobs(ts, 0), 0)
    with pytest.raises(AssertionError):
        window_capacities_continuous(aja, ts)


def test_check_constraints_flags_violations(table1):
    aja = active_job_area(table1, release_jobs(table1, 0), 0)
    aja = aja.with_capacities([6, 4, 2])
    x = fluid_allocation(aja, table1)
    x[1, 1] = 4
    rep = check_constraints(aja, x)
    assert (1, 1, 1) in rep.nip and rep.jcc
    single = TaskSet.from_pairs([(2, 3)], 1)
    aja1 = active_job_area(single, release_jobs(single, 0), 0)
    rep = check_constraints(aja1, {(1, 1): 1})
    assert rep.jcc == [(1, -1)] and not rep.nip
    rep = check_constraints(aja.with_capacities([5, 4, 2]), fluid_allocation(aja, table1))
    assert rep.pcc == [(1, 1)]


def test_finished_jobs_still_shape_the_area(table1):
    jobs = release_jobs(table1, 0)
    jobs[0].remaining = 0
    aja = active_job_area(table1, jobs, 0)
    assert [j.task_id for j in aja.jobs] == [2, 3, 4, 5]
    assert aja.boundaries == [0, 3, 6, 9]
    assert window_capacities_continuous(aja, table1) == [6, 4, 2]


def test_parse_format_round_trip(table1):
    text = format_taskset(table1)
    assert text.splitlines()[0] == "M 2"
    again = parse_taskset("# comment\n\n" + text.replace("\nC", "  # x\nC", 1))
    assert again == table1


@pytest.mark.parametrize("text", ["C 1 P 2\n", "M 2\nC 1 P\n", "M 2\nC 1.5 P 3\n", "M x\n",
                                  "M 1\nC 3 P 2\n"])
def test_parse_errors(text):
    with pytest.raises(TaskSetError):
        parse_taskset(text)


def test_empty_file_body():
    assert parse_taskset("M 3\n").tasks == ()


@given(tasksets(), st.data())
def test_fluid_allocation_is_feasible_on_any_area(ts, data):
    """Fluid shares satisfy all three constraint families at every boundary."""
    h = ts.hyperperiod
    t = data.draw(st.sampled_from(sorted({k * task.period for task in ts.tasks
                                          for k in range(h // task.period)})))
    jobs = release_jobs(ts, t)
    # remaining work is what the fluid schedule left at t
    for j in jobs:
        task = ts.task(j.task_id)
        j.remaining = task.utilization * (j.abs_deadline - t)
    aja = active_job_area(ts, jobs, t)
    aja = aja.with_capacities(window_capacities_continuous(aja, ts))
    assert not check_constraints(aja, fluid_allocation(aja, ts))


@given(tasksets(), st.sampled_from([CONTINUOUS, DISCRETE]), st.integers(0, 30))
def test_boundaries_tile_the_area(ts, model, t):
    jobs = release_jobs(ts, t)
    b = boundaries(ts, jobs, t, model)
    assert b[0] == t and b[-1] == max(j.abs_deadline for j in jobs)
    assert all(x < y for x, y in zip(b, b[1:]))
    ws = windows_from_boundaries(b)
    assert [w.index for w in ws] == list(range(1, len(ws) + 1))
    assert all(w.length > 0 for w in ws)
    assert sum(w.length for w in ws) == b[-1] - t
    if model == CONTINUOUS:
        assert len(ws) <= ts.n


@given(tasksets())
def test_capacity_covers_demand(ts):
    aja = active_job_area(ts, release_jobs(ts, 0), 0)
    caps = window_capacities_continuous(aja, ts)
    assert caps[0] == ts.processors * aja.windows[0].length
    assert all(0 <= c <= ts.processors * w.length for c, w in zip(caps, aja.windows))
    assert sum(caps) >= sum(j.remaining for j in aja.jobs)


def test_window_and_job_types():
    w = Window(1, 2, 5)
    assert w.length == 3
    j = JobState(1, 0, 3, 0)
    assert j.done
