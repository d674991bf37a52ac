from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import tasksets
from fnsched.bf import (LARGEST_LAG, PD2, BfInfeasible, BfShadow, BfState, bf_scheduler_step,
                        compute_window_capacities_discrete, next_boundary, run_bf)
from fnsched.tasks import DISCRETE, TaskSet, boundaries, release_jobs


@pytest.mark.parametrize("rule", [PD2, LARGEST_LAG])
def test_table1_every_window(table1, rule):
    state = BfState.initial(table1)
    for b in range(0, 18, 3):
        assert run_bf(table1, state, b, rule) == {1: 2, 2: 1, 3: 1, 4: 1, 5: 1}
    assert all(lag == 0 for lag in state.lags(table1).values())


def test_full_rate_task():
    ts = TaskSet.from_pairs([(3, 3), (1, 2), (1, 4)], 2)
    state = BfState.initial(ts)
    while state.time < 12:
        start = state.time
        alloc = run_bf(ts, state)
        assert alloc[1] == state.time - start


def test_table2_leaves_slack(table2):
    shadow = BfShadow(table2)
    b = 0
    while b < table2.hyperperiod:
        end, alloc = shadow.window(b)
        assert sum(alloc.values()) <= 2 * (end - b)
        b = end
    assert shadow.max_abs_lag < 1


def test_wrong_boundary(table1):
    state = BfState.initial(table1)
    with pytest.raises(ValueError):
        run_bf(table1, state, 3)


def test_overload_is_detected():
    ts = TaskSet.from_pairs([(2, 2), (2, 2), (1, 2)], 2)
    with pytest.raises(BfInfeasible):
        run_bf(ts, BfState.initial(ts))


def test_table1_discrete_capacities(table1):
    bounds = boundaries(table1, release_jobs(table1, 0), 0, DISCRETE)
    assert compute_window_capacities_discrete(table1, 0, bounds) == [6, 4, 2]


def test_all_active_gives_full_capacity():
    ts = TaskSet.from_pairs([(1, 4), (2, 4)], 2)
    assert compute_window_capacities_discrete(ts, 0, [0, 4]) == [8]


def test_window_fully_reserved():
    # one processor: BF hands [2, 3) to task 1's second job, so W_2 has no room
    ts = TaskSet.from_pairs([(1, 2), (1, 3)], 1)
    bounds = boundaries(ts, release_jobs(ts, 0), 0, DISCRETE)
    assert bounds == [0, 2, 3]
    assert compute_window_capacities_discrete(ts, 0, bounds) == [2, 0]


def test_inactive_task_keeps_its_units():
    ts = TaskSet.from_pairs([(1, 2), (2, 4)], 1)
    bounds = boundaries(ts, release_jobs(ts, 0), 0, DISCRETE)
    assert bounds == [0, 2, 4]
    assert compute_window_capacities_discrete(ts, 0, bounds) == [2, 1]


def test_overload_in_capacities():
    ts = TaskSet.from_pairs([(1, 1), (1, 3)], 1)
    with pytest.raises(BfInfeasible):
        compute_window_capacities_discrete(ts, 0, [0, 1, 2, 3])


def test_shadow_forgets_and_refuses_the_past(table1):
    shadow = BfShadow(table1)
    shadow.window(6)
    shadow.forget_before(6)
    with pytest.raises(ValueError):
        shadow.window(3)
    with pytest.raises(ValueError):
        compute_window_capacities_discrete(table1, 0, [0, 4], BfShadow(table1))


def test_scheduler_step(table1):
    shadow = BfShadow(table1)
    jobs = release_jobs(table1, 0)
    assert bf_scheduler_step(table1, shadow, 0, jobs) == {1: 2, 2: 1, 3: 1, 4: 1, 5: 1}
    jobs[0].remaining = 1
    with pytest.raises(BfInfeasible):
        bf_scheduler_step(table1, BfShadow(table1), 0, jobs)


def test_next_boundary(table1):
    assert next_boundary(table1, 0) == 3
    assert next_boundary(table1, 4) == 6


@given(tasksets(max_procs=4, max_tasks=8), st.sampled_from([PD2, LARGEST_LAG]))
def test_lag_and_integrality_over_a_hyperperiod(ts, rule):
    state = BfState.initial(ts)
    h = ts.hyperperiod
    totals = {t.id: 0 for t in ts.tasks}
    while state.time < h:
        start = state.time
        alloc = run_bf(ts, state, rule=rule)
        length = state.time - start
        assert all(isinstance(x, int) and 0 <= x <= length for x in alloc.values())
        assert sum(alloc.values()) <= ts.processors * length
        for t in ts.tasks:
            totals[t.id] += alloc[t.id]
            lag = Fraction(t.wcet * state.time, t.period) - totals[t.id]
            assert -1 < lag < 1
            if state.time % t.period == 0:
                # every job finishes exactly by its deadline
                assert lag == 0


@given(tasksets(max_procs=3, max_tasks=6))
def test_rules_are_deterministic(ts):
    a, b = BfState.initial(ts), BfState.initial(ts)
    for _ in range(5):
        assert run_bf(ts, a) == run_bf(ts, b)
