import os
import sys
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings, strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from fnsched.tasks import TaskSet  # noqa: E402

settings.register_profile("default", deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TABLE1 = [(2, 3), (2, 6), (2, 6), (3, 9), (3, 9)]
TABLE2 = [(1, 3), (2, 6), (2, 6), (1, 9), (1, 9)]

# periods with a small lcm keep simulated hyperperiods short
SMALL_PERIODS = (2, 3, 4, 6, 8, 12)


@pytest.fixture
def table1():
    return TaskSet.from_pairs(TABLE1, 2)


@pytest.fixture
def table2():
    return TaskSet.from_pairs(TABLE2, 2)


@st.composite
def tasksets(draw, max_procs=3, max_tasks=7, periods=SMALL_PERIODS, full=None):
    """Random task sets with U <= M (the longest prefix that fits).

    ``full=True`` pads the last task so U == M whenever that is possible.
    """
    m = draw(st.integers(1, max_procs))
    n = draw(st.integers(1, max_tasks))
    pairs = []
    total = Fraction(0)
    for _ in range(n):
        p = draw(st.sampled_from(periods))
        c = draw(st.integers(1, p))
        if total + Fraction(c, p) > m:
            break
        pairs.append((c, p))
        total += Fraction(c, p)
    if not pairs:
        p = draw(st.sampled_from(periods))
        pairs.append((draw(st.integers(1, p)), p))
    if full if full is not None else draw(st.booleans()):
        # add unit-rate tasks, then one task covering the remaining slack if it fits
        ts = TaskSet.from_pairs(pairs, m)
        slack = m - ts.utilization
        while slack >= 1:
            pairs.append((1, 1))
            slack -= 1
        if slack > 0 and max(periods) % slack.denominator == 0:
            p = max(periods)
            pairs.append((int(slack * p), p))
    return TaskSet.from_pairs(pairs, m)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
