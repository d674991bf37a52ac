"""Random periodic task sets with a fixed total utilization."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .tasks import TaskSet

# resolution of the rational utilizations drawn from float samples
DENOMINATOR_LIMIT = 10**6


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    processors: int
    n_tasks: int
    period_lo: int = 5
    period_hi: int = 20
    utilization: Fraction | int | None = None  # defaults to the processor count
    hyperperiod_cap: int = 600_000
    seed: int | tuple[int, ...] | None = None
    max_retries: int = 100_000

    @property
    def target(self) -> Fraction:
        u = self.processors if self.utilization is None else self.utilization
        return Fraction(u)


def fixed_sum_utilizations(n: int, total, lower=0, upper=1,
                           rng: np.random.Generator | None = None,
                           max_retries: int = 1000) -> list[Fraction]:
    """``n`` rationals in ``(lower, upper]`` summing exactly to ``total``.

    Draws a uniform point on the simplex, then repeatedly clips values above
    ``upper`` and hands the excess to the unclipped values in proportion to
    their headroom.
    """
    total, lower, upper = Fraction(total), Fraction(lower), Fraction(upper)
    if n < 1 or not (n * lower <= total <= n * upper) or upper <= 0 or total <= 0:
        raise GenerationError(f"cannot draw {n} values in ({lower}, {upper}] summing to {total}")
    rng = rng if rng is not None else np.random.default_rng()
    if n * upper == total:
        return [upper] * n
    lo, hi, free = float(lower), float(upper), float(total - n * lower)
    for _ in range(max_retries):
        x = lo + free * rng.dirichlet(np.ones(n))
        for _ in range(10 * n):
            over = x > hi
            if not over.any():
                break
            excess = float((x[over] - hi).sum())
            x[over] = hi
            room = np.where(over, 0.0, hi - x)
            x = x + excess * room / room.sum()
        vals = [min(Fraction(v).limit_denominator(DENOMINATOR_LIMIT), upper) for v in x[:-1]]
        last = total - sum(vals)
        vals.append(last)
        if all(lower < v <= upper for v in vals):
            return vals
    raise GenerationError("could not satisfy the bounds")


def _lcm_capped(periods, cap: int) -> int | None:
    h = 1
    for p in periods:
        h = math.lcm(h, int(p))
        if h > cap:
            return None
    return h


def gen_taskset(cfg: GenConfig, rng: np.random.Generator | None = None) -> TaskSet:
    """Draw periods (redrawn wholesale while the hyperperiod exceeds the cap),
    fixed-sum utilizations, and ``C_i = max(1, floor(u_i * P_i))``.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    m, n = cfg.processors, cfg.n_tasks
    if n < 1 or cfg.period_lo < 1 or cfg.period_hi < cfg.period_lo:
        raise GenerationError("invalid configuration")
    for _ in range(cfg.max_retries):
        periods = rng.integers(cfg.period_lo, cfg.period_hi + 1, size=n)
        if _lcm_capped(periods, cfg.hyperperiod_cap) is None:
            continue
        utils = fixed_sum_utilizations(n, cfg.target, 0, 1, rng)
        pairs = [(max(1, math.floor(u * int(p))), int(p)) for u, p in zip(utils, periods)]
        ts = TaskSet.from_pairs(pairs, m)
        if ts.utilization <= cfg.target:
            return ts
    raise GenerationError(f"no task set within {cfg.max_retries} attempts "
                          f"(hyperperiod cap {cfg.hyperperiod_cap})")
