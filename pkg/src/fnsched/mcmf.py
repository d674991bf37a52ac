"""Max-flow and min-cost max-flow solvers for integer-capacity networks.

``max_flow`` is Dinic's algorithm.  ``min_cost_max_flow`` is the primal-dual
method: Dijkstra with node potentials finds the shortest-path distances, then
a blocking flow is pushed through every arc of zero reduced cost before the
next Dijkstra round.  Both are deterministic for a fixed edge order.

The kernels run under numba on int64 arrays; the residual graph is in CSR
form with arc ``2e`` for edge ``e`` and ``2e + 1`` for its reverse.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from numba import njit

from .flownet import JOB_KIND, SINK, SOURCE, WINDOW_KIND, FlowNetwork, NodeId

INF = 1 << 62
# total capacity must stay below this so residual sums cannot overflow int64
CAPACITY_LIMIT = 1 << 61


@dataclass
class SolverStats:
    iterations: int = 0
    augmentations: int = 0
    wall_time: float = 0.0

    def __iadd__(self, other: "SolverStats"):
        self.iterations += other.iterations
        self.augmentations += other.augmentations
        self.wall_time += other.wall_time
        return self


class FlowResult:
    """Per-edge flow values of a network (divided by ``factor`` when unscaled)."""

    def __init__(self, network: FlowNetwork, values: list[int], total, cost=0,
                 stats: SolverStats | None = None, factor: int = 1):
        self.network = network
        self.values = values
        self.total = total
        self.cost = cost
        self.stats = stats if stats is not None else SolverStats()
        self.factor = factor

    def value(self, i: int) -> int | Fraction:
        v = self.values[i]
        return v if self.factor == 1 else Fraction(v, self.factor)

    def flow(self, src: NodeId, dst: NodeId) -> int | Fraction:
        i = self.network._positions.get((src, dst))
        return 0 if i is None else self.value(i)

    @cached_property
    def flows(self) -> dict[tuple[NodeId, NodeId], int | Fraction]:
        nodes = self.network.nodes
        return {(nodes[u], nodes[v]): self.value(i)
                for i, (u, v) in enumerate(zip(self.network.tails, self.network.heads))}

    def allocation(self) -> dict[tuple, int | Fraction]:
        """Job-to-window flows keyed by ``(job key, window index)``."""
        return {(a.key, b.key): f for (a, b), f in self.flows.items()
                if a.kind == JOB_KIND and b.kind == WINDOW_KIND}

    def unscale(self, factor: int) -> "FlowResult":
        if factor == 1:
            return self
        return FlowResult(self.network, self.values, Fraction(self.total, factor),
                          Fraction(self.cost, factor), self.stats, self.factor * factor)


# -- kernels ----------------------------------------------------------------

@njit(cache=True)
def _csr(n, tails, heads):
    m = tails.size
    start = np.zeros(n + 1, np.int64)
    for e in range(m):
        start[tails[e] + 1] += 1
        start[heads[e] + 1] += 1
    for i in range(n):
        start[i + 1] += start[i]
    fill = start[:n].copy()
    adj = np.empty(2 * m, np.int64)
    to = np.empty(2 * m, np.int64)
    for e in range(m):
        u, v = tails[e], heads[e]
        adj[fill[u]] = 2 * e
        fill[u] += 1
        adj[fill[v]] = 2 * e + 1
        fill[v] += 1
        to[2 * e] = v
        to[2 * e + 1] = u
    return start, adj, to


@njit(cache=True)
def _admissible(a, u, v, rcap, rcost, pot, use_cost):
    if rcap[a] <= 0:
        return False
    return not use_cost or rcost[a] + pot[u] - pot[v] == 0


@njit(cache=True)
def _levels(n, s, t, start, adj, to, rcap, rcost, pot, use_cost, level):
    level[:] = -1
    level[s] = 0
    queue = np.empty(n, np.int64)
    queue[0] = s
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        for i in range(start[u], start[u + 1]):
            a = adj[i]
            v = to[a]
            if level[v] < 0 and _admissible(a, u, v, rcap, rcost, pot, use_cost):
                level[v] = level[u] + 1
                queue[tail] = v
                tail += 1
    return level[t] >= 0


@njit(cache=True)
def _blocking_flow(n, s, t, start, adj, to, rcap, rcost, pot, use_cost, level):
    it = start[:n].copy()
    nodes = np.empty(n + 1, np.int64)
    arcs = np.empty(n + 1, np.int64)
    paths = 0
    while True:
        depth = 0
        nodes[0] = s
        while True:
            u = nodes[depth]
            if u == t:
                break
            advanced = False
            while it[u] < start[u + 1]:
                a = adj[it[u]]
                v = to[a]
                if level[v] == level[u] + 1 and _admissible(a, u, v, rcap, rcost, pot, use_cost):
                    arcs[depth] = a
                    depth += 1
                    nodes[depth] = v
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                level[u] = -1  # dead end
                if depth == 0:
                    return paths
                depth -= 1
                it[nodes[depth]] += 1
        push = INF
        for i in range(depth):
            if rcap[arcs[i]] < push:
                push = rcap[arcs[i]]
        for i in range(depth):
            rcap[arcs[i]] -= push
            rcap[arcs[i] ^ 1] += push
        paths += 1


@njit(cache=True)
def _residual(tails, caps, costs):
    m = tails.size
    rcap = np.zeros(2 * m, np.int64)
    rcost = np.zeros(2 * m, np.int64)
    for e in range(m):
        rcap[2 * e] = caps[e]
        rcost[2 * e] = costs[e]
        rcost[2 * e + 1] = -costs[e]
    return rcap, rcost


@njit(cache=True)
def _dinic(n, s, t, tails, heads, caps):
    start, adj, to = _csr(n, tails, heads)
    rcap, rcost = _residual(tails, caps, np.zeros_like(caps))
    pot = np.zeros(n, np.int64)
    level = np.empty(n, np.int64)
    rounds = paths = 0
    while _levels(n, s, t, start, adj, to, rcap, rcost, pot, False, level):
        rounds += 1
        paths += _blocking_flow(n, s, t, start, adj, to, rcap, rcost, pot, False, level)
    return caps - rcap[0::2], rounds, paths


@njit(cache=True)
def _primal_dual(n, s, t, tails, heads, caps, costs):
    start, adj, to = _csr(n, tails, heads)
    rcap, rcost = _residual(tails, caps, costs)
    pot = np.zeros(n, np.int64)
    dist = np.empty(n, np.int64)
    done = np.empty(n, np.bool_)
    level = np.empty(n, np.int64)
    rounds = paths = 0
    while True:
        # dense Dijkstra on reduced costs; the networks here are small
        dist[:] = INF
        done[:] = False
        dist[s] = 0
        for _ in range(n):
            u, best = -1, INF
            for v in range(n):
                if not done[v] and dist[v] < best:
                    u, best = v, dist[v]
            if u < 0:
                break
            done[u] = True
            for i in range(start[u], start[u + 1]):
                a = adj[i]
                if rcap[a] > 0:
                    v = to[a]
                    nd = best + rcost[a] + pot[u] - pot[v]
                    if nd < dist[v]:
                        dist[v] = nd
            if u == t:
                break
        if dist[t] == INF:
            break
        rounds += 1
        dt = dist[t]
        for v in range(n):
            pot[v] += dist[v] if dist[v] < dt else dt
        if not _levels(n, s, t, start, adj, to, rcap, rcost, pot, True, level):
            raise AssertionError("no zero-reduced-cost path after Dijkstra")
        paths += _blocking_flow(n, s, t, start, adj, to, rcap, rcost, pot, True, level)
    return caps - rcap[0::2], rounds, paths


# -- wrappers ---------------------------------------------------------------

def _arrays(net: FlowNetwork):
    caps = net.capacities
    if not all(type(c) is int for c in caps):
        fixed = []
        for c in caps:
            if isinstance(c, Fraction):
                if c.denominator != 1:
                    raise ValueError("capacities must be integral; scale the network first")
                c = c.numerator
            if c != int(c):
                raise ValueError("capacities must be integral; scale the network first")
            fixed.append(int(c))
        caps = fixed
    if sum(caps) >= CAPACITY_LIMIT:
        raise OverflowError("total capacity does not fit the solver's integer range")
    if any(c < 0 for c in caps) or any(w < 0 for w in net.costs):
        raise AssertionError("negative capacity or cost")
    index = net.index
    s, t = index.get(SOURCE, -1), index.get(SINK, -1)
    return (len(net.nodes), s, t, np.array(net.tails, np.int64), np.array(net.heads, np.int64),
            np.array(caps, np.int64), np.array(net.costs, np.int64))


def _result(net: FlowNetwork, flows, stats: SolverStats) -> FlowResult:
    values = flows.tolist() if flows is not None else [0] * len(net)
    s = net.index.get(SOURCE, -1)
    total = sum(f for f, u in zip(values, net.tails) if u == s)
    cost = sum(f * w for f, w in zip(values, net.costs))
    return FlowResult(net, values, total, cost, stats)


def max_flow(net: FlowNetwork) -> FlowResult:
    start = time.perf_counter()
    stats = SolverStats()
    n, s, t, tails, heads, caps, _ = _arrays(net)
    flows = None
    if s >= 0 and t >= 0 and len(tails):
        flows, stats.iterations, stats.augmentations = _dinic(n, s, t, tails, heads, caps)
    stats.wall_time = time.perf_counter() - start
    return _result(net, flows, stats)


def min_cost_max_flow(net: FlowNetwork) -> FlowResult:
    """A maximum flow of least total cost (all costs must be non-negative)."""
    start = time.perf_counter()
    stats = SolverStats()
    n, s, t, tails, heads, caps, costs = _arrays(net)
    flows = None
    if s >= 0 and t >= 0 and len(tails):
        flows, stats.iterations, stats.augmentations = _primal_dual(
            n, s, t, tails, heads, caps, costs)
    stats.wall_time = time.perf_counter() - start
    return _result(net, flows, stats)


def is_complete(net: FlowNetwork, result: FlowResult) -> bool:
    """True when the flow saturates every source edge."""
    caps = net.capacities
    return all(result.value(i) == caps[i] for i in net.source_edges())
