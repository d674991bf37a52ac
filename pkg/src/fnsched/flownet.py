"""Four-layer flow networks (source -> jobs -> windows -> sink) for scheduling.

Edge flows from job node ``i`` to window node ``k`` are the work allocations
``X[i, k]``; source edges carry remaining work, sink edges window capacity.
"""
from __future__ import annotations

import bisect
import math
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

from .tasks import CONTINUOUS, ActiveJobArea, TaskSet, Time

SOURCE_KIND = "source"
SINK_KIND = "sink"
JOB_KIND = "job"
WINDOW_KIND = "window"

DEFAULT_NODE_BUDGET = 50_000
SCALE_LIMIT = 2**62


class NetworkTooLarge(ValueError):
    pass


class NodeId(NamedTuple):
    kind: str
    key: int | tuple[int, int] = 0

    def __str__(self):
        if self.kind in (SOURCE_KIND, SINK_KIND):
            return self.kind
        if self.kind == JOB_KIND:
            return f"tau{self.key}" if isinstance(self.key, int) else "tau{}.{}".format(*self.key)
        return f"W{self.key}"


SOURCE = NodeId(SOURCE_KIND)
SINK = NodeId(SINK_KIND)


def job_node(task_id: int, index: int | None = None) -> NodeId:
    return NodeId(JOB_KIND, task_id if index is None else (task_id, index))


def window_node(k: int) -> NodeId:
    return NodeId(WINDOW_KIND, k)


class Edge(NamedTuple):
    src: NodeId
    dst: NodeId
    capacity: Time
    cost: int = 0


class FlowNetwork:
    """Capacitated, costed digraph stored as parallel edge arrays.

    ``tails``/``heads`` index into ``nodes``; edge order is insertion order and
    fixes the solvers' tie-breaking.
    """

    def __init__(self, nodes: Sequence[NodeId], tails: Sequence[int], heads: Sequence[int],
                 capacities: Sequence[Time], costs: Sequence[int],
                 positions: dict[tuple[NodeId, NodeId], int] | None = None):
        self.nodes = tuple(nodes)
        self.tails = list(tails)
        self.heads = list(heads)
        self.capacities = list(capacities)
        self.costs = list(costs)
        if positions is not None:
            self._positions = positions

    @classmethod
    def from_edges(cls, edges: Iterable[Edge | tuple]) -> "FlowNetwork":
        b = _Builder()
        for e in edges:
            b.add(*e)
        return b.build()

    @property
    def edges(self) -> tuple[Edge, ...]:
        nodes = self.nodes
        return tuple(Edge(nodes[u], nodes[v], c, w) for u, v, c, w in
                     zip(self.tails, self.heads, self.capacities, self.costs))

    @cached_property
    def index(self) -> dict[NodeId, int]:
        return {n: i for i, n in enumerate(self.nodes)}

    @cached_property
    def _positions(self) -> dict[tuple[NodeId, NodeId], int]:
        nodes = self.nodes
        return {(nodes[u], nodes[v]): i for i, (u, v) in enumerate(zip(self.tails, self.heads))}

    def position(self, src: NodeId, dst: NodeId) -> int:
        return self._positions[src, dst]

    def edge(self, src: NodeId, dst: NodeId) -> Edge:
        i = self._positions[src, dst]
        return Edge(src, dst, self.capacities[i], self.costs[i])

    def has_edge(self, src: NodeId, dst: NodeId) -> bool:
        return (src, dst) in self._positions

    def source_edges(self) -> list[int]:
        s = self.index.get(SOURCE)
        return [i for i, u in enumerate(self.tails) if u == s]

    @property
    def demand(self) -> Time:
        caps = self.capacities
        return sum((caps[i] for i in self.source_edges()), 0)

    @property
    def max_cost(self) -> int:
        return max(self.costs, default=0)

    def __len__(self) -> int:
        return len(self.tails)

    def __repr__(self):
        return f"FlowNetwork({len(self.nodes)} nodes, {len(self.tails)} edges)"


class _Builder:
    """Collects nodes and edges in insertion order, refusing parallel edges."""

    def __init__(self):
        self.nodes: dict[NodeId, int] = {SOURCE: 0}
        self.positions: dict[tuple[NodeId, NodeId], int] = {}
        self.tails: list[int] = []
        self.heads: list[int] = []
        self.caps: list[Time] = []
        self.costs: list[int] = []

    def node(self, n: NodeId) -> int:
        i = self.nodes.get(n)
        if i is None:
            i = self.nodes[n] = len(self.nodes)
        return i

    def add(self, src: NodeId, dst: NodeId, capacity: Time, cost: int = 0) -> None:
        if (src, dst) in self.positions:
            return
        if capacity < 0 or cost < 0:
            raise ValueError(f"negative capacity or cost on {src}->{dst}")
        self.positions[src, dst] = len(self.tails)
        self.tails.append(self.node(src))
        self.heads.append(self.node(dst))
        self.caps.append(capacity)
        self.costs.append(cost)

    def build(self) -> FlowNetwork:
        self.node(SINK)
        return FlowNetwork(list(self.nodes), self.tails, self.heads, self.caps, self.costs,
                           self.positions)


def _capacities(aja: ActiveJobArea, capacities: Sequence[Time] | None) -> list[Time]:
    if capacities is None:
        capacities = [w.capacity for w in aja.windows]
    if len(capacities) != len(aja.windows) or any(c is None for c in capacities):
        raise ValueError("a capacity is required for every window")
    return list(capacities)


def _build(aja: ActiveJobArea, capacities: Sequence[Time] | None, costed: bool) -> FlowNetwork:
    caps = _capacities(aja, capacities)
    jobs = aja.edf_jobs()
    n = max(len(aja.deadlines), len(jobs))  # task count
    windows = aja.windows
    ends = [w.end for w in windows]
    # a job can use exactly the windows ending by its deadline, a prefix
    reach = [bisect.bisect_right(ends, j.abs_deadline) for j in jobs]
    k_max = max(reach, default=0)
    nj = len(jobs)
    nodes = [SOURCE] + [job_node(j.task_id) for j in jobs]
    nodes += [window_node(k) for k in range(1, k_max + 1)] + [SINK]
    sink = len(nodes) - 1
    unit = 1 if costed else 0
    tails = [0] * nj
    heads = list(range(1, nj + 1))
    cap_list = [j.remaining for j in jobs]
    costs = [unit] * nj
    for rank, kr in enumerate(reach, start=1):
        for k in range(1, kr + 1):
            tails.append(rank)
            heads.append(nj + k)
            cap_list.append(windows[k - 1].length)
            costs.append((rank if k == 1 else n + k - 1) if costed else 0)
    for k in range(1, k_max + 1):
        tails.append(nj + k)
        heads.append(sink)
        cap_list.append(caps[k - 1])
        costs.append(unit)
    if any(c < 0 for c in cap_list):
        raise ValueError("negative capacity in the network")
    net = FlowNetwork(nodes, tails, heads, cap_list, costs)
    if aja.model == CONTINUOUS:
        assert len(nodes) <= 2 * n + 2
        assert 2 * len(net) <= n * n + 5 * n
    return net


def build_fnrt(aja: ActiveJobArea, capacities: Sequence[Time] | None = None) -> FlowNetwork:
    """Plain (zero-cost) network for the area; any complete max flow is feasible."""
    return _build(aja, capacities, costed=False)


def build_fnrt_edf(aja: ActiveJobArea, capacities: Sequence[Time] | None = None) -> FlowNetwork:
    """Costed network whose min-cost flow favours earlier deadlines in the first window.

    The first-window edge of the ``r``-th job in EDF order costs ``r``; every
    edge into a later window ``k`` costs ``N + k - 1`` for ``N`` tasks.  Source
    and sink edges cost 1.
    """
    return _build(aja, capacities, costed=True)


def cost_slope(net: FlowNetwork, task_id: int, k: int) -> int:
    src = job_node(task_id)
    try:
        here = net.edge(src, window_node(k))
        there = net.edge(src, window_node(k + 1))
    except KeyError:
        raise KeyError(f"task {task_id} lacks an edge into window {k} or {k + 1}") from None
    return there.cost - here.cost


def build_full_horizon(ts: TaskSet, max_nodes: int = DEFAULT_NODE_BUDGET) -> FlowNetwork:
    """Network over every job in one hyperperiod, processor capacity ``M * l_k``."""
    h = ts.hyperperiod
    n_jobs = sum(h // t.period for t in ts.tasks)
    points = sorted({a for t in ts.tasks for a in range(0, h + 1, t.period)})
    if n_jobs + len(points) + 1 > max_nodes:
        raise NetworkTooLarge(
            f"{n_jobs} jobs and {len(points) - 1} windows exceed the node budget {max_nodes}")
    bounds = {b: k for k, b in enumerate(points, start=1)}  # window k starts at points[k-1]
    jobs = sorted(((j * t.period, t.id, j, t) for t in ts.tasks for j in range(h // t.period)),
                  key=lambda x: (x[0], x[1]))
    b = _Builder()
    for a, tid, j, task in jobs:
        b.add(SOURCE, job_node(tid, j), task.wcet)
    for a, tid, j, task in jobs:
        k = bounds[a]
        while points[k - 1] < a + task.period:
            b.add(job_node(tid, j), window_node(k), points[k] - points[k - 1])
            k += 1
    for k in range(1, len(points)):
        if window_node(k) in b.nodes:
            b.add(window_node(k), SINK, ts.processors * (points[k] - points[k - 1]))
    return b.build()


def full_horizon_windows(ts: TaskSet) -> list[tuple[int, int]]:
    h = ts.hyperperiod
    points = sorted({a for t in ts.tasks for a in range(0, h + 1, t.period)})
    return list(zip(points, points[1:]))


# -- integer scaling --------------------------------------------------------

def scale_factor(values: Iterable[Time]) -> int:
    f = 1
    for v in values:
        if isinstance(v, Fraction):
            f = math.lcm(f, v.denominator)
    return f


def scale_to_integers(net: FlowNetwork, limit: int = SCALE_LIMIT) -> tuple[FlowNetwork, int]:
    """Multiply every capacity by the lcm of their denominators."""
    factor = scale_factor(net.capacities)
    if factor > limit:
        raise OverflowError(f"scale factor {factor} exceeds {limit}")
    if factor == 1:
        if all(type(c) is int for c in net.capacities):
            return net, 1
        caps = [int(c) for c in net.capacities]
    else:
        caps = [c.numerator * (factor // c.denominator) if isinstance(c, Fraction) else c * factor
                for c in net.capacities]
    return FlowNetwork(net.nodes, net.tails, net.heads, caps, net.costs, net._positions), factor


# -- external format --------------------------------------------------------

def to_dimacs(net: FlowNetwork) -> str:
    """DIMACS min-cost-flow text; capacities must already be integral."""
    index = {n: i for i, n in enumerate(net.nodes, start=1)}
    demand = net.demand
    lines = [f"c nodes: {' '.join(str(n) for n in net.nodes)}",
             f"p min {len(net.nodes)} {len(net.edges)}",
             f"n {index[SOURCE]} {demand}",
             f"n {index[SINK]} {-demand}"]
    for e in net.edges:
        if isinstance(e.capacity, Fraction) and e.capacity.denominator != 1:
            raise ValueError("scale the network to integers before exporting")
        lines.append(f"a {index[e.src]} {index[e.dst]} 0 {int(e.capacity)} {e.cost}")
    return "\n".join(lines) + "\n"
