"""
Time-varying communication topologies.

Graphs are undirected; each round of a periodic schedule carries a graph and
its Metropolis mixing matrix. The geometric-mixing certificate compares the
entries of transition products P(t, s) = P^t P^{t-1} ... P^s with the uniform
average 1/N.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
import math

import numpy as np


ROW_SUM_TOL = 1e-12


class ScheduleError(ValueError):
    """Raised when a topology schedule violates the connectivity window."""


@dataclass(frozen=True)
class Graph:
    node_count: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("graph needs at least one node")
        normalized = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"explicit self-loop ({i}, {i}) not allowed")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise ValueError(f"edge ({i}, {j}) out of range")
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def from_edges(cls, node_count, edges):
        return cls(node_count, frozenset(tuple(e) for e in edges))

    @classmethod
    def complete(cls, node_count):
        return cls(node_count, frozenset((i, j) for i in range(node_count)
                                         for j in range(i + 1, node_count)))

    @classmethod
    def path(cls, node_count):
        return cls(node_count, frozenset((i, i + 1) for i in range(node_count - 1)))

    def degrees(self):
        d = np.zeros(self.node_count, dtype=int)
        for i, j in self.edges:
            d[i] += 1
            d[j] += 1
        return d

    def adjacency(self):
        A = np.zeros((self.node_count, self.node_count), dtype=bool)
        for i, j in self.edges:
            A[i, j] = A[j, i] = True
        return A

    def neighbors(self):
        nbrs = [[] for _ in range(self.node_count)]
        for i, j in sorted(self.edges):
            nbrs[i].append(j)
            nbrs[j].append(i)
        return nbrs


def is_connected(node_count, edges):
    """Breadth-first search connectivity test on an undirected edge set."""
    nbrs = [[] for _ in range(node_count)]
    for i, j in edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == node_count


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    entries: np.ndarray
    zeta: float

    def __post_init__(self):
        W = np.array(self.entries, dtype=float)
        W.setflags(write=False)
        object.__setattr__(self, "entries", W)

    @property
    def size(self):
        return self.entries.shape[0]

    def check(self, tol=ROW_SUM_TOL):
        """Return a list of violated invariants (empty when valid)."""
        W = self.entries
        problems = []
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            return ["matrix is not square"]
        if np.any(W < 0):
            problems.append("negative entry")
        if np.max(np.abs(W.sum(axis=1) - 1.0)) > tol:
            problems.append("row sums differ from 1")
        if np.max(np.abs(W.sum(axis=0) - 1.0)) > tol:
            problems.append("column sums differ from 1")
        if np.any(np.diag(W) < self.zeta):
            problems.append("diagonal entry below zeta")
        positive = W[W > 0]
        if positive.size and positive.min() < self.zeta:
            problems.append("positive entry below zeta")
        return problems


def metropolis_matrix(graph):
    """
    Metropolis weights for an undirected graph.

    [P]_ij = 1 / (1 + max(d_i, d_j)) on edges, the diagonal absorbs the rest.
    Symmetric, hence doubly stochastic.
    """
    N = graph.node_count
    d = graph.degrees()
    W = np.zeros((N, N))
    for i, j in graph.edges:
        W[i, j] = W[j, i] = 1.0 / (1.0 + max(d[i], d[j]))
    for i in range(N):
        W[i, i] = 1.0 - (W[i].sum() - W[i, i])
    zeta = float(W[W > 0].min())
    return MixingMatrix(W, zeta)


def _as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def random_geometric_graph(n_nodes, radius, rng, max_retries=1000):
    """
    Random geometric graph on the unit square, resampled until connected.

    Nodes are placed uniformly at random; an edge joins every pair within
    Euclidean distance ``radius``.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    if not (0 < radius <= math.sqrt(2)):
        raise ValueError("radius must lie in (0, sqrt(2)]")
    rng = _as_generator(rng)
    for _ in range(max_retries):
        pts = rng.uniform(0.0, 1.0, size=(n_nodes, 2))
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff ** 2).sum(-1))
        edges = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)
                 if dist[i, j] <= radius]
        if is_connected(n_nodes, edges):
            return Graph.from_edges(n_nodes, edges)
    raise RuntimeError(
        f"no connected graph after {max_retries} draws; radius {radius} too small")


@dataclass(frozen=True, eq=False)
class TopologySchedule:
    """Periodic sequence of (graph, mixing matrix) rounds; round t is t mod period."""

    rounds: tuple
    connectivity_window: int

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        if not self.rounds:
            raise ValueError("schedule needs at least one round")
        sizes = {g.node_count for g, _ in self.rounds}
        if len(sizes) != 1:
            raise ValueError("rounds disagree on node count")
        if self.connectivity_window < 1:
            raise ValueError("connectivity window must be >= 1")

    @property
    def period(self):
        return len(self.rounds)

    @property
    def node_count(self):
        return self.rounds[0][0].node_count

    @property
    def zeta(self):
        return min(W.zeta for _, W in self.rounds)

    def matrix(self, t):
        return self.rounds[t % self.period][1].entries

    def validate(self):
        """Check every B-window (cyclically) has a connected edge union."""
        B, N = self.connectivity_window, self.node_count
        for t in range(self.period):
            union = set()
            for s in range(B):
                union |= self.rounds[(t + s) % self.period][0].edges
            if not is_connected(N, union):
                raise ScheduleError(
                    f"window [{t}, {t + B}) has a disconnected edge union")
        for k, (_, W) in enumerate(self.rounds):
            bad = W.check()
            if bad:
                raise ScheduleError(f"round {k}: {', '.join(bad)}")
        return self

    def to_dict(self):
        return {
            "period": self.period,
            "B": self.connectivity_window,
            "node_count": self.node_count,
            "rounds": [sorted(list(e) for e in g.edges) for g, _ in self.rounds],
        }

    @classmethod
    def from_dict(cls, doc):
        N = int(doc["node_count"])
        graphs = [Graph.from_edges(N, edges) for edges in doc["rounds"]]
        if "period" in doc and int(doc["period"]) != len(graphs):
            raise ValueError("period does not match the number of rounds")
        return cls.from_graphs(graphs, int(doc["B"]))

    @classmethod
    def from_graphs(cls, graphs, window):
        return cls(tuple((g, metropolis_matrix(g)) for g in graphs), window)

    @classmethod
    def static(cls, graph):
        return cls.from_graphs([graph], 1)


def random_schedule(n_nodes, radius, period, window, rng, max_retries=1000):
    """
    Periodic schedule built from one connected random geometric graph.

    With window == period the edges are split round-robin over the rounds, so
    only full windows are connected. Otherwise each round keeps every edge
    with probability min(1, 2/window) and draws are rejected until every
    window passes.
    """
    if not (1 <= window <= period):
        raise ValueError("need 1 <= window <= period")
    rng = _as_generator(rng)
    base = random_geometric_graph(n_nodes, radius, rng, max_retries)
    edges = sorted(base.edges)
    for _ in range(max_retries):
        if window == period:
            order = rng.permutation(len(edges))
            buckets = [[] for _ in range(period)]
            for k, e in enumerate(order):
                buckets[k % period].append(edges[e])
        else:
            keep = min(1.0, 2.0 / window)
            buckets = [[e for e in edges if rng.uniform() < keep]
                       for _ in range(period)]
        sched = TopologySchedule.from_graphs(
            [Graph.from_edges(n_nodes, b) for b in buckets], window)
        try:
            return sched.validate()
        except ScheduleError:
            continue
    raise RuntimeError("could not draw a schedule satisfying the window")


def transition_product(schedule, t, s):
    """P(t, s) = P^t P^{t-1} ... P^s."""
    if t < s or s < 0:
        raise ValueError(f"need t >= s >= 0, got t={t}, s={s}")
    M = schedule.matrix(s).copy()
    for k in range(s + 1, t + 1):
        M = schedule.matrix(k) @ M
    return M


@dataclass(frozen=True)
class MixingCertificate:
    gamma_big: float
    gamma: float
    max_violation: float
    horizon: int
    zeta: float
    window: int
    node_count: int

    @property
    def holds(self):
        return self.max_violation <= 0.0


def mixing_constants(zeta, node_count, window):
    """Geometric mixing constants (Gamma, gamma) of a B-connected schedule."""
    base = 1.0 - zeta / (4.0 * node_count ** 2)
    return base ** -2, base ** (1.0 / window)


def mixing_bound_check(schedule, horizon):
    """
    Check |[P(t,s)]_ij - 1/N| <= Gamma gamma^(t-s) for 0 <= s <= t <= horizon.

    Products only depend on s mod period and the lag, so one forward sweep per
    phase covers every (t, s) pair exactly.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    schedule.validate()
    N, B = schedule.node_count, schedule.connectivity_window
    zeta = schedule.zeta
    Gam, gam = mixing_constants(zeta, N, B)
    worst = -math.inf
    for s in range(min(schedule.period, horizon + 1)):
        M = schedule.matrix(s).copy()
        for t in range(s, horizon + 1):
            if t > s:
                M = schedule.matrix(t) @ M
            dev = np.abs(M - 1.0 / N).max()
            worst = max(worst, dev - Gam * gam ** (t - s))
    return MixingCertificate(Gam, gam, float(worst), horizon, zeta, B, N)
