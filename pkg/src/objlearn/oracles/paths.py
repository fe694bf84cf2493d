"""Shortest-path oracle on directed graphs, decisions as arc-incidence vectors."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..core import Orientation
from .base import answer

ARC_TOL = 1e-9


@dataclass(eq=False)
class Graph:
    """Directed multigraph; arc ``a`` runs ``tails[a] -> heads[a]``."""

    node_count: int
    tails: np.ndarray
    heads: np.ndarray

    def __post_init__(self):
        self.tails = np.asarray(self.tails, dtype=int).ravel()
        self.heads = np.asarray(self.heads, dtype=int).ravel()
        if self.tails.shape != self.heads.shape:
            raise ValueError("tails and heads differ in length")
        if self.tails.size and (min(self.tails.min(), self.heads.min()) < 0 or
                                max(self.tails.max(), self.heads.max()) >= self.node_count):
            raise ValueError("arc endpoint outside 0..node_count-1")

    @classmethod
    def from_arcs(cls, node_count, arcs):
        arcs = np.asarray(arcs, dtype=int).reshape(-1, 2)
        return cls(node_count, arcs[:, 0], arcs[:, 1])

    @property
    def arc_count(self) -> int:
        return self.tails.shape[0]

    @cached_property
    def out_arcs(self) -> list[list[int]]:
        out = [[] for _ in range(self.node_count)]
        for a, u in enumerate(self.tails.tolist()):
            out[u].append(a)
        return out

    def distances(self, cost, source) -> np.ndarray:
        """Dijkstra distances from ``source`` (``inf`` when unreachable)."""
        cost = np.asarray(cost, dtype=float)
        dist = np.full(self.node_count, np.inf)
        dist[source] = 0.0
        heads = self.heads.tolist()
        costs = cost.tolist()
        heap = [(0.0, source)]
        done = [False] * self.node_count
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for a in self.out_arcs[u]:
                v = heads[a]
                nd = d + costs[a]
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist


@dataclass(eq=False)
class GraphInstance:
    graph: Graph
    source: int
    target: int

    sense = Orientation.MINIMIZE

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError("source and target must differ")
        for v in (self.source, self.target):
            if not 0 <= v < self.graph.node_count:
                raise ValueError(f"node {v} outside the graph")

    @property
    def n(self) -> int:
        return self.graph.arc_count

    def is_feasible(self, x, tol=1e-9) -> bool:
        """``x`` is the incidence vector of a simple source-target path."""
        x = np.asarray(x, dtype=float)
        g = self.graph
        if x.shape != (g.arc_count,) or np.any(np.abs(x - np.round(x)) > tol) \
                or x.min() < -tol or x.max() > 1 + tol:
            return False
        used = np.nonzero(x > 0.5)[0]
        balance = np.zeros(g.node_count)
        np.add.at(balance, g.tails[used], 1)
        np.add.at(balance, g.heads[used], -1)
        expect = np.zeros(g.node_count)
        expect[self.source], expect[self.target] = 1, -1
        if np.any(balance != expect):
            return False
        # walk the path to rule out detached cycles
        nxt = {}
        for a in used.tolist():
            u = int(g.tails[a])
            if u in nxt:
                return False
            nxt[u] = int(g.heads[a])
        v, steps = self.source, 0
        while v != self.target and steps <= len(used):
            v = nxt.get(v)
            if v is None:
                return False
            steps += 1
        return v == self.target and steps == len(used)

    def enumerate_decisions(self, limit=2 ** 20):
        """All simple source-target paths as incidence vectors."""
        g = self.graph
        out = []
        path = []
        visited = [False] * g.node_count

        def dfs(u):
            if u == self.target:
                x = np.zeros(g.arc_count)
                x[path] = 1.0
                out.append(x)
                if len(out) > limit:
                    raise ValueError("path enumeration exceeds the limit")
                return
            visited[u] = True
            for a in g.out_arcs[u]:
                v = int(g.heads[a])
                if not visited[v]:
                    path.append(a)
                    dfs(v)
                    path.pop()
            visited[u] = False

        dfs(self.source)
        return np.array(out).reshape(-1, g.arc_count)


def solve_shortest_path(c, inst: GraphInstance):
    """Minimum-cost source-target path under non-negative arc costs.

    Dijkstra gives the distances; among all shortest paths the one
    avoiding high-index arcs is returned (see ``colex_key``), found by a
    second Dijkstra over the tight arcs with exact weights ``2**a``.
    """
    c = np.asarray(c, dtype=float).ravel()
    g = inst.graph
    if c.shape[0] != g.arc_count:
        raise ValueError(f"cost vector has length {c.shape[0]}, graph has {g.arc_count} arcs")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ValueError("arc costs must be finite and non-negative")
    dist = g.distances(c, inst.source)
    if not np.isfinite(dist[inst.target]):
        raise ValueError(f"target {inst.target} unreachable from {inst.source}")
    tails, heads = g.tails, g.heads
    finite = np.isfinite(dist[tails])
    tight = np.zeros(g.arc_count, dtype=bool)
    slack_ok = dist[tails[finite]] + c[finite] <= dist[heads[finite]] + ARC_TOL * np.maximum(
        1.0, dist[heads[finite]])
    tight[np.nonzero(finite)[0][slack_ok]] = True

    # exact tie-break: minimize sum of 2**a over tight arcs
    best = {inst.source: 0}
    pred = {}
    heap = [(0, inst.source)]
    done = set()
    heads_l = heads.tolist()
    while heap:
        w, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == inst.target:
            break
        for a in g.out_arcs[u]:
            if not tight[a]:
                continue
            v = heads_l[a]
            nw = w + (1 << a)
            if v not in best or nw < best[v]:
                best[v] = nw
                pred[v] = a
                heapq.heappush(heap, (nw, v))
    x = np.zeros(g.arc_count)
    v = inst.target
    while v != inst.source:
        a = pred[v]
        x[a] = 1.0
        v = int(tails[a])
    return answer(c, x)
