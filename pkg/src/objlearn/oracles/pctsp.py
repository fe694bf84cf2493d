"""Profitable tour (prize-collecting TSP) oracle via subset dynamic programming.

Node 0 is the depot, nodes 1..m the customers.  A decision is the joint
vector ``(y_1..y_m, y_depot, x_e for e=(i,j), i<j)``; edges are listed in
lexicographic order of their endpoints.  A tour through a single customer
uses its depot edge twice, so that ``x_e = 2`` there.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..core import Orientation
from .base import answer, colex_key, tie_tol

MAX_NODES = 16


@lru_cache(maxsize=None)
def edge_list(node_count: int) -> tuple:
    return tuple(itertools.combinations(range(node_count), 2))


@lru_cache(maxsize=None)
def edge_index_matrix(node_count: int) -> np.ndarray:
    idx = np.full((node_count, node_count), -1, dtype=int)
    for e, (i, j) in enumerate(edge_list(node_count)):
        idx[i, j] = idx[j, i] = e
    return idx


def decision_dim(node_count: int) -> int:
    return node_count + len(edge_list(node_count))


@dataclass(eq=False)
class PctspInstance:
    """One round of the profitable tour problem.

    ``revenues`` has one entry per customer, ``edge_costs`` one per edge of
    the complete graph.  The oracle itself only needs ``node_count``; the
    data define the round's true objective via :meth:`objective`.
    """

    node_count: int
    edge_costs: np.ndarray = None
    revenues: np.ndarray = None

    sense = Orientation.MAXIMIZE

    def __post_init__(self):
        if self.node_count < 2:
            raise ValueError("need a depot and at least one customer")
        E = len(edge_list(self.node_count))
        if self.edge_costs is None:
            self.edge_costs = np.zeros(E)
        if self.revenues is None:
            self.revenues = np.zeros(self.node_count - 1)
        self.edge_costs = np.asarray(self.edge_costs, dtype=float).ravel()
        self.revenues = np.asarray(self.revenues, dtype=float).ravel()
        if self.edge_costs.shape != (E,):
            raise ValueError(f"expected {E} edge costs, got {self.edge_costs.shape[0]}")
        if self.revenues.shape != (self.node_count - 1,):
            raise ValueError(f"expected {self.node_count - 1} revenues")
        if np.any(self.edge_costs < 0) or np.any(self.revenues < 0):
            raise ValueError("edge costs and revenues must be non-negative")

    @property
    def n(self) -> int:
        return decision_dim(self.node_count)

    def objective(self) -> np.ndarray:
        """Joint objective ``(revenues, 0, -edge_costs)`` of the max form."""
        return np.concatenate([self.revenues, [0.0], -self.edge_costs])

    def tour_vector(self, tour) -> np.ndarray:
        """Decision vector of a customer sequence visited from the depot."""
        m = self.node_count - 1
        x = np.zeros(self.n)
        if len(tour) == 0:
            return x
        idx = edge_index_matrix(self.node_count)
        for v in tour:
            x[v - 1] = 1.0
        x[m] = 1.0
        stops = [0, *tour, 0]
        for u, v in zip(stops[:-1], stops[1:]):
            x[m + 1 + idx[u, v]] += 1.0
        return x

    def enumerate_decisions(self, limit=2 ** 20):
        m = self.node_count - 1
        seen = {}
        for k in range(m + 1):
            for subset in itertools.combinations(range(1, m + 1), k):
                for perm in itertools.permutations(subset):
                    if k >= 2 and perm[0] > perm[-1]:
                        continue
                    x = self.tour_vector(perm)
                    seen.setdefault(x.tobytes(), x)
                    if len(seen) > limit:
                        raise ValueError("tour enumeration exceeds the limit")
        return np.array(list(seen.values()))

    def is_feasible(self, x, tol=1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        nv, m = self.node_count, self.node_count - 1
        if x.shape != (self.n,) or np.any(np.abs(x - np.round(x)) > tol) or x.min() < -tol:
            return False
        x = np.round(x).astype(int)
        y = np.concatenate([[x[m]], x[:m]])          # by node id
        if y.max() > 1 or np.any(y[1:] > y[0]):
            return False
        xe = x[m + 1:]
        deg = np.zeros(nv, dtype=int)
        for e, (i, j) in enumerate(edge_list(nv)):
            deg[i] += xe[e]
            deg[j] += xe[e]
        if np.any(deg != 2 * y):
            return False
        if y.sum() == 0:
            return True
        # connectivity of the used edges over the served nodes
        served = set(np.nonzero(y)[0].tolist())
        adj = {v: [] for v in served}
        for e, (i, j) in enumerate(edge_list(nv)):
            if xe[e]:
                adj[i].append(j)
                adj[j].append(i)
        stack, seen = [0], {0}
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen == served


def _edge_matrix(cx, node_count):
    W = np.zeros((node_count, node_count))
    iu = np.triu_indices(node_count, 1)
    W[iu] = cx
    return W + W.T


def solve_pctsp(c, inst: PctspInstance):
    """Exact maximizer of ``c.(y, x)`` over profitable tours.

    Held-Karp tables ``best[S, j]`` (best depot path covering customer set
    ``S`` and ending in ``j``) are filled layer by layer over ``|S|``; every
    subset is then closed into a tour and compared with the empty tour.
    """
    nv = inst.node_count
    if nv > MAX_NODES:
        raise ValueError(f"exact oracle capped at {MAX_NODES} nodes, got {nv}")
    c = np.asarray(c, dtype=float).ravel()
    if c.shape[0] != inst.n:
        raise ValueError(f"objective has length {c.shape[0]}, expected {inst.n}")
    m = nv - 1
    cy, cdep, cx = c[:m], c[m], c[m + 1:]
    W = _edge_matrix(cx, nv)
    Wc = W[1:, 1:]                       # customer-to-customer
    w0 = W[0, 1:]                        # depot-to-customer
    tol = 1e-9 * max(1.0, np.abs(c).sum())

    nsub = 1 << m
    best = np.full((nsub, m), -np.inf)
    count = np.zeros((nsub, m))
    bit = 1 << np.arange(m)
    best[bit, np.arange(m)] = w0
    count[bit, np.arange(m)] = 1.0
    subsets = np.arange(nsub)
    popcnt = np.array([bin(s).count("1") for s in range(nsub)])
    for k in range(2, m + 1):
        layer = subsets[popcnt == k]
        for j in range(m):
            S = layer[(layer >> j) & 1 == 1]
            prev = best[S ^ (1 << j)] + Wc[:, j][None, :]
            top = prev.max(axis=1)
            best[S, j] = top
            hit = prev >= (top - tol)[:, None]
            count[S, j] = (count[S ^ (1 << j)] * hit).sum(axis=1)

    closed = best + w0[None, :]
    cycle = closed.max(axis=1)
    cycle[0] = 0.0
    member = ((subsets[:, None] >> np.arange(m)) & 1).astype(float)
    total = member @ cy + cdep + cycle
    total[0] = 0.0
    vstar = total.max()
    opt = np.nonzero(total >= vstar - max(tol, tie_tol(vstar)))[0]
    if opt[0] == 0:
        return answer(c, np.zeros(inst.n))

    def n_cycles(S):
        hit = closed[S] >= cycle[S] - tol
        directed = float(count[S][hit].sum())
        return directed if popcnt[S] == 1 else directed / 2

    if len(opt) == 1 and n_cycles(opt[0]) == 1:
        return answer(c, inst.tour_vector(_backtrack(int(opt[0]), best, closed, cycle, Wc, tol)))

    # genuine ties: exact tie-break per optimal customer set
    candidates = [inst.tour_vector(_colex_tour(int(S), W, cx, nv, tol)) for S in opt]
    return answer(c, min(candidates, key=colex_key))


def _backtrack(S, best, closed, cycle, Wc, tol):
    j = int(np.nonzero(closed[S] >= cycle[S] - tol)[0][0])
    order = [j]
    while S & (S - 1):
        prevS = S ^ (1 << j)
        cand = best[prevS] + Wc[:, j]
        i = int(np.nonzero(cand >= best[S, j] - tol)[0][0])
        order.append(i)
        S, j = prevS, i
    return [v + 1 for v in reversed(order)]


def _colex_tour(S, W, cx, nv, tol):
    """Best tour on customer set ``S`` with ties resolved by ``sum 2**edge``.

    Exact but slow (pure Python); only reached when optima coincide.
    """
    idx = edge_index_matrix(nv)
    nodes = [v + 1 for v in range(nv - 1) if S >> v & 1]
    s = len(nodes)
    if s == 1:
        return nodes
    # states keyed by (mask over ``nodes``, last position)
    table = {}
    for a, v in enumerate(nodes):
        table[(1 << a, a)] = (W[0, v], 1 << int(idx[0, v]), None)
    for mask in range(1, 1 << s):
        for a in range(s):
            if not mask >> a & 1 or (mask, a) not in table:
                continue
            val, key, _ = table[(mask, a)]
            for b in range(s):
                if mask >> b & 1:
                    continue
                nval = val + W[nodes[a], nodes[b]]
                nkey = key + (1 << int(idx[nodes[a], nodes[b]]))
                slot = (mask | 1 << b, b)
                cur = table.get(slot)
                if (cur is None or nval > cur[0] + tol
                        or (abs(nval - cur[0]) <= tol and nkey < cur[1])):
                    table[slot] = (nval, nkey, a)
    full = (1 << s) - 1
    best = None
    for a in range(s):
        val, key, _ = table[(full, a)]
        val += W[nodes[a], 0]
        key += 1 << int(idx[nodes[a], 0])
        if best is None or val > best[0] + tol or (abs(val - best[0]) <= tol and key < best[1]):
            best = (val, key, a)
    order, mask, a = [], full, best[2]
    while a is not None:
        order.append(nodes[a])
        prev = table[(mask, a)][2]
        mask ^= 1 << a
        a = prev
    return list(reversed(order))
