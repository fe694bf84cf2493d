"""Linear (divisible) and 0/1 knapsack oracles."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from ..core import Orientation
from .base import OracleBudgetExceeded, answer, tie_tol

DEFAULT_NODE_CAP = 10_000_000
# largest (items + 1) x (capacity + 1) table the dynamic program may allocate
DP_CELL_LIMIT = 25_000_000


@dataclass(eq=False)
class KnapsackInstance:
    """``max c.x  s.t.  prices.x <= budget``, ``x`` in [0,1]^n or {0,1}^n."""

    prices: np.ndarray
    budget: float
    divisible: bool = False

    sense = Orientation.MAXIMIZE

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float).ravel()
        if not np.all(np.isfinite(self.prices)) or np.any(self.prices <= 0):
            raise ValueError("knapsack prices must be finite and strictly positive")
        if not (np.isfinite(self.budget) and self.budget >= 0):
            raise ValueError("knapsack budget must be finite and non-negative")
        self.budget = float(self.budget)

    @property
    def n(self) -> int:
        return self.prices.shape[0]

    def polyhedron(self):
        """``(A, b)`` with ``{x : A x <= b}`` the divisible feasible region."""
        n = self.n
        A = np.vstack([self.prices[None, :], np.eye(n), -np.eye(n)])
        b = np.concatenate([[self.budget], np.ones(n), np.zeros(n)])
        return A, b

    def is_feasible(self, x, tol=1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,) or x.min() < -tol or x.max() > 1 + tol:
            return False
        if not self.divisible and np.any(np.abs(x - np.round(x)) > tol):
            return False
        return bool(self.prices @ x <= self.budget + tol * max(1.0, self.budget))

    def enumerate_decisions(self):
        if self.divisible:
            raise ValueError("a divisible knapsack has no finite decision set")
        if self.n > 20:
            raise ValueError(f"2^{self.n} decisions exceed the enumeration limit 2^20")
        bits = ((np.arange(2 ** self.n)[:, None] >> np.arange(self.n)) & 1).astype(float)
        return bits[bits @ self.prices <= self.budget + 1e-9 * max(1.0, self.budget)]


def _ratio_order(c, prices, idx):
    """Indices sorted by c/p descending, lower index first on ties."""
    ratio = c[idx] / prices[idx]
    return idx[np.lexsort((idx, -ratio))]


def solve_knapsack_lp(c, inst: KnapsackInstance):
    """Fractional greedy; exact optimum of the LP relaxation.

    Items are taken whole in order of decreasing utility/price until the
    budget runs out, with one fractional item at the boundary.  Items of
    zero or negative utility are never taken.
    """
    c = np.asarray(c, dtype=float).ravel()
    if c.shape[0] != inst.n:
        raise ValueError(f"objective has length {c.shape[0]}, instance has {inst.n} items")
    x = np.zeros(inst.n)
    cap = inst.budget
    for i in _ratio_order(c, inst.prices, np.nonzero(c > 0)[0]):
        if cap <= 0:
            break
        take = min(1.0, cap / inst.prices[i])
        x[i] = take
        cap -= take * inst.prices[i]
    return answer(c, x)


class _Prefix:
    """Greedy LP bound over a fixed ratio-sorted item list."""

    def __init__(self, v, w):
        self.v, self.w = v, w
        self.V = np.concatenate([[0.0], np.cumsum(v)])
        self.W = np.concatenate([[0.0], np.cumsum(w)])

    def bound(self, start, cap):
        """LP value of items ``start:`` with capacity ``cap`` and the number
        of leading items that fit whole."""
        W, V = self.W, self.V
        end = int(np.searchsorted(W, W[start] + cap, side="right")) - 1
        full = V[end] - V[start]
        if end < len(self.v):
            full += (cap - (W[end] - W[start])) * self.v[end] / self.w[end]
        return full, end


def solve_knapsack_ip(c, inst: KnapsackInstance, max_nodes: int = DEFAULT_NODE_CAP,
                      method: str = "auto"):
    """Exact 0/1 knapsack.

    ``method="dp"`` runs a dynamic program over integer capacities and
    needs integral prices; ``"bnb"`` is branch-and-bound with the
    fractional bound, where a best-first search proves the optimal value
    and a depth-first pass, branching on items from the highest index down
    and trying "leave out" first, returns the decision preferred by the
    global tie rule (see :func:`colex_key`).  ``"auto"`` takes the dynamic
    program whenever prices are integral and its table stays below
    ``DP_CELL_LIMIT`` cells.  Branch-and-bound can blow up on objectives
    with many near-ties (a uniform ``c`` on correlated prices); the
    dynamic program cannot.
    """
    if method not in ("auto", "dp", "bnb"):
        raise ValueError(f"unknown method {method!r}")
    c = np.asarray(c, dtype=float).ravel()
    n = inst.n
    if c.shape[0] != n:
        raise ValueError(f"objective has length {c.shape[0]}, instance has {n} items")
    p, budget = inst.prices, inst.budget
    # zero-utility items never help, and leaving them out is preferred on ties
    active = np.nonzero((c > 0) & (p <= budget))[0]
    if active.size == 0:
        return answer(c, np.zeros(n))
    if method != "bnb":
        cells = (active.size + 1) * (int(budget) + 1)
        integral = bool(np.all(p[active] == np.round(p[active])))
        if integral and (method == "dp" or cells <= DP_CELL_LIMIT):
            return answer(c, _dp_search(c, p, budget, active))
        if method == "dp":
            raise ValueError("the dynamic program needs integral prices")
    nodes = [0]

    def tick():
        nodes[0] += 1
        if nodes[0] > max_nodes:
            raise OracleBudgetExceeded(
                f"knapsack branch-and-bound exceeded {max_nodes} nodes (n={n})")

    best = _best_first_value(c, p, budget, active, tick)
    target = best - tie_tol(best)
    x = _colex_search(c, p, budget, active, target, tick)
    return answer(c, x)


def _best_first_value(c, p, budget, active, tick):
    order = _ratio_order(c, p, active)
    pre = _Prefix(c[order], p[order])
    k = len(order)
    bound, end = pre.bound(0, budget)
    incumbent = pre.V[end]
    heap = [(-bound, 0, 0, budget, 0.0)]
    seq = itertools.count(1)
    while heap:
        neg_bound, _, d, cap, val = heapq.heappop(heap)
        if -neg_bound <= incumbent:
            break
        tick()
        if d >= k:
            continue
        for take in (True, False):
            if take:
                if pre.w[d] > cap:
                    continue
                ncap, nval = cap - pre.w[d], val + pre.v[d]
            else:
                ncap, nval = cap, val
            b, end = pre.bound(d + 1, ncap)
            greedy = nval + pre.V[end] - pre.V[d + 1]
            if greedy > incumbent:
                incumbent = greedy
            if nval + b > incumbent and d + 1 < k:
                heapq.heappush(heap, (-(nval + b), next(seq), d + 1, ncap, nval))
    return float(incumbent)


def _colex_search(c, p, budget, active, target, tick):
    """First decision in colex order whose value reaches ``target``."""
    k = len(active)
    ratio = c[active] / p[active]
    glob = np.lexsort((active, -ratio))      # positions into ``active``
    # prefix i: free items are active[:i]; their ratio-sorted bound data
    prefixes = []
    for i in range(k + 1):
        sel = glob[glob < i]
        prefixes.append(_Prefix(c[active[sel]], p[active[sel]]))
    stack = [(k, budget, 0.0, ())]
    while stack:
        i, cap, val, chosen = stack.pop()
        tick()
        if val >= target:
            x = np.zeros(len(c))
            x[list(chosen)] = 1.0
            return x
        if i == 0:
            continue
        lp, _ = prefixes[i].bound(0, cap)
        if val + lp < target:
            continue
        item = active[i - 1]
        if p[item] <= cap:
            stack.append((i - 1, cap - p[item], val + c[item], chosen + (item,)))
        stack.append((i - 1, cap, val, chosen))
    raise RuntimeError("colex search found no decision reaching the optimum; "
                       "the value search and the tie search disagree")


def _dp_search(c, p, budget, active):
    """Colex-first optimal decision from the table ``F[r, w]``, the best
    value of the first ``r`` active items within capacity ``w``."""
    cap = int(np.floor(budget))
    k = len(active)
    F = np.empty((k + 1, cap + 1))
    F[0] = 0.0
    for r, i in enumerate(active):
        w = int(p[i])
        F[r + 1] = F[r]
        if w <= cap:
            np.maximum(F[r + 1, w:], F[r, :cap + 1 - w] + c[i], out=F[r + 1, w:])
    best = F[k, cap]
    need = best - tie_tol(best)
    x = np.zeros(len(c))
    # from the highest item down, leave an item out whenever the rest still reach the target
    for r in range(k, 0, -1):
        if F[r - 1, cap] >= need:
            continue
        i = active[r - 1]
        x[i] = 1.0
        cap -= int(p[i])
        need -= c[i]
    return x
