"""Objective-learning algorithms: multiplicative weights, online gradient
descent, and an LP-based follow-the-leader heuristic.

Every learner exposes ``current_objective()`` and
``observe(learner_decision, expert_decision, round, params=None)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import highspy
import numpy as np

from .core import MATCH_TOL, OracleAnswer, Orientation
from .lp import DenseLp, LpStatus, PolyhedralObjectiveSet, build_ftl_lp, solve_lp
from .projections import FeasibleObjectiveSet

ETA_CAP = 0.4999


def _diff(learner_decision, expert_decision):
    xbar = np.asarray(learner_decision, dtype=float).ravel()
    x = np.asarray(expert_decision, dtype=float).ravel()
    if xbar.shape != x.shape:
        raise ValueError(f"decision shapes differ: {xbar.shape} vs {x.shape}")
    return xbar - x


class MwuLearner:
    """Multiplicative weights over the unit simplex.

    Parameters
    ----------
    n : int
        Dimension of the objective, at least 2.
    T : int
        Planned number of rounds; fixes ``eta = sqrt(ln n / T)``.
    sense : Orientation
        Orientation of the underlying problem.

    Notes
    -----
    Rates of 1/2 or more could drive a weight to zero or below, so the
    rate is clamped to 0.4999 (with a warning) for very short horizons.
    """

    def __init__(self, n: int, T: int, sense: Orientation = Orientation.MAXIMIZE):
        if n < 2:
            raise ValueError("MWU needs n >= 2 (ln 1 = 0 gives a zero rate)")
        if T < 1:
            raise ValueError("T must be at least 1")
        self.n, self.T, self.sense = n, T, sense
        eta = math.sqrt(math.log(n) / T)
        if eta >= 0.5:
            warnings.warn(f"MWU rate sqrt(ln {n}/{T}) = {eta:.4f} >= 1/2; clamped to {ETA_CAP}",
                          RuntimeWarning, stacklevel=2)
            eta = ETA_CAP
        self.eta = eta
        self.weights = np.ones(n)

    def current_objective(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    def observe(self, learner_decision, expert_decision, round: int = 0, params=None):
        d = _diff(learner_decision, expert_decision)
        scale = np.abs(d).max()
        if scale <= MATCH_TOL:
            return
        y = self.sense.sign * d / scale
        self.weights = self.weights - self.eta * self.weights * y


class OgdLearner:
    """Projected online gradient descent over a convex set ``F``.

    The step size is ``D / (G sqrt(T))`` for the fixed schedule and
    ``D / (G sqrt(t))`` for the dynamic one, with ``D`` the diameter of
    ``F``.  ``G`` defaults to the decision-diameter bound ``K``, the
    pairing under which the ``1.5 L K / sqrt(T)`` bound is stated; pass
    ``G=K**2`` (a bound on the squared gradient norm) for the smaller
    steps of the knapsack benchmark.
    """

    def __init__(self, F: FeasibleObjectiveSet, K: float, T: Optional[int] = None,
                 schedule: str = "fixed", sense: Orientation = Orientation.MAXIMIZE,
                 c1=None, G: Optional[float] = None):
        if schedule not in ("fixed", "dynamic"):
            raise ValueError(f"unknown schedule {schedule!r}; use 'fixed' or 'dynamic'")
        if schedule == "fixed" and T is None:
            raise ValueError("the fixed schedule needs the horizon T")
        if not K > 0:
            raise ValueError("K must be positive")
        self.F, self.K, self.T, self.schedule, self.sense = F, float(K), T, schedule, sense
        self.D = F.diameter_l2()
        self.G = float(K if G is None else G)
        if not self.G > 0:
            raise ValueError("G must be positive")
        start = np.zeros(F.dim) if c1 is None else c1
        self.current = F.project(start)

    def eta(self, t: int) -> float:
        horizon = self.T if self.schedule == "fixed" else t
        return self.D / (self.G * math.sqrt(horizon))

    def current_objective(self) -> np.ndarray:
        return self.current.copy()

    def observe(self, learner_decision, expert_decision, round: int = 1, params=None):
        if round < 1:
            raise ValueError("rounds are numbered from 1")
        g = self.sense.sign * _diff(learner_decision, expert_decision)
        if not np.any(g):
            return
        self.current = self.F.project(self.current - self.eta(round) * g)


class FtlLearner:
    """Follow the leader on the summed duality gap.

    After each round the learner plays an objective ``c`` in ``F`` that
    minimizes ``sum_tau (max_{v in X_tau} c.v - c.x_tau)`` over all
    observations so far; the first objective is the uniform vector unless
    ``first_objective`` is given.

    Parameters
    ----------
    F : PolyhedralObjectiveSet
    oracle : callable, optional
        ``oracle(c, instance)`` maximizing ``c.x`` over the instance.  Used
        by the default ``method="cuts"``; without it each instance's
        ``polyhedron()`` is solved as an LP.
    method : {"cuts", "full-highs", "full-simplex"}
        ``"cuts"`` keeps one warm-started HiGHS model of the master over
        ``(c, theta_tau)`` and adds the cuts ``theta_tau >= c.v`` the
        oracle finds until none is violated.  ``"full-*"`` rebuilds the
        dual-block master of :func:`build_ftl_lp` every round; it gives the
        same optimal value but is far slower beyond a few dozen rounds.

    Notes
    -----
    The master problem is degenerate (often every ``c`` consistent with
    the data is optimal), so the objective played depends on the solver.
    When the current ``c`` leaves no duality gap on the newest
    observation it stays optimal and is kept.
    """

    def __init__(self, F: PolyhedralObjectiveSet, sense: Orientation = Orientation.MAXIMIZE,
                 first_objective=None, oracle=None, method: str = "cuts",
                 cut_tol: float = 1e-7, gap_tol: float = 1e-9):
        if sense is not Orientation.MAXIMIZE:
            raise ValueError("the master LP is written for maximization problems")
        if method not in ("cuts", "full-highs", "full-simplex"):
            raise ValueError(f"unknown method {method!r}")
        self.F, self.sense, self.method = F, sense, method
        self.oracle = oracle or _polyhedron_oracle
        self.cut_tol, self.gap_tol = cut_tol, gap_tol
        n = F.dim
        self.first_objective = (np.full(n, 1.0 / n) if first_objective is None
                                else np.asarray(first_objective, dtype=float))
        self.history: list = []
        self.current = self.first_objective.copy()
        self.master_value = 0.0
        self.solves = 0
        self._model = _CutMaster(F) if method == "cuts" else None

    def current_objective(self) -> np.ndarray:
        return self.current.copy()

    def observe(self, learner_decision, expert_decision, round: int = 0, params=None):
        if params is None:
            raise ValueError("FtlLearner needs the round's instance")
        x = np.asarray(expert_decision, dtype=float).ravel()
        xbar = np.asarray(learner_decision, dtype=float).ravel()
        self.history.append((params, x))
        if self._model is not None:
            self._model.add_round(x, xbar)
        gap = float(self.current @ (xbar - x))
        if len(self.history) > 1 and gap <= self.gap_tol * max(1.0, abs(self.current @ x)):
            self.master_value += max(gap, 0.0)
            return
        self.resolve()

    def resolve(self):
        self.solves += 1
        if self._model is not None:
            self.current, self.master_value = self._model.solve(self.history, self.oracle,
                                                                self.cut_tol)
            return
        lp = build_ftl_lp(self.history, self.F, sparse=self.method == "full-highs")
        sol = solve_lp(lp, method="highs" if self.method == "full-highs" else "simplex")
        if sol.status is LpStatus.UNBOUNDED:
            raise RuntimeError("master LP unbounded; is every feasible region bounded?")
        if not sol.optimal:
            raise RuntimeError(f"master LP {sol.status.value}; F or an instance is empty")
        self.current = np.asarray(sol.point[:self.F.dim], dtype=float)
        self.master_value = sol.value


def _polyhedron_oracle(c, inst):
    A, b = inst.polyhedron()
    sol = solve_lp(DenseLp(-np.asarray(c, dtype=float), ub_lhs=A, ub_rhs=b,
                           var_lower=np.full(len(c), -np.inf)), method="highs")
    if not sol.optimal:
        raise RuntimeError(f"instance LP {sol.status.value}")
    return OracleAnswer(sol.point, -sol.value)


class _CutMaster:
    """Cut-generation master for FTL, held in one warm-started HiGHS model.

    The primal master is ``min sum theta_tau - c.sum(x_tau)`` subject to
    ``theta_tau >= c.v`` for every cut ``v`` of round ``tau`` and ``c`` in
    ``F``.  HiGHS holds its LP dual instead: one row per coordinate of ``c``
    and per round, one column per cut.  The basis then stays at ``n + T``
    rows however many cuts accumulate, and ``(c, theta)`` are read off the
    row duals.
    """

    def __init__(self, F: PolyhedralObjectiveSet):
        self.n = n = F.dim
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        # every solve is warm-started from the previous basis; presolve would discard it
        h.setOptionValue("presolve", "off")
        h.changeObjectiveSense(highspy.ObjSense.kMaximize)
        empty_i, empty_v = np.array([], dtype=np.int32), np.array([])
        for _ in range(n):
            h.addRow(0.0, 0.0, 0, empty_i, empty_v)
        inf = highspy.kHighsInf
        # B c <= d gives multipliers >= 0, B_eq c = d_eq free ones
        for rows, rhs, sign, lower in ((F.B, F.d, -1.0, 0.0), (F.B_eq, F.d_eq, 1.0, -inf)):
            for r, d in zip(rows, rhs):
                nz = np.nonzero(r)[0].astype(np.int32)
                h.addCol(float(sign * d), lower, inf, len(nz), nz, sign * r[nz])
        self.h = h
        self.X = np.zeros(n)
        self.rounds = 0
        self.cuts = 0

    def add_cut(self, tau, v):
        nz = np.nonzero(v)[0]
        idx = np.concatenate([nz, [self.n + tau]]).astype(np.int32)
        val = np.concatenate([-v[nz], [1.0]])
        self.h.addCol(0.0, 0.0, highspy.kHighsInf, len(idx), idx, val)
        self.cuts += 1

    def add_round(self, x, xbar):
        h, tau = self.h, self.rounds
        self.X += x
        for j in np.nonzero(x)[0]:
            h.changeRowBounds(int(j), float(-self.X[j]), float(-self.X[j]))
        h.addRow(1.0, 1.0, 0, np.array([], dtype=np.int32), np.array([]))
        self.rounds += 1
        # x keeps theta bounded below; xbar is the oracle's answer already in hand
        self.add_cut(tau, x)
        if np.any(xbar != x):
            self.add_cut(tau, xbar)

    def solve(self, history, oracle, tol):
        n = self.n
        while True:
            self.h.run()
            status = self.h.getModelStatus()
            if status != highspy.HighsModelStatus.kOptimal:
                raise RuntimeError(f"master LP: {self.h.modelStatusToString(status)}")
            y = np.array(self.h.getSolution().row_dual)
            c, theta = y[:n], y[n:]
            added = 0
            for tau, (inst, _) in enumerate(history):
                v = np.asarray(oracle(c, inst).decision, dtype=float)
                if c @ v > theta[tau] + tol * max(1.0, abs(theta[tau])):
                    self.add_cut(tau, v)
                    added += 1
            if not added:
                return c, float(theta.sum() - c @ self.X)


@dataclass
class FeatureMap:
    """Map from decisions to a feature space of dimension ``dim``.

    ``lipschitz_bound`` bounds how much the map can stretch distances and
    enters the error bounds in place of the raw decision diameter.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    dim: int
    lipschitz_bound: float = 1.0

    def __call__(self, x) -> np.ndarray:
        out = np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float).ravel()
        if out.shape[0] != self.dim:
            raise ValueError(f"feature map returned length {out.shape[0]}, expected {self.dim}")
        return out

    @classmethod
    def identity(cls, n: int) -> "FeatureMap":
        return cls(lambda x: x, n, 1.0)

    @classmethod
    def parameterized(cls, q, n: int) -> "FeatureMap":
        """``x -> vec(q x^T)`` for decisions of length ``n``: learns a matrix
        ``M`` whose objective for parameter ``q`` is ``q^T M x``."""
        q = np.asarray(q, dtype=float).ravel()
        return cls(lambda x: np.outer(q, x).ravel(), q.size * n, float(np.linalg.norm(q)))


class FeatureMapLearner:
    """Runs ``inner`` on features ``f(x)`` instead of raw decisions.

    ``current_objective`` is the inner learner's vector over feature
    space; a matching oracle optimizes ``c . f(x)``.
    """

    def __init__(self, inner, f: FeatureMap):
        self.inner, self.f = inner, f
        inner_dim = len(inner.current_objective())
        if f.dim != inner_dim:
            raise ValueError(f"feature dimension {f.dim} != learner dimension {inner_dim}")
        self.sense = getattr(inner, "sense", Orientation.MAXIMIZE)

    def current_objective(self) -> np.ndarray:
        return self.inner.current_objective()

    def observe(self, learner_decision, expert_decision, round: int = 1, params=None):
        fx_bar, fx = self.f(learner_decision), self.f(expert_decision)
        self.inner.observe(fx_bar, fx, round, params)
