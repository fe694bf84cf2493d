"""Small linear programs: a dense two-phase simplex and the master LP of
the follow-the-leader learner.

``solve_lp`` runs a textbook tableau simplex with Bland's rule.  It is
exact enough and fully deterministic for the small problems it is meant
for.  Master problems at experiment scale have tens of thousands of
columns; for those ``method="highs"`` hands the (sparse) problem to
SciPy's HiGHS interface instead.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
ZERO_TOL = 1e-13
TIE_PIVOT_FRACTION = 1e-2
REFRESH_EVERY = 50


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpNumericalError(RuntimeError):
    """Raised when the simplex cannot make a numerically safe pivot."""


@dataclass
class DenseLp:
    """``min objective.x`` s.t. ``eq_lhs x = eq_rhs``, ``ub_lhs x <= ub_rhs``
    and ``var_lower <= x <= var_upper`` (infinite bounds allowed).

    The constraint matrices may be ``scipy.sparse`` matrices; the dense
    simplex converts them, HiGHS uses them as they are.
    """

    objective: np.ndarray
    eq_lhs: object = None
    eq_rhs: Optional[np.ndarray] = None
    ub_lhs: object = None
    ub_rhs: Optional[np.ndarray] = None
    var_lower: Optional[np.ndarray] = None
    var_upper: Optional[np.ndarray] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        n = self.objective.shape[0]
        if n < 1:
            raise ValueError("an LP needs at least one variable")
        self.eq_lhs, self.eq_rhs = _rows(self.eq_lhs, self.eq_rhs, n, "equality")
        self.ub_lhs, self.ub_rhs = _rows(self.ub_lhs, self.ub_rhs, n, "inequality")
        self.var_lower = (np.zeros(n) if self.var_lower is None
                          else np.asarray(self.var_lower, dtype=float).ravel())
        self.var_upper = (np.full(n, np.inf) if self.var_upper is None
                          else np.asarray(self.var_upper, dtype=float).ravel())
        if self.var_lower.shape != (n,) or self.var_upper.shape != (n,):
            raise ValueError("variable bounds must have one entry per variable")
        if np.isnan(self.var_lower).any() or np.isnan(self.var_upper).any():
            raise ValueError("variable bounds must not be NaN")

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def n_eq(self) -> int:
        return self.eq_lhs.shape[0]

    @property
    def n_ub(self) -> int:
        return self.ub_lhs.shape[0]

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        viol = [0.0]
        if self.n_eq:
            viol.append(np.abs(self.eq_lhs @ x - self.eq_rhs).max())
        if self.n_ub:
            viol.append((self.ub_lhs @ x - self.ub_rhs).max())
        viol.append((self.var_lower - x).max())
        viol.append((x - self.var_upper).max())
        return float(max(viol))


def _rows(lhs, rhs, n, what):
    if lhs is None:
        return np.zeros((0, n)), np.zeros(0)
    if sp.issparse(lhs):
        lhs = sp.csr_matrix(lhs, dtype=float)
    else:
        lhs = np.atleast_2d(np.asarray(lhs, dtype=float))
        if lhs.size == 0:
            lhs = lhs.reshape(0, n)
    rhs = np.asarray(rhs, dtype=float).ravel()
    if lhs.shape[1] != n or lhs.shape[0] != rhs.shape[0]:
        raise ValueError(f"{what} block has shape {lhs.shape} but rhs {rhs.shape}, n={n}")
    return lhs, rhs


@dataclass
class LpSolution:
    status: LpStatus
    point: Optional[np.ndarray] = None
    value: float = float("nan")
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def solve_lp(lp: DenseLp, method: str = "simplex") -> LpSolution:
    if method == "simplex":
        return _solve_dense(lp)
    if method == "highs":
        return _solve_highs(lp)
    raise ValueError(f"unknown LP method {method!r}")


# -- dense tableau simplex ---------------------------------------------------

def _standard_form(lp: DenseLp):
    """Rewrite as ``min c.z, A z = b, z >= 0`` and return the map back.

    Each original variable becomes ``shift + sum(coef * z_k)``.
    """
    n = lp.n_vars
    eq = lp.eq_lhs.toarray() if sp.issparse(lp.eq_lhs) else lp.eq_lhs
    ub = lp.ub_lhs.toarray() if sp.issparse(lp.ub_lhs) else lp.ub_lhs
    cols = []          # (original var, coefficient) per z column
    shift = np.zeros(n)
    extra_ub = []      # upper bounds that become rows: (z column, bound)
    for j in range(n):
        lo, hi = lp.var_lower[j], lp.var_upper[j]
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_ub.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nz = len(cols)
    M = np.zeros((n, nz))
    for k, (j, coef) in enumerate(cols):
        M[j, k] = coef
    c = lp.objective @ M
    const = float(lp.objective @ shift)
    A_eq = eq @ M
    b_eq = lp.eq_rhs - eq @ shift
    A_ub = ub @ M
    b_ub = lp.ub_rhs - ub @ shift
    if extra_ub:
        rows = np.zeros((len(extra_ub), nz))
        for i, (k, bound) in enumerate(extra_ub):
            rows[i, k] = 1.0
        A_ub = np.vstack([A_ub, rows])
        b_ub = np.concatenate([b_ub, [b for _, b in extra_ub]])
    m_eq, m_ub = A_eq.shape[0], A_ub.shape[0]
    # slacks for the inequality rows
    A = np.zeros((m_eq + m_ub, nz + m_ub))
    A[:m_eq, :nz] = A_eq
    A[m_eq:, :nz] = A_ub
    A[m_eq:, nz:] = np.eye(m_ub)
    b = np.concatenate([b_eq, b_ub])
    c_full = np.concatenate([c, np.zeros(m_ub)])
    return A, b, c_full, const, M, shift


class _Tableau:
    def __init__(self, A, b, max_iter):
        m, n = A.shape
        neg = b < 0
        A = A.copy()
        b = b.copy()
        A[neg] *= -1
        b[neg] *= -1
        # equilibrate rows; the solution set is unchanged
        scale = np.abs(A).max(axis=1) if A.size else np.ones(m)
        scale[scale == 0] = 1.0
        A /= scale[:, None]
        b /= scale
        # columns: structural (n), artificial (m), rhs
        self.T = np.zeros((m + 1, n + m + 1))
        self.T[:m, :n] = A
        self.T[:m, n:n + m] = np.eye(m)
        self.T[:m, -1] = b
        self.basis = list(range(n, n + m))
        self.original = self.T[:m, :].copy()
        self.n = n
        self.m = m
        self.iterations = 0
        self.max_iter = max_iter

    def refresh(self):
        """Recompute the body from the original rows and the current basis."""
        if not self.basis:
            return
        B = self.original[:, self.basis]
        try:
            body = np.linalg.solve(B, self.original)
        except np.linalg.LinAlgError as exc:
            raise LpNumericalError(f"singular basis {self.basis}") from exc
        body[np.abs(body) < ZERO_TOL] = 0.0
        self.T[:-1] = body
        self.T[-1] = self.cost_row - self.cost_row[self.basis] @ body

    def set_objective(self, cost):
        """Load ``cost`` (length n + m) into the reduced-cost row."""
        self.cost_row = np.concatenate([cost, [0.0]])
        self.T[-1, :-1] = cost
        self.T[-1, -1] = 0.0
        for i, bvar in enumerate(self.basis):
            if self.T[-1, bvar] != 0.0:
                self.T[-1] -= self.T[-1, bvar] * self.T[i]

    def pivot(self, row, col):
        piv = self.T[row, col]
        if abs(piv) < PIVOT_TOL:
            raise LpNumericalError(
                f"pivot {piv:.3e} at row {row}, column {col} below tolerance; "
                f"basis={self.basis}, rhs={self.T[:-1, -1]}")
        self.T[row] /= piv
        colv = self.T[:, col].copy()
        colv[row] = 0.0
        self.T -= np.outer(colv, self.T[row])
        self.T[np.abs(self.T) < ZERO_TOL] = 0.0
        self.basis[row] = col
        self.iterations += 1

    def run(self, allowed):
        """Bland's rule on the columns flagged in ``allowed``."""
        while True:
            if self.iterations >= self.max_iter:
                raise LpNumericalError(
                    f"iteration limit {self.max_iter} reached; basis={self.basis}")
            red = self.T[-1, :-1]
            cand = np.nonzero(allowed & (red < -PIVOT_TOL))[0]
            if cand.size == 0:
                return LpStatus.OPTIMAL
            col = int(cand[0])
            colv = self.T[:-1, col]
            rows = np.nonzero(colv > PIVOT_TOL)[0]
            if rows.size == 0:
                return LpStatus.UNBOUNDED
            ratios = np.maximum(self.T[rows, -1], 0.0) / colv[rows]
            best = ratios.min()
            ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            # skip tiny pivots among tied rows; they wreck the basis condition
            ties = ties[colv[ties] >= TIE_PIVOT_FRACTION * colv[ties].max()]
            row = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(row, col)
            if self.iterations % REFRESH_EVERY == 0:
                self.refresh()


def _solve_dense(lp: DenseLp) -> LpSolution:
    A, b, c, const, M, shift = _standard_form(lp)
    m, n = A.shape
    tab = _Tableau(A, b, max_iter=50 * (m + n) + 1000)
    if m:
        phase1 = np.concatenate([np.zeros(n), np.ones(m)])
        tab.set_objective(phase1)
        if tab.run(np.ones(n + m, dtype=bool)) is not LpStatus.OPTIMAL:
            raise LpNumericalError("phase 1 reported an unbounded ray; tableau is corrupt")
        infeas = -tab.T[-1, -1]
        if infeas > FEAS_TOL * max(1.0, np.abs(b).max()):
            return LpSolution(LpStatus.INFEASIBLE, iterations=tab.iterations)
        # drive artificial variables out of the basis
        keep = []
        for i in range(m):
            if tab.basis[i] >= n:
                row = tab.T[i, :n]
                big = np.abs(row)
                if big.size and big.max() > PIVOT_TOL:
                    tab.pivot(i, int(np.argmax(big)))
                    keep.append(i)
            else:
                keep.append(i)
        if len(keep) < m:
            # redundant rows still carry an artificial basic variable at zero
            tab.T = np.vstack([tab.T[keep], tab.T[-1:]])
            tab.original = tab.original[keep]
            tab.basis = [tab.basis[i] for i in keep]
            tab.m = len(keep)
    full_cost = np.concatenate([c, np.zeros(m)])
    tab.set_objective(full_cost)
    allowed = np.zeros(n + m, dtype=bool)
    allowed[:n] = True
    status = tab.run(allowed)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, iterations=tab.iterations)
    z = np.zeros(n + m)
    for i, bvar in enumerate(tab.basis):
        z[bvar] = tab.T[i, -1]
    x = shift + M @ z[:M.shape[1]]
    return LpSolution(LpStatus.OPTIMAL, x, float(lp.objective @ x), tab.iterations)


def _solve_highs(lp: DenseLp) -> LpSolution:
    bounds = np.column_stack([
        np.where(np.isfinite(lp.var_lower), lp.var_lower, -np.inf),
        np.where(np.isfinite(lp.var_upper), lp.var_upper, np.inf),
    ])
    res = linprog(
        lp.objective,
        A_ub=lp.ub_lhs if lp.n_ub else None, b_ub=lp.ub_rhs if lp.n_ub else None,
        A_eq=lp.eq_lhs if lp.n_eq else None, b_eq=lp.eq_rhs if lp.n_eq else None,
        bounds=bounds, method="highs-ds",
    )
    if res.status == 0:
        return LpSolution(LpStatus.OPTIMAL, res.x, float(lp.objective @ res.x), res.nit)
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED)
    raise LpNumericalError(f"HiGHS failed: {res.message}")


# -- follow-the-leader master problem -------------------------------------------

@dataclass
class PolyhedralObjectiveSet:
    """``{c : B c <= d, B_eq c = d_eq}``."""

    B: np.ndarray
    d: np.ndarray
    B_eq: np.ndarray = field(default=None)
    d_eq: np.ndarray = field(default=None)

    def __post_init__(self):
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.d = np.asarray(self.d, dtype=float).ravel()
        n = self.B.shape[1]
        if self.B_eq is None:
            self.B_eq, self.d_eq = np.zeros((0, n)), np.zeros(0)
        else:
            self.B_eq = np.atleast_2d(np.asarray(self.B_eq, dtype=float))
            self.d_eq = np.asarray(self.d_eq, dtype=float).ravel()
        if self.d.shape[0] != self.B.shape[0] or self.d_eq.shape[0] != self.B_eq.shape[0]:
            raise ValueError("right-hand side length does not match the number of rows")
        if self.B_eq.shape[1] != n:
            raise ValueError("equality block has the wrong number of columns")

    @property
    def dim(self) -> int:
        return self.B.shape[1]

    @classmethod
    def simplex(cls, n: int) -> "PolyhedralObjectiveSet":
        return cls(-np.eye(n), np.zeros(n), np.ones((1, n)), np.ones(1))

    def contains(self, c, tol=1e-7) -> bool:
        c = np.asarray(c, dtype=float)
        ok = np.all(self.B @ c <= self.d + tol)
        if self.B_eq.shape[0]:
            ok = ok and np.all(np.abs(self.B_eq @ c - self.d_eq) <= tol)
        return bool(ok)


def build_ftl_lp(history: Sequence, F: PolyhedralObjectiveSet,
                 sparse: bool = False) -> DenseLp:
    """Master LP minimizing the summed duality gap of the observed decisions.

    ``history`` holds ``(instance, x)`` pairs whose instances expose
    ``polyhedron() -> (A, b)`` describing ``{x : A x <= b}``.  Variables are
    ``c`` followed by one non-negative dual block ``y_tau`` per observation.
    """
    if len(history) == 0:
        raise ValueError("empty history; the first-round objective is chosen freely")
    n = F.dim
    polys = []
    for inst, x in history:
        A, b = inst.polyhedron()
        A = np.asarray(A, dtype=float)
        if A.shape[1] != n:
            raise ValueError(f"instance has {A.shape[1]} columns, F has dimension {n}")
        polys.append((A, np.asarray(b, dtype=float), np.asarray(x, dtype=float)))
    sizes = [A.shape[0] for A, _, _ in polys]
    n_vars = n + sum(sizes)
    objective = np.concatenate([-sum(x for _, _, x in polys)] + [b for _, b, _ in polys])

    blocks = []
    offset = n
    for A, _, _ in polys:
        m = A.shape[0]
        left = -sp.identity(n, format="csr")
        mid = sp.csr_matrix(A.T)
        row = sp.hstack([left, sp.csr_matrix((n, offset - n)), mid,
                         sp.csr_matrix((n, n_vars - offset - m))], format="csr")
        blocks.append(row)
        offset += m
    if F.B_eq.shape[0]:
        blocks.append(sp.hstack([sp.csr_matrix(F.B_eq),
                                 sp.csr_matrix((F.B_eq.shape[0], n_vars - n))], format="csr"))
    eq_lhs = sp.vstack(blocks, format="csr")
    eq_rhs = np.concatenate([np.zeros(n * len(polys)), F.d_eq])
    ub_lhs = sp.hstack([sp.csr_matrix(F.B), sp.csr_matrix((F.B.shape[0], n_vars - n))],
                       format="csr")
    lower = np.concatenate([np.full(n, -np.inf), np.zeros(n_vars - n)])
    upper = np.full(n_vars, np.inf)
    if not sparse:
        eq_lhs, ub_lhs = eq_lhs.toarray(), ub_lhs.toarray()
    return DenseLp(objective, eq_lhs, eq_rhs, ub_lhs, F.d, lower, upper)
