"""Shared types, error accounting and the online learning loop."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Protocol

import numpy as np

ERR_TOL = 1e-9
DIAG_TOL = 1e-6
MATCH_TOL = 1e-9


class Orientation(enum.Enum):
    MAXIMIZE = "max"
    MINIMIZE = "min"

    @property
    def sign(self) -> float:
        return 1.0 if self is Orientation.MAXIMIZE else -1.0


class OracleSuboptimalityError(RuntimeError):
    """An error term came out negative beyond tolerance.

    Only possible when an oracle returned a non-optimal decision.
    """


class OracleInfeasibleError(RuntimeError):
    def __init__(self, round_index: int, cause: Exception):
        super().__init__(f"round {round_index}: {cause}")
        self.round_index = round_index
        self.cause = cause


@dataclass(frozen=True)
class OracleAnswer:
    decision: np.ndarray
    value: float


@dataclass
class Observation:
    """One round of data: the instance and what the expert did.

    ``optimal_decision`` is only set when the expert was deliberately
    made suboptimal; it keeps the exact optimum around for evaluation.
    """

    round: int
    params: Any
    expert_decision: np.ndarray
    optimal_decision: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Bounds:
    K: float
    n: int
    T: int
    L: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.K) and self.K >= 0):
            raise ValueError("K must be finite and non-negative")
        if not (math.isfinite(self.L) and self.L >= 0):
            raise ValueError("L must be finite and non-negative")

    def mwu_bound(self, T: Optional[int] = None) -> float:
        T = self.T if T is None else T
        return 2.0 * self.K * math.sqrt(math.log(self.n) / T)

    def ogd_bound(self, T: Optional[int] = None) -> float:
        T = self.T if T is None else T
        return 1.5 * self.L * self.K / math.sqrt(T)


@dataclass(frozen=True)
class StabilityParams:
    delta: float
    denominator_norm: float = float("nan")

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @classmethod
    def from_integer_weights(cls, d) -> "StabilityParams":
        d = np.asarray(d)
        norm = float(np.abs(d).sum())
        return cls(delta=1.0 / norm, denominator_norm=norm)


@dataclass(frozen=True)
class ErrorRecord:
    round: int
    objective_error: float
    solution_error: float
    total_error: float
    mismatch: bool


@dataclass
class RunLedger:
    records: list[ErrorRecord] = field(default_factory=list)
    played_objectives: list[np.ndarray] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def _column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def objective_errors(self) -> np.ndarray:
        return self._column("objective_error")

    @property
    def solution_errors(self) -> np.ndarray:
        return self._column("solution_error")

    @property
    def total_errors(self) -> np.ndarray:
        return self._column("total_error")

    @staticmethod
    def _prefix_mean(values: np.ndarray) -> np.ndarray:
        return np.cumsum(values) / np.arange(1, len(values) + 1)

    @property
    def avg_objective(self) -> np.ndarray:
        return self._prefix_mean(self.objective_errors)

    @property
    def avg_solution(self) -> np.ndarray:
        return self._prefix_mean(self.solution_errors)

    @property
    def avg_total(self) -> np.ndarray:
        return self._prefix_mean(self.total_errors)

    @property
    def mismatch_count(self) -> int:
        return sum(1 for r in self.records if r.mismatch)

    @property
    def objective_path_length(self) -> float:
        if len(self.played_objectives) < 2:
            return 0.0
        c = np.asarray(self.played_objectives)
        return float(np.linalg.norm(np.diff(c, axis=0), axis=1).sum())


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float).ravel()


def compute_errors(c_t, c_true, learner_decision, expert_decision,
                   sense: Orientation = Orientation.MAXIMIZE, round: int = 1,
                   check_solution_sign: bool = True) -> ErrorRecord:
    """Objective, solution and total error of one round.

    For maximization the objective error is ``c_t.(xbar - x)`` and the
    solution error ``c_true.(x - xbar)``; minimization flips both
    differences so that both terms stay non-negative for exact oracles.
    ``c_true=None`` records the solution and total errors as NaN.

    ``check_solution_sign`` is switched off for suboptimal experts, where
    the learner may legitimately beat the observed decision.
    """
    c_t, xbar, x = _vec(c_t), _vec(learner_decision), _vec(expert_decision)
    if not (len(c_t) == len(xbar) == len(x)):
        raise ValueError(
            f"dimension mismatch: c_t={len(c_t)}, xbar={len(xbar)}, x={len(x)}")
    diff = sense.sign * (xbar - x)
    obj = float(c_t @ diff)
    if c_true is None:
        sol = float("nan")
    else:
        c_true = _vec(c_true)
        if len(c_true) != len(c_t):
            raise ValueError(
                f"dimension mismatch: c_true={len(c_true)}, c_t={len(c_t)}")
        sol = float(-(c_true @ diff))
    if obj < -DIAG_TOL:
        raise OracleSuboptimalityError(
            f"round {round}: objective error {obj:.3g} < 0; learner decision "
            "is not optimal for c_t")
    if check_solution_sign and sol < -DIAG_TOL:
        raise OracleSuboptimalityError(
            f"round {round}: solution error {sol:.3g} < 0; expert decision "
            "is not optimal for c_true")
    mismatch = bool(np.any(np.abs(xbar - x) > MATCH_TOL))
    return ErrorRecord(round, obj, sol, obj + sol, mismatch)


class Learner(Protocol):
    def current_objective(self) -> np.ndarray: ...

    def observe(self, learner_decision, expert_decision, round: int,
                params: Any = None) -> None: ...


class LinearOptOracle(Protocol):
    sense: Orientation

    def __call__(self, c, params) -> OracleAnswer: ...


def _true_objective_for(c_true, t_index: int):
    if c_true is None:
        return None
    if callable(c_true):
        return c_true(t_index)
    arr = np.asarray(c_true, dtype=float)
    if arr.ndim == 2:
        return arr[t_index]
    return arr


def run_online(learner: Learner, oracle: LinearOptOracle,
               stream: Iterable[Observation], c_true=None,
               strict: bool = True) -> RunLedger:
    """Play the learner against a stream of expert observations.

    ``c_true`` may be a single vector, a (T, n) array with one row per
    round, or a callable taking the zero-based round index.  With
    ``strict=False`` negative solution errors are tolerated (used for
    deliberately suboptimal experts).
    """
    ledger = RunLedger()
    for i, obs in enumerate(stream):
        c_t = np.array(learner.current_objective(), dtype=float)
        try:
            answer = oracle(c_t, obs.params)
        except (ValueError, RuntimeError) as exc:
            raise OracleInfeasibleError(obs.round, exc) from exc
        x = _vec(obs.expert_decision)
        if answer.decision.shape != x.shape:
            raise ValueError(
                f"round {obs.round}: learner dimension {answer.decision.shape} "
                f"does not match expert decision {x.shape}")
        ct = _true_objective_for(c_true, i)
        rec = compute_errors(c_t, ct, answer.decision, x, oracle.sense,
                             round=obs.round, check_solution_sign=strict)
        ledger.records.append(rec)
        ledger.played_objectives.append(c_t)
        learner.observe(answer.decision, x, obs.round, obs.params)
    return ledger


def markov_tail_fraction(ledger: RunLedger, bounds: Bounds, epsilon: float):
    """Fraction of rounds whose solution error exceeds the average-error
    bound by ``epsilon``, together with the Markov-inequality cap on it."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    T = len(ledger)
    sol = ledger.solution_errors
    if np.isnan(sol).any():
        raise ValueError("ledger has no solution errors (c_true was not given)")
    threshold = bounds.mwu_bound(T) + epsilon
    observed = float(np.count_nonzero(sol >= threshold)) / T
    return observed, 1.0 - epsilon / threshold


def stability_bounds(bounds: Bounds, stab: StabilityParams, T=None):
    """Mismatch-count caps for a Delta-stable family.

    Returns ``(proof_form, statement_form)``: the value the proof chain
    implies, ``(2K/delta) sqrt(T ln n)``, and the printed statement
    ``2K sqrt(T ln n / delta)``.  The two differ whenever delta != 1.
    """
    T = bounds.T if T is None else T
    root = math.sqrt(T * math.log(bounds.n))
    proof_form = 2.0 * bounds.K / stab.delta * root
    statement_form = 2.0 * bounds.K * math.sqrt(T * math.log(bounds.n) / stab.delta)
    return proof_form, statement_form


def stability_bound_check(ledger: RunLedger, bounds: Bounds,
                          stab: StabilityParams) -> bool:
    proof_form, _ = stability_bounds(bounds, stab)
    return ledger.mismatch_count <= proof_form
