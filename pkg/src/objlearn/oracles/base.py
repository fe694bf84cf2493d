"""Pieces shared by every oracle: answers, the tie rule, exceptions."""

from __future__ import annotations

import numpy as np

from ..core import OracleAnswer, Orientation

__all__ = ["OracleAnswer", "Orientation", "OracleBudgetExceeded", "colex_key",
           "tie_tol", "answer"]


class OracleBudgetExceeded(RuntimeError):
    """Exact search hit its node cap; no heuristic answer is returned."""


def colex_key(x):
    """Sort key of the global tie rule.

    Among optimal decisions the oracles return the one that is smallest
    when vectors are compared from the *last* coordinate backwards.  On
    0/1 vectors this is the decision minimizing ``sum(x_i * 2**i)``: it
    prefers leaving high-index items/arcs/edges unused, and picks the zero
    vector whenever that is optimal.
    """
    return tuple(np.asarray(x, dtype=float).ravel()[::-1].tolist())


def tie_tol(value: float) -> float:
    """Values within this distance of the optimum count as ties."""
    return 1e-9 * max(1.0, abs(value))


def answer(c, x) -> OracleAnswer:
    x = np.asarray(x, dtype=float)
    return OracleAnswer(x, float(np.asarray(c, dtype=float) @ x))
