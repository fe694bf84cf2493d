"""Exhaustive oracle used as the reference in equivalence tests."""

from __future__ import annotations

import numpy as np

from .base import answer, colex_key, tie_tol

ENUM_LIMIT = 2 ** 20


def brute_force_oracle(c, inst, limit: int = ENUM_LIMIT):
    """Best decision of ``inst`` by full enumeration.

    ``inst`` must provide ``enumerate_decisions()`` and ``sense``.  Ties
    are resolved with :func:`colex_key`, as in the specialized oracles.
    """
    c = np.asarray(c, dtype=float).ravel()
    X = np.asarray(inst.enumerate_decisions(), dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("instance has no feasible decision")
    if X.shape[0] > limit:
        raise ValueError(f"{X.shape[0]} decisions exceed the enumeration limit {limit}")
    if X.shape[1] != c.shape[0]:
        raise ValueError(f"objective has length {c.shape[0]}, decisions have {X.shape[1]}")
    vals = inst.sense.sign * (X @ c)
    top = vals.max()
    tied = X[vals >= top - tie_tol(top)]
    return answer(c, min(tied, key=colex_key))
