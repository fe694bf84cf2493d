"""Euclidean projections onto the convex sets objectives are drawn from."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class FeasibleObjectiveSet:
    """Base class; subclasses know their dimension, diameter and projection."""

    dim: int

    def project(self, v) -> np.ndarray:
        raise NotImplementedError

    def diameter_l2(self) -> float:
        raise NotImplementedError

    def contains(self, c, tol: float = 1e-9) -> bool:
        raise NotImplementedError

    def _check(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float).ravel()
        if v.shape[0] != self.dim:
            raise ValueError(f"expected a vector of length {self.dim}, got {v.shape[0]}")
        return v


@dataclass(frozen=True)
class UnitSimplex(FeasibleObjectiveSet):
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("simplex dimension must be positive")

    def project(self, v):
        return project_simplex(self._check(v))

    def diameter_l2(self):
        return math.sqrt(2.0) if self.dim >= 2 else 0.0

    def contains(self, c, tol=1e-9):
        c = self._check(c)
        return bool(c.min() >= -tol and abs(c.sum() - 1.0) <= tol)


@dataclass(frozen=True, eq=False)
class SignedSimplex(FeasibleObjectiveSet):
    """``{c : signs * c in the unit simplex}``.

    The unit simplex for objectives whose coordinates have known signs,
    such as revenues (``+1``) next to costs written as negative weights
    (``-1``).  Projection flips, projects onto the simplex and flips back.
    """

    signs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.signs, dtype=float).ravel()
        if s.size < 1 or not np.all(np.abs(s) == 1):
            raise ValueError("signs must be a non-empty vector of +1 and -1")
        object.__setattr__(self, "signs", s)

    @property
    def dim(self):
        return self.signs.shape[0]

    def project(self, v):
        return self.signs * project_simplex(self.signs * self._check(v))

    def diameter_l2(self):
        return math.sqrt(2.0) if self.dim >= 2 else 0.0

    def contains(self, c, tol=1e-9):
        c = self.signs * self._check(c)
        return bool(c.min() >= -tol and abs(c.sum() - 1.0) <= tol)


@dataclass(frozen=True, eq=False)
class Box(FeasibleObjectiveSet):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).ravel()
        hi = np.asarray(self.hi, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("lo and hi differ in length")
        if np.any(lo > hi):
            raise ValueError("box is empty (lo > hi)")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.shape[0]

    def project(self, v):
        return np.clip(self._check(v), self.lo, self.hi)

    def diameter_l2(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, c, tol=1e-9):
        c = self._check(c)
        return bool(np.all(c >= self.lo - tol) and np.all(c <= self.hi + tol))


@dataclass(frozen=True, eq=False)
class L2Ball(FeasibleObjectiveSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())

    @property
    def dim(self):
        return self.center.shape[0]

    def project(self, v):
        v = self._check(v)
        d = v - self.center
        dist = np.linalg.norm(d)
        if dist <= self.radius:
            return v.copy()
        return self.center + self.radius * d / dist

    def diameter_l2(self):
        return 2.0 * self.radius

    def contains(self, c, tol=1e-9):
        return bool(np.linalg.norm(self._check(c) - self.center) <= self.radius + tol)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto {c >= 0, sum(c) = 1} by sorting.

    The result is ``max(v - lam, 0)`` with the threshold ``lam`` picked from
    the sorted coordinates so that the entries sum to one.
    """
    v = np.asarray(v, dtype=float).ravel()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    lam = css[rho] / (rho + 1)
    return np.maximum(v - lam, 0.0)


def simplex_threshold(v) -> float:
    """Threshold ``lam`` of the simplex projection of ``v``."""
    v = np.asarray(v, dtype=float).ravel()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return float(css[rho] / (rho + 1))


def project(v, F: FeasibleObjectiveSet) -> np.ndarray:
    return F.project(v)


def diameter_l2(F: FeasibleObjectiveSet) -> float:
    return F.diameter_l2()
