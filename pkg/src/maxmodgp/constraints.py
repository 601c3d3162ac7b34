"""Linear systems encoding interpolation and shape constraints on knot values.

Inequalities are always stored as ``M @ alpha <= v`` with a sparse `M`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import sparse

from .basis import CoefficientGrid, Subdivision, design_matrix
from .errors import ParameterError

FEASIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class Boundedness:
    lower: float = -np.inf
    upper: float = np.inf

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ParameterError(f"boundedness needs lower < upper, got {self.lower}, {self.upper}")


@dataclass(frozen=True)
class Monotonicity:
    """Non-decreasing in every variable, or only in `variables` when given."""

    variables: tuple[int, ...] | None = None


@dataclass(frozen=True)
class Convexity:
    """Convex along each variable (or only along `variables` when given)."""

    variables: tuple[int, ...] | None = None


ConstraintKind = Union[Boundedness, Monotonicity, Convexity]


def _kinds(kind) -> tuple:
    if kind is None:
        return ()
    if isinstance(kind, (Boundedness, Monotonicity, Convexity)):
        return (kind,)
    if isinstance(kind, (list, tuple)):
        for k in kind:
            if not isinstance(k, (Boundedness, Monotonicity, Convexity)):
                raise ParameterError(f"unknown constraint kind {k!r}")
        return tuple(kind)
    raise ParameterError(f"unknown constraint kind {kind!r}")


def _axes(sub: Subdivision, variables) -> list[int]:
    if variables is None:
        return list(range(sub.d))
    return [sub.active.index(v) for v in variables if v in sub.active]


def _monotonicity_rows(sub: Subdivision, variables):
    idx = np.arange(sub.size).reshape(sub.shape)
    rows, cols, vals = [], [], []
    count = 0
    for ax in _axes(sub, variables):
        m = sub.shape[ax]
        lo = idx.take(range(0, m - 1), axis=ax).ravel()
        hi = idx.take(range(1, m), axis=ax).ravel()
        r = count + np.arange(lo.size)
        rows += [r, r]
        cols += [lo, hi]
        vals += [np.ones(lo.size), -np.ones(lo.size)]
        count += lo.size
    return rows, cols, vals, count


def _convexity_rows(sub: Subdivision, variables):
    idx = np.arange(sub.size).reshape(sub.shape)
    rows, cols, vals = [], [], []
    count = 0
    for ax in _axes(sub, variables):
        m = sub.shape[ax]
        if m < 3:
            continue  # linear along this axis
        t = sub.per_dim[ax].array
        a = idx.take(range(0, m - 2), axis=ax)
        b = idx.take(range(1, m - 1), axis=ax)
        c = idx.take(range(2, m), axis=ax)
        h1 = t[1:m - 1] - t[0:m - 2]
        h2 = t[2:m] - t[1:m - 1]
        scale = 0.5 * (h1 + h2)
        shape = [1] * sub.d
        shape[ax] = m - 2
        bc = lambda w: np.broadcast_to(w.reshape(shape), a.shape).ravel()
        r = count + np.arange(a.size)
        rows += [r, r, r]
        cols += [a.ravel(), b.ravel(), c.ravel()]
        vals += [bc(-scale / h1), bc(scale * (1 / h1 + 1 / h2)), bc(-scale / h2)]
        count += a.size
    return rows, cols, vals, count


def build_inequality(kind, sub: Subdivision):
    """Sparse ``(M, v)`` with ``M @ alpha <= v`` iff the spline satisfies `kind`.

    `kind` may be a single constraint kind or a sequence, whose rows are
    stacked in order.  Convexity rows use divided differences of the knot
    values, so they remain exact for non-uniform knots (for uniform knots a
    row is ``-a_{l-2} + 2 a_{l-1} - a_l <= 0``).
    """
    blocks = []
    rhs = []
    for k in _kinds(kind):
        if isinstance(k, Boundedness):
            eye = sparse.identity(sub.size, format="csr")
            if np.isfinite(k.lower):
                blocks.append(-eye)
                rhs.append(np.full(sub.size, -float(k.lower)))
            if np.isfinite(k.upper):
                blocks.append(eye)
                rhs.append(np.full(sub.size, float(k.upper)))
            continue
        if isinstance(k, Monotonicity):
            rows, cols, vals, count = _monotonicity_rows(sub, k.variables)
        else:
            rows, cols, vals, count = _convexity_rows(sub, k.variables)
        if count:
            blocks.append(sparse.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(count, sub.size),
            ))
            rhs.append(np.zeros(count))
    if not blocks:
        return sparse.csr_matrix((0, sub.size)), np.zeros(0)
    return sparse.vstack(blocks, format="csr"), np.concatenate(rhs)


def inequality_row_count(kind, sub: Subdivision) -> int:
    """Closed-form number of rows produced by `build_inequality`."""
    total = 0
    for k in _kinds(kind):
        if isinstance(k, Boundedness):
            total += sub.size * (int(np.isfinite(k.lower)) + int(np.isfinite(k.upper)))
            continue
        drop = 1 if isinstance(k, Monotonicity) else 2
        for ax in _axes(sub, k.variables):
            total += max(sub.shape[ax] - drop, 0) * (sub.size // sub.shape[ax])
    return total


def _interp_points(sub: Subdivision, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] == sub.ambient_dim:
        return sub.restrict(X)
    if X.shape[1] == sub.d:
        return X
    raise ParameterError(f"points have {X.shape[1]} columns; expected {sub.ambient_dim} or {sub.d}")


def build_interpolation(sub: Subdivision, X, y):
    """``(Phi, y)`` with ``Phi[i, l] = phi_l(x_i)`` on the active coordinates."""
    y = np.asarray(y, dtype=float).ravel()
    Z = _interp_points(sub, X) if np.size(X) else np.zeros((0, sub.d))
    if Z.shape[0] != y.size:
        raise ParameterError(f"{Z.shape[0]} points but {y.size} observations")
    if Z.shape[0] == 0:
        return np.zeros((0, sub.size)), y
    return design_matrix(sub, Z), y


@dataclass(frozen=True)
class ConstraintSystem:
    """Inequalities ``M alpha <= v`` and interpolation equations ``Phi alpha = y``."""

    M: sparse.csr_matrix
    v: np.ndarray
    Phi: np.ndarray
    y: np.ndarray
    kinds: tuple = ()

    def __post_init__(self):
        if self.M.shape[0] != self.v.size:
            raise ParameterError("M and v disagree on the number of inequalities")
        if self.Phi.shape[0] != self.y.size:
            raise ParameterError("Phi and y disagree on the number of observations")
        if self.M.shape[1] != self.Phi.shape[1]:
            raise ParameterError("M and Phi disagree on the grid size")

    @property
    def size(self) -> int:
        return self.Phi.shape[1]

    def violation(self, alpha) -> float:
        """Largest ``(M alpha - v)_b``, or -inf without inequalities."""
        if self.v.size == 0:
            return -np.inf
        return float(np.max(self.M @ np.asarray(alpha, dtype=float) - self.v))


def build_system(kind, sub: Subdivision, X, y) -> ConstraintSystem:
    M, v = build_inequality(kind, sub)
    Phi, y = build_interpolation(sub, X, y)
    return ConstraintSystem(M, v, Phi, y, _kinds(kind))


def check_feasible_grid(kind, sub: Subdivision, coeffs: CoefficientGrid,
                        tol: float = FEASIBILITY_TOL) -> bool:
    """True iff every inequality row holds for `coeffs` up to `tol`."""
    if tuple(coeffs.shape) != sub.shape:
        raise ParameterError(f"coefficients of shape {coeffs.shape} do not match grid {sub.shape}")
    M, v = build_inequality(kind, sub)
    if v.size == 0:
        return True
    return bool(np.all(M @ coeffs.values <= v + tol))
