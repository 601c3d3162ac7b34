"""L2 inner products of hat-basis splines in linear time.

The Gram matrix of a tensor hat basis on ``[0, 1]^d`` is the Kronecker
product of one tridiagonal matrix per axis, so ``beta' Psi beta`` is computed
by applying each factor along its own axis and never forming ``Psi``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import CoefficientGrid, Subdivision, Subdivision1D
from .errors import ParameterError


@dataclass(frozen=True)
class Tridiagonal:
    """Symmetric tridiagonal matrix given by its diagonal and off-diagonal."""

    diag: np.ndarray
    off: np.ndarray

    def toarray(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def apply(self, B: np.ndarray, axis: int) -> np.ndarray:
        """Multiply `B` by this matrix along `axis`."""
        Bm = np.moveaxis(B, axis, 0)
        shape = (-1,) + (1,) * (Bm.ndim - 1)
        out = self.diag.reshape(shape) * Bm
        off = self.off.reshape(shape)
        out[:-1] += off * Bm[1:]
        out[1:] += off * Bm[:-1]
        return np.moveaxis(out, 0, axis)


def gram_1d(sub1d: Subdivision1D) -> Tridiagonal:
    """Matrix of ``int_0^1 phi_l phi_l'`` for the hats of a 1-D subdivision."""
    t = sub1d.array
    gaps = np.diff(t)
    diag = np.empty(sub1d.m)
    diag[0] = gaps[0] / 3.0
    diag[-1] = gaps[-1] / 3.0
    diag[1:-1] = (t[2:] - t[:-2]) / 3.0
    return Tridiagonal(diag, gaps / 6.0)


@dataclass(frozen=True)
class GramOperator:
    factors: tuple[Tridiagonal, ...]

    @classmethod
    def from_subdivision(cls, sub: Subdivision) -> "GramOperator":
        return cls(tuple(gram_1d(s) for s in sub.per_dim))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.diag.size for f in self.factors)

    def apply(self, B: np.ndarray) -> np.ndarray:
        out = B
        for ax, f in enumerate(self.factors):
            out = f.apply(out, ax)
        return out

    def toarray(self) -> np.ndarray:
        """Dense Kronecker product; for tests only."""
        out = np.ones((1, 1))
        for f in self.factors:
            out = np.kron(out, f.toarray())
        return out


def quadratic_form(gram: GramOperator, beta: CoefficientGrid) -> float:
    """``beta' Psi beta``, the squared L2 norm of the spline with coefficients `beta`."""
    if tuple(beta.shape) != gram.shape:
        raise ParameterError(f"coefficients of shape {beta.shape} do not match Gram {gram.shape}")
    B = beta.grid
    return float(np.sum(B * gram.apply(B)))


def l2_norm_sq(sub: Subdivision, coeffs: CoefficientGrid) -> float:
    return quadratic_form(GramOperator.from_subdivision(sub), coeffs)


def beta_knot_insertion(sub: Subdivision, old: CoefficientGrid, new: CoefficientGrid,
                        var: int, t: float, nu: int | None = None) -> CoefficientGrid:
    """Coefficients on ``S u_var t`` of the difference ``old - new``.

    `old` lives on `sub`, `new` on the refined subdivision.  Below the new
    knot the old coefficients are copied, at the new knot they are linearly
    interpolated from the two neighbours, above it they are shifted by one.
    """
    ax = sub.axis(var)
    s1 = sub.per_dim[ax]
    if nu is None:
        nu = s1.interval(t)
    elif not (0 <= nu < s1.m - 1 and s1.knots[nu] < t < s1.knots[nu + 1]):
        raise ParameterError(f"interval index {nu} inconsistent with t={t} and knots {s1.knots}")
    if tuple(old.shape) != sub.shape:
        raise ParameterError("old coefficients do not match the subdivision")
    expected = list(sub.shape)
    expected[ax] += 1
    if tuple(new.shape) != tuple(expected):
        raise ParameterError(f"new coefficients of shape {new.shape}, expected {tuple(expected)}")
    A = np.moveaxis(old.grid, ax, 0)
    lo, hi = s1.knots[nu], s1.knots[nu + 1]
    w_lo = (hi - t) / (hi - lo)
    mid = w_lo * A[nu] + (1.0 - w_lo) * A[nu + 1]
    refined = np.concatenate([A[:nu + 1], mid[None], A[nu + 1:]], axis=0)
    beta = np.moveaxis(refined, 0, ax) - new.grid
    return CoefficientGrid(beta.shape, beta)


def beta_new_variable(sub: Subdivision, old: CoefficientGrid, new_sub: Subdivision,
                      new: CoefficientGrid) -> CoefficientGrid:
    """Coefficients on ``S + var`` of ``old - new`` after activating one variable.

    The old spline does not depend on the new variable, so its coefficients
    are repeated at both knots 0 and 1 of the new axis.
    """
    added = set(new_sub.active) - set(sub.active)
    if len(added) != 1 or not set(sub.active) < set(new_sub.active):
        raise ParameterError("new subdivision must add exactly one variable")
    ax = new_sub.axis(added.pop())
    if tuple(old.shape) != sub.shape or tuple(new.shape) != new_sub.shape:
        raise ParameterError("coefficients do not match their subdivisions")
    if new_sub.shape[ax] != 2 or new_sub.size != 2 * sub.size:
        raise ParameterError("the new variable must carry exactly the knots {0, 1}")
    widened = np.repeat(np.expand_dims(old.grid, ax), 2, axis=ax)
    beta = widened - new.grid
    return CoefficientGrid(beta.shape, beta)
