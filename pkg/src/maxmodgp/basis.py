"""Hat basis functions, subdivisions and piecewise multilinear splines.

A one-dimensional subdivision is an ordered set of knots
``0 = t_0 < t_1 < ... < t_{m-1} = 1`` completed by two ghost knots at -1
and 2.  Each knot carries an asymmetric hat function that equals one at the
knot and vanishes at its two neighbours.  A d-dimensional subdivision is a
vector of one-dimensional subdivisions, one per *active* input variable,
and its basis is the tensor product of the one-dimensional hats.

Coefficients over the tensor grid are stored flat in row-major (C) order,
the last active variable running fastest.  Every matrix built elsewhere in
the package (covariances, constraint and interpolation matrices) uses this
order.

Variables are numbered from 0, as the columns of a design matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError, SeparationError

GHOST_LEFT = -1.0
GHOST_RIGHT = 2.0
DEFAULT_MIN_SEPARATION = 1e-9
_UNIT_TOL = 1e-12


def hat_basis_eval(u, v, w, t):
    """Evaluate the hat function centred at `v` with support ``[u, w]``.

    Parameters
    ----------
    u, v, w : float
        Left end, peak and right end, with ``u < v < w``.
    t : float or array_like
        Evaluation points.

    Returns
    -------
    float or ndarray
        Same shape as `t`.
    """
    if not (u < v < w):
        raise ParameterError(f"hat function needs u < v < w, got ({u}, {v}, {w})")
    t_arr = np.asarray(t, dtype=float)
    up = (t_arr - u) / (v - u)
    down = (w - t_arr) / (w - v)
    out = np.where(t_arr <= v, up, down)
    out = np.where((t_arr < u) | (t_arr > w), 0.0, out)
    if np.ndim(t) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Subdivision1D:
    """Ordered knots in [0, 1], always containing 0 and 1.

    The ghost knots -1 and 2 are implicit and never counted in `m`.
    """

    knots: tuple[float, ...] = (0.0, 1.0)

    def __post_init__(self):
        k = tuple(float(x) for x in self.knots)
        object.__setattr__(self, "knots", k)
        if len(k) < 2 or k[0] != 0.0 or k[-1] != 1.0:
            raise ParameterError(f"knots must start at 0 and end at 1, got {k}")
        if any(b <= a for a, b in zip(k, k[1:])):
            raise ParameterError(f"knots must be strictly increasing, got {k}")

    @property
    def m(self) -> int:
        return len(self.knots)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.knots)

    @property
    def ghosted(self) -> np.ndarray:
        return np.concatenate(([GHOST_LEFT], self.knots, [GHOST_RIGHT]))

    def distance(self, t: float) -> float:
        """Distance from `t` to the nearest knot in [0, 1]."""
        return float(np.min(np.abs(self.array - t)))

    def interval(self, t: float) -> int:
        """Index `nu` such that ``knots[nu] < t < knots[nu + 1]``."""
        nu = int(np.searchsorted(self.knots, t, side="right")) - 1
        if not (0 <= nu < self.m - 1) or not (self.knots[nu] < t < self.knots[nu + 1]):
            raise ParameterError(f"{t} is not strictly inside an interval of {self.knots}")
        return nu

    def insert(self, t: float, min_separation: float = DEFAULT_MIN_SEPARATION) -> "Subdivision1D":
        if not (0.0 < t < 1.0):
            raise ParameterError(f"new knot must lie in (0, 1), got {t}")
        if self.distance(t) < min_separation:
            raise SeparationError(
                f"knot {t} is within {min_separation} of an existing knot in {self.knots}"
            )
        return Subdivision1D(tuple(sorted(self.knots + (float(t),))))

    def hat_matrix(self, t) -> np.ndarray:
        """Values of all `m` hat functions at points `t`, shape ``(len(t), m)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        g = self.ghosted
        return np.stack(
            [hat_basis_eval(g[j], g[j + 1], g[j + 2], t) for j in range(self.m)], axis=-1
        )


@dataclass(frozen=True)
class Subdivision:
    """Tensor subdivision over the active variables.

    Parameters
    ----------
    active : tuple of int
        Strictly increasing active variable indices, each in ``[0, ambient_dim)``.
    per_dim : tuple of Subdivision1D
        One subdivision per active variable, in the order of `active`.
    ambient_dim : int
        Total number of input variables D.
    """

    active: tuple[int, ...]
    per_dim: tuple[Subdivision1D, ...]
    ambient_dim: int

    def __post_init__(self):
        active = tuple(int(a) for a in self.active)
        object.__setattr__(self, "active", active)
        object.__setattr__(self, "per_dim", tuple(self.per_dim))
        if len(active) == 0:
            raise ParameterError("at least one active variable is required")
        if any(b <= a for a, b in zip(active, active[1:])):
            raise ParameterError(f"active variables must be strictly increasing: {active}")
        if active[0] < 0 or active[-1] >= self.ambient_dim:
            raise ParameterError(f"active variables {active} out of range for D={self.ambient_dim}")
        if len(self.per_dim) != len(active):
            raise ParameterError("one 1-D subdivision per active variable is required")

    @classmethod
    def initial(cls, var: int, ambient_dim: int) -> "Subdivision":
        """Single active variable with knots {0, 1}."""
        return cls((var,), (Subdivision1D(),), ambient_dim)

    @classmethod
    def from_knots(cls, knots: dict[int, Sequence[float]], ambient_dim: int) -> "Subdivision":
        active = tuple(sorted(knots))
        return cls(active, tuple(Subdivision1D(tuple(knots[a])) for a in active), ambient_dim)

    @property
    def d(self) -> int:
        return len(self.active)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(s.m for s in self.per_dim)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axis(self, var: int) -> int:
        """Position of variable `var` among the active ones."""
        try:
            return self.active.index(var)
        except ValueError:
            raise ParameterError(f"variable {var} is not active (active={self.active})") from None

    def knots(self, var: int) -> np.ndarray:
        return self.per_dim[self.axis(var)].array

    def grid_points(self) -> np.ndarray:
        """All d-dimensional knots, shape ``(size, d)``, in flattening order."""
        mesh = np.meshgrid(*[s.array for s in self.per_dim], indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def restrict(self, X) -> np.ndarray:
        """Keep the active columns of ambient points ``X`` of shape ``(n, D)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.ambient_dim:
            raise ParameterError(f"expected {self.ambient_dim} columns, got {X.shape[1]}")
        return X[:, list(self.active)]

    def embed(self, Z) -> np.ndarray:
        """Inverse of `restrict`, inactive coordinates set to 0."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        X = np.zeros((Z.shape[0], self.ambient_dim))
        X[:, list(self.active)] = Z
        return X

    def flat_index(self, multi_index) -> int:
        return int(np.ravel_multi_index(tuple(multi_index), self.shape))

    def multi_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.shape))

    def describe(self) -> dict:
        return {str(a): list(s.knots) for a, s in zip(self.active, self.per_dim)}


@dataclass(frozen=True)
class CoefficientGrid:
    """Coefficients over the tensor grid, stored flat in row-major order."""

    shape: tuple[int, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        values = np.array(self.values, dtype=float).ravel()
        if values.size != int(np.prod(shape)):
            raise ParameterError(f"{values.size} values do not fill a grid of shape {shape}")
        values.flags.writeable = False
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, sub: Subdivision) -> "CoefficientGrid":
        return cls(sub.shape, np.zeros(sub.size))

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape(self.shape)

    def __getitem__(self, multi_index) -> float:
        return float(self.grid[tuple(multi_index)])


def _check_unit(Z: np.ndarray) -> np.ndarray:
    if np.any(Z < -_UNIT_TOL) or np.any(Z > 1 + _UNIT_TOL):
        raise ParameterError("points must lie in the unit hypercube")
    return np.clip(Z, 0.0, 1.0)


def _as_points(sub: Subdivision, x) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(x, dtype=float))
    if Z.shape[1] != sub.d:
        raise ParameterError(f"expected points with {sub.d} active coordinates, got {Z.shape[1]}")
    return _check_unit(Z)


def _cell_weights(sub: Subdivision, Z: np.ndarray):
    """Lower cell corner and right weight per axis, each of shape ``(n, d)``."""
    lo = np.empty(Z.shape, dtype=int)
    w = np.empty(Z.shape)
    for j, s in enumerate(sub.per_dim):
        k = s.array
        idx = np.clip(np.searchsorted(k, Z[:, j], side="right") - 1, 0, s.m - 2)
        lo[:, j] = idx
        w[:, j] = (Z[:, j] - k[idx]) / (k[idx + 1] - k[idx])
    return lo, w


def _corners(sub: Subdivision, Z: np.ndarray):
    """Yield ``(flat_index, weight)`` for each of the 2^d cell corners."""
    lo, w = _cell_weights(sub, Z)
    for eps in product((0, 1), repeat=sub.d):
        e = np.array(eps)
        weight = np.prod(np.where(e == 1, w, 1.0 - w), axis=1)
        flat = np.ravel_multi_index(tuple((lo + e).T), sub.shape)
        yield flat, weight


def tensor_basis_eval(sub: Subdivision, multi_index, x):
    """Evaluate the tensor hat function with the given multi-index at `x`."""
    multi_index = tuple(int(i) for i in multi_index)
    if len(multi_index) != sub.d or any(not (0 <= i < m) for i, m in zip(multi_index, sub.shape)):
        raise ParameterError(f"multi-index {multi_index} outside grid of shape {sub.shape}")
    Z = _as_points(sub, x)
    out = np.ones(Z.shape[0])
    for j, (s, ell) in enumerate(zip(sub.per_dim, multi_index)):
        g = s.ghosted
        out *= hat_basis_eval(g[ell], g[ell + 1], g[ell + 2], Z[:, j])
    return float(out[0]) if np.ndim(x) == 1 else out


def design_matrix(sub: Subdivision, Z) -> np.ndarray:
    """Matrix of basis values at points given in active coordinates.

    Row ``i`` holds ``phi_l(z_i)`` for every grid multi-index ``l`` in
    flattening order; each row has at most ``2**d`` non-zeros and sums to one.
    """
    Z = _as_points(sub, Z)
    Phi = np.zeros((Z.shape[0], sub.size))
    rows = np.arange(Z.shape[0])
    for flat, weight in _corners(sub, Z):
        np.add.at(Phi, (rows, flat), weight)
    return Phi


def eval_spline(sub: Subdivision, coeffs: CoefficientGrid, x):
    """Evaluate ``sum_l alpha_l phi_l(x)`` at points in active coordinates.

    `x` is a single point of length d or an array of shape ``(n, d)``.
    """
    if tuple(coeffs.shape) != sub.shape:
        raise ParameterError(f"coefficients of shape {coeffs.shape} do not match grid {sub.shape}")
    Z = _as_points(sub, x)
    out = np.zeros(Z.shape[0])
    vals = coeffs.values
    for flat, weight in _corners(sub, Z):
        out += weight * vals[flat]
    return float(out[0]) if np.ndim(x) == 1 else out


def eval_ambient(sub: Subdivision, coeffs: CoefficientGrid, X) -> np.ndarray:
    """Evaluate a spline at ambient points of shape ``(n, D)``."""
    return eval_spline(sub, coeffs, sub.restrict(X))


def project(sub: Subdivision, f: Callable[[np.ndarray], np.ndarray]) -> CoefficientGrid:
    """Coefficients ``f(t_l)`` of the interpolating spline.

    `f` is called once with the ``(size, d)`` array of grid knots and must
    return ``size`` values.
    """
    vals = np.asarray(f(sub.grid_points()), dtype=float).reshape(-1)
    return CoefficientGrid(sub.shape, vals)


def insert_knot(sub: Subdivision, var: int, t: float,
                min_separation: float = DEFAULT_MIN_SEPARATION) -> Subdivision:
    """Return the subdivision with knot `t` added for active variable `var`."""
    ax = sub.axis(var)
    per_dim = list(sub.per_dim)
    per_dim[ax] = per_dim[ax].insert(float(t), min_separation)
    return Subdivision(sub.active, tuple(per_dim), sub.ambient_dim)


def add_variable(sub: Subdivision, var: int) -> Subdivision:
    """Activate `var` with the minimal subdivision {0, 1}."""
    if not (0 <= var < sub.ambient_dim):
        raise ParameterError(f"variable {var} out of range for D={sub.ambient_dim}")
    if var in sub.active:
        raise ParameterError(f"variable {var} is already active")
    knots = {a: s.knots for a, s in zip(sub.active, sub.per_dim)}
    knots[var] = (0.0, 1.0)
    return Subdivision.from_knots(knots, sub.ambient_dim)


def reexpress(sub: Subdivision, coeffs: CoefficientGrid, finer: Subdivision) -> CoefficientGrid:
    """Coefficients of the same function on a refinement of `sub`.

    `finer` must contain every active variable and every knot of `sub`; the
    function is constant along variables that `sub` does not use.
    """
    if not set(sub.active) <= set(finer.active):
        raise ParameterError("refined subdivision must keep all active variables")
    pts = finer.embed(finer.grid_points())
    return CoefficientGrid(finer.shape, eval_ambient(sub, coeffs, pts))


@dataclass(frozen=True)
class MultiaffineDomain:
    """Product of finite sets ``F_1 x ... x F_d``, each containing 0 and 1."""

    points: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        pts = tuple(tuple(float(p) for p in F) for F in self.points)
        for F in pts:
            if len(F) < 2 or F[0] != 0.0 or F[-1] != 1.0 or any(b <= a for a, b in zip(F, F[1:])):
                raise ParameterError(f"each set must be sorted, distinct and contain 0 and 1: {F}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_subdivision(cls, sub: Subdivision) -> "MultiaffineDomain":
        return cls(tuple(s.knots for s in sub.per_dim))

    @property
    def d(self) -> int:
        return len(self.points)


def affine_neighbours(F: np.ndarray, t: np.ndarray):
    """Closest neighbours ``t-``, ``t+`` in F and the weight of ``t+``.

    For ``t`` in F both neighbours equal ``t`` and the weight is 0.
    """
    hi_idx = np.clip(np.searchsorted(F, t, side="left"), 0, F.size - 1)
    hit = F[hi_idx] == t
    lo_idx = np.where(hit, hi_idx, hi_idx - 1)
    lo, hi = F[lo_idx], F[hi_idx]
    gap = np.where(hit, 1.0, hi - lo)
    w_plus = np.where(hit, 0.0, (t - lo) / gap)
    return lo, hi, w_plus


def multiaffine_extend(domain: MultiaffineDomain, f: Callable[[np.ndarray], np.ndarray], x):
    """Multiaffine extension to ``[0, 1]^d`` of a function known on `domain`.

    The value at `x` is the weighted sum of `f` over the ``2**d`` corners
    formed by the nearest left/right points of each ``F_j``, with products of
    affine weights.  `f` receives an array of corner points ``(k, d)``.
    """
    Z = _check_unit(np.atleast_2d(np.asarray(x, dtype=float)))
    n, d = Z.shape
    if d != domain.d:
        raise ParameterError(f"expected {domain.d} coordinates, got {d}")
    lo = np.empty_like(Z)
    hi = np.empty_like(Z)
    wp = np.empty_like(Z)
    for j, F in enumerate(domain.points):
        lo[:, j], hi[:, j], wp[:, j] = affine_neighbours(np.array(F), Z[:, j])
    corners = []
    weights = []
    for eps in product((0, 1), repeat=d):
        e = np.array(eps, dtype=bool)
        corners.append(np.where(e, hi, lo))
        weights.append(np.prod(np.where(e, wp, 1.0 - wp), axis=1))
    vals = np.asarray(f(np.concatenate(corners)), dtype=float).reshape(len(corners), n)
    out = np.sum(np.array(weights) * vals, axis=0)
    return float(out[0]) if np.ndim(x) == 1 else out
