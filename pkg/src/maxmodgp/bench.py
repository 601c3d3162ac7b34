"""Test functions, space-filling designs, accuracy metric and baseline layouts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .basis import CoefficientGrid, Subdivision, Subdivision1D, eval_ambient
from .errors import ParameterError

QUADRATURE_POINTS_PER_DIM = 100
MONTE_CARLO_POINTS = 100_000


@dataclass(frozen=True)
class TestFunction:
    """Analytic target on ``[0, 1]^D`` with its known shape properties."""

    __test__ = False  # not a pytest class

    name: str
    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    monotone: tuple[bool, ...] = ()
    relevant: tuple[int, ...] = ()

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ParameterError(f"{self.name} takes {self.dim} inputs, got {X.shape[1]}")
        return self.func(X)


def atan2d() -> TestFunction:
    """``x1 / 2 + atan(10 x2)``, increasing in both inputs."""
    return TestFunction(
        "atan2d", 2, lambda X: 0.5 * X[:, 0] + np.arctan(10.0 * X[:, 1]),
        monotone=(True, True), relevant=(0, 1),
    )


def modatan(D: int, d: int) -> TestFunction:
    """Sum of ``atan(5 (1 - i/(d+1)) x_i)`` over the first `d` of `D` inputs.

    Growth rates decrease with the variable index; the last ``D - d`` inputs
    are dummies.
    """
    if not 1 <= d <= D:
        raise ParameterError(f"modatan needs 1 <= d <= D, got d={d}, D={D}")
    rates = 5.0 * (1.0 - np.arange(1, d + 1) / (d + 1.0))

    def f(X):
        return np.sum(np.arctan(rates * X[:, :d]), axis=1)

    return TestFunction(f"modatan-{D}-{d}", D, f, monotone=(True,) * D, relevant=tuple(range(d)))


REGISTRY = {"atan2d": atan2d, "modatan": modatan}


def get_function(name: str, **params) -> TestFunction:
    if name not in REGISTRY:
        raise ParameterError(f"unknown test function {name!r}; choose from {sorted(REGISTRY)}")
    return REGISTRY[name](**params)


@dataclass(frozen=True)
class Design:
    points: np.ndarray
    kind: str = "maximin-lhd"
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        if P.ndim != 2 or np.any(P < 0) or np.any(P > 1):
            raise ParameterError("design points must be an (n, D) array in the unit hypercube")
        if np.unique(P, axis=0).shape[0] != P.shape[0]:
            raise ParameterError("design rows must be distinct")

    @property
    def min_distance(self) -> float:
        return float(pdist(self.points).min()) if len(self.points) > 1 else np.inf


def maximin_lhd(n: int, D: int, seed: int = 0, exchange_iters: int | None = None) -> Design:
    """Latin hypercube improved by random within-column exchanges.

    Each column is a random permutation of the ``n`` strata with a uniform
    offset inside each stratum.  An exchange swaps the entries of two rows
    in one column and is kept only if the minimum pairwise distance grows.

    Parameters
    ----------
    n, D : int
        Number of points (at least 2) and dimension.
    seed : int
    exchange_iters : int, optional
        Number of proposed exchanges, ``100 * n`` by default.
    """
    if n < 2 or D < 1:
        raise ParameterError("maximin_lhd needs n >= 2 and D >= 1")
    rng = np.random.default_rng(seed)
    iters = 100 * n if exchange_iters is None else int(exchange_iters)
    P = np.empty((n, D))
    for j in range(D):
        P[:, j] = (rng.permutation(n) + rng.uniform(size=n)) / n
    G = P[:, None, :] - P[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", G, G)
    np.fill_diagonal(dist2, np.inf)
    current = dist2.min()
    start = current
    for _ in range(iters):
        a, b = rng.choice(n, size=2, replace=False)
        col = rng.integers(D)
        Q = P[[a, b]].copy()
        Q[0, col], Q[1, col] = Q[1, col], Q[0, col]
        da = np.sum((P - Q[0]) ** 2, axis=1)
        db = np.sum((P - Q[1]) ** 2, axis=1)
        da[[a, b]] = np.inf
        db[[a, b]] = np.inf
        pair = float(np.sum((Q[0] - Q[1]) ** 2))
        # rows other than a and b keep their mutual distances
        mask = np.ones(n, bool)
        mask[[a, b]] = False
        rest = dist2[np.ix_(mask, mask)].min() if n > 2 else np.inf
        cand = min(rest, da.min(), db.min(), pair)
        if cand > current:
            P[[a, b]] = Q
            dist2[a, :], dist2[:, a] = da, da
            dist2[b, :], dist2[:, b] = db, db
            dist2[a, b] = dist2[b, a] = pair
            dist2[a, a] = dist2[b, b] = np.inf
            current = cand
    return Design(P, seed=seed, meta={"exchange_iters": iters,
                                      "min_distance_start": math.sqrt(start),
                                      "min_distance": math.sqrt(current)})


def quadrature_points(D: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for integrals over ``[0, 1]^D``.

    Tensor midpoint rule with 100 points per axis for ``D <= 2``, seeded
    Monte Carlo with 10^5 points above.
    """
    if D <= 2:
        g = (np.arange(QUADRATURE_POINTS_PER_DIM) + 0.5) / QUADRATURE_POINTS_PER_DIM
        mesh = np.meshgrid(*([g] * D), indexing="ij")
        X = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        X = np.random.default_rng(seed).uniform(size=(MONTE_CARLO_POINTS, D))
    return X, np.full(X.shape[0], 1.0 / X.shape[0])


def energy_from_values(target: np.ndarray, fitted: np.ndarray, weights=None) -> float:
    """``sum w (f - Y)^2 / sum w f^2``; the sample form when `weights` is omitted."""
    target = np.asarray(target, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    w = np.ones_like(target) if weights is None else np.asarray(weights, dtype=float)
    den = float(np.sum(w * target ** 2))
    if den == 0.0:
        raise ParameterError("bending energy undefined for a target with zero norm")
    return float(np.sum(w * (target - fitted) ** 2)) / den


def bending_energy(f: Callable, sub: Subdivision, coeffs: CoefficientGrid,
                   points: tuple[np.ndarray, np.ndarray] | None = None, seed: int = 0) -> float:
    """Normalized squared L2 error between an analytic target and a spline.

    `f` takes ambient points of shape ``(n, D)``.  `points` overrides the
    default quadrature rule with a ``(nodes, weights)`` pair.
    """
    X, w = points if points is not None else quadrature_points(sub.ambient_dim, seed)
    return energy_from_values(f(X), eval_ambient(sub, coeffs, X), w)


class EnergyMonitor:
    """Callable ``(sub, coeffs) -> E_n`` with cached quadrature nodes."""

    def __init__(self, f: Callable, D: int, seed: int = 0):
        self.X, self.w = quadrature_points(D, seed)
        self.target = f(self.X)

    def __call__(self, sub: Subdivision, coeffs: CoefficientGrid) -> float:
        return energy_from_values(self.target, eval_ambient(sub, coeffs, self.X), self.w)


def square_knots(k: int, active: Sequence[int], D: int) -> Subdivision:
    """Equispaced knots, `k` per active variable."""
    return rect_knots([k] * len(active), active, D)


def rect_knots(counts: Sequence[int], active: Sequence[int], D: int) -> Subdivision:
    """Equispaced knots with ``counts[j]`` knots on variable ``active[j]``."""
    if len(counts) != len(active):
        raise ParameterError("one knot count per active variable is needed")
    if any(int(c) < 2 for c in counts):
        raise ParameterError("every variable needs at least 2 knots")
    return Subdivision.from_knots(
        {int(v): np.linspace(0.0, 1.0, int(c)) for v, c in zip(active, counts)}, D
    )


def baseline_knots(kind: str, active: Sequence[int], D: int, k: int | None = None,
                   counts: Sequence[int] | None = None) -> Subdivision:
    """``"square"`` layout with `k` knots per variable or ``"rect"`` with `counts`."""
    if kind == "square":
        if k is None:
            raise ParameterError("square layout needs k")
        return square_knots(k, active, D)
    if kind == "rect":
        if counts is None:
            raise ParameterError("rect layout needs counts")
        return rect_knots(counts, active, D)
    raise ParameterError(f"unknown baseline layout {kind!r}")
