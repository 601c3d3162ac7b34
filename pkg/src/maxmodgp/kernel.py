"""Stationary covariance functions restricted to the active variables.

Only the lengthscales of active variables enter the kernel: for a
stationary kernel, freezing the inactive inputs to any common constant
removes them from the distance.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg, optimize

from .basis import Subdivision
from .errors import NumericalError, ParameterError

logger = logging.getLogger(__name__)

FAMILIES = ("squared-exponential", "matern-5/2", "matern-3/2")
JITTER_LADDER = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
MAX_KNOTS = 100_000
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class KernelModel:
    """Kernel family, variance, per-variable lengthscales and noise variance."""

    family: str = "squared-exponential"
    variance: float = 1.0
    lengthscales: tuple[float, ...] = (1.0,)
    noise_variance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lengthscales", tuple(float(t) for t in self.lengthscales))
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if not self.variance > 0:
            raise ParameterError("variance must be positive")
        if any(not t > 0 for t in self.lengthscales):
            raise ParameterError("lengthscales must be positive")
        if not self.noise_variance >= 0:
            raise ParameterError("noise variance must be non-negative")

    @classmethod
    def isotropic(cls, ambient_dim: int, lengthscale: float = 0.5, **kwargs) -> "KernelModel":
        return cls(lengthscales=(lengthscale,) * ambient_dim, **kwargs)

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "variance": self.variance,
            "lengthscales": list(self.lengthscales),
            "noise_variance": self.noise_variance,
        }


def _correlation(family: str, r2: np.ndarray) -> np.ndarray:
    if family == "squared-exponential":
        return np.exp(-0.5 * r2)
    r = np.sqrt(r2)
    if family == "matern-5/2":
        s = math.sqrt(5.0) * r
        return (1.0 + s + s * s / 3.0) * np.exp(-s)
    s = math.sqrt(3.0) * r
    return (1.0 + s) * np.exp(-s)


def _scaled_sq_dist(U: np.ndarray, V: np.ndarray, theta: np.ndarray) -> np.ndarray:
    diff = (U[:, None, :] - V[None, :, :]) / theta
    return np.sum(diff * diff, axis=-1)


def kernel_matrix(model: KernelModel, active, U, V) -> np.ndarray:
    """Covariance between rows of `U` and `V`, given in active coordinates."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    theta = np.array([model.lengthscales[a] for a in active])
    return model.variance * _correlation(model.family, _scaled_sq_dist(U, V, theta))


def kernel_eval(model: KernelModel, active, u, v) -> float:
    """k_J(u, v) for two points in active coordinates."""
    return float(kernel_matrix(model, active, u, v)[0, 0])


@dataclass(frozen=True)
class KnotCovariance:
    """Covariance of the knot values, with the Cholesky factor actually used."""

    matrix: np.ndarray
    jitter: float
    chol: np.ndarray

    def solve(self, b: np.ndarray) -> np.ndarray:
        return linalg.cho_solve((self.chol, True), b)


def factorize(K: np.ndarray, scale: float) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``K + jitter * I`` climbing the jitter ladder."""
    eye = np.eye(K.shape[0])
    for rel in JITTER_LADDER:
        jitter = rel * scale
        try:
            return linalg.cholesky(K + jitter * eye, lower=True, check_finite=False), jitter
        except linalg.LinAlgError:
            continue
    cond = np.linalg.cond(K)
    raise NumericalError(
        f"covariance not factorizable with jitter up to {JITTER_LADDER[-1]:g} x scale "
        f"(condition estimate {cond:.3e})"
    )


def knot_covariance(model: KernelModel, sub: Subdivision, max_knots: int = MAX_KNOTS) -> KnotCovariance:
    """k_J(S, S) over the grid knots, in flattening order."""
    if sub.size > max_knots:
        raise ParameterError(f"grid of {sub.size} knots exceeds the guard of {max_knots}")
    if len(model.lengthscales) != sub.ambient_dim:
        raise ParameterError("kernel needs one lengthscale per ambient variable")
    T = sub.grid_points()
    K = kernel_matrix(model, sub.active, T, T)
    K = 0.5 * (K + K.T)
    L, jitter = factorize(K, model.variance)
    return KnotCovariance(K, jitter, L)


class _Likelihood:
    """Gaussian log-density of y under N(0, Phi K Phi^T + tau^2 I).

    Sufficient statistics of (Phi, y) and per-axis squared knot gaps are
    cached so that each evaluation costs O(m^3) in the grid size m only.
    """

    def __init__(self, sub: Subdivision, Phi: np.ndarray, y: np.ndarray, family: str):
        self.sub = sub
        self.family = family
        self.Phi = np.asarray(Phi, dtype=float)
        self.y = np.asarray(y, dtype=float).ravel()
        self.n = self.y.size
        if self.Phi.shape != (self.n, sub.size):
            raise ParameterError(f"Phi has shape {self.Phi.shape}, expected {(self.n, sub.size)}")
        self.PtP = self.Phi.T @ self.Phi
        self.Pty = self.Phi.T @ self.y
        self.yty = float(self.y @ self.y)
        T = sub.grid_points()
        self.sq = [(T[:, j, None] - T[None, :, j]) ** 2 for j in range(sub.d)]

    def covariance(self, variance: float, theta) -> np.ndarray:
        r2 = sum(s / (t * t) for s, t in zip(self.sq, theta))
        return variance * _correlation(self.family, r2)

    def __call__(self, variance: float, theta, noise: float) -> float:
        K = self.covariance(variance, theta)
        L, _ = factorize(K, variance)
        if noise > 0:
            A_t_A = L.T @ self.PtP @ L
            b = L.T @ self.Pty
            inner = A_t_A + noise * np.eye(L.shape[0])
            try:
                C = linalg.cholesky(inner, lower=True, check_finite=False)
            except linalg.LinAlgError as exc:
                raise NumericalError("likelihood inner system not factorizable") from exc
            w = linalg.solve_triangular(C, b, lower=True, check_finite=False)
            quad = (self.yty - w @ w) / noise
            m = L.shape[0]
            logdet = (self.n - m) * math.log(noise) + 2.0 * np.sum(np.log(np.diag(C)))
        else:
            A = self.Phi @ L
            cov = A @ A.T
            try:
                C = linalg.cholesky(cov, lower=True, check_finite=False)
            except linalg.LinAlgError as exc:
                raise NumericalError(
                    "observation covariance is singular without noise; use a positive noise variance"
                ) from exc
            w = linalg.solve_triangular(C, self.y, lower=True, check_finite=False)
            quad = w @ w
            logdet = 2.0 * np.sum(np.log(np.diag(C)))
        return -0.5 * (quad + logdet + self.n * LOG_2PI)


def log_marginal_likelihood(model: KernelModel, sub: Subdivision, Phi, y) -> float:
    """Log-density of `y` under ``N(0, Phi K Phi^T + tau^2 I)``."""
    lik = _Likelihood(sub, Phi, y, model.family)
    theta = [model.lengthscales[a] for a in sub.active]
    return float(lik(model.variance, theta, model.noise_variance))


@dataclass(frozen=True)
class Bounds:
    """Box constraints for maximum-likelihood estimation."""

    lengthscale: tuple[float, float] = (1e-2, 10.0)
    variance: tuple[float, float] | None = None
    noise: tuple[float, float] | None = None

    def resolve(self, y) -> "Bounds":
        """Fill data-dependent defaults from the sample variance of `y`."""
        vy = float(np.var(y)) if np.size(y) > 1 else 1.0
        if not vy > 0:
            vy = 1.0
        return Bounds(
            self.lengthscale,
            self.variance if self.variance is not None else (1e-4 * vy, 10.0 * vy),
            self.noise if self.noise is not None else (1e-8 * vy, vy),
        )


@dataclass(frozen=True)
class HyperparameterFit:
    model: KernelModel
    log_likelihood: float
    improved: bool


def fit_hyperparameters(model: KernelModel, sub: Subdivision, Phi, y,
                        bounds: Bounds | None = None, restarts: int = 5,
                        seed: int = 0) -> HyperparameterFit:
    """Maximize the marginal likelihood over variance, active lengthscales and noise.

    Restart 0 is a local Nelder-Mead search started from `model`; the others
    start from points drawn uniformly in the log-box.  The noise variance is
    only estimated when the seed model has a positive one.  Inactive
    lengthscales are left untouched.

    Returns the best restart (ties go to the lowest index).  ``improved`` is
    False when no restart beat the seed, in which case the seed is returned.
    """
    if restarts < 0:
        raise ParameterError("restarts must be non-negative")
    lik = _Likelihood(sub, Phi, y, model.family)
    b = (bounds or Bounds()).resolve(y)
    fit_noise = model.noise_variance > 0
    active = list(sub.active)

    def unpack(p):
        variance = math.exp(p[0])
        theta = np.exp(p[1:1 + len(active)])
        noise = math.exp(p[-1]) if fit_noise else 0.0
        return variance, theta, noise

    def objective(p):
        try:
            val = lik(*unpack(p))
        except NumericalError:
            return 1e300
        return -val if np.isfinite(val) else 1e300

    def safe_eval(m: KernelModel) -> float:
        try:
            return float(lik(m.variance, [m.lengthscales[a] for a in active], m.noise_variance))
        except NumericalError:
            return -np.inf

    seed_ll = safe_eval(model)
    if restarts == 0:
        return HyperparameterFit(model, seed_ll, False)

    lo = [math.log(b.variance[0])] + [math.log(b.lengthscale[0])] * len(active)
    hi = [math.log(b.variance[1])] + [math.log(b.lengthscale[1])] * len(active)
    if fit_noise:
        lo.append(math.log(b.noise[0]))
        hi.append(math.log(b.noise[1]))
    lo, hi = np.array(lo), np.array(hi)
    p0 = [math.log(model.variance)] + [math.log(model.lengthscales[a]) for a in active]
    if fit_noise:
        p0.append(math.log(model.noise_variance))
    p0 = np.clip(np.array(p0), lo, hi)

    rng = np.random.default_rng(seed)
    starts = [p0] + [rng.uniform(lo, hi) for _ in range(restarts - 1)]
    best_p, best_val = None, np.inf
    for start in starts:
        res = optimize.minimize(
            objective, start, method="Nelder-Mead", bounds=list(zip(lo, hi)),
            options={"maxiter": 200 * len(start), "xatol": 1e-4, "fatol": 1e-9},
        )
        p = np.clip(res.x, lo, hi)
        val = objective(p)
        if val < best_val:
            best_p, best_val = p, val

    if best_p is None or -best_val <= seed_ll:
        logger.debug("hyperparameter fit did not improve on the seed model")
        return HyperparameterFit(model, seed_ll, False)
    variance, theta, noise = unpack(best_p)
    lengthscales = list(model.lengthscales)
    for a, t in zip(active, theta):
        lengthscales[a] = float(t)
    fitted = replace(model, variance=variance, lengthscales=tuple(lengthscales),
                     noise_variance=noise)
    return HyperparameterFit(fitted, -best_val, True)
