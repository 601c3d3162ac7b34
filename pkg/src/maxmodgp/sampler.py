"""Conditional realizations of the constrained finite-dimensional process.

Knot values given noisy observations are Gaussian; the shape constraints
truncate that Gaussian to the polyhedron ``M alpha <= v``.  Two samplers are
provided: exact rejection from the untruncated law, for regions of
reasonable prior mass, and a coordinate-wise Gibbs chain in whitened
coordinates, whose one-dimensional conditionals are truncated normals.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.special import ndtr, ndtri

from .basis import CoefficientGrid, Subdivision, eval_spline
from .constraints import ConstraintSystem
from .errors import InfeasibleError, NumericalError, ParameterError
from .kernel import KernelModel, factorize, knot_covariance

logger = logging.getLogger(__name__)

DRAW_TOL = 1e-10
MIN_ACCEPTANCE = 1e-4


@dataclass(frozen=True)
class TruncatedGaussianSpec:
    """``N(mean, covariance)`` restricted to ``M x <= v``.

    The covariance is carried as ``root @ inv(inner) @ inv(inner).T @ root.T``
    with `root` lower and `inner` upper triangular, which keeps posterior
    covariances of near-singular priors usable.
    """

    mean: np.ndarray
    root: np.ndarray
    inner: np.ndarray
    M: sparse.csr_matrix
    v: np.ndarray
    shape: tuple[int, ...]

    def __post_init__(self):
        n = self.mean.size
        if self.root.shape != (n, n) or self.inner.shape != (n, n):
            raise ParameterError("covariance factors do not match the mean")
        if self.M.shape != (self.v.size, n):
            raise ParameterError("truncation matrix does not match the mean")
        if int(np.prod(self.shape)) != n:
            raise ParameterError("grid shape does not match the mean")

    @classmethod
    def from_moments(cls, mean, covariance, M=None, v=None, shape=None) -> "TruncatedGaussianSpec":
        mean = np.asarray(mean, dtype=float).ravel()
        cov = np.asarray(covariance, dtype=float)
        cov = 0.5 * (cov + cov.T)
        scale = float(np.max(np.diag(cov))) if mean.size else 1.0
        L, _ = factorize(cov, scale)
        return cls._build(mean, L, np.eye(mean.size), M, v, shape)

    @classmethod
    def _build(cls, mean, root, inner, M, v, shape):
        if M is None:
            M, v = sparse.csr_matrix((0, mean.size)), np.zeros(0)
        return cls(mean, root, inner, sparse.csr_matrix(M), np.asarray(v, dtype=float).ravel(),
                   tuple(shape) if shape is not None else (mean.size,))

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def factor(self) -> np.ndarray:
        """Square root ``B`` of the covariance, ``cov = B B'``."""
        return linalg.solve_triangular(self.inner, self.root.T, trans="T", lower=False,
                                       check_finite=False).T

    @property
    def covariance(self) -> np.ndarray:
        B = self.factor
        return B @ B.T

    def whiten(self, x) -> np.ndarray:
        """``z`` with ``x = mean + factor @ z``."""
        w = linalg.solve_triangular(self.root, np.asarray(x, dtype=float) - self.mean,
                                    lower=True, check_finite=False)
        return self.inner @ w

    def feasible(self, x, tol: float = DRAW_TOL) -> bool:
        return self.v.size == 0 or bool(np.all(self.M @ x <= self.v + tol))


def posterior_spec(model: KernelModel, sub: Subdivision, cons: ConstraintSystem,
                   noise_variance: float | None = None) -> TruncatedGaussianSpec:
    """Law of the knot values given the observations, truncated by the constraints.

    ``mean = K Phi' (Phi K Phi' + tau^2 I)^-1 y`` and
    ``cov = K - K Phi' (Phi K Phi' + tau^2 I)^-1 Phi K``, both evaluated in
    prior-whitened coordinates: with ``K = L L'`` and ``A = Phi L``,
    ``cov = L (I + A'A / tau^2)^-1 L'``.
    """
    tau2 = model.noise_variance if noise_variance is None else float(noise_variance)
    if not tau2 > 0:
        raise ParameterError("posterior_spec needs a positive noise variance")
    L = knot_covariance(model, sub).chol
    if cons.y.size == 0:
        return TruncatedGaussianSpec._build(np.zeros(sub.size), L, np.eye(sub.size),
                                            cons.M, cons.v, sub.shape)
    A = cons.Phi @ L
    try:
        R = linalg.cholesky(np.eye(sub.size) + A.T @ A / tau2, lower=False, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalError("posterior precision not factorizable") from exc
    w = linalg.cho_solve((R, False), A.T @ cons.y / tau2, check_finite=False)
    return TruncatedGaussianSpec._build(L @ w, L, R, cons.M, cons.v, sub.shape)


def _sample_rejection(spec: TruncatedGaussianSpec, count: int, rng: np.random.Generator,
                      probe: int) -> np.ndarray:
    out = []
    tried = 0
    accepted = 0
    batch = max(count, 256)
    factor = spec.factor
    while len(out) < count:
        Zs = rng.standard_normal((batch, spec.dim))
        X = spec.mean + Zs @ factor.T
        ok = np.all(X @ spec.M.T <= spec.v + 0.0, axis=1) if spec.v.size else np.ones(batch, bool)
        tried += batch
        accepted += int(ok.sum())
        out.extend(X[ok])
        if tried >= probe and accepted / tried < MIN_ACCEPTANCE:
            raise InfeasibleError(
                f"rejection acceptance {accepted / tried:.2e} below {MIN_ACCEPTANCE:g}; "
                "use method='gibbs'"
            )
    return np.array(out[:count])


def truncnorm_draw(lo: float, hi: float, rng: np.random.Generator) -> float:
    """One draw from the standard normal restricted to ``[lo, hi]``."""
    if lo > hi:
        raise InfeasibleError("empty truncation interval")
    if lo == hi:
        return lo
    # work in the upper tail for numerical accuracy
    if lo > 0:
        return _upper(lo, hi, rng)
    if hi < 0:
        return -_upper(-hi, -lo, rng)
    u = rng.uniform(ndtr(lo), ndtr(hi))
    return float(np.clip(ndtri(u), lo, hi))


def _upper(lo: float, hi: float, rng: np.random.Generator) -> float:
    """Draw on ``[lo, hi]`` with ``lo > 0``."""
    if lo < 5.0:
        # inverse CDF on the survival function
        slo, shi = ndtr(-lo), ndtr(-hi)
        u = rng.uniform(shi, slo)
        return float(np.clip(-ndtri(u), lo, hi))
    # far tail: exponential proposal shifted to lo
    rate = 0.5 * (lo + np.sqrt(lo * lo + 4.0))
    for _ in range(10_000):
        x = lo + rng.exponential(1.0 / rate)
        if x <= hi and rng.uniform() <= np.exp(-0.5 * (x - rate) ** 2):
            return float(x)
    # interval too thin for the proposal: uniform with density weights
    for _ in range(10_000):
        x = rng.uniform(lo, hi)
        if rng.uniform() <= np.exp(-0.5 * (x * x - lo * lo)):
            return float(x)
    return float(lo)


def _sample_gibbs(spec: TruncatedGaussianSpec, count: int, rng: np.random.Generator,
                  start, burn_in: int, thin: int) -> np.ndarray:
    L = spec.factor
    x0 = spec.mean.copy() if start is None else np.asarray(start, dtype=float).ravel()
    if x0.size != spec.dim:
        raise ParameterError("Gibbs start does not match the distribution dimension")
    if spec.v.size and not spec.feasible(x0, 1e-8):
        raise InfeasibleError("Gibbs start violates the constraints; start from the mode")
    z = spec.whiten(x0)
    F = np.asarray((spec.M @ L) if spec.v.size else np.zeros((0, spec.dim)))
    if sparse.issparse(F):
        F = F.toarray()
    if F.size:
        # entries negligible against their row only add rounding noise
        scale = np.max(np.abs(F), axis=1, keepdims=True)
        F = np.where(np.abs(F) > 1e-12 * scale, F, 0.0)
    rhs = spec.v - (spec.M @ spec.mean) if spec.v.size else np.zeros(0)
    # per coordinate: touched rows, their coefficients and signs
    cols = []
    for j in range(spec.dim):
        rows = np.nonzero(F[:, j])[0]
        fj = F[rows, j]
        cols.append((rows, fj, rows[fj > 0], 1.0 / fj[fj > 0], rows[fj < 0], 1.0 / fj[fj < 0]))
    draws = []
    total = burn_in + count * thin
    for sweep in range(total):
        slack = rhs - F @ z  # recomputed each sweep to curb drift
        np.maximum(slack, 0.0, out=slack)
        for j in range(spec.dim):
            rows, fj, prow, pinv, nrow, ninv = cols[j]
            zj = z[j]
            # rows read f z_j <= slack + f z_j(old)
            hi = zj + float(np.min(slack[prow] * pinv)) if prow.size else np.inf
            lo = zj + float(np.max(slack[nrow] * ninv)) if nrow.size else -np.inf
            if lo > hi:
                lo = hi = 0.5 * (lo + hi)  # rounding at an active face
            new = truncnorm_draw(lo, hi, rng)
            if rows.size:
                slack[rows] -= fj * (new - zj)
            z[j] = new
        if sweep >= burn_in and (sweep - burn_in) % thin == thin - 1:
            draws.append(spec.mean + L @ z)
    return np.array(draws)


def sample(spec: TruncatedGaussianSpec, count: int, method: str = "gibbs", seed: int = 0,
           start=None, burn_in: int = 100, thin: int = 10,
           probe: int = 100_000) -> list[CoefficientGrid]:
    """Draw `count` realizations of the truncated Gaussian.

    Parameters
    ----------
    spec : TruncatedGaussianSpec
    count : int
    method : {"rejection", "gibbs"}
    seed : int
    start : array_like, optional
        Feasible starting point for the Gibbs chain, typically the mode.
        Defaults to the untruncated mean, which must then be feasible.
    burn_in, thin : int
        Gibbs sweeps discarded at the start and between kept draws.
    probe : int
        Proposals tried before the rejection sampler gives up on a region
        with acceptance below 1e-4.
    """
    if count < 0:
        raise ParameterError("count must be non-negative")
    rng = np.random.default_rng(seed)
    if count == 0:
        return []
    if method == "rejection":
        X = _sample_rejection(spec, count, rng, probe)
    elif method == "gibbs":
        if thin < 1 or burn_in < 0:
            raise ParameterError("thin must be >= 1 and burn_in >= 0")
        X = _sample_gibbs(spec, count, rng, start, burn_in, thin)
    else:
        raise ParameterError(f"unknown sampling method {method!r}")
    bad = [i for i, x in enumerate(X) if not spec.feasible(x)]
    if bad:
        raise NumericalError(f"{len(bad)} draws violate the constraints beyond {DRAW_TOL:g}")
    return [CoefficientGrid(spec.shape, x) for x in X]


@dataclass(frozen=True)
class CredibleBand:
    lower: np.ndarray
    upper: np.ndarray
    median: np.ndarray
    level: float


def credible_band(draws, sub: Subdivision, points, level: float = 0.9) -> CredibleBand:
    """Pointwise empirical quantile band of the sampled splines at `points` (active coordinates)."""
    if len(draws) < 2:
        raise ParameterError("a credible band needs at least two draws")
    if not 0 < level <= 1:
        raise ParameterError("level must lie in (0, 1]")
    V = np.array([eval_spline(sub, c, np.atleast_2d(points)) for c in draws])
    q = (1.0 - level) / 2.0
    lower = np.quantile(V, q, axis=0)
    upper = np.quantile(V, 1.0 - q, axis=0)
    return CredibleBand(lower, upper, np.median(V, axis=0), level)
