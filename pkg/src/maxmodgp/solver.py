"""Convex quadratic programming and the constrained (noisy) mode.

`solve_qp` is a dual active-set method in the style of Goldfarb and Idnani:
it starts from the unconstrained minimizer and adds violated constraints one
at a time, dropping active inequalities whose multipliers would turn
negative.  Every iterate is dual feasible, so the first primal feasible
iterate is optimal.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, sparse

from .basis import CoefficientGrid, Subdivision
from .constraints import ConstraintSystem
from .errors import NumericalError, ParameterError
from .kernel import KernelModel, knot_covariance

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max-iter"


@dataclass(frozen=True)
class QpProblem:
    """minimize ``0.5 x'Qx + c'x`` s.t. ``A_eq x = b_eq`` and ``M x <= v``."""

    Q: np.ndarray
    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    M: object = None
    v: np.ndarray | None = None

    def __post_init__(self):
        n = self.Q.shape[0]
        if self.Q.shape != (n, n) or np.size(self.c) != n:
            raise ParameterError("Q must be square and match c")
        for mat, vec, name in ((self.A_eq, self.b_eq, "equality"), (self.M, self.v, "inequality")):
            if (mat is None) != (vec is None):
                raise ParameterError(f"{name} matrix and vector must be given together")
            if mat is not None and (mat.shape[1] != n or mat.shape[0] != np.size(vec)):
                raise ParameterError(f"{name} constraints have inconsistent shapes")


@dataclass(frozen=True)
class QpSolution:
    x: np.ndarray
    objective: float
    active_set: tuple[int, ...]
    status: str
    iterations: int = 0
    multipliers_eq: np.ndarray = field(default=None, repr=False)
    multipliers_ineq: np.ndarray = field(default=None, repr=False)
    kkt_residual: float = np.nan
    alpha: CoefficientGrid | None = field(default=None, repr=False)
    jitter: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _dense(A) -> np.ndarray:
    if A is None:
        return None
    return A.toarray() if sparse.issparse(A) else np.asarray(A, dtype=float)


def _householder_column(J: np.ndarray, q: int, d: np.ndarray) -> float:
    """Rotate columns ``q:`` of J so that ``J[:, q:]^T n`` becomes ``(sigma, 0, ...)``."""
    d2 = d[q:]
    norm = np.linalg.norm(d2)
    if d2.size == 1 or norm == 0.0:
        return float(d2[0])
    sign = 1.0 if d2[0] >= 0 else -1.0
    w = d2.copy()
    w[0] += sign * norm
    w /= np.linalg.norm(w)
    Jq = J[:, q:]
    J[:, q:] = Jq - 2.0 * np.outer(Jq @ w, w)
    return -sign * norm


def _drop(J: np.ndarray, R: np.ndarray, q: int, k: int) -> None:
    """Remove active column `k` from R (``q x q``) and retriangularize in place."""
    R[:q, k:q - 1] = R[:q, k + 1:q].copy()
    R[:, q - 1] = 0.0
    for j in range(k, q - 1):
        a, b = R[j, j], R[j + 1, j]
        h = np.hypot(a, b)
        if h == 0.0:
            continue
        c, s = a / h, b / h
        rj, rj1 = R[j, j:q - 1].copy(), R[j + 1, j:q - 1].copy()
        R[j, j:q - 1] = c * rj + s * rj1
        R[j + 1, j:q - 1] = -s * rj + c * rj1
        Jj, Jj1 = J[:, j].copy(), J[:, j + 1].copy()
        J[:, j] = c * Jj + s * Jj1
        J[:, j + 1] = -s * Jj + c * Jj1
    R[q - 1, :] = 0.0


def solve_qp(p: QpProblem, tol: float = 1e-10, max_iter: int | None = None) -> QpSolution:
    """Solve a strictly convex QP with a dual active-set iteration.

    Parameters
    ----------
    p : QpProblem
        Problem with positive-definite `Q`.
    tol : float
        A constraint counts as violated when its residual, divided by the
        norm of its row, is below ``-tol``.
    max_iter : int, optional
        Cap on active-set changes; defaults to ``10 * (n + rows)``.

    Returns
    -------
    QpSolution
        ``status`` is ``"optimal"``, ``"infeasible"`` or ``"max-iter"``; the
        last iterate is returned in every case.
    """
    Q = np.asarray(p.Q, dtype=float)
    c = np.asarray(p.c, dtype=float).ravel()
    n = Q.shape[0]
    A_eq = _dense(p.A_eq) if p.A_eq is not None else np.zeros((0, n))
    b_eq = np.asarray(p.b_eq, dtype=float).ravel() if p.b_eq is not None else np.zeros(0)
    M = _dense(p.M) if p.M is not None else np.zeros((0, n))
    v = np.asarray(p.v, dtype=float).ravel() if p.v is not None else np.zeros(0)
    meq, mineq = A_eq.shape[0], M.shape[0]
    if max_iter is None:
        max_iter = 10 * (n + meq + mineq) + 100

    try:
        L = linalg.cholesky(0.5 * (Q + Q.T), lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalError("QP Hessian is not positive definite") from exc
    J = linalg.solve_triangular(L, np.eye(n), lower=True, check_finite=False).T.copy()
    R = np.zeros((n, n))
    x = -linalg.cho_solve((L, True), c, check_finite=False)

    # constraints as N x >= b: equalities first, then inequalities
    N = np.vstack([A_eq, -M]) if meq + mineq else np.zeros((0, n))
    b = np.concatenate([b_eq, -v])
    norms = np.maximum(np.linalg.norm(N, axis=1), 1e-300)
    eq_sign = np.ones(meq)
    active: list[int] = []
    u = np.zeros(0)
    q = 0
    status = OPTIMAL
    it = 0
    pending_eq = list(range(meq))

    def choose():
        while pending_eq:
            i = pending_eq.pop(0)
            s = N[i] @ x - b[i]
            if s > 0:
                eq_sign[i] = -1.0
                N[i] *= -1.0
                b[i] *= -1.0
            return i
        if mineq == 0:
            return None
        s = (N[meq:] @ x - b[meq:]) / norms[meq:]
        if active:
            s[[a - meq for a in active if a >= meq]] = np.inf
        j = int(np.argmin(s))
        return meq + j if s[j] < -tol else None

    while True:
        p_idx = choose()
        if p_idx is None:
            break
        n_p = N[p_idx]
        u_p = 0.0
        while True:
            it += 1
            if it > max_iter:
                status = MAX_ITER
                break
            s_p = n_p @ x - b[p_idx]
            d = J.T @ n_p
            d2 = d[q:]
            z = J[:, q:] @ d2
            r = linalg.solve_triangular(R[:q, :q], d[:q], check_finite=False) if q else np.zeros(0)
            t1, k = np.inf, None
            for j in range(q):
                if active[j] >= meq and r[j] > 0:
                    ratio = u[j] / r[j]
                    if ratio < t1 or (ratio == t1 and active[j] < active[k]):
                        t1, k = ratio, j
            zn = float(d2 @ d2)
            if zn <= (1e-12 * np.linalg.norm(d)) ** 2:
                t2 = np.inf
            else:
                t2 = max(-s_p / zn, 0.0)
            if np.isinf(t1) and np.isinf(t2):
                if p_idx < meq and abs(s_p) <= tol * norms[p_idx] * max(1.0, np.abs(x).max()):
                    break  # redundant equality
                status = INFEASIBLE
                break
            if np.isinf(t2):
                u = u - t1 * r
                u_p += t1
                _drop(J, R, q, k)
                active.pop(k)
                u = np.delete(u, k)
                q -= 1
                continue
            t = min(t1, t2)
            x = x + t * z
            u = u - t * r
            u_p += t
            if t2 <= t1:
                sigma = _householder_column(J, q, d)
                R[:q, q] = d[:q]
                R[q, q] = sigma
                active.append(p_idx)
                u = np.append(u, u_p)
                q += 1
                break
            _drop(J, R, q, k)
            active.pop(k)
            u = np.delete(u, k)
            q -= 1
        if status != OPTIMAL:
            break

    mult = np.zeros(meq + mineq)
    for a, val in zip(active, u):
        mult[a] = val
    lam_eq = -eq_sign * mult[:meq]
    mu = mult[meq:]
    # undo sign flips on equality rows
    N[:meq] *= eq_sign[:, None]
    grad = Q @ x + c
    if meq:
        grad = grad + A_eq.T @ lam_eq
    if mineq:
        grad = grad + M.T @ mu
    obj = float(0.5 * x @ Q @ x + c @ x)
    return QpSolution(
        x=x,
        objective=obj,
        active_set=tuple(sorted(a - meq for a in active if a >= meq)),
        status=status,
        iterations=it,
        multipliers_eq=lam_eq,
        multipliers_ineq=mu,
        kkt_residual=float(np.max(np.abs(grad))) if n else 0.0,
    )


def _whitened(model: KernelModel, sub: Subdivision, cons: ConstraintSystem):
    if cons.size != sub.size:
        raise ParameterError(f"constraints built for {cons.size} knots, grid has {sub.size}")
    cov = knot_covariance(model, sub)
    L = cov.chol
    A = cons.Phi @ L
    ML = cons.M @ L if cons.v.size else None
    return cov, L, A, ML


def _to_mode(sol: QpSolution, sub: Subdivision, L: np.ndarray, objective: float,
             jitter: float) -> QpSolution:
    alpha = L @ sol.x
    return replace(sol, x=alpha, objective=objective,
                   alpha=CoefficientGrid(sub.shape, alpha), jitter=jitter)


def compute_map(model: KernelModel, sub: Subdivision, cons: ConstraintSystem) -> QpSolution:
    """Constrained interpolating mode: argmin ``a' K^-1 a`` with ``Phi a = y``, ``M a <= v``.

    Solved in whitened coordinates ``a = L z`` (``K = L L'``), where the
    objective is ``|z|^2``.  The returned objective is ``a' K^-1 a``.
    """
    cov, L, A, ML = _whitened(model, sub, cons)
    prob = QpProblem(
        Q=2.0 * np.eye(sub.size), c=np.zeros(sub.size),
        A_eq=A if cons.y.size else None, b_eq=cons.y if cons.y.size else None,
        M=ML, v=cons.v if ML is not None else None,
    )
    sol = solve_qp(prob)
    if not sol.optimal:
        logger.info("exact mode: QP status %s", sol.status)
    return _to_mode(sol, sub, L, float(sol.x @ sol.x), cov.jitter)


def compute_noisy_map(model: KernelModel, sub: Subdivision, cons: ConstraintSystem,
                      noise_variance: float | None = None) -> QpSolution:
    """Relaxed mode: argmin ``a' K^-1 a + |Phi a - y|^2 / tau^2`` s.t. ``M a <= v``."""
    tau2 = model.noise_variance if noise_variance is None else float(noise_variance)
    if not tau2 > 0:
        raise ParameterError("the noisy mode needs a positive noise variance")
    cov, L, A, ML = _whitened(model, sub, cons)
    y = cons.y
    Q = 2.0 * (np.eye(sub.size) + (A.T @ A) / tau2)
    c = -2.0 * (A.T @ y) / tau2
    sol = solve_qp(QpProblem(Q=Q, c=c, M=ML, v=cons.v if ML is not None else None))
    resid = A @ sol.x - y
    objective = float(sol.x @ sol.x + resid @ resid / tau2)
    return _to_mode(sol, sub, L, objective, cov.jitter)
