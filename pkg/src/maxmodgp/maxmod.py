"""Sequential knot insertion and variable activation (MaxMod).

At each iteration every input variable proposes one move: a new knot for an
active variable (its position optimized by a grid scan followed by
golden-section refinement) or the activation of an inactive variable with
knots {0, 1}.  A move is scored by the squared L2 distance between the
candidate mode and the current one, divided by the number of basis
functions it adds, plus a small reward.  The best move is applied until no
score reaches the tolerance.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np

from .basis import DEFAULT_MIN_SEPARATION, Subdivision, add_variable, insert_knot
from .constraints import ConstraintSystem, build_system
from .errors import InfeasibleError, ParameterError
from .kernel import Bounds, KernelModel, fit_hyperparameters
from .l2 import GramOperator, beta_knot_insertion, beta_new_variable, quadratic_form
from .solver import QpSolution, compute_map, compute_noisy_map

logger = logging.getLogger(__name__)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class KnotMove:
    var: int
    t: float

    def as_dict(self) -> dict:
        return {"type": "knot", "var": self.var, "t": self.t}


@dataclass(frozen=True)
class VariableMove:
    var: int

    def as_dict(self) -> dict:
        return {"type": "variable", "var": self.var, "t": None}


Move = Union[KnotMove, VariableMove]


@dataclass(frozen=True)
class MaxModConfig:
    """Tuning of the sequential procedure.

    ``reward_knot`` and ``reward_variable`` are the reward scales for knot
    insertions (times the distance to the nearest knot) and for variable
    activations.  ``refit`` is ``"candidate"`` to re-estimate kernel
    parameters for every proposed move, ``"move"`` to do it only for the
    accepted one, or ``"never"``.  ``exact`` switches from the noisy mode to
    the interpolating mode.
    """

    reward_knot: float = 1e-9
    reward_variable: float = 1e-9
    tolerance: float = 1e-5
    min_separation: float = DEFAULT_MIN_SEPARATION
    max_iterations: int = 50
    grid_points_per_interval: int = 8
    refinement_tol: float = 1e-4
    seed: int = 0
    refit: str = "candidate"
    restarts: int = 2
    search_rounds: int = 2
    exact: bool = False

    def __post_init__(self):
        if self.reward_knot < 0 or self.reward_variable < 0:
            raise ParameterError("rewards must be non-negative")
        if not self.tolerance > 0:
            raise ParameterError("tolerance must be positive")
        if not self.min_separation > 0:
            raise ParameterError("min_separation must be positive")
        if self.max_iterations < 0:
            raise ParameterError("max_iterations must be non-negative")
        if self.grid_points_per_interval < 1 or not self.refinement_tol > 0:
            raise ParameterError("knot search needs at least one grid point and a positive tolerance")
        if self.refit not in ("candidate", "move", "never"):
            raise ParameterError(f"refit must be 'candidate', 'move' or 'never', got {self.refit!r}")
        if self.search_rounds < 1:
            raise ParameterError("search_rounds must be at least 1")
        if self.restarts < 0:
            raise ParameterError("restarts must be non-negative")
        # the union of separation balls around the knots must never cover [0, 1]
        if not 2.0 * self.min_separation * (4 + self.max_iterations) < 1.0:
            raise ParameterError(
                "min_separation too large: knots could run out of admissible positions"
            )


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    move: Move
    criterion: float
    reward: float
    grid_size: int
    model: KernelModel
    energy: float | None = None
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "move": self.move.as_dict(),
            "criterion": self.criterion,
            "reward": self.reward,
            "grid_size": self.grid_size,
            "hyperparameters": self.model.as_dict(),
            "energy": self.energy,
            "wall_time": self.wall_time,
        }


@dataclass
class MaxModState:
    sub: Subdivision
    mode: QpSolution
    model: KernelModel
    history: list[IterationRecord] = field(default_factory=list)
    stop_reason: str | None = None
    last_score: float | None = None
    initial_energy: float | None = None
    initial_sub: Subdivision | None = None

    @property
    def coeffs(self):
        return self.mode.alpha


@dataclass(frozen=True)
class Candidate:
    move: Move
    sub: Subdivision
    mode: QpSolution
    model: KernelModel
    criterion: float
    reward: float

    @property
    def score(self) -> float:
        return self.criterion + self.reward


def added_basis_count(sub: Subdivision, var: int) -> int:
    """Number of basis functions added by a move on `var`."""
    if var in sub.active:
        return sub.size // sub.shape[sub.axis(var)]
    return sub.size


def apply_move(sub: Subdivision, move: Move, min_separation: float = DEFAULT_MIN_SEPARATION) -> Subdivision:
    if isinstance(move, KnotMove):
        return insert_knot(sub, move.var, move.t, min_separation)
    return add_variable(sub, move.var)


def mode_difference_sq(sub: Subdivision, mode: QpSolution, new_sub: Subdivision,
                       new_mode: QpSolution, move: Move) -> float:
    """Squared L2 distance between two successive modes."""
    if isinstance(move, KnotMove):
        beta = beta_knot_insertion(sub, mode.alpha, new_mode.alpha, move.var, move.t)
    else:
        beta = beta_new_variable(sub, mode.alpha, new_sub, new_mode.alpha)
    return quadratic_form(GramOperator.from_subdivision(new_sub), beta)


def criterion(sub: Subdivision, mode: QpSolution, new_sub: Subdivision,
              new_mode: QpSolution, move: Move) -> float:
    """L2 mode change normalized by the number of added basis functions."""
    return mode_difference_sq(sub, mode, new_sub, new_mode, move) / added_basis_count(sub, move.var)


def reward(sub: Subdivision, move: Move, cfg: MaxModConfig) -> float:
    if isinstance(move, KnotMove):
        return cfg.reward_knot * sub.per_dim[sub.axis(move.var)].distance(move.t)
    return cfg.reward_variable


def admissible_intervals(sub: Subdivision, var: int, min_separation: float):
    """Sub-intervals of (0, 1) at distance at least `min_separation` from all knots."""
    k = sub.knots(var)
    out = []
    for lo, hi in zip(k[:-1], k[1:]):
        if hi - lo > 2.0 * min_separation:
            out.append((lo + min_separation, hi - min_separation))
    return out


class MaxMod:
    """Driver holding the data, the constraints and the configuration.

    Parameters
    ----------
    X : array_like, shape (n, D)
        Observation points in the unit hypercube.
    y : array_like, shape (n,)
        Observations.
    kind : constraint kind or sequence of kinds
        Shape constraints enforced everywhere.
    cfg : MaxModConfig
    model : KernelModel, optional
        Starting kernel parameters; a squared-exponential seed scaled to the
        data is used when omitted.
    bounds : Bounds, optional
        Maximum-likelihood box.
    monitor : callable, optional
        ``monitor(sub, coeffs) -> float`` recorded after each iteration
        (typically a bending energy against a known target).
    """

    def __init__(self, X, y, kind, cfg: MaxModConfig | None = None,
                 model: KernelModel | None = None, bounds: Bounds | None = None,
                 monitor: Callable | None = None):
        self.X = np.atleast_2d(np.asarray(X, dtype=float))
        self.y = np.asarray(y, dtype=float).ravel()
        if self.X.shape[0] != self.y.size or self.y.size < 1:
            raise ParameterError("X and y must hold the same positive number of observations")
        if np.any(self.X < 0) or np.any(self.X > 1):
            raise ParameterError("observation points must lie in the unit hypercube")
        self.D = self.X.shape[1]
        self.kind = kind
        self.cfg = cfg or MaxModConfig()
        vy = float(np.var(self.y)) if self.y.size > 1 else 1.0
        vy = vy if vy > 0 else 1.0
        self.model0 = model or KernelModel.isotropic(
            self.D, lengthscale=0.5, variance=vy,
            noise_variance=0.0 if self.cfg.exact else 1e-3 * vy,
        )
        if len(self.model0.lengthscales) != self.D:
            raise ParameterError("kernel needs one lengthscale per input variable")
        self.bounds = bounds or Bounds()
        self.monitor = monitor
        self.evaluations = 0

    # -- building blocks -------------------------------------------------

    def system(self, sub: Subdivision) -> ConstraintSystem:
        return build_system(self.kind, sub, self.X, self.y)

    def mode(self, sub: Subdivision, model: KernelModel, cons: ConstraintSystem | None = None) -> QpSolution:
        cons = cons or self.system(sub)
        self.evaluations += 1
        if self.cfg.exact:
            return compute_map(model, sub, cons)
        return compute_noisy_map(model, sub, cons)

    def fit(self, sub: Subdivision, model: KernelModel, *salt: int) -> KernelModel:
        if self.cfg.restarts == 0:
            return model
        cons = self.system(sub)
        seed = int(np.random.SeedSequence([self.cfg.seed, *salt]).generate_state(1)[0])
        res = fit_hyperparameters(model, sub, cons.Phi, cons.y, self.bounds,
                                  restarts=self.cfg.restarts, seed=seed)
        return res.model

    def evaluate(self, state: MaxModState, move: Move, model: KernelModel | None = None) -> Candidate | None:
        """Candidate for `move`, or None if its mode is infeasible.

        The current kernel parameters are used unless `model` is given.
        """
        new_sub = apply_move(state.sub, move, self.cfg.min_separation)
        model = model or state.model
        new_mode = self.mode(new_sub, model)
        if not new_mode.optimal:
            logger.warning("skipping %s: candidate QP status %s", move, new_mode.status)
            return None
        crit = criterion(state.sub, state.mode, new_sub, new_mode, move)
        return Candidate(move, new_sub, new_mode, model, crit, reward(state.sub, move, self.cfg))

    def optimize_knot(self, state: MaxModState, var: int,
                      model: KernelModel | None = None) -> Candidate | None:
        """Best knot position for active `var`: grid scan, then golden-section refinement.

        Every trial position is scored with the same kernel parameters
        (`model`, by default the current ones).
        """
        cache: dict[float, Candidate | None] = {}

        def score(t: float) -> float:
            if t not in cache:
                cache[t] = self.evaluate(state, KnotMove(var, float(t)), model)
            c = cache[t]
            return -np.inf if c is None else c.score

        G = self.cfg.grid_points_per_interval
        scanned = []
        for lo, hi in admissible_intervals(state.sub, var, self.cfg.min_separation):
            pts = lo + (hi - lo) * np.arange(1, G + 1) / (G + 1)
            grid = np.concatenate(([lo], pts, [hi]))
            for g in range(1, G + 1):
                scanned.append((score(grid[g]), grid[g], grid[g - 1], grid[g + 1]))
        if not scanned:
            return None
        best_val, best_t, a, b = max(scanned, key=lambda s: (s[0], -s[1]))
        if not np.isfinite(best_val):
            return None
        # golden-section refinement on the bracket around the best grid point
        x1 = b - _GOLDEN * (b - a)
        x2 = a + _GOLDEN * (b - a)
        f1, f2 = score(x1), score(x2)
        while b - a > self.cfg.refinement_tol:
            if f1 >= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - _GOLDEN * (b - a)
                f1 = score(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + _GOLDEN * (b - a)
                f2 = score(x2)
        finite = [(c.score, -t, t) for t, c in cache.items() if c is not None]
        _, _, t_star = max(finite)
        return cache[t_star]

    def propose(self, state: MaxModState, var: int) -> Candidate | None:
        """Best move for one variable."""
        active = var in state.sub.active
        cand = self.optimize_knot(state, var) if active else self.evaluate(state, VariableMove(var))
        if cand is None or self.cfg.refit != "candidate":
            return cand
        it = len(state.history) + 1
        rounds = self.cfg.search_rounds if active else 1
        for r in range(rounds):
            # re-estimate the kernel for the proposed move (warm start), then
            # search the knot again under the new parameters
            model = self.fit(cand.sub, state.model, it, var, r)
            if r + 1 < rounds:
                again = self.optimize_knot(state, var, model)
                if again is None:
                    break
                cand = again
        refit = self.evaluate(state, cand.move, model)
        return refit if refit is not None else cand

    # -- the sequential procedure ------------------------------------------

    def initialize(self) -> MaxModState:
        """Start from the single variable whose two-knot mode has the largest norm."""
        best = None
        for var in range(self.D):
            sub = Subdivision.initial(var, self.D)
            model = self.fit(sub, self.model0, 0, var) if self.cfg.refit != "never" else self.model0
            mode = self.mode(sub, model)
            if not mode.optimal:
                continue
            norm = quadratic_form(GramOperator.from_subdivision(sub), mode.alpha)
            if best is None or norm > best[0]:
                best = (norm, sub, mode, model)
        if best is None:
            raise InfeasibleError(
                "no initial mode is feasible; review the constraints or use the noisy mode"
            )
        _, sub, mode, model = best
        state = MaxModState(sub, mode, model, initial_sub=sub)
        if self.monitor is not None:
            state.initial_energy = float(self.monitor(sub, mode.alpha))
        return state

    def step(self, state: MaxModState, iteration: int) -> bool:
        """Apply the best move; return False when the procedure should stop."""
        t0 = time.perf_counter()
        best = None
        for var in range(self.D):
            cand = self.propose(state, var)
            if cand is not None and (best is None or cand.score > best.score):
                best = cand
        if best is None:
            state.stop_reason = "no-admissible-move"
            return False
        state.last_score = best.score
        if best.score < self.cfg.tolerance:
            state.stop_reason = "tolerance"
            return False
        mode, model = best.mode, best.model
        if self.cfg.refit == "move":
            refit_model = self.fit(best.sub, state.model, iteration, best.move.var)
            refit_mode = self.mode(best.sub, refit_model)
            if refit_mode.optimal:
                mode, model = refit_mode, refit_model
        state.sub, state.mode, state.model = best.sub, mode, model
        energy = float(self.monitor(best.sub, mode.alpha)) if self.monitor is not None else None
        state.history.append(IterationRecord(
            iteration, best.move, best.criterion, best.reward, best.sub.size, model,
            energy, time.perf_counter() - t0,
        ))
        logger.info("iteration %d: %s score %.3e grid %d", iteration, best.move.as_dict(),
                    best.score, best.sub.size)
        return True

    def run(self) -> MaxModState:
        state = self.initialize()
        for it in range(1, self.cfg.max_iterations + 1):
            if not self.step(state, it):
                return state
        state.stop_reason = "max-iterations"
        return state


def run(X, y, kind, cfg: MaxModConfig | None = None, model: KernelModel | None = None,
        bounds: Bounds | None = None, monitor: Callable | None = None) -> MaxModState:
    """Run MaxMod on data ``(X, y)`` under the constraint `kind`."""
    return MaxMod(X, y, kind, cfg, model, bounds, monitor).run()
