import math

import numpy as np
import pytest

from maxmodgp.basis import CoefficientGrid, Subdivision, eval_spline, insert_knot
from maxmodgp.bench import atan2d, maximin_lhd
from maxmodgp.constraints import Monotonicity
from maxmodgp.errors import InfeasibleError, ParameterError
from maxmodgp.kernel import KernelModel
from maxmodgp.maxmod import (KnotMove, MaxMod, MaxModConfig, MaxModState, VariableMove,
                             added_basis_count, admissible_intervals, apply_move, criterion,
                             reward, run)
from maxmodgp.solver import QpSolution

from conftest import cell_quadrature


def fake_mode(sub, values):
    values = np.asarray(values, dtype=float)
    return QpSolution(values, 0.0, (), "optimal", alpha=CoefficientGrid(sub.shape, values))


class TestCriterionPieces:
    def test_added_basis_count(self):
        one = Subdivision.from_knots({0: [0, 0.4, 1]}, 2)
        assert added_basis_count(one, 0) == 1
        two = Subdivision.from_knots({0: [0, 0.4, 1], 1: [0, 0.2, 0.5, 1]}, 3)
        assert added_basis_count(two, 0) == 4
        assert added_basis_count(two, 1) == 3
        assert added_basis_count(two, 2) == 12

    def test_identical_mode(self):
        sub = Subdivision.from_knots({0: [0, 0.5, 1]}, 1)
        vals = [0.0, 1.0, 3.0]
        move = KnotMove(0, 0.25)
        new_sub = apply_move(sub, move)
        new = fake_mode(new_sub, [0.0, 0.5, 1.0, 3.0])  # same spline, refined
        assert criterion(sub, fake_mode(sub, vals), new_sub, new, move) == pytest.approx(0.0, abs=1e-15)

    def test_against_quadrature(self, rng):
        for _ in range(5):
            sub = Subdivision.from_knots({0: [0, *np.sort(rng.uniform(0.1, 0.9, 2)), 1]}, 1)
            t = float(rng.uniform(0.01, 0.99))
            if min(abs(t - k) for k in sub.knots(0)) < 1e-3:
                continue
            move = KnotMove(0, t)
            new_sub = apply_move(sub, move)
            old = fake_mode(sub, rng.normal(size=4))
            new = fake_mode(new_sub, rng.normal(size=5))
            diff = lambda Z: (eval_spline(sub, old.alpha, np.clip(Z, 0, 1))
                              - eval_spline(new_sub, new.alpha, np.clip(Z, 0, 1))) ** 2
            ref = cell_quadrature(new_sub, diff) / added_basis_count(sub, 0)
            assert criterion(sub, old, new_sub, new, move) == pytest.approx(ref, abs=1e-8)

    def test_variable_move_criterion(self, rng):
        sub = Subdivision.from_knots({0: [0, 0.5, 1]}, 2)
        move = VariableMove(1)
        new_sub = apply_move(sub, move)
        old = fake_mode(sub, rng.normal(size=3))
        new = fake_mode(new_sub, rng.normal(size=6))
        diff = lambda Z: (eval_spline(sub, old.alpha, np.clip(Z[:, :1], 0, 1))
                          - eval_spline(new_sub, new.alpha, np.clip(Z, 0, 1))) ** 2
        ref = cell_quadrature(new_sub, diff) / 3
        assert criterion(sub, old, new_sub, new, move) == pytest.approx(ref, abs=1e-8)

    def test_reward(self):
        sub = Subdivision.initial(0, 2)
        cfg = MaxModConfig(reward_knot=1.0, reward_variable=0.25)
        assert reward(sub, KnotMove(0, 0.3), cfg) == pytest.approx(0.3)
        assert reward(sub, KnotMove(0, 0.9), cfg) == pytest.approx(0.1)
        assert reward(sub, VariableMove(1), cfg) == 0.25
        assert reward(sub, KnotMove(0, 0.5), MaxModConfig()) <= 1e-9

    def test_admissible_intervals(self):
        sub = Subdivision.from_knots({0: [0, 0.1, 0.105, 1]}, 1)
        assert np.allclose(admissible_intervals(sub, 0, 0.01), [(0.01, 0.09), (0.115, 0.99)])
        assert admissible_intervals(sub, 0, 0.5) == []


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(reward_knot=-1), dict(tolerance=0), dict(min_separation=0),
                                    dict(max_iterations=-1), dict(refit="always"),
                                    dict(search_rounds=0), dict(restarts=-1),
                                    dict(grid_points_per_interval=0),
                                    dict(min_separation=0.1, max_iterations=10)])
    def test_invalid(self, kw):
        with pytest.raises(ParameterError):
            MaxModConfig(**kw)


def atan_problem(seed=0, n=40):
    f = atan2d()
    X = maximin_lhd(n, 2, seed).points
    return X, f(X)


class TestDriver:
    def test_input_validation(self):
        with pytest.raises(ParameterError):
            MaxMod(np.zeros((3, 1)), np.zeros(2), Monotonicity())
        with pytest.raises(ParameterError):
            MaxMod(np.full((2, 1), 1.5), np.zeros(2), Monotonicity())
        with pytest.raises(ParameterError):
            MaxMod(np.zeros((2, 2)), np.zeros(2), None, model=KernelModel(lengthscales=(1.0,)))

    def test_no_admissible_knot(self):
        sub = Subdivision.from_knots({0: np.linspace(0, 1, 101)}, 1)
        X = np.linspace(0, 1, 5)[:, None]
        mm = MaxMod(X, X[:, 0], Monotonicity(), MaxModConfig(min_separation=0.006, max_iterations=0,
                                                              refit="never"))
        mode = mm.mode(sub, mm.model0)
        assert mm.optimize_knot(MaxModState(sub, mode, mm.model0), 0) is None

    def test_first_variable_and_knot(self):
        X, y = atan_problem()
        mm = MaxMod(X, y, Monotonicity())
        state = mm.initialize()
        assert state.sub.active == (1,)
        cand = mm.propose(state, 1)
        assert 0.15 < cand.move.t < 0.45

    def test_optimize_knot_deterministic(self):
        X = np.linspace(0, 1, 9)[:, None]
        y = np.tanh(6 * (X[:, 0] - 0.5))  # symmetric around 1/2
        cfg = MaxModConfig(refit="never")
        a = MaxMod(X, y, Monotonicity(), cfg)
        b = MaxMod(X, y, Monotonicity(), cfg)
        ta = a.optimize_knot(a.initialize(), 0).move.t
        tb = b.optimize_knot(b.initialize(), 0).move.t
        assert ta == tb

    def test_linear_target_stops_quickly(self):
        X = np.linspace(0, 1, 12)[:, None]
        state = run(X, 2 * X[:, 0] + 1, Monotonicity())
        assert state.stop_reason == "tolerance"
        assert len(state.history) <= 2
        assert state.last_score < 1e-5

    def test_history_is_consistent(self):
        X, y = atan_problem(seed=3, n=20)
        state = run(X, y, Monotonicity(), MaxModConfig(max_iterations=4, refit="never"))
        sizes = [state.initial_sub.size] + [r.grid_size for r in state.history]
        assert all(b > a for a, b in zip(sizes, sizes[1:]))
        sub = state.initial_sub
        for rec in state.history:
            sub = apply_move(sub, rec.move)  # raises if illegal
            assert sub.size == rec.grid_size
        assert sub == state.sub

    def test_monitor_records_energy(self):
        X, y = atan_problem(seed=1, n=20)
        f = atan2d()
        from maxmodgp.bench import EnergyMonitor
        state = run(X, y, Monotonicity(), MaxModConfig(max_iterations=2, refit="never"),
                    monitor=EnergyMonitor(f, 2))
        assert state.initial_energy is not None
        assert all(r.energy is not None and r.energy >= 0 for r in state.history)

    def test_modes_respect_constraints(self):
        X, y = atan_problem(seed=2, n=20)
        state = run(X, y, Monotonicity(), MaxModConfig(max_iterations=3, refit="never"))
        vals = state.coeffs.grid
        for ax in range(vals.ndim):
            assert np.all(np.diff(vals, axis=ax) >= -1e-8)

    def test_infeasible_initialization(self):
        X = np.array([[0.0], [1.0]])
        with pytest.raises(InfeasibleError):
            run(X, np.array([1.0, 0.0]), Monotonicity(), MaxModConfig(exact=True, refit="never"))

    def test_refit_move_mode(self):
        X, y = atan_problem(seed=4, n=20)
        state = run(X, y, Monotonicity(), MaxModConfig(max_iterations=2, refit="move"))
        assert len(state.history) == 2 and state.mode.optimal
