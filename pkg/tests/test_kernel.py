import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from maxmodgp.basis import Subdivision
from maxmodgp.constraints import build_interpolation
from maxmodgp.errors import NumericalError, ParameterError
from maxmodgp.kernel import (Bounds, KernelModel, fit_hyperparameters, kernel_eval,
                             kernel_matrix, knot_covariance, log_marginal_likelihood)


class TestKernelEval:
    def test_stationary_diagonal(self):
        m = KernelModel(variance=2.5, lengthscales=(0.3, 0.7))
        assert kernel_eval(m, (0, 1), [0.2, 0.4], [0.2, 0.4]) == pytest.approx(2.5)

    def test_squared_exponential(self):
        m = KernelModel(variance=1.0, lengthscales=(1.0,))
        assert kernel_eval(m, (0,), [0.0], [1.0]) == pytest.approx(math.exp(-0.5))

    @pytest.mark.parametrize("r", [0.05, 0.3, 0.9])
    def test_matern_closed_forms(self, r):
        theta = 0.4
        m32 = KernelModel("matern-3/2", 1.7, (theta,))
        m52 = KernelModel("matern-5/2", 1.7, (theta,))
        s3 = math.sqrt(3) * r / theta
        s5 = math.sqrt(5) * r / theta
        assert kernel_eval(m32, (0,), [0.0], [r]) == pytest.approx(1.7 * (1 + s3) * math.exp(-s3))
        assert kernel_eval(m52, (0,), [0.0], [r]) == pytest.approx(
            1.7 * (1 + s5 + s5 ** 2 / 3) * math.exp(-s5))

    def test_restriction_ignores_inactive(self):
        m = KernelModel(lengthscales=(0.3, 5.0, 0.2))
        # active coordinates (0, 2); the second lengthscale is irrelevant
        a = kernel_eval(m, (0, 2), [0.1, 0.5], [0.4, 0.7])
        expected = math.exp(-0.5 * ((0.3 / 0.3) ** 2 + (0.2 / 0.2) ** 2))
        assert a == pytest.approx(expected)

    @pytest.mark.parametrize("kw", [dict(variance=0.0), dict(lengthscales=(-1.0,)),
                                    dict(noise_variance=-1e-3), dict(family="cubic")])
    def test_invalid_models(self, kw):
        with pytest.raises(ParameterError):
            KernelModel(**kw)


class TestKnotCovariance:
    def test_single_knot_variable(self):
        # the smallest grid has two knots per active variable
        m = KernelModel(variance=3.0, lengthscales=(0.5,))
        cov = knot_covariance(m, Subdivision.initial(0, 1))
        assert np.allclose(np.diag(cov.matrix), 3.0)
        assert cov.matrix[0, 1] < 3.0

    def test_matches_elementwise(self):
        m = KernelModel(variance=1.3, lengthscales=(0.4,))
        sub = Subdivision.from_knots({0: [0, 0.3, 1]}, 1)
        K = knot_covariance(m, sub).matrix
        T = sub.grid_points()
        for i in range(3):
            for j in range(3):
                assert K[i, j] == pytest.approx(kernel_eval(m, (0,), T[i], T[j]), abs=1e-15)

    def test_symmetric_positive_definite(self, rng):
        m = KernelModel(lengthscales=(2.0, 2.0))
        sub = Subdivision.from_knots({0: np.linspace(0, 1, 12), 1: np.linspace(0, 1, 12)}, 2)
        cov = knot_covariance(m, sub)
        assert np.array_equal(cov.matrix, cov.matrix.T)
        assert np.allclose(cov.chol @ cov.chol.T, cov.matrix + cov.jitter * np.eye(sub.size))
        assert cov.jitter > 0

    def test_guard(self):
        sub = Subdivision.from_knots({0: np.linspace(0, 1, 20)}, 1)
        with pytest.raises(ParameterError):
            knot_covariance(KernelModel(), sub, max_knots=10)


def _dense_loglik(model, sub, Phi, y):
    cov = knot_covariance(model, sub)
    K = cov.matrix + cov.jitter * np.eye(sub.size)
    C = Phi @ K @ Phi.T + model.noise_variance * np.eye(len(y))
    return multivariate_normal(np.zeros(len(y)), C).logpdf(y)


class TestLikelihood:
    def test_single_point(self):
        sub = Subdivision.initial(0, 1)
        m = KernelModel(lengthscales=(1.0,))
        # Phi picks the knot at 0, whose prior variance is 1 (+ jitter)
        val = log_marginal_likelihood(m, sub, np.array([[1.0, 0.0]]), np.array([0.0]))
        assert val == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-9)

    def test_scaling_away_from_prior(self, rng):
        sub = Subdivision.from_knots({0: np.linspace(0, 1, 5)}, 1)
        X = rng.uniform(size=(6, 1))
        Phi, y = build_interpolation(sub, X, np.sin(3 * X[:, 0]))
        m = KernelModel(lengthscales=(0.3,), noise_variance=1e-2)
        assert log_marginal_likelihood(m, sub, Phi, 100 * y) < log_marginal_likelihood(m, sub, Phi, y)

    @pytest.mark.parametrize("family", ["squared-exponential", "matern-5/2", "matern-3/2"])
    def test_dense_density_oracle(self, rng, family):
        for _ in range(5):
            sub = Subdivision.from_knots({0: [0, *np.sort(rng.uniform(0.1, 0.9, 2)), 1],
                                          2: [0, 0.5, 1]}, 3)
            X = rng.uniform(size=(5, 3))
            y = rng.normal(size=5)
            Phi, _ = build_interpolation(sub, X, y)
            m = KernelModel(family, float(rng.uniform(0.5, 2)), tuple(rng.uniform(0.2, 1.0, 3)),
                            float(rng.uniform(0.01, 0.5)))
            assert log_marginal_likelihood(m, sub, Phi, y) == pytest.approx(
                _dense_loglik(m, sub, Phi, y), abs=1e-9)

    def test_dense_oracle_without_noise(self, rng):
        sub = Subdivision.from_knots({0: np.linspace(0, 1, 6)}, 1)
        # one point per interval keeps Phi K Phi' well conditioned
        X = ((np.arange(5) + rng.uniform(0.2, 0.8, 5)) / 5)[:, None]
        y = rng.normal(size=5)
        Phi, _ = build_interpolation(sub, X, y)
        m = KernelModel(lengthscales=(0.2,))
        assert log_marginal_likelihood(m, sub, Phi, y) == pytest.approx(
            _dense_loglik(m, sub, Phi, y), abs=1e-9)

    def test_singular_without_noise(self):
        sub = Subdivision.initial(0, 1)
        Phi = np.array([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(NumericalError):
            log_marginal_likelihood(KernelModel(), sub, Phi, np.array([0.0, 1.0]))


class TestFit:
    def _data(self, rng, truth, n=30):
        sub = Subdivision.from_knots({0: np.linspace(0, 1, 8)}, 1)
        X = rng.uniform(size=(n, 1))
        Phi, _ = build_interpolation(sub, X, np.zeros(n))
        cov = knot_covariance(truth, sub)
        alpha = cov.chol @ rng.normal(size=sub.size)
        y = Phi @ alpha + math.sqrt(truth.noise_variance) * rng.normal(size=n)
        return sub, Phi, y

    def test_dominates_truth(self, rng):
        truth = KernelModel(variance=1.0, lengthscales=(0.3,), noise_variance=0.01)
        sub, Phi, y = self._data(rng, truth)
        fit = fit_hyperparameters(truth, sub, Phi, y, restarts=3, seed=1)
        assert fit.log_likelihood >= log_marginal_likelihood(truth, sub, Phi, y) - 1e-6
        assert fit.log_likelihood == pytest.approx(
            log_marginal_likelihood(fit.model, sub, Phi, y), abs=1e-9)

    def test_zero_restarts_returns_seed(self, rng):
        truth = KernelModel(variance=1.0, lengthscales=(0.3,), noise_variance=0.01)
        sub, Phi, y = self._data(rng, truth)
        fit = fit_hyperparameters(truth, sub, Phi, y, restarts=0)
        assert fit.model == truth and not fit.improved

    def test_bounds_respected(self, rng):
        truth = KernelModel(variance=1.0, lengthscales=(0.3,), noise_variance=0.01)
        sub, Phi, y = self._data(rng, truth)
        b = Bounds(lengthscale=(0.5, 2.0))
        start = KernelModel(lengthscales=(1.0,), noise_variance=0.01)
        fit = fit_hyperparameters(start, sub, Phi, y, bounds=b, restarts=2, seed=3)
        assert 0.5 - 1e-12 <= fit.model.lengthscales[0] <= 2.0 + 1e-12

    def test_deterministic(self, rng):
        truth = KernelModel(variance=1.0, lengthscales=(0.3,), noise_variance=0.01)
        sub, Phi, y = self._data(rng, truth)
        a = fit_hyperparameters(KernelModel(lengthscales=(1.0,), noise_variance=0.1), sub, Phi, y,
                                restarts=3, seed=7)
        b = fit_hyperparameters(KernelModel(lengthscales=(1.0,), noise_variance=0.1), sub, Phi, y,
                                restarts=3, seed=7)
        assert a == b

    def test_small_noise_on_monotone_data(self):
        sub = Subdivision.from_knots({0: np.linspace(0, 1, 10)}, 1)
        X = np.linspace(0.01, 0.99, 40)[:, None]
        y = np.arctan(10 * X[:, 0])
        Phi, _ = build_interpolation(sub, X, y)
        vy = float(np.var(y))
        seed = KernelModel(variance=vy, lengthscales=(0.5,), noise_variance=1e-3 * vy)
        fit = fit_hyperparameters(seed, sub, Phi, y, restarts=2, seed=0)
        assert fit.model.noise_variance < 0.1 * vy

    def test_negative_restarts(self):
        with pytest.raises(ParameterError):
            fit_hyperparameters(KernelModel(), Subdivision.initial(0, 1), np.eye(2), np.zeros(2),
                                restarts=-1)
