import numpy as np
import pytest
from hypothesis import given, strategies as st

from maxmodgp.basis import (CoefficientGrid, MultiaffineDomain, Subdivision, Subdivision1D,
                            add_variable, design_matrix, eval_ambient, eval_spline,
                            hat_basis_eval, insert_knot, multiaffine_extend, project, reexpress,
                            tensor_basis_eval)
from maxmodgp.errors import ParameterError, SeparationError

from conftest import random_subdivision


# figure-style subdivision: variable 0 with {0, 1/3, 1}, variable 2 with {0, 1/4, 1/2, 1}
FIG = Subdivision.from_knots({0: [0, 1 / 3, 1], 2: [0, 0.25, 0.5, 1]}, 3)


class TestHat:
    def test_peak_and_support(self):
        assert hat_basis_eval(0, 1 / 3, 1, 1 / 3) == 1.0
        assert hat_basis_eval(0, 1 / 3, 1, 0) == 0.0
        assert hat_basis_eval(0, 1 / 3, 1, 1) == 0.0

    def test_descending_side(self):
        assert hat_basis_eval(0, 1 / 3, 1, 2 / 3) == pytest.approx(0.5, abs=1e-15)

    def test_outside_support(self):
        assert np.all(hat_basis_eval(0.2, 0.5, 0.7, np.array([-1.0, 0.1, 0.8, 3.0])) == 0.0)

    @pytest.mark.parametrize("uvw", [(0, 0, 1), (1, 0.5, 0), (0, 1, 1)])
    def test_bad_ordering(self, uvw):
        with pytest.raises(ParameterError):
            hat_basis_eval(*uvw, 0.5)


class TestSubdivision1D:
    def test_defaults_and_ghosts(self):
        s = Subdivision1D()
        assert s.m == 2
        assert list(s.ghosted) == [-1.0, 0.0, 1.0, 2.0]

    @pytest.mark.parametrize("knots", [(0.0,), (0.1, 1.0), (0.0, 0.9), (0.0, 0.5, 0.5, 1.0)])
    def test_invalid(self, knots):
        with pytest.raises(ParameterError):
            Subdivision1D(knots)

    def test_insert(self):
        s = Subdivision1D().insert(0.29)
        assert s.knots == (0.0, 0.29, 1.0)

    def test_insert_duplicate(self):
        s = Subdivision1D((0.0, 0.5, 1.0))
        with pytest.raises(SeparationError):
            s.insert(0.5)
        with pytest.raises(SeparationError):
            s.insert(0.5 + 1e-12)
        with pytest.raises(SeparationError):
            s.insert(0.55, min_separation=0.1)

    def test_interval(self):
        s = Subdivision1D((0.0, 0.3, 0.7, 1.0))
        assert s.interval(0.5) == 1
        with pytest.raises(ParameterError):
            s.interval(0.3)

    @given(st.lists(st.floats(0.01, 0.99), min_size=0, max_size=6, unique=True),
           st.floats(0.0, 1.0))
    def test_partition_of_unity(self, inner, t):
        inner = sorted(inner)
        if inner and np.min(np.diff([0.0, *inner, 1.0])) < 1e-6:
            return
        s = Subdivision1D((0.0, *inner, 1.0))
        assert abs(s.hat_matrix([t]).sum() - 1.0) < 1e-12


class TestSubdivision:
    def test_validation(self):
        with pytest.raises(ParameterError):
            Subdivision((1, 0), (Subdivision1D(), Subdivision1D()), 3)
        with pytest.raises(ParameterError):
            Subdivision((3,), (Subdivision1D(),), 3)
        with pytest.raises(ParameterError):
            Subdivision((), (), 3)

    def test_flat_multi_roundtrip(self):
        for flat in range(FIG.size):
            assert FIG.flat_index(FIG.multi_index(flat)) == flat

    def test_row_major_order(self):
        T = FIG.grid_points()
        # last active variable runs fastest
        assert np.allclose(T[:4, 0], 0.0)
        assert np.allclose(T[:4, 1], [0, 0.25, 0.5, 1])

    def test_add_variable_doubles(self):
        sub = Subdivision.from_knots({0: np.linspace(0, 1, 5)}, 3)
        assert add_variable(sub, 2).size == 10
        with pytest.raises(ParameterError):
            add_variable(sub, 0)
        with pytest.raises(ParameterError):
            add_variable(sub, 3)

    def test_insert_knot(self):
        sub = Subdivision.initial(1, 2)
        new = insert_knot(sub, 1, 0.29)
        assert new.per_dim[0].knots == (0.0, 0.29, 1.0)
        with pytest.raises(ParameterError):
            insert_knot(sub, 0, 0.5)
        with pytest.raises(SeparationError):
            insert_knot(new, 1, 0.29)

    def test_nested_grid(self):
        new = insert_knot(FIG, 2, 0.8)
        old_pts = {tuple(p) for p in FIG.grid_points()}
        new_pts = {tuple(p) for p in new.grid_points()}
        assert old_pts < new_pts


class TestTensorBasis:
    def test_figure_pyramid(self):
        assert tensor_basis_eval(FIG, (1, 2), [1 / 3, 0.5]) == pytest.approx(1.0)
        assert tensor_basis_eval(FIG, (1, 2), [0.0, 0.0]) == 0.0

    def test_product_of_hats(self):
        # 1-D values: hat(0, 1/3, 1) at 1/6 is 0.5; hat(1/4, 1/2, 1) at 1/2 is 1
        assert tensor_basis_eval(FIG, (1, 2), [1 / 6, 0.5]) == pytest.approx(0.5)

    def test_index_out_of_range(self):
        with pytest.raises(ParameterError):
            tensor_basis_eval(FIG, (3, 0), [0.5, 0.5])

    def test_kronecker_at_knots(self):
        T = FIG.grid_points()
        for flat in range(FIG.size):
            vals = tensor_basis_eval(FIG, FIG.multi_index(flat), T)
            expected = np.zeros(FIG.size)
            expected[flat] = 1.0
            assert np.array_equal(vals, expected)

    def test_design_matrix_matches_tensor_eval(self, rng):
        Z = rng.uniform(size=(30, 2))
        Phi = design_matrix(FIG, Z)
        dense = np.stack([tensor_basis_eval(FIG, FIG.multi_index(k), Z) for k in range(FIG.size)], 1)
        assert np.allclose(Phi, dense, atol=1e-14)
        assert np.allclose(Phi.sum(axis=1), 1.0, atol=1e-12)


class TestSplines:
    def test_zero(self):
        assert eval_spline(FIG, CoefficientGrid.zeros(FIG), [0.3, 0.7]) == 0.0

    def test_linear_interpolation(self):
        sub = Subdivision.from_knots({0: [0, 0.5, 1]}, 1)
        assert eval_spline(sub, CoefficientGrid((3,), [0, 1, 0]), [0.25]) == pytest.approx(0.5)

    def test_shape_mismatch(self):
        with pytest.raises(ParameterError):
            eval_spline(FIG, CoefficientGrid((2, 2), np.zeros(4)), [0.1, 0.1])
        with pytest.raises(ParameterError):
            CoefficientGrid((2, 2), np.zeros(3))

    def test_project(self):
        sub = Subdivision.from_knots({0: [0, 0.5, 1]}, 1)
        assert np.allclose(project(sub, lambda T: np.full(len(T), 3.0)).values, 3.0)
        assert np.allclose(project(sub, lambda T: T[:, 0]).values, [0, 0.5, 1])
        sq = project(sub, lambda T: T[:, 0] ** 2)
        assert np.allclose(sq.values, [0, 0.25, 1])
        assert eval_spline(sub, sq, [0.25]) == pytest.approx(0.125)

    def test_interpolation_bitwise(self, rng):
        for _ in range(20):
            sub = random_subdivision(rng, 4, int(rng.integers(1, 4)))
            coeffs = CoefficientGrid(sub.shape, rng.normal(size=sub.size))
            assert np.array_equal(eval_spline(sub, coeffs, sub.grid_points()), coeffs.values)

    def test_tensor_partition_of_unity(self, rng):
        for _ in range(20):
            sub = random_subdivision(rng, 3, int(rng.integers(1, 4)))
            ones = CoefficientGrid(sub.shape, np.ones(sub.size))
            Z = rng.uniform(size=(200, sub.d))
            assert np.allclose(eval_spline(sub, ones, Z), 1.0, atol=1e-12)

    def test_reexpress_on_refinement(self, rng):
        for _ in range(20):
            sub = random_subdivision(rng, 3, 2)
            coeffs = CoefficientGrid(sub.shape, rng.normal(size=sub.size))
            var = sub.active[0]
            finer = insert_knot(sub, var, 0.5 * (sub.knots(var)[0] + sub.knots(var)[1]))
            new = reexpress(sub, coeffs, finer)
            X = rng.uniform(size=(300, 3))
            assert np.max(np.abs(eval_ambient(sub, coeffs, X) - eval_ambient(finer, new, X))) < 1e-12

    def test_reexpress_on_new_variable(self, rng):
        sub = random_subdivision(rng, 3, 1)
        coeffs = CoefficientGrid(sub.shape, rng.normal(size=sub.size))
        other = next(v for v in range(3) if v not in sub.active)
        bigger = add_variable(sub, other)
        new = reexpress(sub, coeffs, bigger)
        X = rng.uniform(size=(300, 3))
        assert np.allclose(eval_ambient(sub, coeffs, X), eval_ambient(bigger, new, X), atol=1e-12)

    def test_points_outside_cube(self):
        with pytest.raises(ParameterError):
            eval_spline(FIG, CoefficientGrid.zeros(FIG), [1.2, 0.5])


class TestMultiaffine:
    def test_agrees_on_domain(self):
        dom = MultiaffineDomain(((0.0, 0.4, 1.0), (0.0, 1.0)))
        f = lambda P: np.sin(P[:, 0]) + P[:, 1] ** 2
        pts = np.array([[0.4, 1.0], [0.0, 0.0], [1.0, 1.0]])
        assert np.allclose(multiaffine_extend(dom, f, pts), f(pts))

    def test_affine_midpoint(self):
        dom = MultiaffineDomain(((0.0, 1.0),))
        assert multiaffine_extend(dom, lambda P: 2 * P[:, 0], [0.5]) == pytest.approx(1.0)

    def test_bilinear_centre(self):
        dom = MultiaffineDomain(((0.0, 1.0), (0.0, 1.0)))
        table = {(0, 0): 0.0, (0, 1): 1.0, (1, 0): 2.0, (1, 1): 5.0}
        f = lambda P: np.array([table[(int(a), int(b))] for a, b in P])
        assert multiaffine_extend(dom, f, [0.5, 0.5]) == pytest.approx(2.0)

    def test_invalid_domain(self):
        with pytest.raises(ParameterError):
            MultiaffineDomain(((0.0, 0.5),))

    def test_matches_projection(self, rng):
        f = lambda P: np.exp(np.sum(P, axis=1)) * np.cos(3 * P[:, 0])
        for _ in range(10):
            sub = random_subdivision(rng, 3, int(rng.integers(1, 4)))
            dom = MultiaffineDomain.from_subdivision(sub)
            Z = rng.uniform(size=(200, sub.d))
            a = eval_spline(sub, project(sub, f), Z)
            b = multiaffine_extend(dom, f, Z)
            assert np.max(np.abs(a - b)) < 1e-12
