import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import piecewise, problems
from slprufer.coefficients import PiecewiseFn, SLProblem, l1_norm
from slprufer.corpus import bump, random_problem, rng_for
from slprufer.eigensolver import eigenvalue
from slprufer.sensitivity import (
    derivative_functional,
    fd_derivative,
    lipschitz_ratio,
    path_bound,
    path_nodes,
)

ONE = PiecewiseFn.constant(1.0)
ZERO = PiecewiseFn.constant(0.0)


@pytest.fixture
def bumpy():
    return SLProblem.normal_form(PiecewiseFn([0, 0.3, 0.8, 1], [4.0, -2.0, 7.0]), PiecewiseFn([0, 0.5, 1], [1.0, 2.0]), 0.4, 1.2)


class TestFunctional:
    @given(piecewise(), st.integers(1, 15))
    def test_unit_weight_unit_direction(self, q, n):
        prob = SLProblem.normal_form(q, ONE)
        assert derivative_functional(prob, n, ONE) == pytest.approx(1.0, abs=1e-10)

    @given(problems(), st.integers(1, 15))
    def test_direction_omega(self, prob, n):
        assert derivative_functional(prob, n, prob.omega) == pytest.approx(1.0, abs=1e-10)

    def test_half_indicator(self, unit):
        h = PiecewiseFn([0, 0.5, 1], [1.0, 0.0])
        assert derivative_functional(unit, 1, h) == pytest.approx(0.5, abs=1e-10)

    def test_quarter_indicator_closed_form(self, unit):
        # int_0^{1/4} 2 sin^2(n pi x) dx = 1/4 - sin(n pi / 2) / (2 n pi)
        h = PiecewiseFn([0, 0.25, 1], [1.0, 0.0])
        for n in (1, 2, 3, 9):
            want = 0.25 - math.sin(n * math.pi / 2) / (2 * n * math.pi)
            assert derivative_functional(unit, n, h) == pytest.approx(want, abs=1e-10)

    def test_extended_precision_agrees(self, bumpy):
        h = PiecewiseFn([0, 0.2, 0.65, 1], [1.0, -3.0, 0.5])
        a = derivative_functional(bumpy, 4, h)
        b = derivative_functional(bumpy, 4, h, dps=30)
        assert a == pytest.approx(b, abs=1e-9)

    def test_interval_mismatch(self, unit):
        with pytest.raises(ValueError):
            derivative_functional(unit, 1, PiecewiseFn.constant(1.0, 0, 2))


class TestFiniteDifference:
    @pytest.mark.parametrize("eps", [1e-1, 1e-3, 1e-5])
    def test_unit_direction_is_exact_shift(self, eps):
        prob = SLProblem.normal_form(PiecewiseFn([0, 0.4, 1], [3.0, -1.0]), ONE)
        assert fd_derivative(prob, 3, ONE, eps) == pytest.approx(1.0, abs=1e-6)

    def test_zero_direction(self, bumpy):
        assert fd_derivative(bumpy, 2, ZERO) == 0.0

    def test_rejects_eps(self, bumpy):
        with pytest.raises(ValueError):
            fd_derivative(bumpy, 1, ONE, 0.0)

    def test_matches_functional(self, bumpy):
        h = PiecewiseFn([0, 0.7, 1], [2.0, -1.0])
        for n in (1, 5):
            assert fd_derivative(bumpy, n, h) == pytest.approx(derivative_functional(bumpy, n, h), abs=1e-6)

    def test_second_order_in_extended_precision(self, bumpy):
        h = PiecewiseFn([0, 0.2, 0.65, 1], [1.0, -3.0, 0.5])
        exact = derivative_functional(bumpy, 3, h, dps=40)
        errs = [abs(fd_derivative(bumpy, 3, h, eps, dps=40) - exact) for eps in (1e-2, 1e-3, 1e-4)]
        orders = np.log10(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders >= 1.8)


class TestPath:
    def test_nodes(self):
        t, w = path_nodes()
        assert len(t) == 5 and w.sum() == pytest.approx(1.0, abs=1e-15)
        assert np.dot(w, t**9) == pytest.approx(0.1, abs=1e-14)
        t, w = path_nodes([0, 0.5, 1])
        np.testing.assert_allclose(w, [0.25, 0.5, 0.25])
        for bad in ([0.5], [0, 0], [-0.1, 1], [0, 2]):
            with pytest.raises(ValueError):
                path_nodes(bad)

    @pytest.mark.parametrize("n", [1, 4, 11])
    def test_constant_difference(self, unit, n):
        assert path_bound(unit, ZERO, PiecewiseFn.constant(-2.5), n) == pytest.approx(2.5, abs=1e-10)

    def test_no_difference(self, bumpy):
        assert path_bound(bumpy, bumpy.q, bumpy.q, 3) == 0.0

    def test_bump_bounds_gap(self, unit):
        q2 = bump(0.3, 0.1, 1.0)
        gap = abs(eigenvalue(unit.with_q(q2), 1, 1e-12) - eigenvalue(unit, 1, 1e-12))
        pb = path_bound(unit, ZERO, q2, 1, t_grid=np.linspace(0, 1, 5))
        assert gap <= pb * 1.02
        assert gap == pytest.approx(pb, rel=0.02)

    @given(piecewise(), piecewise(), st.integers(1, 8))
    def test_symmetric(self, q1, q2, n):
        tmpl = SLProblem.normal_form(ZERO, PiecewiseFn([0, 0.5, 1], [1.0, 3.0]))
        assert path_bound(tmpl, q1, q2, n) == path_bound(tmpl, q2, q1, n)


class TestLipschitz:
    def test_constant_shift(self, unit):
        tol = 1e-12
        rep = lipschitz_ratio(unit, ZERO, PiecewiseFn.constant(3.0), 20, tol)
        # each eigenvalue carries tol * lambda; the gap is divided by |c| = 3
        slack = 2 * tol * np.maximum(1.0, rep.lambdas_q2) / 3.0
        assert np.all(np.abs(rep.ratios - 1.0) <= slack)
        assert abs(rep.sup_ratio - 1.0) <= slack.max()
        assert rep.m_hat == pytest.approx(math.sqrt(2), rel=1e-8)
        assert rep.passed and rep.bound == rep.m_hat**2

    def test_zero_distance(self, unit):
        with pytest.raises(ValueError):
            lipschitz_ratio(unit, ZERO, ZERO, 5)

    def test_bump_certificate(self, unit):
        rep = lipschitz_ratio(unit, ZERO, bump(0.5, 0.01, 1.0), 100, with_path_bounds=True)
        assert rep.passed
        assert np.all(rep.ratios >= 0) and rep.sup_ratio == rep.ratios.max()
        dist = rep.distance
        gaps = rep.ratios * dist
        assert np.all(gaps <= rep.path_bounds * 1.05)
        assert np.all(rep.path_bounds <= rep.bound * dist * 1.05)

    def test_symmetric(self):
        rng = rng_for(11)
        prob = random_problem(rng, l1_max=5)
        q2 = random_problem(rng, l1_max=5).q
        a = lipschitz_ratio(prob, prob.q, q2, 15)
        b = lipschitz_ratio(prob, q2, prob.q, 15)
        np.testing.assert_array_equal(a.ratios, b.ratios)
        assert (a.sup_ratio, a.m_hat, a.passed) == (b.sup_ratio, b.m_hat, b.passed)
        assert a.distance == pytest.approx(l1_norm(prob.q - q2), rel=1e-15)
