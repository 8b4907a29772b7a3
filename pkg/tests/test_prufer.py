import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from conftest import piecewise, positive_piecewise
from slprufer.coefficients import PiecewiseFn, SLProblem
from slprufer.prufer import (
    fundamental_pair,
    initial_angle,
    integrate_prufer,
    propagate_transfer,
    target_angle,
)

PI = math.pi


def ivp_oracle(prob, lam, y0, yp0):
    """Dense adaptive integration of (y, y') restarted at every breakpoint."""
    bp, _, q, w = prob.pieces()
    state = np.array([y0, yp0], dtype=float)
    for i in range(len(q)):
        k2 = lam * w[i] - q[i]
        sol = solve_ivp(
            lambda x, u: [u[1], -k2 * u[0]], (bp[i], bp[i + 1]), state,
            method="DOP853", rtol=1e-13, atol=1e-15,
        )
        state = sol.y[:, -1]
    return state


class TestAngles:
    @pytest.mark.parametrize("lam", [0.1, 1.0, 1e6])
    def test_dirichlet_neumann(self, lam):
        assert initial_angle(0.0, lam) == 0.0
        assert initial_angle(PI / 2, lam) == pytest.approx(PI / 2, abs=1e-15)
        assert target_angle(0.0, lam) == PI
        assert target_angle(PI / 2, lam) == pytest.approx(PI / 2, abs=1e-15)

    def test_initial_quarter(self):
        oracle = brentq(lambda t: math.sin(t) + math.cos(t), 0.1, PI - 0.1, xtol=1e-15)
        assert initial_angle(PI / 4, 1.0) == pytest.approx(oracle, abs=1e-13)
        assert oracle == pytest.approx(3 * PI / 4, abs=1e-13)

    def test_target_quarter(self):
        oracle = brentq(lambda t: math.sin(t) + 2 * math.cos(t), 0.1, PI, xtol=1e-15)
        got = target_angle(PI / 4, 4.0)
        assert got == pytest.approx(oracle, abs=1e-13)
        assert got == pytest.approx(PI - math.atan(2), abs=1e-13)

    @pytest.mark.parametrize("fn", [initial_angle, target_angle])
    def test_rejects_nonpositive_lambda(self, fn):
        with pytest.raises(ValueError):
            fn(0.3, 0.0)

    @given(st.floats(0, 3.14159), st.floats(1e-3, 1e6))
    def test_angles_solve_boundary_equation(self, a, lam):
        t0 = initial_angle(a, lam)
        g = target_angle(a, lam)
        assert 0 <= t0 < PI and 0 < g <= PI
        for t in (t0, g):
            assert abs(math.sin(t) * math.cos(a) + math.sqrt(lam) * math.cos(t) * math.sin(a)) <= 1e-9 * (
                1 + math.sqrt(lam)
            )


class TestTransfer:
    def test_first_mode(self, unit):
        tr = propagate_transfer(unit, PI**2)
        assert tr.theta_end == pytest.approx(PI, abs=1e-12)
        assert tr.oscillation_count == 0
        x = tr.sample_xs
        np.testing.assert_allclose(tr.y, np.sin(PI * x) / PI, atol=1e-13)

    def test_second_mode(self, unit):
        tr = propagate_transfer(unit, 4 * PI**2)
        assert tr.theta_end == pytest.approx(2 * PI, abs=1e-12)
        assert tr.oscillation_count == 1
        inside = tr.y[1:-1]
        flip = np.nonzero(np.sign(inside[1:]) != np.sign(inside[:-1]))[0]
        assert len(flip) == 1
        assert tr.sample_xs[1:-1][flip[0]] <= 0.5 <= tr.sample_xs[1:-1][flip[0] + 1]

    def test_against_ivp(self):
        prob = SLProblem.normal_form(PiecewiseFn([0, 0.5, 1], [10, 0]), PiecewiseFn.constant(1.0))
        tr = propagate_transfer(prob, 30.0)
        want = ivp_oracle(prob, 30.0, 0.0, 1.0)
        np.testing.assert_allclose([tr.y[-1], tr.y_prime[-1]], want, rtol=1e-9, atol=1e-12)

    def test_negative_lambda_has_no_angle(self, unit):
        prob = unit.with_q(PiecewiseFn.constant(5.0))
        tr = propagate_transfer(prob, -2.0)
        assert tr.theta is None and tr.log_rho is None
        want = ivp_oracle(prob, -2.0, 0.0, 1.0)
        np.testing.assert_allclose(tr.y[-1], want[0], rtol=1e-10)

    def test_rejects_general_p(self):
        prob = SLProblem(PiecewiseFn.constant(2.0), PiecewiseFn.constant(0.0), PiecewiseFn.constant(1.0))
        with pytest.raises(ValueError):
            propagate_transfer(prob, 1.0)

    def test_subpieces_resolve_oscillation(self, unit):
        lam = 1e4
        tr = propagate_transfer(unit, lam)
        k = math.sqrt(lam)
        assert np.max(np.diff(tr.sample_xs)) * k < PI / 2 + 1e-12
        assert np.max(np.diff(tr.theta)) < PI


class TestRungeKutta:
    @pytest.mark.parametrize("lam", [1.0, 37.5, 1e4])
    def test_free_angle(self, unit, lam):
        tr = integrate_prufer(unit, lam)
        np.testing.assert_allclose(tr.theta, math.sqrt(lam) * tr.sample_xs, rtol=0, atol=1e-10)
        np.testing.assert_allclose(tr.log_rho, 0.0, atol=1e-12)

    def test_matches_transfer(self):
        prob = SLProblem.normal_form(PiecewiseFn.constant(5.0), PiecewiseFn([0, 0.4, 1], [2.0, 3.0]))
        a = integrate_prufer(prob, 50.0).theta_end
        b = propagate_transfer(prob, 50.0).theta_end
        assert a == pytest.approx(b, abs=1e-7)

    def test_rejects_bad_arguments(self, unit):
        with pytest.raises(ValueError):
            integrate_prufer(unit, -1.0)
        with pytest.raises(ValueError):
            integrate_prufer(unit, 1.0, tol=0.0)

    def test_breakpoints_are_samples(self):
        prob = SLProblem.normal_form(PiecewiseFn.constant(0.0), PiecewiseFn([0, 0.123, 0.77, 1], [1, 2, 3]))
        xs = integrate_prufer(prob, 100.0).sample_xs
        for b in (0.123, 0.77):
            assert np.min(np.abs(xs - b)) == 0.0


class TestFundamentalPair:
    @pytest.mark.parametrize("lam", [2.0, 400.0])
    def test_constant_weight(self, lam):
        fp = fundamental_pair(PiecewiseFn.constant(1.0), lam)
        k = math.sqrt(lam)
        np.testing.assert_allclose(fp.phi, np.sin(k * fp.xs) / k, atol=1e-9)
        np.testing.assert_allclose(fp.psi, np.cos(k * fp.xs), atol=1e-9)
        assert fp.r[0] == 1 and fp.nu[0] == 0 and fp.mu[0] == 1 and fp.sigma[0] == PI / 2

    @given(positive_piecewise(), st.floats(0.5, 2000))
    def test_wronskian(self, w, lam):
        fp = fundamental_pair(w, lam)
        np.testing.assert_allclose(fp.wronskian(), 1.0, rtol=1e-9)

    def test_psi_at_end(self):
        lam = 10.0
        k1, k2 = math.sqrt(lam), math.sqrt(4 * lam)
        a, b = math.cos(0.5 * k1), -k1 * math.sin(0.5 * k1)
        want = a * math.cos(0.5 * k2) + b / k2 * math.sin(0.5 * k2)
        fp = fundamental_pair(PiecewiseFn([0, 0.5, 1], [1, 4]), lam)
        assert fp.psi[-1] == pytest.approx(want, rel=1e-9)


class TestProperties:
    @given(positive_piecewise(lo=1e-3, hi=4.0), st.floats(1, 1e4))
    def test_free_angle_nondecreasing(self, w, lam):
        prob = SLProblem.normal_form(PiecewiseFn.constant(0.0), w)
        th = integrate_prufer(prob, lam).theta
        assert np.min(np.diff(th)) >= -1e-12

    @given(positive_piecewise(lo=1e-3, hi=4.0))
    def test_angle_lower_bound(self, w):
        prob = SLProblem.normal_form(PiecewiseFn.constant(0.0), w)
        floor = (w.map_values(lambda v: np.minimum(v, 1.0))).integral()
        for lam in 10.0 ** np.arange(1, 7):
            assert integrate_prufer(prob, lam, theta0=0.0).theta_end >= math.sqrt(lam) * floor - 1e-9

    @given(piecewise(), positive_piecewise())
    def test_monotone_in_lambda(self, q, w):
        prob = SLProblem.normal_form(q, w)
        lams = np.geomspace(12.0, 1e4, 12)
        ends = [propagate_transfer(prob, lam).theta_end for lam in lams]
        assert np.all(np.diff(ends) > 0)

    @given(piecewise(), positive_piecewise(), st.floats(1, 1e5), st.floats(0, 3.1))
    def test_backend_agreement(self, q, w, lam, alpha):
        prob = SLProblem.normal_form(q, w, alpha)
        if lam <= -q.values.min() / w.values.min():
            lam = 1.0 + 2.0 * abs(q.values).max() / w.values.min()
        a = integrate_prufer(prob, lam).theta_end
        b = propagate_transfer(prob, lam).theta_end
        assert abs(a - b) <= 1e-9

    @given(piecewise(), positive_piecewise(), st.floats(1, 1e4))
    def test_rho_consistency(self, q, w, lam):
        tr = propagate_transfer(SLProblem.normal_form(q, w), lam)
        want = np.sqrt(lam * tr.y**2 + tr.y_prime**2)
        np.testing.assert_allclose(np.exp(tr.log_rho), want, rtol=1e-8)

    @given(piecewise(), positive_piecewise(), st.floats(1, 1e4))
    def test_oscillation_count_matches_zeros(self, q, w, lam):
        tr = propagate_transfer(SLProblem.normal_form(q, w, 0.7), lam)
        s = np.sign(tr.y)
        s = s[s != 0]
        assert tr.oscillation_count == np.count_nonzero(s[1:] != s[:-1])
        floors = np.floor(tr.theta / PI)
        assert tr.oscillation_count == floors[-1] - floors[0]
