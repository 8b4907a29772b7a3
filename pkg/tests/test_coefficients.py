import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import piecewise, positive_piecewise, problems
from slprufer.coefficients import (
    PiecewiseFn,
    ProblemFormatError,
    SLProblem,
    affine_combine,
    common_refinement,
    dumps_problem,
    hypothesis_report,
    l1_norm,
    liouville_transform,
    loads_function,
    loads_problem,
)


class TestPiecewiseFn:
    def test_evaluation_is_right_closed(self):
        f = PiecewiseFn([0, 0.5, 1], [1, 2])
        assert f(0.0) == 1 and f(0.5) == 2 and f(1.0) == 2
        np.testing.assert_array_equal(f([0.25, 0.75]), [1, 2])

    @pytest.mark.parametrize(
        "bp, vals",
        [([0, 1], [1, 2]), ([0], []), ([0, 0, 1], [1, 2]), ([1, 0], [1]), ([0, 1], [math.nan])],
    )
    def test_rejects_bad_data(self, bp, vals):
        with pytest.raises(ValueError):
            PiecewiseFn(bp, vals)

    def test_outside_interval(self):
        with pytest.raises(ValueError):
            PiecewiseFn.constant(1.0)(1.5)

    def test_immutable(self):
        f = PiecewiseFn([0, 1], [1])
        with pytest.raises(ValueError):
            f.values[0] = 3

    def test_arithmetic_on_refinement(self):
        f = PiecewiseFn([0, 0.5, 1], [1, 2])
        g = PiecewiseFn([0, 0.25, 1], [10, 20])
        h = f + g
        np.testing.assert_array_equal(h.breakpoints, [0, 0.25, 0.5, 1])
        np.testing.assert_array_equal(h.values, [11, 21, 22])
        np.testing.assert_array_equal((f - f).values, [0, 0])
        np.testing.assert_array_equal((2 * f).values, [2, 4])

    def test_reflect_and_simplify(self):
        f = PiecewiseFn([0, 0.25, 0.5, 1], [1, 1, 3])
        np.testing.assert_array_equal(f.reflect().breakpoints, [0, 0.5, 0.75, 1])
        np.testing.assert_array_equal(f.reflect().values, [3, 1, 1])
        assert f.simplify() == PiecewiseFn([0, 0.5, 1], [1, 3])

    def test_refinement_merges_near_duplicates(self):
        f = PiecewiseFn([0, 0.5, 1], [1, 2])
        g = PiecewiseFn([0, 0.5 + 1e-16, 1], [1, 2])
        np.testing.assert_array_equal(common_refinement(f, g), [0, 0.5, 1])

    def test_refinement_interval_mismatch(self):
        with pytest.raises(ValueError):
            common_refinement(PiecewiseFn.constant(1.0), PiecewiseFn.constant(1.0, 0, 2))


class TestL1Norm:
    def test_zero(self):
        assert l1_norm(PiecewiseFn.constant(0.0)) == 0

    def test_sign_change(self):
        assert l1_norm(PiecewiseFn([0, 0.5, 1], [1, -1])) == 1

    def test_third(self):
        assert l1_norm(PiecewiseFn([0, 1 / 3, 1], [3, 0])) == pytest.approx(1, abs=1e-15)

    @given(piecewise(), piecewise(), st.floats(-5, 5))
    def test_norm_axioms(self, f, g, c):
        assert l1_norm(f * c) == pytest.approx(abs(c) * l1_norm(f), rel=1e-12, abs=1e-300)
        assert l1_norm(f + g) <= l1_norm(f) + l1_norm(g) + 1e-12


class TestHypothesisReport:
    def test_constant(self):
        r = hypothesis_report(PiecewiseFn.constant(1.0))
        assert (r.h1_monotone, r.h2_essential_inf, r.total_variation) == ("increasing", 1.0, 0.0)
        assert r.h1 and r.h2

    def test_increasing(self):
        r = hypothesis_report(PiecewiseFn.uniform([1, 2, 3]))
        assert (r.h1_monotone, r.h2_essential_inf, r.total_variation) == ("increasing", 1.0, 2.0)

    def test_not_monotone(self):
        r = hypothesis_report(PiecewiseFn.uniform([2, 1, 2]))
        assert (r.h1_monotone, r.h2_essential_inf, r.total_variation) == ("none", 1.0, 2.0)
        assert not r.h1

    def test_decreasing(self):
        assert hypothesis_report(PiecewiseFn.uniform([3, 2, 2])).h1_monotone == "decreasing"

    @given(piecewise())
    def test_report_invariants(self, f):
        r = hypothesis_report(f)
        assert r.h2_essential_inf == f.values.min()
        assert r.total_variation >= 0


class TestProblem:
    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            SLProblem.normal_form(PiecewiseFn.constant(0.0), PiecewiseFn([0, 0.5, 1], [1, 0]))

    def test_rejects_angle(self):
        with pytest.raises(ValueError):
            SLProblem.normal_form(PiecewiseFn.constant(0.0), PiecewiseFn.constant(1.0), math.pi)

    def test_rejects_interval_mismatch(self):
        with pytest.raises(ValueError):
            SLProblem.normal_form(PiecewiseFn.constant(0.0, 0, 2), PiecewiseFn.constant(1.0))


class TestLiouville:
    def test_identity_for_unit_p(self):
        prob = SLProblem.normal_form(PiecewiseFn([0, 0.3, 1], [1, 2]), PiecewiseFn([0, 0.6, 1], [1, 3]), 0.4, 1.0)
        nf = liouville_transform(prob)
        assert nf.interval == prob.interval
        assert nf.q.simplify() == prob.q.simplify()
        assert nf.omega.simplify() == prob.omega.simplify()
        assert (nf.alpha, nf.beta) == (prob.alpha, prob.beta)

    def test_constant_p(self):
        prob = SLProblem(PiecewiseFn.constant(4.0), PiecewiseFn.constant(0.0), PiecewiseFn.constant(1.0))
        nf = liouville_transform(prob)
        assert nf.interval == (0.0, 0.25)
        assert nf.omega == PiecewiseFn([0, 0.25], [4.0])
        assert nf.q == PiecewiseFn([0, 0.25], [0.0])

    def test_two_piece_p(self):
        prob = SLProblem(PiecewiseFn([0, 0.5, 1], [1, 2]), PiecewiseFn.constant(0.0), PiecewiseFn.constant(1.0))
        nf = liouville_transform(prob)
        np.testing.assert_allclose(nf.omega.breakpoints, [0, 0.5, 0.75], rtol=0, atol=0)
        np.testing.assert_array_equal(nf.omega.values, [1, 2])

    def test_rejects_nonpositive_p(self):
        with pytest.raises(ValueError):
            SLProblem(PiecewiseFn.constant(-1.0), PiecewiseFn.constant(0.0), PiecewiseFn.constant(1.0))

    @given(problems(general_p=True))
    def test_preserves_integrals(self, prob):
        nf = liouville_transform(prob)
        assert nf.is_normal_form
        assert nf.omega.integral() == pytest.approx(prob.omega.integral(), rel=1e-12, abs=1e-12)
        assert nf.q.integral() == pytest.approx(prob.q.integral(), rel=1e-12, abs=1e-12)
        assert (nf.alpha, nf.beta) == (prob.alpha, prob.beta)


class TestAffineCombine:
    @given(piecewise(), piecewise())
    def test_endpoints_exact(self, q1, q2):
        bp = common_refinement(q1, q2)
        assert affine_combine(q1, q2, 0.0) == q1.refine(bp)
        assert affine_combine(q1, q2, 1.0) == q2.refine(bp)

    def test_midpoint(self):
        q = affine_combine(PiecewiseFn.constant(0.0), PiecewiseFn.constant(2.0), 0.5)
        assert q == PiecewiseFn.constant(1.0)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            affine_combine(PiecewiseFn.constant(0.0), PiecewiseFn.constant(0.0, 0, 2), 0.5)

    @given(piecewise(), piecewise(), st.floats(0, 1))
    def test_distance_along_path(self, q1, q2, t):
        d = l1_norm(affine_combine(q1, q2, t) - q1)
        assert d == pytest.approx(t * l1_norm(q2 - q1), rel=1e-12, abs=1e-12)


class TestSerialization:
    @given(problems(general_p=True))
    def test_round_trip_bit_exact(self, prob):
        back = loads_problem(dumps_problem(prob))
        assert back == prob
        assert back.alpha == prob.alpha and back.beta == prob.beta

    def test_p_defaults_to_one(self):
        doc = {
            "interval": [0, 1],
            "q": {"breakpoints": [0, 1], "values": [0]},
            "omega": {"breakpoints": [0, 1], "values": [1]},
        }
        assert loads_problem(json.dumps(doc)).is_normal_form

    def test_json_error_reports_line(self):
        with pytest.raises(ProblemFormatError, match="line 2"):
            loads_problem('{\n  "interval": [0, 1],,\n}')

    @pytest.mark.parametrize(
        "doc, field",
        [
            ({"q": {}, "omega": {}}, "interval"),
            ({"interval": [0, 1], "omega": {"breakpoints": [0, 1], "values": [1]}}, "'q'"),
            (
                {
                    "interval": [0, 1],
                    "q": {"breakpoints": [0, 2], "values": [0]},
                    "omega": {"breakpoints": [0, 1], "values": [1]},
                },
                "'q'",
            ),
            (
                {
                    "interval": [0, 1],
                    "q": {"breakpoints": [0, 1], "values": [0, 1]},
                    "omega": {"breakpoints": [0, 1], "values": [1]},
                },
                "'q'",
            ),
        ],
    )
    def test_field_errors(self, doc, field):
        with pytest.raises(ProblemFormatError, match=field):
            loads_problem(json.dumps(doc))

    def test_bare_function_document(self):
        f = loads_function('{"breakpoints": [0, 0.5, 1], "values": [1, 2]}')
        assert f == PiecewiseFn([0, 0.5, 1], [1, 2])
