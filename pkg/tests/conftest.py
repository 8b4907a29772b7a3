import math
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from slprufer.coefficients import PiecewiseFn, SLProblem

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

PI = math.pi


@st.composite
def piecewise(draw, lo=-10.0, hi=10.0, max_pieces=6, a=0.0, b=1.0):
    m = draw(st.integers(1, max_pieces))
    cuts = draw(st.lists(st.floats(0.05, 0.95), min_size=m - 1, max_size=m - 1, unique=True))
    bp = np.concatenate([[a], a + (b - a) * np.sort(cuts), [b]])
    if np.any(np.diff(bp) < 1e-3 * (b - a)):
        bp = np.linspace(a, b, m + 1)
    vals = draw(st.lists(st.floats(lo, hi, allow_nan=False), min_size=m, max_size=m))
    return PiecewiseFn(bp, vals)


@st.composite
def positive_piecewise(draw, lo=0.5, hi=4.0, max_pieces=6):
    return draw(piecewise(lo=lo, hi=hi, max_pieces=max_pieces))


@st.composite
def problems(draw, general_p=False, l1_max=10.0):
    q = draw(piecewise(-10.0, 10.0))
    w = draw(positive_piecewise())
    p = draw(positive_piecewise()) if general_p else PiecewiseFn.constant(1.0)
    return SLProblem(p, q, w, draw(angles()), draw(angles()))


def angles():
    """Dirichlet, Neumann or a boundary angle at least 1e-3 away from 0 and pi."""
    return st.sampled_from([0.0, PI / 2]) | st.floats(1e-3, PI - 1e-3)


@pytest.fixture
def unit():
    return SLProblem.normal_form(PiecewiseFn.constant(0.0), PiecewiseFn.constant(1.0))


@pytest.fixture
def neumann():
    return SLProblem.normal_form(PiecewiseFn.constant(0.0), PiecewiseFn.constant(1.0), PI / 2, PI / 2)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
