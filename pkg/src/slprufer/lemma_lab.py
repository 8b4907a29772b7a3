"""Numerical experiments on the large-``lam`` behaviour of the Pruefer angle.

Everything here works with the ``q == 0`` angle equation
``theta' = sqrt(lam) (cos^2 theta + omega sin^2 theta)`` unless a potential is
passed explicitly. Boundedness claims are checked on finite ``lam`` grids, so
every result is an empirical ceiling, not a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, stats

from .coefficients import PiecewiseFn, SLProblem, hypothesis_report
from .eigensolver import DEFAULT_TOL, eigenfunction_at, eigenvalues_up_to
from .prufer import _check_lambda, _rk_run, fundamental_pair, transfer_raw

__all__ = [
    "DecaySeries",
    "HypothesisViolation",
    "oscillatory_integrals",
    "oscillatory_profile",
    "decay_series",
    "g0_bound",
    "h_field",
    "decay_fit",
    "supnorm_sweep",
    "voc_residual",
    "trend_statistic",
    "weight_floor_sweep",
    "lambda_grid",
    "LEMMA_TOL",
    "VOC_SAMPLES",
    "TREND_LIMIT",
]

LEMMA_TOL = 1e-10
TREND_LIMIT = 0.3
# grid samples per half-period of the fastest oscillation in voc_residual
VOC_SAMPLES = 64


class HypothesisViolation(ValueError):
    """Input data outside the monotonicity/positivity regime of a bound."""


@dataclass(frozen=True)
class DecaySeries:
    lambdas: np.ndarray
    raw_values: np.ndarray
    scaled_values: np.ndarray
    fitted_slope: float

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size == 0 or np.any(lam <= 0):
            raise ValueError("lambdas must be a non-empty sequence of positive reals")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("lambdas must be strictly increasing")
        raw = np.asarray(self.raw_values, dtype=float)
        if raw.shape != lam.shape:
            raise ValueError("raw_values and lambdas differ in length")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "raw_values", raw)
        object.__setattr__(self, "scaled_values", np.sqrt(lam) * np.abs(raw))

    @classmethod
    def from_raw(cls, lambdas, raw_values) -> "DecaySeries":
        """Series with the slope filled in; ``nan`` when the grid is too short to fit."""
        s = cls(lambdas, raw_values, None, math.nan)
        if _fit_eligible(s.lambdas):
            object.__setattr__(s, "fitted_slope", decay_fit(s))
        return s


def lambda_grid(lo: float, hi: float, points: int) -> np.ndarray:
    """Geometric grid ``lo .. hi`` with ``points`` entries."""
    if not (lo > 0 and hi > lo and points >= 2):
        raise ValueError("need 0 < lo < hi and at least two points")
    return np.geomspace(lo, hi, points)


def _zero_potential_problem(omega: PiecewiseFn) -> SLProblem:
    return SLProblem.normal_form(PiecewiseFn.constant(0.0, omega.a, omega.b), omega)


def _snap(xs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    idx = np.clip(np.searchsorted(xs, targets), 0, len(xs) - 1)
    left = np.clip(idx - 1, 0, len(xs) - 1)
    return np.where(np.abs(xs[left] - targets) < np.abs(xs[idx] - targets), left, idx)


def oscillatory_profile(
    omega: PiecewiseFn,
    g: PiecewiseFn,
    lam: float,
    cs: Sequence[float],
    theta0: float = 0.0,
    tol: float = LEMMA_TOL,
):
    """``(int_a^c g sin 2theta, int_a^c g cos 2theta)`` for every ``c`` in ``cs``.

    One adaptive run with ``cs`` and the breakpoints of ``g`` as step
    boundaries; ``g`` is constant on every step so the integrals are exact
    sums of the per-step ``sin``/``cos`` increments.
    """
    lam = _check_lambda(lam)
    if not omega.same_interval(g):
        raise ValueError("omega and g must live on the same interval")
    cs = np.atleast_1d(np.asarray(cs, dtype=float))
    if np.any(cs < omega.a) or np.any(cs > omega.b):
        raise ValueError(f"c must lie in [{omega.a}, {omega.b}]")
    nodes = np.union1d(g.breakpoints, cs)
    xs, _, ds, dc, *_ = _rk_run(_zero_potential_problem(omega), lam, theta0, tol, False, nodes)
    gm = g(0.5 * (xs[1:] + xs[:-1]))
    S = np.concatenate([[0.0], np.cumsum(gm * ds)])
    C = np.concatenate([[0.0], np.cumsum(gm * dc)])
    k = _snap(xs, cs)
    return S[k], C[k]


def oscillatory_integrals(
    omega: PiecewiseFn,
    g: PiecewiseFn,
    lam: float,
    c: float = 1.0,
    theta0: float = 0.0,
    tol: float = LEMMA_TOL,
) -> tuple[float, float]:
    """``(int_a^c g sin 2theta dx, int_a^c g cos 2theta dx)`` along the ``q == 0`` angle."""
    S, C = oscillatory_profile(omega, g, lam, [c], theta0, tol)
    return float(S[0]), float(C[0])


def decay_series(
    omega: PiecewiseFn,
    g: PiecewiseFn,
    lambdas: Sequence[float],
    c: float = 1.0,
    theta0: float = 0.0,
    kind: str = "sin",
    tol: float = LEMMA_TOL,
) -> DecaySeries:
    if kind not in ("sin", "cos"):
        raise ValueError("kind must be 'sin' or 'cos'")
    raw = [oscillatory_integrals(omega, g, lam, c, theta0, tol)[0 if kind == "sin" else 1] for lam in lambdas]
    return DecaySeries.from_raw(lambdas, raw)


def _fit_eligible(lam: np.ndarray) -> bool:
    return lam.size >= 5 and lam[-1] / lam[0] >= 1e3 * (1 - 1e-12)


def decay_fit(series: DecaySeries) -> float:
    """Least-squares slope of ``log|raw|`` against ``log lam``.

    Exact zeros are left out of the fit; ``nan`` when nothing is left.
    """
    lam = series.lambdas
    if not _fit_eligible(lam):
        raise ValueError("decay fit needs >= 5 points spanning >= 3 decades")
    raw = np.abs(series.raw_values)
    keep = raw > 0
    if np.count_nonzero(keep) < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(lam[keep]), np.log(raw[keep]), 1)
    return float(slope)


def trend_statistic(lambdas: Sequence[float], values: Sequence[float], rtol: float = 1e-8) -> float:
    """Spearman rank correlation of ``values`` against ``lambdas``.

    Values closer than ``rtol * max|values|`` rank as ties, so series that are
    constant up to integration noise score 0 instead of a spurious trend.
    """
    v = np.asarray(values, dtype=float)
    scale = float(np.max(np.abs(v))) if v.size else 0.0
    if scale > 0:
        v = np.round(v / (rtol * scale))
    if np.ptp(v) == 0:
        return 0.0
    return float(stats.spearmanr(lambdas, v).statistic)


# -- explicit ceilings -------------------------------------------------------


def _is_monotone(f: PiecewiseFn, increasing: bool) -> bool:
    d = np.diff(f.values)
    return bool(np.all(d >= 0) if increasing else np.all(d <= 0))


def _aux_integrals(g0: float, w0: float) -> tuple[float, float]:
    """``f = int_0^{pi/2}`` and ``f~ = int_{pi/4}^{3pi/4}`` of ``g0 {sin,cos} 2u / (cos^2 u + w0 sin^2 u)``."""
    if g0 == 0.0:
        return 0.0, 0.0
    den = lambda u: math.cos(u) ** 2 + w0 * math.sin(u) ** 2  # noqa: E731
    f, _ = integrate.quad(lambda u: math.sin(2 * u) / den(u), 0.0, 0.5 * math.pi, epsabs=1e-13, epsrel=1e-13)
    ft, _ = integrate.quad(
        lambda u: math.cos(2 * u) / den(u), 0.25 * math.pi, 0.75 * math.pi, epsabs=1e-13, epsrel=1e-13
    )
    return g0 * f, g0 * ft


def _increasing_ceilings(g0: float, w0: float) -> tuple[float, float]:
    """Ceilings for ``g`` decreasing, ``g >= 0`` with ``g(a) = g0`` and an
    increasing weight with ``omega(a) = w0``."""
    f, ft = _aux_integrals(g0, w0)
    m = min(w0, 1.0)
    sine = 0.5 * (f + math.pi * g0 / m)
    # the cosine ceiling is taken with the larger of |f| and |f~| so it is valid under either reading
    cosine = 0.5 * (max(abs(f), abs(ft)) + 1.25 * math.pi * g0 / m)
    return sine, cosine


def g0_bound(g: PiecewiseFn, omega: PiecewiseFn) -> tuple[float, float]:
    """Ceilings for ``|G(c; lam)|`` and its cosine analogue, where
    ``G = sqrt(lam)/2 int_a^c g sin 2theta``, valid for large ``lam``, every
    ``c`` and angle started at zero.

    ``g`` must be decreasing and non-negative, ``omega`` monotone and positive
    at its small end. For an increasing weight the ceiling reads ``g`` and
    ``omega`` at the left end. A decreasing weight is mirrored: the mirrored
    angle solves the same equation with ``omega(1 - x)``, the mirrored ``g``
    is increasing and splits into the constant ``g(a)`` minus a decreasing
    non-negative part, and an integral from ``c`` to the end is a difference
    of two integrals from the start, hence the factor 2.
    """
    if not g.same_interval(omega):
        raise ValueError("g and omega must live on the same interval")
    if np.any(g.values < 0) or not _is_monotone(g, increasing=False):
        raise HypothesisViolation("g must be decreasing and non-negative")
    g_left = float(g.values[0])
    if _is_monotone(omega, increasing=True):
        w0 = float(omega.values[0])
        if not w0 > 0:
            raise HypothesisViolation("omega must be positive at the left end")
        return _increasing_ceilings(g_left, w0)
    if _is_monotone(omega, increasing=False):
        w0 = float(omega.values[-1])
        if not w0 > 0:
            raise HypothesisViolation("omega must be positive at the right end")
        u0 = g_left - float(g.values[-1])
        su, cu = _increasing_ceilings(u0, w0)
        s1, c1 = _increasing_ceilings(g_left, w0)
        return 2.0 * (su + s1), 2.0 * (cu + c1)
    raise HypothesisViolation("omega must be monotone")


def _reaches(th0: np.ndarray, th1: np.ndarray, offset: float) -> np.ndarray:
    """Whether ``[th0, th1]`` contains a point ``offset + k pi``."""
    return np.floor((th1 - offset) / math.pi) > np.floor((th0 - offset) / math.pi) - (
        np.mod(th0 - offset, math.pi) == 0
    )


def h_field(
    omega: PiecewiseFn,
    lam: float,
    theta0: float = 0.0,
    tol: float = LEMMA_TOL,
) -> tuple[np.ndarray, float]:
    """Samples of ``H(x) = sqrt(lam)/2 int_a^x (1 - omega) sin 2theta`` and ``sup |H|``.

    Returns an ``(m, 2)`` array of ``(x, H)`` rows on the adaptive step grid.
    On a step with constant ``omega`` the field equals ``-log D(theta) / 2``
    up to a constant, ``D = cos^2 + omega sin^2``, so the supremum between
    samples is found from the extremes of ``sin^2`` over the step.
    """
    lam = _check_lambda(lam)
    xs, th, ds, _, pc, _, w = _rk_run(_zero_potential_problem(omega), lam, theta0, tol, True)
    coef = 0.5 * math.sqrt(lam) * (1.0 - w)
    H = np.concatenate([[0.0], np.cumsum(coef[pc] * ds)])
    t0, t1, ws = th[:-1], th[1:], w[pc]
    base = H[:-1] + 0.5 * np.log(np.cos(t0) ** 2 + ws * np.sin(t0) ** 2)
    sup = float(np.max(np.abs(H)))
    for hit, d in ((_reaches(t0, t1, 0.0), 1.0), (_reaches(t0, t1, 0.5 * math.pi), ws)):
        hit &= ws != 1.0
        inner = base - 0.5 * np.log(d * np.ones_like(base))
        if np.any(hit):
            sup = max(sup, float(np.max(np.abs(inner[hit]))))
    return np.column_stack([xs, H]), sup


def weight_floor_sweep(
    omega: PiecewiseFn,
    g: PiecewiseFn,
    lam: float,
    ks: Sequence[int],
    c: float = 1.0,
    theta0: float = 0.0,
    tol: float = LEMMA_TOL,
) -> np.ndarray:
    """Oscillatory integrals for the lifted weights ``omega + 1/k``; rows ``(k, sin, cos)``."""
    rows = []
    for k in ks:
        if k < 1:
            raise ValueError("k must be >= 1")
        s, co = oscillatory_integrals(omega + 1.0 / k, g, lam, c, theta0, tol)
        rows.append((k, s, co))
    return np.array(rows, dtype=float)


# -- eigenfunction bounds ----------------------------------------------------


def supnorm_sweep(
    prob_template: SLProblem,
    potentials: Sequence[PiecewiseFn],
    N: int,
    tol: float = DEFAULT_TOL,
) -> tuple[float, np.ndarray]:
    """Largest eigenfunction sup norm over ``potentials`` and ``n <= N``,
    with the per-``n`` maximum profile."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not potentials:
        raise ValueError("need at least one potential")
    profile = np.zeros(N)
    for q in potentials:
        prob = prob_template.with_q(q)
        lams = eigenvalues_up_to(prob, N, tol)
        for i, lam in enumerate(lams):
            profile[i] = max(profile[i], eigenfunction_at(prob, i + 1, lam).sup_norm)
    return float(profile.max()), profile


def voc_residual(
    omega: PiecewiseFn,
    q: PiecewiseFn,
    C1: float,
    C2: float,
    lam: float,
    tol: float = LEMMA_TOL,
) -> float:
    """``sup |y - C1 psi|`` where ``y`` solves ``-y'' + q y = lam omega y`` with
    ``y(a) = C1``, ``y'(a) = C2`` and ``psi`` is the cosine-type solution of
    the ``q == 0`` equation.

    ``y`` comes from exact transfer matrices and ``psi`` from the adaptive
    angle/radius integration, on a grid with ``VOC_SAMPLES`` points per
    half-period of the fastest local oscillation.
    """
    lam = _check_lambda(lam)
    if C1 == 0.0 and C2 == 0.0:
        raise ValueError("(C1, C2) must not both vanish")
    if not omega.same_interval(q):
        raise ValueError("omega and q must live on the same interval")
    rate = math.sqrt(lam * float(np.max(omega.values)) + float(np.max(np.abs(q.values))))
    m = max(16, int(math.ceil(rate * (omega.b - omega.a) / math.pi * VOC_SAMPLES)))
    grid = np.union1d(np.linspace(omega.a, omega.b, m + 1), np.union1d(omega.breakpoints, q.breakpoints))
    pair = fundamental_pair(omega, lam, tol, nodes=grid)
    prob = SLProblem.normal_form(q, omega)
    raw = transfer_raw(prob, lam, float(C1), float(C2), nodes=grid)
    k = _snap(raw.xs, pair.xs)
    y = raw.y[k] * np.exp(raw.log_scale[k])
    return float(np.max(np.abs(y - C1 * pair.psi)))


def check_weight(omega: PiecewiseFn) -> None:
    """Raise unless ``omega`` is monotone with a positive essential infimum."""
    rep = hypothesis_report(omega)
    if not rep.h1:
        raise HypothesisViolation("omega is not monotone")
    if not rep.h2:
        raise HypothesisViolation("omega has no positive lower bound")
