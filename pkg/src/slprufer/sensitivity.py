"""Eigenvalue response to potential perturbations.

The derivative of ``lambda_n`` in direction ``h`` is ``int phi_n^2 h``; it is
checked against central differences and used to bound eigenvalue gaps along
the straight path between two potentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .coefficients import PiecewiseFn, SLProblem, affine_combine, common_refinement, l1_norm
from .eigensolver import DEFAULT_TOL, eigenfunction, eigenfunction_at, eigenvalue, eigenvalues_up_to

__all__ = [
    "LipschitzReport",
    "derivative_functional",
    "fd_derivative",
    "lipschitz_ratio",
    "path_bound",
    "path_nodes",
    "DEFAULT_SLACK",
]

DEFAULT_SLACK = 0.05
SWEEP_NODES = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class LipschitzReport:
    n_max: int
    ratios: np.ndarray
    sup_ratio: float
    m_hat: float
    bound: float
    passed: bool
    distance: float = 0.0
    lambdas_q1: np.ndarray = field(default=None, repr=False)
    lambdas_q2: np.ndarray = field(default=None, repr=False)
    path_bounds: np.ndarray = field(default=None, repr=False)
    slack: float = DEFAULT_SLACK


def _check_direction(prob: SLProblem, h: PiecewiseFn) -> None:
    if not prob.q.same_interval(h):
        raise ValueError(f"direction lives on [{h.a}, {h.b}], problem on {prob.interval}")


def derivative_functional(
    prob: SLProblem,
    n: int,
    h: PiecewiseFn,
    tol: float = DEFAULT_TOL,
    *,
    dps: Optional[int] = None,
) -> float:
    """``int phi_n^2 h`` with ``phi_n`` normalised in the weighted norm.

    The eigenfunction grid contains every breakpoint of ``h``, so the integral
    is a sum of closed-form squares over sub-pieces. With ``dps`` the
    eigenvalue and the integral are recomputed in extended precision.
    """
    _check_direction(prob, h)
    if dps is not None:
        from .highprec import mp_eigenvalue, mp_phi2_integral

        lam = mp_eigenvalue(prob, n, eigenvalue(prob, n, tol), dps=dps)
        return float(mp_phi2_integral(prob, lam, h, dps=dps))
    ep = eigenfunction(prob, n, tol, nodes=h.breakpoints)
    return ep.integrate_phi2(h)


def default_eps(prob: SLProblem) -> float:
    return 1e-4 * max(1.0, l1_norm(prob.q))


def fd_derivative(
    prob: SLProblem,
    n: int,
    h: PiecewiseFn,
    eps: Optional[float] = None,
    tol: float = 1e-13,
    *,
    dps: Optional[int] = None,
) -> float:
    """Central difference ``(lambda_n(q + eps h) - lambda_n(q - eps h)) / (2 eps)``.

    Double-precision differences carry roundoff of order ``tol * lambda / eps``;
    pass ``dps`` to evaluate both eigenvalues in extended precision instead.
    """
    _check_direction(prob, h)
    if eps is None:
        eps = default_eps(prob)
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    plus = prob.with_q(prob.q + h * eps)
    minus = prob.with_q(prob.q - h * eps)
    if dps is None:
        return (eigenvalue(plus, n, tol) - eigenvalue(minus, n, tol)) / (2.0 * eps)
    import mpmath as mp

    from .highprec import mp_eigenvalue

    lp = mp_eigenvalue(prob, n, eigenvalue(plus, n, 1e-12), dps=dps, direction=h, eps=eps)
    lm = mp_eigenvalue(prob, n, eigenvalue(minus, n, 1e-12), dps=dps, direction=h, eps=-eps)
    with mp.workdps(dps):
        return float((lp - lm) / (2 * mp.mpf(eps)))


def _canonical(q1: PiecewiseFn, q2: PiecewiseFn):
    """Order a pair deterministically so path quantities are symmetric bit for bit."""
    k1 = (q1.breakpoints.tobytes(), q1.values.tobytes())
    k2 = (q2.breakpoints.tobytes(), q2.values.tobytes())
    return (q1, q2) if k1 <= k2 else (q2, q1)


def _abs_diff(q1: PiecewiseFn, q2: PiecewiseFn) -> PiecewiseFn:
    bp = common_refinement(q1, q2)
    return PiecewiseFn(bp, np.abs(q1.on(bp) - q2.on(bp)))


def path_nodes(t_grid: Optional[Sequence[float]] = None):
    """Quadrature nodes and weights on ``[0, 1]``: 5-point Gauss-Legendre by
    default, trapezoid on ``t_grid`` otherwise."""
    if t_grid is None:
        x, w = np.polynomial.legendre.leggauss(5)
        return 0.5 * (x + 1.0), 0.5 * w
    t = np.asarray(t_grid, dtype=float)
    if t.size < 2:
        raise ValueError("t_grid needs at least two nodes")
    if np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] > 1:
        raise ValueError("t_grid must be strictly increasing inside [0, 1]")
    w = np.zeros_like(t)
    d = np.diff(t)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return t, w


def _path_profile(template, q1, q2, N, ts, tol, dq):
    """Per ``t``: eigenvalues, sup norms and ``int phi^2 |dq|`` for ``n <= N``."""
    lams, sups, weights = [], [], []
    for t in ts:
        prob = template.with_q(affine_combine(q1, q2, float(t)))
        lam = eigenvalues_up_to(prob, N, tol)
        s = np.empty(N)
        m = np.empty(N)
        for i in range(N):
            ep = eigenfunction_at(prob, i + 1, lam[i], nodes=dq.breakpoints)
            s[i] = ep.sup_norm
            m[i] = ep.integrate_phi2(dq)
        lams.append(lam)
        sups.append(s)
        weights.append(m)
    return np.array(lams), np.array(sups), np.array(weights)


def path_bound(
    prob_template: SLProblem,
    q1: PiecewiseFn,
    q2: PiecewiseFn,
    n: int,
    t_grid: Optional[Sequence[float]] = None,
    tol: float = DEFAULT_TOL,
) -> float:
    """Quadrature in ``t`` of ``int phi_n(.; t)^2 |q2 - q1|`` along ``q_t = q1 + t (q2 - q1)``."""
    if n < 1:
        raise ValueError("index n must be >= 1")
    q1, q2 = _canonical(q1, q2)
    dq = _abs_diff(q1, q2)
    if l1_norm(dq) == 0.0:
        return 0.0
    ts, wts = path_nodes(t_grid)
    vals = []
    for t in ts:
        prob = prob_template.with_q(affine_combine(q1, q2, float(t)))
        vals.append(derivative_functional(prob, n, dq, tol))
    return float(np.dot(wts, vals))


def lipschitz_ratio(
    prob_template: SLProblem,
    q1: PiecewiseFn,
    q2: PiecewiseFn,
    N: int,
    tol: float = DEFAULT_TOL,
    *,
    t_nodes: Sequence[float] = SWEEP_NODES,
    slack: float = DEFAULT_SLACK,
    with_path_bounds: bool = False,
) -> LipschitzReport:
    """Empirical Lipschitz certificate for ``n <= N``.

    ``m_hat`` is the largest eigenfunction sup norm seen on the path nodes
    ``t_nodes``; the pass flag compares ``max ratio`` with ``m_hat^2``. With
    ``with_path_bounds`` the same solves give a trapezoid path bound per ``n``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    dist = l1_norm(q1 - q2)
    if dist == 0.0:
        raise ValueError("q1 and q2 coincide; the ratio is undefined")
    lam1 = eigenvalues_up_to(prob_template.with_q(q1), N, tol)
    lam2 = eigenvalues_up_to(prob_template.with_q(q2), N, tol)
    ratios = np.abs(lam1 - lam2) / dist
    a, b = _canonical(q1, q2)
    dq = _abs_diff(a, b)
    ts = np.asarray(t_nodes, dtype=float)
    _, sups, weights = _path_profile(prob_template, a, b, N, ts, tol, dq)
    m_hat = float(sups.max())
    pb = None
    if with_path_bounds:
        _, wts = path_nodes(ts)
        pb = wts @ weights
    sup_ratio = float(ratios.max())
    bound = m_hat * m_hat
    return LipschitzReport(
        N, ratios, sup_ratio, m_hat, bound, bool(sup_ratio <= bound * (1.0 + slack)),
        dist, lam1, lam2, pb, slack,
    )
