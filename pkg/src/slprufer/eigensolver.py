"""Indexed eigenvalues and normalised eigenfunctions by Pruefer-angle shooting.

The ``n``-th eigenvalue is the root of the miss distance

    D(lam) = theta(b; lam) - target_angle(beta, lam) - (n - 1) pi,

which is negative below ``lambda_n`` and positive above it. The scaled angle
needs ``lam > 0``, so the search runs on the shifted problem
``(q + s omega, lam + s)`` with ``s`` chosen from a certified lower bound of
the spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .coefficients import PiecewiseFn, SLProblem, l1_norm, liouville_transform
from .prufer import (
    DEFAULT_RK_TOL,
    initial_angle,
    initial_data,
    merged_pieces,
    rk_theta_end,
    target_angle,
    transfer_raw,
)

__all__ = [
    "Eigenpair",
    "EigenSolverError",
    "BracketError",
    "OscillationMismatch",
    "miss_distance",
    "eigenvalue",
    "eigenfunction",
    "eigenvalues_up_to",
    "spectral_floor",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-9
BACKENDS = ("transfer", "rk")
# sub-pieces per quarter period on eigenfunction grids (8 samples per half-period)
EIGENFUNCTION_REFINE = 4
# largest |floor| relative to the coefficient scale before the shift loses the data
FLOOR_LIMIT = 1e8


class EigenSolverError(RuntimeError):
    pass


class BracketError(EigenSolverError):
    """No sign change of the miss distance could be found."""


class OscillationMismatch(EigenSolverError):
    """Eigenfunction zero count disagrees with the requested index."""


@dataclass(frozen=True)
class Eigenpair:
    index: int
    lambda_n: float
    xs: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    normalization_beta: float
    sup_norm: float
    oscillations: int
    # per sub-interval data for exact quadrature of phi^2 against piecewise functions
    cell_phi2: np.ndarray = None

    def integrate_phi2(self, h: PiecewiseFn) -> float:
        """Exact ``int phi^2 h`` when ``h``'s breakpoints are grid nodes."""
        mids = 0.5 * (self.xs[1:] + self.xs[:-1])
        return float(np.dot(self.cell_phi2, h(mids)))


def _weyl_guess(prob: SLProblem, n: int) -> float:
    bp, p, q, w = prob.pieces()
    root = float(np.dot(np.sqrt(w / p), np.diff(bp)))
    return (n * math.pi / root) ** 2


class _Shooter:
    """Miss-distance evaluator for one problem, shared by every index."""

    def __init__(self, prob: SLProblem, backend: str = "transfer", rk_tol: float = DEFAULT_RK_TOL):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
        self.prob = prob
        self.backend = backend
        self.rk_tol = rk_tol
        self.bp, self.p, self.q, self.w = merged_pieces(prob)
        self.y0, self.py0 = initial_data(prob.alpha)
        self.floor = spectral_floor(prob)
        self.shift = 1.0 - self.floor if self.floor < 1.0 else 0.0
        if backend == "rk":
            nf = prob if prob.is_normal_form else liouville_transform(prob)
            self.rk_prob = nf.with_q(nf.q + self.shift * nf.omega) if self.shift else nf

    def theta_end(self, lam_shifted: float) -> float:
        if self.backend == "rk":
            th0 = initial_angle(self.prob.alpha, lam_shifted)
            return rk_theta_end(self.rk_prob, lam_shifted, th0, self.rk_tol)
        scale = math.sqrt(lam_shifted)
        q = self.q + self.shift * self.w if self.shift else self.q
        theta, *_ = _kernels.transfer_shoot(
            self.bp, self.p, q, self.w, lam_shifted, scale, self.y0, self.py0, 0, 1
        )
        return theta

    def miss(self, lam: float, n: int) -> float:
        """Miss distance at an unshifted ``lam`` (must lie above the floor)."""
        ls = lam + self.shift
        if not ls > 0:
            raise ValueError(f"lambda={lam} is below the spectral floor {self.floor}")
        return self.theta_end(ls) - target_angle(self.prob.beta, ls) - (n - 1) * math.pi

    def solve(self, n: int, tol: float, lo: Optional[float] = None) -> float:
        if n < 1:
            raise ValueError("index n must be >= 1")
        if not tol > 0:
            raise ValueError("tol must be positive")
        floor = self.floor
        lo = floor if lo is None or lo < floor else lo
        d_lo = self.miss(lo, n)
        if d_lo > 0:
            raise BracketError(f"miss distance positive at lower bracket {lo} for n={n}")
        if d_lo == 0:
            return lo
        guess = _weyl_guess(self.prob, n)
        hi = max(lo + 1.0, 1.5 * guess + abs(floor))
        d_hi = self.miss(hi, n)
        step = max(1.0, hi - lo)
        tries = 0
        while d_hi <= 0:
            if d_hi == 0:
                return hi
            lo, d_lo = hi, d_hi
            step *= 2.0
            hi = lo + step
            d_hi = self.miss(hi, n)
            tries += 1
            if tries > 200 or not math.isfinite(hi):
                raise BracketError(f"no upper bracket for n={n} (last tried lambda={hi})")
        # tighten the lower end cheaply with the asymptotic guess
        if lo < 0.5 * guess < hi and self.miss(0.5 * guess, n) < 0:
            lo = 0.5 * guess
        if d_lo >= 0 or d_hi <= 0:
            raise BracketError(f"miss distance does not change sign on [{lo}, {hi}] for n={n}")
        scale = min(abs(lo), abs(hi)) if lo * hi > 0 else 0.0
        xtol = 0.5 * tol * max(1.0, scale)
        return brentq(self.miss, lo, hi, args=(n,), xtol=xtol, rtol=1e-15, maxiter=500)


def _count_below(bp, p, q, w, alpha, beta, lam) -> int:
    """Number of eigenvalues strictly below ``lam`` (unscaled angle)."""
    y0, py0 = initial_data(alpha)
    theta, *_ = _kernels.transfer_shoot(bp, p, q, w, lam, 1.0, y0, py0, 0, 1)
    gamma = math.pi - math.atan2(math.sin(beta), math.cos(beta))
    d = theta - gamma
    return 0 if d <= 0 else int(math.floor(d / math.pi)) + 1


def spectral_floor(prob: SLProblem) -> float:
    """A value with no eigenvalue below it, verified by oscillation counting.

    Boundary angles very close to 0 or pi push the first eigenvalue towards
    ``-cot(angle)^2``; once the floor is so low that the spectral shift would
    swamp the coefficients in double precision the search gives up.
    """
    bp, p, q, w = merged_pieces(prob)
    if _count_below(bp, p, q, w, prob.alpha, prob.beta, 1.0) == 0:
        return 1.0
    data = 1.0 + float(np.max(np.abs(q / p))) / float(np.min(w / p))
    lam = -(1.0 + l1_norm(prob.q) / float(np.min(prob.omega.values)))
    while lam >= -FLOOR_LIMIT * data:
        if _count_below(bp, p, q, w, prob.alpha, prob.beta, lam) == 0:
            return lam
        lam = 2.0 * lam - 1.0
    raise BracketError(
        f"spectrum extends below {lam:.3g}; boundary angles alpha={prob.alpha!r}, "
        f"beta={prob.beta!r} are too close to 0 or pi for a shifted solve"
    )


def miss_distance(prob: SLProblem, n: int, lam: float, backend: str = "transfer") -> float:
    """Shooting residual ``theta(b; lam) - gamma(lam) - (n - 1) pi`` for ``lam > 0``."""
    if n < 1:
        raise ValueError("index n must be >= 1")
    lam = float(lam)
    if not lam > 0:
        raise ValueError(f"miss_distance needs lambda > 0, got {lam}")
    if backend == "rk":
        nf = prob if prob.is_normal_form else liouville_transform(prob)
        theta = rk_theta_end(nf, lam, initial_angle(prob.alpha, lam))
    elif backend == "transfer":
        bp, p, q, w = merged_pieces(prob)
        y0, py0 = initial_data(prob.alpha)
        theta, *_ = _kernels.transfer_shoot(bp, p, q, w, lam, math.sqrt(lam), y0, py0, 0, 1)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return theta - target_angle(prob.beta, lam) - (n - 1) * math.pi


def eigenvalue(
    prob: SLProblem, n: int, tol: float = DEFAULT_TOL, backend: str = "transfer"
) -> float:
    """``lambda_n`` with ``|error| <= tol * max(1, |lambda_n|)``; the eigenfunction
    zero count is checked against ``n - 1``.
    """
    lam = _Shooter(prob, backend).solve(n, tol)
    _check_oscillations(prob, n, lam)
    return lam


def eigenvalues_up_to(
    prob: SLProblem, N: int, tol: float = DEFAULT_TOL, backend: str = "transfer"
) -> np.ndarray:
    """First ``N`` eigenvalues, strictly increasing."""
    if N < 1:
        raise ValueError("N must be >= 1")
    sh = _Shooter(prob, backend)
    out = []
    lo = None
    for n in range(1, N + 1):
        lam = sh.solve(n, tol, lo)
        if out and not lam > out[-1]:
            raise EigenSolverError(f"eigenvalues not strictly increasing at n={n}")
        _check_oscillations(prob, n, lam)
        out.append(lam)
        lo = lam
    return np.array(out)


def _count_interior_zeros(y: np.ndarray, py: np.ndarray, alpha: float, beta: float, rtol: float = 1e-7) -> int:
    vals = np.array(y, dtype=float)
    if alpha == 0.0:
        vals = vals[1:]
        py = py[1:]
    if beta == 0.0:
        vals = vals[:-1]
    elif abs(vals[-1]) <= rtol * float(np.max(np.abs(vals))):
        # a right-end value at solver-tolerance level has no reliable sign;
        # the boundary condition y = -tan(beta) p y' supplies it
        vals[-1] = -math.sin(beta) * math.cos(beta) * py[-1]
    s = np.sign(vals)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _mirror(prob: SLProblem) -> SLProblem:
    """The problem in ``s = a + b - x``; the right condition becomes the left one."""
    alpha = min(math.pi - prob.beta, math.nextafter(math.pi, 0.0)) if prob.beta > 0.0 else 0.0
    return SLProblem(prob.p.reflect(), prob.q.reflect(), prob.omega.reflect(), alpha, 0.0)


def _shot(prob: SLProblem, lam: float, nodes):
    y0, py0 = math.sin(prob.alpha), -math.cos(prob.alpha)
    return transfer_raw(prob, lam, y0, py0, n_sub=EIGENFUNCTION_REFINE, nodes=nodes, refine=EIGENFUNCTION_REFINE)


def _eigen_raw(prob: SLProblem, lam: float, nodes=None):
    """Eigenfunction samples spliced from shots off both ends.

    A single shot amplifies the eigenvalue error wherever the eigenfunction
    decays in the shooting direction. Each shot is kept on the side where it
    grows: the splice node maximises the sum of both log radii, which peaks
    where the eigenfunction itself is largest.
    """
    left = _shot(prob, lam, nodes)
    a, b = prob.interval
    mirrored = None if nodes is None else (a + b) - np.asarray(nodes, dtype=float)
    right = _shot(_mirror(prob), lam, mirrored)
    if len(right.xs) != len(left.xs):
        return left
    # back to x: reverse nodes, p y' changes sign, cells swap their left node
    ry, rpy, rls = right.y[::-1], -right.py[::-1], right.log_scale[::-1]
    rsq = right.sq[::-1] * np.exp(2.0 * (right.log_scale[:-1][::-1] - rls[:-1]))
    rsmax = right.smax[::-1] * np.exp(right.log_scale[:-1][::-1] - rls[:-1])
    score = left.log_scale + 0.5 * np.log(left.y**2 + left.py**2)
    score = score + rls + 0.5 * np.log(ry**2 + rpy**2)
    m = int(np.argmax(score))
    if m == len(left.xs) - 1:
        return left
    dot = left.y[m] * ry[m] + left.py[m] * rpy[m]
    norm2 = ry[m] ** 2 + rpy[m] ** 2
    sign = 1.0 if dot > 0 else -1.0
    shift = left.log_scale[m] - rls[m] + math.log(abs(dot) / norm2)
    y = np.concatenate([left.y[:m], sign * ry[m:]])
    py = np.concatenate([left.py[:m], sign * rpy[m:]])
    ls = np.concatenate([left.log_scale[:m], rls[m:] + shift])
    sq = np.concatenate([left.sq[:m], rsq[m:]])
    smax = np.concatenate([left.smax[:m], rsmax[m:]])
    return replace(left, y=y, py=py, log_scale=ls, sq=sq, smax=smax)


def _check_oscillations(prob: SLProblem, n: int, lam: float) -> int:
    raw = _eigen_raw(prob, lam)
    rel = np.exp(raw.log_scale - raw.log_scale.max())
    zeros = _count_interior_zeros(raw.y * rel, raw.py * rel, prob.alpha, prob.beta)
    if zeros != n - 1:
        raise OscillationMismatch(
            f"eigenfunction for n={n} at lambda={lam} has {zeros} interior zeros, expected {n - 1}"
        )
    return zeros


def eigenfunction_at(prob: SLProblem, n: int, lam: float, nodes=None) -> Eigenpair:
    """Normalised eigenfunction for an already computed ``lam = lambda_n``."""
    raw = _eigen_raw(prob, lam, nodes)
    lmax = float(raw.log_scale.max())
    rel = np.exp(raw.log_scale - lmax)
    y = raw.y * rel
    cell = raw.sq * rel[:-1] ** 2
    mass = float(np.dot(raw.w[raw.piece], cell))
    inv = 1.0 / math.sqrt(mass)
    beta = math.exp(-lmax) * inv
    phi = y * inv
    p_node = np.append(raw.p[raw.piece], raw.p[raw.piece[-1]])
    phi_prime = raw.py * rel * inv / p_node
    sup = float(np.max(raw.smax * rel[:-1])) * inv
    zeros = _count_interior_zeros(phi, raw.py * rel, prob.alpha, prob.beta)
    if zeros != n - 1:
        raise OscillationMismatch(
            f"eigenfunction for n={n} at lambda={lam} has {zeros} interior zeros, expected {n - 1}"
        )
    return Eigenpair(n, lam, raw.xs, phi, phi_prime, beta, sup, zeros, cell * inv * inv)


def eigenfunction(
    prob: SLProblem,
    n: int,
    tol: float = DEFAULT_TOL,
    backend: str = "transfer",
    *,
    nodes=None,
) -> Eigenpair:
    """``lambda_n`` together with the ``omega``-normalised eigenfunction.

    The eigenfunction is ``beta * y`` with ``y`` the solution started from
    ``(sin(alpha), -cos(alpha))``; ``nodes`` are forced into the sample grid.
    """
    lam = _Shooter(prob, backend).solve(n, tol)
    return eigenfunction_at(prob, n, lam, nodes)
