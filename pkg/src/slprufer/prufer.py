"""Scaled Pruefer angle and radius for ``-y'' + q y = lambda omega y``.

With ``y = rho sin(theta) / sqrt(lambda)`` and ``y' = rho cos(theta)`` the
angle obeys a first-order equation that does not involve the radius. Two
backends produce the same trajectory:

* :func:`propagate_transfer` multiplies exact per-piece propagators of
  ``(y, y')`` and recovers the unwrapped angle by counting zeros of ``y``.
  It also works for ``lambda <= 0`` (angle fields are then left empty).
* :func:`integrate_prufer` integrates the angle equation itself with an
  embedded 8(5,3) Runge-Kutta pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .coefficients import PiecewiseFn, SLProblem, common_refinement

__all__ = [
    "PruferTrajectory",
    "FundamentalPair",
    "BackendError",
    "initial_angle",
    "target_angle",
    "initial_data",
    "propagate_transfer",
    "integrate_prufer",
    "fundamental_pair",
    "DEFAULT_RK_TOL",
]

DEFAULT_RK_TOL = 1e-10
MAX_RK_STEPS = 50_000_000


class BackendError(RuntimeError):
    """Raised when a backend cannot produce a trajectory."""


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return lam


def initial_angle(alpha: float, lam: float) -> float:
    """Angle in ``[0, pi)`` of the left boundary condition.

    Solves ``sin(t) cos(alpha) + sqrt(lam) cos(t) sin(alpha) = 0``.
    """
    lam = _check_lambda(lam)
    t = math.atan2(math.sqrt(lam) * math.sin(alpha), -math.cos(alpha))
    if t < 0:
        t += math.pi
    if t >= math.pi:
        # alpha == 0 is the origin; a tiny positive alpha rounds up to pi
        return 0.0 if alpha == 0.0 else math.nextafter(math.pi, 0.0)
    return t


def target_angle(beta: float, lam: float) -> float:
    """Angle in ``(0, pi]`` of the right boundary condition."""
    lam = _check_lambda(lam)
    return math.pi - math.atan2(math.sqrt(lam) * math.sin(beta), math.cos(beta))


def initial_data(alpha: float) -> tuple[float, float]:
    """``(y(a), (p y')(a))`` on the left boundary condition with ``y(a) >= 0``."""
    if alpha == 0.0:
        return 0.0, 1.0
    return math.sin(alpha), -math.cos(alpha)


def _angle_start(scale: float, y0: float, py0: float) -> tuple[float, int]:
    t = math.atan2(scale * y0, py0)
    if t < 0:
        t += 2 * math.pi
    # the sign of y0 fixes the half-turn even when t rounds onto a multiple of pi
    turns = 0 if (y0 > 0 or (y0 == 0 and py0 > 0)) else 1
    return t, turns


def _reduced_angles(scale: float, y: np.ndarray, py: np.ndarray) -> np.ndarray:
    ang = np.arctan2(scale * y, py)
    ang = np.where(ang < 0, ang + np.pi, ang)
    return np.where(ang >= np.pi, np.where(y == 0, 0.0, np.pi), ang)


def merged_pieces(prob: SLProblem, nodes: Optional[Sequence[float]] = None):
    """Common refinement of the coefficients plus optional extra ``nodes``."""
    bp, p, q, w = prob.pieces()
    if nodes is not None and len(nodes):
        a, b = prob.interval
        nodes = np.asarray(nodes, dtype=float)
        if np.any((nodes < a) | (nodes > b)):
            raise ValueError("nodes outside the interval")
        pts = np.unique(np.concatenate([[a, b], nodes]))
        bp2 = common_refinement(PiecewiseFn(bp, p), PiecewiseFn(pts, np.zeros(len(pts) - 1)))
        mids = 0.5 * (bp2[1:] + bp2[:-1])
        idx = np.clip(np.searchsorted(bp, mids, side="right") - 1, 0, len(p) - 1)
        bp, p, q, w = bp2, p[idx], q[idx], w[idx]
    return (
        np.ascontiguousarray(bp),
        np.ascontiguousarray(p),
        np.ascontiguousarray(q),
        np.ascontiguousarray(w),
    )


@dataclass(frozen=True)
class PruferTrajectory:
    """Sampled angle and log-radius of one solution at fixed ``lam``.

    ``y`` and ``y_prime`` are filled by the transfer backend only. For
    ``lam <= 0`` the angle and radius arrays are ``None``.
    """

    lam: float
    sample_xs: np.ndarray
    theta: Optional[np.ndarray]
    log_rho: Optional[np.ndarray]
    oscillation_count: int
    y: Optional[np.ndarray] = None
    y_prime: Optional[np.ndarray] = None

    @property
    def theta_end(self) -> float:
        return float(self.theta[-1])

    def at(self, x: float) -> int:
        """Index of the sample closest to ``x``."""
        return int(np.argmin(np.abs(self.sample_xs - x)))


@dataclass(frozen=True)
class _TransferRaw:
    xs: np.ndarray
    y: np.ndarray  # normalised
    py: np.ndarray
    log_scale: np.ndarray
    turns: np.ndarray
    piece: np.ndarray
    sq: np.ndarray
    smax: np.ndarray
    p: np.ndarray
    q: np.ndarray
    w: np.ndarray


def transfer_raw(
    prob: SLProblem,
    lam: float,
    y0: float,
    py0: float,
    *,
    scale: float = 1.0,
    n_sub: int = 1,
    nodes=None,
    refine: int = 1,
) -> _TransferRaw:
    """Exact propagation of ``(y, p y')`` for any ``p``; no angle bookkeeping beyond turns."""
    bp, p, q, w = merged_pieces(prob, nodes)
    _, m0 = _angle_start(scale, y0, py0)
    xs, y, py, ls, turns, piece, sq, smax = _kernels.transfer_trajectory(
        bp, p, q, w, float(lam), float(scale), float(y0), float(py0), m0, int(n_sub), int(refine)
    )
    return _TransferRaw(xs, y, py, ls, turns, piece, sq, smax, p, q, w)


def propagate_transfer(
    prob: SLProblem,
    lam: float,
    n_sub: int = 1,
    *,
    theta0: Optional[float] = None,
    nodes: Optional[Sequence[float]] = None,
) -> PruferTrajectory:
    """Exact piecewise propagation of ``(y, y')`` through a normal-form problem.

    Each piece is cut into at least ``n_sub`` sub-pieces and further until
    ``|k| dx < pi/2`` with ``k^2 = lam*omega - q``, so ``y`` has at most one
    zero per sub-piece. Without ``theta0`` the start is the left boundary
    condition.
    """
    if not prob.is_normal_form:
        raise ValueError("propagate_transfer needs a normal-form problem (p == 1)")
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    lam = float(lam)
    positive = lam > 0
    scale = math.sqrt(lam) if positive else 1.0
    if theta0 is None:
        y0, py0 = initial_data(prob.alpha)
    else:
        if not positive:
            raise ValueError("theta0 needs lambda > 0")
        y0, py0 = math.sin(theta0) / scale, math.cos(theta0)
    raw = transfer_raw(prob, lam, y0, py0, scale=scale, n_sub=n_sub, nodes=nodes)
    y = raw.y * np.exp(raw.log_scale)
    yp = raw.py * np.exp(raw.log_scale)
    count = int(raw.turns[-1] - raw.turns[0]) - (1 if raw.y[-1] == 0.0 else 0)
    theta = log_rho = None
    if positive:
        theta = raw.turns * np.pi + _reduced_angles(scale, raw.y, raw.py)
        if theta0 is not None:
            theta = theta + (theta0 - theta[0])  # exact start, same branch
        log_rho = raw.log_scale + 0.5 * np.log(lam * raw.y**2 + raw.py**2)
    return PruferTrajectory(lam, raw.xs, theta, log_rho, count, y, yp)


def _rk_run(prob: SLProblem, lam: float, theta0: float, tol: float, record: bool, nodes=None):
    if not prob.is_normal_form:
        raise ValueError("integrate_prufer needs a normal-form problem (p == 1)")
    lam = _check_lambda(lam)
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    bp, _, q, w = merged_pieces(prob, nodes)
    xs, th, ds, dc, pc, status = _kernels.prufer_rk(
        bp, q, w, lam, float(theta0), float(tol), bool(record), MAX_RK_STEPS
    )
    if status != 0:
        raise BackendError(f"step limit reached integrating at lambda={lam}")
    return xs, th, ds, dc, pc, q, w


def rk_theta_end(prob: SLProblem, lam: float, theta0: float, tol: float = DEFAULT_RK_TOL) -> float:
    """Angle at the right endpoint only."""
    _, th, *_ = _rk_run(prob, lam, theta0, tol, False)
    return float(th[-1])


def integrate_prufer(
    prob: SLProblem,
    lam: float,
    tol: float = DEFAULT_RK_TOL,
    *,
    theta0: Optional[float] = None,
    nodes: Optional[Sequence[float]] = None,
) -> PruferTrajectory:
    """Adaptive integration of the angle equation with the radius by quadrature.

    ``tol`` bounds the local error per unit length; every coefficient
    breakpoint (and every entry of ``nodes``) is a step boundary.
    """
    lam = _check_lambda(lam)
    if theta0 is None:
        theta0 = initial_angle(prob.alpha, lam)
        y0, py0 = initial_data(prob.alpha)
        log_rho0 = 0.5 * math.log(lam * y0 * y0 + py0 * py0)
    else:
        log_rho0 = 0.0
    xs, th, ds, dc, pc, q, w = _rk_run(prob, lam, theta0, tol, True, nodes)
    coef = 0.5 * math.sqrt(lam) * (1.0 - w + q / lam)
    log_rho = log_rho0 + np.concatenate([[0.0], np.cumsum(coef[pc] * ds)])
    count = int(math.floor(th[-1] / math.pi) - math.floor(th[0] / math.pi))
    if th[-1] == math.floor(th[-1] / math.pi) * math.pi and count > 0:
        count -= 1
    return PruferTrajectory(lam, xs, th, log_rho, count)


@dataclass(frozen=True)
class FundamentalPair:
    """Polar data of ``phi`` (``phi(0)=0, phi'(0)=1``) and ``psi``
    (``psi(0)=1, psi'(0)=0``) for ``-y'' = lam * omega * y``.

    ``phi = r sin(nu) / sqrt(lam)``, ``phi' = r cos(nu)``,
    ``psi = mu sin(sigma)``, ``psi' = sqrt(lam) mu cos(sigma)``.
    """

    lam: float
    xs: np.ndarray
    r: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    @property
    def phi(self) -> np.ndarray:
        return self.r * np.sin(self.nu) / math.sqrt(self.lam)

    @property
    def phi_prime(self) -> np.ndarray:
        return self.r * np.cos(self.nu)

    @property
    def psi(self) -> np.ndarray:
        return self.mu * np.sin(self.sigma)

    @property
    def psi_prime(self) -> np.ndarray:
        return math.sqrt(self.lam) * self.mu * np.cos(self.sigma)

    def wronskian(self) -> np.ndarray:
        # psi phi' - psi' phi = r mu sin(sigma - nu)
        return self.r * self.mu * np.sin(self.sigma - self.nu)


def fundamental_pair(
    omega: PiecewiseFn,
    lam: float,
    tol: float = DEFAULT_RK_TOL,
    *,
    nodes: Optional[Sequence[float]] = None,
) -> FundamentalPair:
    """Fundamental pair of the ``q == 0`` equation from two Runge-Kutta runs.

    Both runs share the node set (breakpoints plus ``nodes``) and are
    reported on ``nodes`` when given, otherwise on the union of both step
    grids, each sampled exactly at its own step points.
    """
    lam = _check_lambda(lam)
    prob = SLProblem.normal_form(PiecewiseFn.constant(0.0, omega.a, omega.b), omega)
    grid = None if nodes is None else np.asarray(nodes, dtype=float)
    if grid is None:
        # first pass fixes a common grid: the finer of the two step sets
        xa = _rk_run(prob, lam, 0.0, tol, True)[0]
        xb = _rk_run(prob, lam, 0.5 * math.pi, tol, True)[0]
        grid = np.unique(np.concatenate([xa, xb]))
    out = []
    for theta0 in (0.0, 0.5 * math.pi):
        xs, th, ds, dc, pc, q, w = _rk_run(prob, lam, theta0, tol, True, grid)
        coef = 0.5 * math.sqrt(lam) * (1.0 - w)
        lr = np.concatenate([[0.0], np.cumsum(coef[pc] * ds)])
        idx = np.clip(np.searchsorted(xs, grid), 0, len(xs) - 1)
        # the grid points are step boundaries; snap to the closest sample
        left = np.clip(idx - 1, 0, len(xs) - 1)
        pick = np.where(np.abs(xs[left] - grid) < np.abs(xs[idx] - grid), left, idx)
        out.append((th[pick], np.exp(lr[pick])))
    (nu, r), (sigma, mu) = out
    return FundamentalPair(lam, grid, r, nu, mu, sigma)
