"""Arbitrary-precision shooting used as an independent oracle.

Mirrors the transfer-matrix route with mpmath numbers and the unscaled
angle, which is continuous and increasing in ``lam`` for every ``lam``, so no
spectral shift is needed. Slow; intended for finite-difference checks where
double precision cannot resolve the truncation error.
"""

from __future__ import annotations

import mpmath as mp

from .coefficients import PiecewiseFn, SLProblem, common_refinement

__all__ = ["mp_eigenvalue", "mp_phi2_integral", "mp_context"]


def mp_context(dps: int):
    return mp.workdps(dps)


def _pieces(prob: SLProblem, extra: PiecewiseFn | None = None):
    fns = [prob.p, prob.q, prob.omega] + ([extra] if extra is not None else [])
    bp = common_refinement(*fns)
    vals = [f.on(bp) for f in fns]
    mpf = mp.mpf
    return (
        [mpf(float(x)) for x in bp],
        *[[mpf(float(v)) for v in arr] for arr in vals],
    )


def _nsub(k2, h):
    kh = mp.sqrt(abs(k2)) * h
    return int(mp.floor(kh / (mp.pi / 2))) + 1


def _prop(k2, h):
    if k2 > 0:
        k = mp.sqrt(k2)
        return mp.cos(k * h), mp.sin(k * h) / k
    if k2 < 0:
        kap = mp.sqrt(-k2)
        return mp.cosh(kap * h), mp.sinh(kap * h) / kap
    return mp.mpf(1), h


def _init(alpha):
    if alpha == 0:
        return mp.mpf(0), mp.mpf(1)
    a = mp.mpf(alpha)
    return mp.sin(a), -mp.cos(a)


def _theta_end(bp, p, q, w, lam, alpha):
    y, py = _init(alpha)
    m = 0
    for i in range(len(p)):
        h_piece = bp[i + 1] - bp[i]
        k2 = (lam * w[i] - q[i]) / p[i]
        ns = _nsub(k2, h_piece)
        h = h_piece / ns
        c, s = _prop(k2, h)
        for _ in range(ns):
            yn = c * y + s / p[i] * py
            pyn = -p[i] * k2 * s * y + c * py
            if y != 0 and (yn == 0 or (yn > 0) != (y > 0)):
                m += 1
            r = mp.hypot(yn, pyn)
            y, py = yn / r, pyn / r
    ang = mp.atan2(y, py)
    if ang < 0:
        ang += mp.pi
    if ang >= mp.pi:
        ang = mp.mpf(0) if y == 0 else mp.pi
    return m * mp.pi + ang


def _miss(bp, p, q, w, lam, alpha, beta, n):
    gamma = mp.pi - mp.atan2(mp.sin(mp.mpf(beta)), mp.cos(mp.mpf(beta)))
    return _theta_end(bp, p, q, w, lam, alpha) - gamma - (n - 1) * mp.pi


def mp_eigenvalue(
    prob: SLProblem,
    n: int,
    guess: float,
    dps: int = 40,
    width: float = 1e-6,
    *,
    direction: PiecewiseFn | None = None,
    eps=0,
):
    """``lambda_n`` to roughly ``dps`` digits, bracketed around a double-precision ``guess``.

    With ``direction`` the potential is ``q + eps * direction`` formed in
    extended precision, so tiny ``eps`` is not lost to binary64 rounding.
    """
    with mp.workdps(dps):
        if direction is None:
            bp, p, q, w = _pieces(prob)
        else:
            bp, p, q, w, hv = _pieces(prob, direction)
            e = mp.mpf(eps)
            q = [qi + e * hi for qi, hi in zip(q, hv)]
        f = lambda lam: _miss(bp, p, q, w, lam, prob.alpha, prob.beta, n)  # noqa: E731
        g = mp.mpf(guess)
        d = mp.mpf(width) * max(1, abs(g))
        lo, hi = g - d, g + d
        for _ in range(60):
            if f(lo) < 0:
                break
            lo -= d
            d *= 2
        else:
            raise RuntimeError("no lower bracket")
        d = mp.mpf(width) * max(1, abs(g))
        for _ in range(60):
            if f(hi) > 0:
                break
            hi += d
            d *= 2
        else:
            raise RuntimeError("no upper bracket")
        root = mp.findroot(f, (lo, hi), solver="anderson", tol=mp.mpf(10) ** (-dps + 5))
        return root


def _sq_int(k2, h, y0, d0):
    if k2 == 0:
        return y0 * y0 * h + y0 * d0 * h * h + d0 * d0 * h**3 / 3
    if k2 > 0:
        k = mp.sqrt(k2)
        icc = h / 2 + mp.sin(2 * k * h) / (4 * k)
        ics = (mp.sin(k * h) / k) ** 2 / 2
        iss = (2 * k * h - mp.sin(2 * k * h)) / (4 * k**3)
    else:
        kap = mp.sqrt(-k2)
        icc = h / 2 + mp.sinh(2 * kap * h) / (4 * kap)
        ics = (mp.sinh(kap * h) / kap) ** 2 / 2
        iss = (mp.sinh(2 * kap * h) - 2 * kap * h) / (4 * kap**3)
    return y0 * y0 * icc + 2 * y0 * d0 * ics + d0 * d0 * iss


def mp_phi2_integral(prob: SLProblem, lam, h: PiecewiseFn, dps: int = 40):
    """``int phi^2 h`` for the ``omega``-normalised solution at ``lam``."""
    with mp.workdps(dps):
        bp, p, q, w, hv = _pieces(prob, h)
        lam = mp.mpf(lam)
        y, py = _init(prob.alpha)
        mass = mp.mpf(0)
        acc = mp.mpf(0)
        for i in range(len(p)):
            width = bp[i + 1] - bp[i]
            k2 = (lam * w[i] - q[i]) / p[i]
            c, s = _prop(k2, width)
            piece = _sq_int(k2, width, y, py / p[i])
            mass += w[i] * piece
            acc += hv[i] * piece
            y, py = c * y + s / p[i] * py, -p[i] * k2 * s * y + c * py
        return acc / mass
