"""Compiled inner loops for the two shooting backends.

The transfer kernels propagate ``(y, p y')`` across constant pieces with the
exact 2x2 propagator and keep the pair normalised (log scale tracked
separately). The Runge-Kutta kernel integrates the angle equation together
with the running integrals of ``sin 2 theta`` and ``cos 2 theta``; the angle
is stored modulo pi with an integer turn counter so that rounding does not
grow with the number of turns.
"""

import math

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

HALF_PI = 0.5 * math.pi
# exponential pieces hold at most one zero; they are cut only to keep cosh finite
HYPER_STEP = 20.0

_A = np.ascontiguousarray(_dop.A[: _dop.N_STAGES, : _dop.N_STAGES])
_B = np.ascontiguousarray(_dop.B)
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)
_NS = _dop.N_STAGES


@njit(cache=True)
def n_subdivisions(k2, h, n_sub, refine):
    """Sub-pieces needed so that ``k * width < pi / (2 * refine)`` on oscillatory
    pieces and ``|k| * width < HYPER_STEP`` on exponential ones."""
    kh = math.sqrt(abs(k2)) * h
    if k2 < 0.0:
        m = (int(kh / HYPER_STEP) + 1) * refine
    else:
        m = (int(kh / HALF_PI) + 1) * refine
    return max(m, n_sub)


@njit(cache=True)
def _propagator(k2, h):
    """``(c, s)`` with ``y(h) = c y0 + s y0'`` for ``y'' = -k2 y``."""
    if k2 > 0.0:
        k = math.sqrt(k2)
        return math.cos(k * h), math.sin(k * h) / k
    if k2 < 0.0:
        kap = math.sqrt(-k2)
        return math.cosh(kap * h), math.sinh(kap * h) / kap
    return 1.0, h


@njit(cache=True)
def _f3(x):
    # (x - sin x) / x**3
    if abs(x) < 0.5:
        x2 = x * x
        return 1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 * (1.0 / 362880.0 - x2 / 39916800.0)))
    return (x - math.sin(x)) / (x * x * x)


@njit(cache=True)
def _g3(x):
    # (sinh x - x) / x**3
    if abs(x) < 0.5:
        x2 = x * x
        return 1.0 / 6.0 + x2 * (1.0 / 120.0 + x2 * (1.0 / 5040.0 + x2 * (1.0 / 362880.0 + x2 / 39916800.0)))
    return (math.sinh(x) - x) / (x * x * x)


@njit(cache=True)
def square_integral(k2, h, y0, d0):
    """Exact ``int_0^h y(t)^2 dt`` for ``y'' = -k2 y``, ``y(0)=y0``, ``y'(0)=d0``."""
    if k2 > 0.0:
        k = math.sqrt(k2)
        icc = 0.5 * h + math.sin(2.0 * k * h) / (4.0 * k)
        sk = math.sin(k * h) / k
        ics = 0.5 * sk * sk
        iss = 2.0 * h * h * h * _f3(2.0 * k * h)
    elif k2 < 0.0:
        kap = math.sqrt(-k2)
        icc = 0.5 * h + math.sinh(2.0 * kap * h) / (4.0 * kap)
        sk = math.sinh(kap * h) / kap
        ics = 0.5 * sk * sk
        iss = 2.0 * h * h * h * _g3(2.0 * kap * h)
    else:
        icc = h
        ics = 0.5 * h * h
        iss = h * h * h / 3.0
    return y0 * y0 * icc + 2.0 * y0 * d0 * ics + d0 * d0 * iss


@njit(cache=True)
def _reduced_angle(scale, y, py):
    ang = math.atan2(scale * y, py)
    if ang < 0.0:
        ang += math.pi
    if ang >= math.pi:
        # only an exact zero of y sits on the branch cut; otherwise the
        # true angle is just below pi and was rounded up
        ang = 0.0 if y == 0.0 else math.pi
    return ang


@njit(cache=True)
def transfer_shoot(bp, p, q, w, lam, scale, y0, py0, m0, n_sub):
    """Propagate to the right endpoint.

    Returns ``(theta_end, y_end, py_end, log_scale, crossings)`` where
    ``(y_end, py_end)`` is normalised, ``theta_end`` is the unwrapped angle of
    ``(scale * y, p y')`` and ``crossings`` counts zeros of ``y`` in ``(a, b]``.
    """
    y = y0
    py = py0
    r = math.hypot(y, py)
    y /= r
    py /= r
    logs = math.log(r)
    m = m0
    crossings = 0
    for i in range(len(p)):
        h_piece = bp[i + 1] - bp[i]
        k2 = (lam * w[i] - q[i]) / p[i]
        nsub = n_subdivisions(k2, h_piece, n_sub, 1)
        h = h_piece / nsub
        c, s = _propagator(k2, h)
        pk2s = p[i] * k2 * s
        sp = s / p[i]
        for _ in range(nsub):
            yn = c * y + sp * py
            pyn = -pk2s * y + c * py
            if y != 0.0 and (yn == 0.0 or (yn > 0.0) != (y > 0.0)):
                m += 1
                crossings += 1
            r = math.hypot(yn, pyn)
            y = yn / r
            py = pyn / r
            logs += math.log(r)
    theta = m * math.pi + _reduced_angle(scale, y, py)
    return theta, y, py, logs, crossings


@njit(cache=True)
def transfer_trajectory(bp, p, q, w, lam, scale, y0, py0, m0, n_sub, refine):
    """Like :func:`transfer_shoot` but returns every sub-node.

    Returns arrays ``(x, y, py, log_scale, turns, piece, sq, smax)``; ``y`` and
    ``py`` are normalised with true values ``exp(log_scale) * (y, py)``;
    ``sq[j]`` is ``int y^2`` over sub-interval ``j`` and ``smax[j]`` the max of
    ``|y|`` over it, both in the normalisation of its left node.
    """
    npieces = len(p)
    counts = np.empty(npieces, dtype=np.int64)
    total = 0
    for i in range(npieces):
        k2 = (lam * w[i] - q[i]) / p[i]
        counts[i] = n_subdivisions(k2, bp[i + 1] - bp[i], n_sub, refine)
        total += counts[i]
    xs = np.empty(total + 1)
    ys = np.empty(total + 1)
    pys = np.empty(total + 1)
    logs = np.empty(total + 1)
    turns = np.empty(total + 1, dtype=np.int64)
    piece = np.empty(total, dtype=np.int64)
    sq = np.empty(total)
    smax = np.empty(total)

    y = y0
    py = py0
    r = math.hypot(y, py)
    y /= r
    py /= r
    ls = math.log(r)
    m = m0
    xs[0] = bp[0]
    ys[0] = y
    pys[0] = py
    logs[0] = ls
    turns[0] = m
    j = 0
    for i in range(npieces):
        h_piece = bp[i + 1] - bp[i]
        k2 = (lam * w[i] - q[i]) / p[i]
        nsub = counts[i]
        h = h_piece / nsub
        c, s = _propagator(k2, h)
        pk2s = p[i] * k2 * s
        sp = s / p[i]
        for t in range(nsub):
            yn = c * y + sp * py
            pyn = -pk2s * y + c * py
            if y != 0.0 and (yn == 0.0 or (yn > 0.0) != (y > 0.0)):
                m += 1
            d0 = py / p[i]
            sq[j] = square_integral(k2, h, y, d0)
            top = max(abs(y), abs(yn))
            if k2 > 0.0 and d0 != 0.0 and (pyn == 0.0 or (pyn > 0.0) != (py > 0.0)):
                top = max(top, math.sqrt(y * y + d0 * d0 / k2))
            smax[j] = top
            piece[j] = i
            r = math.hypot(yn, pyn)
            y = yn / r
            py = pyn / r
            ls += math.log(r)
            j += 1
            if t == nsub - 1:
                xs[j] = bp[i + 1]
            else:
                xs[j] = bp[i] + (t + 1) * h
            ys[j] = y
            pys[j] = py
            logs[j] = ls
            turns[j] = m
    return xs, ys, pys, logs, turns, piece, sq, smax


@njit(cache=True)
def _rhs(phi, sl, a_coef, out):
    s = math.sin(phi)
    c = math.cos(phi)
    out[0] = sl * c * c + a_coef * s * s
    out[1] = 2.0 * s * c
    out[2] = c * c - s * s


@njit(cache=True)
def _grow(buf, n):
    new = np.empty(max(2 * len(buf), n))
    new[: len(buf)] = buf
    return new


@njit(cache=True)
def _grow_int(buf, n):
    new = np.empty(max(2 * len(buf), n), dtype=np.int64)
    new[: len(buf)] = buf
    return new


@njit(cache=True)
def prufer_rk(bp, q, w, lam, theta0, tol, record, max_steps):
    """Integrate ``theta' = sqrt(lam)(cos^2 + w sin^2) - q/sqrt(lam) sin^2`` with
    DOP853 and step-size control ``local error <= tol * h``; every breakpoint is
    a step boundary.

    Returns ``(x, theta, dS, dC, piece, status)``. ``dS[j]``/``dC[j]`` are the
    integrals of ``sin 2 theta``/``cos 2 theta`` over step ``j`` (ending at
    ``x[j+1]``). With ``record`` false only the endpoint rows are kept.
    """
    sl = math.sqrt(lam)
    cap = 1024
    xs = np.empty(cap)
    th = np.empty(cap)
    ds = np.empty(cap)
    dc = np.empty(cap)
    pc = np.empty(cap, dtype=np.int64)

    turns = math.floor(theta0 / math.pi)
    phi = theta0 - turns * math.pi
    xs[0] = bp[0]
    th[0] = theta0
    n = 1
    K = np.empty((_NS + 1, 3))
    ystage = np.empty(3)
    f = np.empty(3)
    status = 0
    steps = 0
    h = 0.0
    acc_s = 0.0
    acc_c = 0.0
    for i in range(len(w)):
        a_coef = sl * w[i] - q[i] / sl
        x = bp[i]
        xe = bp[i + 1]
        rate = abs(sl) + abs(a_coef) + 1.0
        if h <= 0.0:
            h = min(0.25 / rate, xe - x)
        _rhs(phi, sl, a_coef, f)
        K[0, 0] = f[0]
        K[0, 1] = f[1]
        K[0, 2] = f[2]
        while x < xe:
            last = False
            h_free = h
            if x + h >= xe or (xe - x - h) < 1e-12 * (xe - x):
                h = xe - x
                last = True
            # stages
            for st in range(1, _NS):
                ystage[0] = 0.0
                ystage[1] = 0.0
                ystage[2] = 0.0
                for r in range(st):
                    a = _A[st, r]
                    if a != 0.0:
                        ystage[0] += a * K[r, 0]
                        ystage[1] += a * K[r, 1]
                        ystage[2] += a * K[r, 2]
                _rhs(phi + h * ystage[0], sl, a_coef, f)
                K[st, 0] = f[0]
                K[st, 1] = f[1]
                K[st, 2] = f[2]
            inc0 = 0.0
            inc1 = 0.0
            inc2 = 0.0
            for r in range(_NS):
                inc0 += _B[r] * K[r, 0]
                inc1 += _B[r] * K[r, 1]
                inc2 += _B[r] * K[r, 2]
            phi_new = phi + h * inc0
            _rhs(phi_new, sl, a_coef, f)
            K[_NS, 0] = f[0]
            K[_NS, 1] = f[1]
            K[_NS, 2] = f[2]
            errn = 0.0
            for comp in range(3):
                e5 = 0.0
                e3 = 0.0
                for r in range(_NS + 1):
                    e5 += _E5[r] * K[r, comp]
                    e3 += _E3[r] * K[r, comp]
                den = math.hypot(abs(e5), 0.1 * abs(e3))
                err = 0.0
                if den > 0.0:
                    err = abs(h * e5 * abs(e5) / den)
                v = err / (tol * h)
                if v > errn:
                    errn = v
            steps += 1
            if steps > max_steps:
                status = 1
                break
            if errn <= 1.0:
                x = xe if last else x + h
                # reduce modulo pi, keep integer turns
                k = math.floor(phi_new / math.pi)
                phi = phi_new - k * math.pi
                turns += k
                acc_s += h * inc1
                acc_c += h * inc2
                K[0, 0] = f[0]
                K[0, 1] = f[1]
                K[0, 2] = f[2]
                if record or x >= xe:
                    if n >= len(xs):
                        xs = _grow(xs, n + 1)
                        th = _grow(th, n + 1)
                        ds = _grow(ds, n + 1)
                        dc = _grow(dc, n + 1)
                        pc = _grow_int(pc, n + 1)
                    xs[n] = x
                    th[n] = turns * math.pi + phi
                    ds[n - 1] = acc_s
                    dc[n - 1] = acc_c
                    pc[n - 1] = i
                    acc_s = 0.0
                    acc_c = 0.0
                    n += 1
                fac = 10.0 if errn == 0.0 else min(10.0, 0.9 * errn ** (-1.0 / 8.0))
                h = max(h, h_free) if last else h * fac
            else:
                h *= max(0.2, 0.9 * errn ** (-1.0 / 8.0))
        if status != 0:
            break
    return xs[:n], th[:n], ds[: n - 1], dc[: n - 1], pc[: n - 1], status
