"""Seeded generators for random piecewise-constant test problems."""

from __future__ import annotations

import math

import numpy as np

from .coefficients import PiecewiseFn, SLProblem

__all__ = [
    "rng_for",
    "random_breakpoints",
    "random_potential",
    "random_weight",
    "random_p",
    "random_angles",
    "random_problem",
    "decreasing_profile",
    "bump",
    "problem_corpus",
]


def rng_for(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_breakpoints(rng: np.random.Generator, pieces: int, a: float = 0.0, b: float = 1.0) -> np.ndarray:
    """``pieces + 1`` sorted breakpoints whose widths differ by at most a factor of five."""
    w = rng.uniform(0.2, 1.0, pieces)
    x = np.concatenate([[0.0], np.cumsum(w)])
    x = a + (b - a) * x / x[-1]
    x[0], x[-1] = a, b
    return x


def random_potential(
    rng: np.random.Generator,
    l1_max: float = 10.0,
    pieces: tuple[int, int] = (2, 8),
    a: float = 0.0,
    b: float = 1.0,
) -> PiecewiseFn:
    """Signed piecewise potential with ``||q||_1`` drawn uniformly in ``[l1_max/10, l1_max]``."""
    m = int(rng.integers(pieces[0], pieces[1] + 1))
    bp = random_breakpoints(rng, m, a, b)
    v = rng.normal(size=m)
    norm = float(np.dot(np.abs(v), np.diff(bp)))
    target = l1_max * rng.uniform(0.1, 1.0)
    return PiecewiseFn(bp, v * (target / norm))


def random_weight(
    rng: np.random.Generator,
    lo: float = 0.5,
    hi: float = 4.0,
    pieces: tuple[int, int] = (2, 6),
    monotone: str | None = "increasing",
    a: float = 0.0,
    b: float = 1.0,
) -> PiecewiseFn:
    """Weight with values in ``[lo, hi]``; ``monotone`` is ``increasing``,
    ``decreasing`` or ``None``."""
    m = int(rng.integers(pieces[0], pieces[1] + 1))
    bp = random_breakpoints(rng, m, a, b)
    v = rng.uniform(lo, hi, m)
    if monotone == "increasing":
        v = np.sort(v)
    elif monotone == "decreasing":
        v = np.sort(v)[::-1]
    elif monotone is not None:
        raise ValueError(f"unknown monotonicity {monotone!r}")
    return PiecewiseFn(bp, v)


def random_p(rng: np.random.Generator, lo: float = 0.5, hi: float = 4.0, pieces=(2, 6)) -> PiecewiseFn:
    return random_weight(rng, lo, hi, pieces, monotone=None)


def random_angles(rng: np.random.Generator) -> tuple[float, float]:
    """Boundary angles, with Dirichlet and Neumann ends as likely as generic ones."""
    choices = [0.0, 0.5 * math.pi]

    def one():
        k = rng.integers(3)
        return choices[k] if k < 2 else float(rng.uniform(0.0, math.pi))

    return one(), one()


def random_problem(
    rng: np.random.Generator,
    *,
    l1_max: float = 10.0,
    general_p: bool = False,
    monotone: str | None = "increasing",
    weight_range: tuple[float, float] = (0.5, 4.0),
    dirichlet: bool = False,
) -> SLProblem:
    q = random_potential(rng, l1_max)
    w = random_weight(rng, *weight_range, monotone=monotone)
    p = random_p(rng) if general_p else PiecewiseFn.constant(1.0)
    alpha, beta = (0.0, 0.0) if dirichlet else random_angles(rng)
    return SLProblem(p, q, w, alpha, beta)


def decreasing_profile(rng: np.random.Generator, top: float = 3.0, pieces=(2, 8)) -> PiecewiseFn:
    """Decreasing non-negative step function with ``g(0) <= top``."""
    m = int(rng.integers(pieces[0], pieces[1] + 1))
    bp = random_breakpoints(rng, m)
    v = np.sort(rng.uniform(0.0, top, m))[::-1]
    return PiecewiseFn(bp, v)


def bump(center: float, width: float, mass: float = 1.0, a: float = 0.0, b: float = 1.0) -> PiecewiseFn:
    """Indicator-type bump of the given ``mass`` on ``[center - width/2, center + width/2]``."""
    lo, hi = center - 0.5 * width, center + 0.5 * width
    if not (a < lo < hi < b):
        raise ValueError("bump must sit strictly inside the interval")
    return PiecewiseFn([a, lo, hi, b], [0.0, mass / width, 0.0])


def problem_corpus(seed: int = 0, size: int = 12) -> list[SLProblem]:
    """Mixed normal-form problems: monotone and non-monotone weights, random angles."""
    rng = rng_for(seed)
    kinds = ["increasing", "decreasing", None]
    return [random_problem(rng, monotone=kinds[i % 3]) for i in range(size)]
