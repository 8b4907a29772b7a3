"""Piecewise-constant coefficient functions and regular Sturm-Liouville problems.

Every coefficient (p, q, omega, and the auxiliary functions used by the
oscillatory-integral experiments) is stored as a piecewise-constant function
on a finite interval. Norms, total variation, the Liouville change of
variable and affine paths between potentials are all exact for this class.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "PiecewiseFn",
    "SLProblem",
    "HypothesisReport",
    "l1_norm",
    "hypothesis_report",
    "liouville_transform",
    "affine_combine",
    "common_refinement",
    "problem_to_dict",
    "problem_from_dict",
    "dumps_problem",
    "loads_problem",
    "load_problem",
    "save_problem",
    "load_function",
    "loads_function",
    "ProblemFormatError",
]

# relative width below which two breakpoints are merged in a refinement
MERGE_RTOL = 1e-14


class ProblemFormatError(ValueError):
    """Raised when a problem document does not match the schema."""


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PiecewiseFn:
    """Piecewise-constant function with value ``values[i]`` on
    ``[breakpoints[i], breakpoints[i+1])`` (the last piece is closed).
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = _readonly(self.breakpoints)
        vals = _readonly(self.values)
        if bp.ndim != 1 or vals.ndim != 1:
            raise ValueError("breakpoints and values must be one-dimensional")
        if len(bp) < 2:
            raise ValueError("need at least two breakpoints")
        if len(vals) != len(bp) - 1:
            raise ValueError(
                f"values length {len(vals)} != breakpoints length - 1 ({len(bp) - 1})"
            )
        if not np.all(np.isfinite(bp)) or not np.all(np.isfinite(vals)):
            raise ValueError("breakpoints and values must be finite")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: float, a: float = 0.0, b: float = 1.0) -> "PiecewiseFn":
        return cls([a, b], [value])

    @classmethod
    def uniform(cls, values: Sequence[float], a: float = 0.0, b: float = 1.0) -> "PiecewiseFn":
        """Equal-width pieces on ``[a, b]``."""
        values = list(values)
        return cls(np.linspace(a, b, len(values) + 1), values)

    @property
    def a(self) -> float:
        return float(self.breakpoints[0])

    @property
    def b(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseFn):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.breakpoints.tobytes(), self.values.tobytes()))

    def __repr__(self) -> str:
        return f"PiecewiseFn(breakpoints={self.breakpoints.tolist()}, values={self.values.tolist()})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x < self.a) | (x > self.b)):
            raise ValueError("evaluation point outside the interval")
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        out = self.values[idx]
        return float(out) if out.ndim == 0 else out

    def same_interval(self, other: "PiecewiseFn") -> bool:
        return self.a == other.a and self.b == other.b

    def integral(self) -> float:
        return float(np.dot(self.values, self.widths))

    def total_variation(self) -> float:
        return float(np.sum(np.abs(np.diff(self.values))))

    def on(self, breakpoints: np.ndarray) -> np.ndarray:
        """Values on the pieces of a refinement given by ``breakpoints``."""
        mids = 0.5 * (breakpoints[1:] + breakpoints[:-1])
        return np.atleast_1d(self(mids))

    def refine(self, breakpoints: np.ndarray) -> "PiecewiseFn":
        return PiecewiseFn(breakpoints, self.on(breakpoints))

    def map_values(self, fn) -> "PiecewiseFn":
        return PiecewiseFn(self.breakpoints, fn(self.values))

    def __neg__(self):
        return self.map_values(np.negative)

    def __mul__(self, c: float) -> "PiecewiseFn":
        if isinstance(c, PiecewiseFn):
            bp = common_refinement(self, c)
            return PiecewiseFn(bp, self.on(bp) * c.on(bp))
        return self.map_values(lambda v: v * c)

    __rmul__ = __mul__

    def __add__(self, other) -> "PiecewiseFn":
        if isinstance(other, PiecewiseFn):
            bp = common_refinement(self, other)
            return PiecewiseFn(bp, self.on(bp) + other.on(bp))
        return self.map_values(lambda v: v + other)

    __radd__ = __add__

    def __sub__(self, other) -> "PiecewiseFn":
        return self + (-other if isinstance(other, PiecewiseFn) else -float(other))

    def reflect(self) -> "PiecewiseFn":
        """``x -> a + b - x``."""
        bp = (self.a + self.b) - self.breakpoints[::-1]
        return PiecewiseFn(bp, self.values[::-1])

    def simplify(self) -> "PiecewiseFn":
        """Merge neighbouring pieces with equal values."""
        keep = np.concatenate([[True], self.values[1:] != self.values[:-1]])
        bp = np.concatenate([self.breakpoints[:-1][keep], [self.b]])
        return PiecewiseFn(bp, self.values[keep])

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseFn":
        return cls(d["breakpoints"], d["values"])


def common_refinement(*fns: PiecewiseFn) -> np.ndarray:
    """Union of breakpoints, merging points closer than ``MERGE_RTOL * (b - a)``."""
    a, b = fns[0].a, fns[0].b
    for f in fns[1:]:
        if not f.same_interval(fns[0]):
            raise ValueError(f"interval mismatch: [{a}, {b}] vs [{f.a}, {f.b}]")
    pts = np.unique(np.concatenate([f.breakpoints for f in fns]))
    gap = MERGE_RTOL * (b - a)
    keep = [pts[0]]
    for x in pts[1:-1]:
        if x - keep[-1] > gap and b - x > gap:
            keep.append(x)
    keep.append(b)
    return np.array(keep)


def l1_norm(f: PiecewiseFn) -> float:
    return float(np.dot(np.abs(f.values), f.widths))


@dataclass(frozen=True)
class HypothesisReport:
    """Monotonicity, essential infimum, total variation and L1 norm of a weight."""

    h1_monotone: str  # "increasing", "decreasing" or "none"
    h2_essential_inf: float
    total_variation: float
    l1_norm: float

    @property
    def h1(self) -> bool:
        return self.h1_monotone != "none"

    @property
    def h2(self) -> bool:
        return self.h2_essential_inf > 0


def hypothesis_report(omega: PiecewiseFn) -> HypothesisReport:
    d = np.diff(omega.values)
    if np.all(d >= 0):
        mono = "increasing"  # constants count as non-decreasing
    elif np.all(d <= 0):
        mono = "decreasing"
    else:
        mono = "none"
    return HypothesisReport(
        h1_monotone=mono,
        h2_essential_inf=float(np.min(omega.values)),
        total_variation=omega.total_variation(),
        l1_norm=l1_norm(omega),
    )


@dataclass(frozen=True)
class SLProblem:
    """``-(p y')' + q y = lambda * omega * y`` on ``[a, b]`` with
    ``y(a) cos(alpha) + (p y')(a) sin(alpha) = 0`` and the same form at ``b``
    with ``beta``.
    """

    p: PiecewiseFn
    q: PiecewiseFn
    omega: PiecewiseFn
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (self.p.same_interval(self.q) and self.p.same_interval(self.omega)):
            raise ValueError("p, q and omega must live on the same interval")
        if np.any(self.p.values <= 0):
            raise ValueError("p must be strictly positive on every piece")
        if np.any(self.omega.values <= 0):
            raise ValueError("omega must be strictly positive on every piece")
        for name in ("alpha", "beta"):
            v = float(getattr(self, name))
            if not (0.0 <= v < math.pi):
                raise ValueError(f"{name}={v} outside [0, pi)")
            object.__setattr__(self, name, v)

    @classmethod
    def normal_form(
        cls,
        q: PiecewiseFn,
        omega: PiecewiseFn,
        alpha: float = 0.0,
        beta: float = 0.0,
    ) -> "SLProblem":
        """Problem with ``p == 1`` on the interval of ``q``."""
        return cls(PiecewiseFn.constant(1.0, q.a, q.b), q, omega, alpha, beta)

    @property
    def interval(self) -> tuple[float, float]:
        return self.p.a, self.p.b

    @property
    def is_normal_form(self) -> bool:
        return bool(np.all(self.p.values == 1.0))

    def with_q(self, q: PiecewiseFn) -> "SLProblem":
        return SLProblem(self.p, q, self.omega, self.alpha, self.beta)

    def pieces(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Common refinement as ``(breakpoints, p, q, omega)`` arrays."""
        bp = common_refinement(self.p, self.q, self.omega)
        return bp, self.p.on(bp), self.q.on(bp), self.omega.on(bp)


def liouville_transform(prob: SLProblem) -> SLProblem:
    """Change of variable ``s = int_a^x dt / p`` giving an equivalent problem with
    ``p == 1`` on ``[0, c]``; the spectrum and boundary angles are unchanged.
    """
    bp, p, q, w = prob.pieces()
    if np.any(p <= 0):
        raise ValueError("p must be strictly positive")
    s = np.concatenate([[0.0], np.cumsum(np.diff(bp) / p)])
    return SLProblem(
        PiecewiseFn([0.0, s[-1]], [1.0]),
        PiecewiseFn(s, p * q),
        PiecewiseFn(s, p * w),
        prob.alpha,
        prob.beta,
    )


def affine_combine(q1: PiecewiseFn, q2: PiecewiseFn, t: float) -> PiecewiseFn:
    """``q1 + t (q2 - q1)`` on the common refinement; endpoints are reproduced exactly."""
    bp = common_refinement(q1, q2)
    v1, v2 = q1.on(bp), q2.on(bp)
    if t == 0:
        vals = v1
    elif t == 1:
        vals = v2
    else:
        vals = v1 + t * (v2 - v1)
    return PiecewiseFn(bp, vals)


# -- problem documents ------------------------------------------------------


def problem_to_dict(prob: SLProblem) -> dict:
    a, b = prob.interval
    return {
        "interval": [a, b],
        "alpha": prob.alpha,
        "beta": prob.beta,
        "p": prob.p.to_dict(),
        "q": prob.q.to_dict(),
        "omega": prob.omega.to_dict(),
    }


def _fn_field(d: dict, name: str, interval) -> PiecewiseFn:
    if name not in d:
        if name == "p":
            return PiecewiseFn.constant(1.0, *interval)
        raise ProblemFormatError(f"missing field '{name}'")
    obj = d[name]
    if not isinstance(obj, dict) or "breakpoints" not in obj or "values" not in obj:
        raise ProblemFormatError(f"field '{name}' must be an object with breakpoints and values")
    try:
        f = PiecewiseFn.from_dict(obj)
    except (ValueError, TypeError) as exc:
        raise ProblemFormatError(f"field '{name}': {exc}") from None
    if (f.a, f.b) != tuple(interval):
        raise ProblemFormatError(
            f"field '{name}': breakpoints span [{f.a}, {f.b}], interval is {list(interval)}"
        )
    return f


def problem_from_dict(d: dict) -> SLProblem:
    if not isinstance(d, dict):
        raise ProblemFormatError("problem document must be a JSON object")
    try:
        a, b = (float(v) for v in d["interval"])
    except KeyError:
        raise ProblemFormatError("missing field 'interval'") from None
    except (TypeError, ValueError):
        raise ProblemFormatError("field 'interval' must be [a, b]") from None
    if not a < b:
        raise ProblemFormatError("field 'interval' must satisfy a < b")
    fns = {name: _fn_field(d, name, (a, b)) for name in ("p", "q", "omega")}
    try:
        return SLProblem(
            fns["p"], fns["q"], fns["omega"], float(d.get("alpha", 0.0)), float(d.get("beta", 0.0))
        )
    except ValueError as exc:
        raise ProblemFormatError(str(exc)) from None


def dumps_problem(prob: SLProblem) -> str:
    # json writes floats with repr(), the shortest round-trip decimal form
    return json.dumps(problem_to_dict(prob), indent=2) + "\n"


def loads_problem(text: str) -> SLProblem:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return problem_from_dict(d)


def load_problem(path) -> SLProblem:
    return loads_problem(Path(path).read_text())


def save_problem(prob: SLProblem, path) -> None:
    Path(path).write_text(dumps_problem(prob))


def loads_function(text: str, field: str = "q") -> PiecewiseFn:
    """Parse a bare ``{breakpoints, values}`` document, or take ``field`` from a problem document."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if isinstance(d, dict) and "breakpoints" in d:
        try:
            return PiecewiseFn.from_dict(d)
        except (ValueError, TypeError, KeyError) as exc:
            raise ProblemFormatError(str(exc)) from None
    if field not in ("p", "q", "omega"):
        raise ValueError(f"unknown coefficient field {field!r}")
    return getattr(problem_from_dict(d), field)


def load_function(path, field: str = "q") -> PiecewiseFn:
    return loads_function(Path(path).read_text(), field)
