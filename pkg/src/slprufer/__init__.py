"""Sturm-Liouville eigenvalue problems with piecewise-constant coefficients,
solved by Pruefer-angle shooting."""

__version__ = "0.1.0"

from .coefficients import (  # noqa: E402
    PiecewiseFn,
    SLProblem,
    affine_combine,
    hypothesis_report,
    l1_norm,
    liouville_transform,
    load_problem,
    save_problem,
)
from .eigensolver import Eigenpair, eigenfunction, eigenvalue, eigenvalues_up_to, miss_distance  # noqa: E402
from .prufer import fundamental_pair, integrate_prufer, propagate_transfer  # noqa: E402
from .sensitivity import derivative_functional, fd_derivative, lipschitz_ratio, path_bound  # noqa: E402

__all__ = [
    "PiecewiseFn",
    "SLProblem",
    "affine_combine",
    "hypothesis_report",
    "l1_norm",
    "liouville_transform",
    "load_problem",
    "save_problem",
    "Eigenpair",
    "eigenfunction",
    "eigenvalue",
    "eigenvalues_up_to",
    "miss_distance",
    "fundamental_pair",
    "integrate_prufer",
    "propagate_transfer",
    "derivative_functional",
    "fd_derivative",
    "lipschitz_ratio",
    "path_bound",
]
