"""Backend-agnostic solvers built on the differentiation API."""

from .gauss_newton import (
    GaussNewtonConfig,
    GaussNewtonState,
    LineSearchFailed,
    ResidualProblem,
    SingularNormalEquations,
    Termination,
    gauss_newton,
    gauss_newton_step,
    objective,
)
from .newton import RootResult, newton_raphson_root

__all__ = [
    "GaussNewtonConfig",
    "GaussNewtonState",
    "LineSearchFailed",
    "ResidualProblem",
    "RootResult",
    "SingularNormalEquations",
    "Termination",
    "gauss_newton",
    "gauss_newton_step",
    "newton_raphson_root",
    "objective",
]
