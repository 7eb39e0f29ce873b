"""Gauss-Newton for nonlinear least squares with a step-halving line search.

The solver only talks to the differentiation API, so switching the
differentiation mechanism is a matter of passing a different backend.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from ..core import jacobian
from ..errors import ConfigurationError, NumericalError, ShapeError
from ..values import as_column, as_output, as_value, from_entries, shape_of
from ._linalg import inf_norm, rcond, solve_spd


class Termination(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max-iterations"
    LINE_SEARCH_FAILED = "line-search-failed"
    SINGULAR_NORMAL_EQUATIONS = "singular-normal-equations"


class SingularNormalEquations(NumericalError):
    pass


class LineSearchFailed(NumericalError):
    pass


@dataclass(frozen=True)
class GaussNewtonConfig:
    max_iterations: int = 100
    max_halvings: int = 30
    initial_step_length: float = 1.0
    tolerance: float = 1e-10
    rcond_threshold: float = 1e-14

    def __post_init__(self):
        if self.max_iterations < 1 or self.max_halvings < 1:
            raise ConfigurationError("iteration limits must be >= 1", "GaussNewtonConfig")
        if not (self.initial_step_length > 0 and self.tolerance > 0 and self.rcond_threshold > 0):
            raise ConfigurationError("step length and tolerances must be positive", "GaussNewtonConfig")


@dataclass(frozen=True)
class ResidualProblem:
    """Residuals ``residual(x, p)`` of length M >= len(x), started at ``x0``."""

    residual: object
    p: object
    x0: object


@dataclass
class GaussNewtonState:
    iterates: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    step_lengths: list = field(default_factory=list)
    step_length: float = None
    termination: Termination = None
    gradient_norm: float = None

    @property
    def x(self):
        return self.iterates[-1]

    @property
    def iterations(self):
        return len(self.iterates) - 1


def _residuals(problem, x):
    return as_output(problem.residual(x, problem.p), "residual")


def objective(problem, x):
    """Half the sum of squared residuals."""
    r = as_column(_residuals(problem, as_value(x, "objective")))
    total = 0.0
    for v in r.tolist():
        total += v * v
    return 0.5 * total


def _linearize(problem, x, ab):
    r = as_column(_residuals(problem, x))
    # the second block is d(residual)/dp, not needed here
    J = jacobian(ab, problem.residual, x, problem.p)[0]
    if J.shape[0] < J.shape[1]:
        raise ShapeError(
            f"{J.shape[0]} residuals cannot determine {J.shape[1]} unknowns", "gauss_newton"
        )
    return J, r


def _direction(J, r, config):
    g = J.T @ r
    a = J.T @ J
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(g))):
        raise NumericalError("non-finite Jacobian or residual", "gauss_newton_step")
    if not np.any(g):
        return g, g
    if rcond(a) < config.rcond_threshold:
        raise SingularNormalEquations("J^T J is numerically singular", "gauss_newton_step")
    return -solve_spd(a, g), g


def _line_search(problem, x, d, config):
    current = objective(problem, x)
    xc = as_column(x)
    alpha = config.initial_step_length
    for _ in range(config.max_halvings + 1):
        candidate = from_entries(list(xc + alpha * d), shape_of(x))
        if objective(problem, candidate) < current:
            return candidate, alpha
        alpha = alpha / 2
    raise LineSearchFailed(
        f"no decrease after {config.max_halvings} step halvings", "gauss_newton_step"
    )


def gauss_newton_step(problem, x, ab, config=None):
    """One damped step ``x - alpha (J^T J)^{-1} J^T f``.

    ``alpha`` starts at ``initial_step_length`` and is halved until the
    objective decreases.  Returns ``(new_x, alpha)``.
    """
    config = config or GaussNewtonConfig()
    x = as_value(x, "gauss_newton_step")
    J, r = _linearize(problem, x, ab)
    d, _ = _direction(J, r, config)
    if not np.any(d):
        return x, config.initial_step_length
    return _line_search(problem, x, d, config)


def gauss_newton(problem, ab, config=None):
    """Iterate Gauss-Newton steps from ``problem.x0``.

    Stops when ``max|J^T f| <= tolerance``, after ``max_iterations`` steps,
    or when a step fails; the reason is recorded, not raised.
    """
    config = config or GaussNewtonConfig()
    x = as_value(problem.x0, "gauss_newton")
    state = GaussNewtonState(iterates=[x], objectives=[objective(problem, x)])
    for _ in range(config.max_iterations):
        J, r = _linearize(problem, x, ab)
        try:
            d, g = _direction(J, r, config)
        except SingularNormalEquations:
            state.termination = Termination.SINGULAR_NORMAL_EQUATIONS
            return state
        state.gradient_norm = inf_norm(g)
        if state.gradient_norm <= config.tolerance:
            state.termination = Termination.CONVERGED
            return state
        try:
            x, alpha = _line_search(problem, x, d, config)
        except LineSearchFailed:
            state.termination = Termination.LINE_SEARCH_FAILED
            return state
        state.iterates.append(x)
        state.objectives.append(objective(problem, x))
        state.step_lengths.append(alpha)
        state.step_length = alpha
    J, r = _linearize(problem, x, ab)
    state.gradient_norm = inf_norm(J.T @ r)
    converged = state.gradient_norm <= config.tolerance
    state.termination = Termination.CONVERGED if converged else Termination.MAX_ITERATIONS
    return state
