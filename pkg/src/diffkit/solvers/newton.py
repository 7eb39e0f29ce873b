"""Newton-Raphson root finding for square systems."""

from typing import NamedTuple

import numpy as np

from ..core import jacobian
from ..errors import NumericalError, ShapeError
from ..values import as_column, as_output, as_value, from_entries, shape_of, size_of
from ._linalg import inf_norm, rcond


class RootResult(NamedTuple):
    root: object
    converged: bool
    iterations: int


def newton_raphson_root(f, x0, ab, tolerance=1e-12, max_iterations=50, rcond_threshold=1e-14):
    """Solve ``f(x) = 0`` with full Newton steps ``x - J^{-1} f(x)``.

    Converged when ``max|f(x)| <= tolerance``.
    """
    x = as_value(x0, "newton_raphson_root")
    n = size_of(shape_of(x))
    for k in range(max_iterations + 1):
        fx = as_column(as_output(f(x), "newton_raphson_root"))
        if fx.shape[0] != n:
            raise ShapeError(
                f"f maps {n} unknowns to {fx.shape[0]} values; a square system is required",
                "newton_raphson_root",
            )
        if not np.all(np.isfinite(fx)):
            raise NumericalError(f"non-finite residual at iteration {k}, x={x!r}", "newton_raphson_root")
        if inf_norm(fx) <= tolerance:
            return RootResult(x, True, k)
        if k == max_iterations:
            break
        (J,) = jacobian(ab, f, x)
        if rcond(J) < rcond_threshold:
            raise NumericalError(f"singular Jacobian at iteration {k}, x={x!r}", "newton_raphson_root")
        step = np.linalg.solve(J, fx)
        x = from_entries(list(as_column(x) - step), shape_of(x))
    return RootResult(x, False, max_iterations)
