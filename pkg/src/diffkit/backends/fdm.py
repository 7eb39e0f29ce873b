"""Central finite differences."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, NumericalError
from ..values import as_output, base_float, entries, isfinite_value

__all__ = ["FDMConfig", "StencilWeights", "fd_weights", "fdm_pushforward"]


@dataclass(frozen=True)
class StencilWeights:
    offsets: tuple
    weights: tuple


def fd_weights(offsets, order):
    """Stencil weights for the ``order``-th derivative on integer ``offsets``.

    Solves the moment system ``sum_j w_j * o_j**k = k! * [k == order]`` for
    ``k = 0 .. len(offsets) - 1``, so the stencil is exact for polynomials up
    to degree ``len(offsets) - 1`` (unit grid spacing).

    >>> fd_weights((-1, 0, 1), 1).weights
    (-0.5, 0.0, 0.5)
    """
    offsets = tuple(int(o) for o in offsets)
    n = len(offsets)
    if n == 0:
        raise ConfigurationError("stencil needs at least one offset", "fd_weights")
    if not 0 <= order < n:
        raise ConfigurationError(
            f"derivative order {order} needs more than {n} offsets", "fd_weights"
        )
    if len(set(offsets)) != n:
        raise ConfigurationError(f"duplicate stencil offsets {offsets}", "fd_weights")
    o = np.asarray(offsets, dtype=np.float64)
    vandermonde = np.vander(o, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    try:
        w = np.linalg.solve(vandermonde, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConfigurationError(f"singular stencil system: {exc}", "fd_weights") from None
    # exact zeros (e.g. the centre of a symmetric first-derivative stencil)
    # come out as tiny residuals; snap them so the centre is never evaluated
    w[np.abs(w) < 1e-15 * np.max(np.abs(w))] = 0.0
    return StencilWeights(offsets, tuple(float(v) for v in w))


def _default_step():
    return float(np.finfo(np.float64).eps) ** (1 / 5)


@dataclass(frozen=True)
class FDMConfig:
    grid_points: int = 5
    derivative_order: int = 1
    relative_step: float = field(default_factory=_default_step)

    def __post_init__(self):
        if self.grid_points < 3 or self.grid_points % 2 == 0:
            raise ConfigurationError(
                f"grid_points must be odd and >= 3, got {self.grid_points}", "FDMConfig"
            )
        if self.derivative_order != 1:
            raise ConfigurationError("only first-derivative stencils are supported", "FDMConfig")
        if not self.relative_step > 0:
            raise ConfigurationError("relative_step must be positive", "FDMConfig")

    def stencil(self):
        half = self.grid_points // 2
        return fd_weights(range(-half, half + 1), self.derivative_order)


class FDMPushforward:
    """Directional central difference of ``f`` at ``xs``.

    The step is ``relative_step * (1 + max|xs|)``, shared by every seed.
    """

    def __init__(self, config, f, xs):
        self.f = f
        self.xs = tuple(xs)
        stencil = config.stencil()
        self.points = [(o, w) for o, w in zip(stencil.offsets, stencil.weights) if w != 0.0]
        scale = max(abs(base_float(v)) for x in self.xs for v in entries(x))
        self.step = config.relative_step * (1.0 + scale)

    def __call__(self, seeds):
        h = self.step
        acc = None
        for offset, weight in self.points:
            eps = offset * h
            args = [x + eps * v for x, v in zip(self.xs, seeds)]
            y = as_output(self.f(*args), "fdm_pushforward")
            if not isfinite_value(y):
                raise NumericalError(
                    f"non-finite function value at stencil offset {offset}", "fdm_pushforward"
                )
            term = weight * y
            acc = term if acc is None else acc + term
        return acc / h


def fdm_pushforward(config, f, xs):
    return FDMPushforward(config, f, xs)
