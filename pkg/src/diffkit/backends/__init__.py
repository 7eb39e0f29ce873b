"""Reference backends, registered into the default registry on import.

=====================  ===========  ================  =============
name                   mode         native primitive  native primal
=====================  ===========  ================  =============
fdm                    finite diff  pushforward       no
forward-dual           forward      pushforward       yes
tape                   reverse      pullback          yes
forward-over-reverse   higher order (forward-dual, tape)
reverse-over-forward   higher order (tape, forward-dual)
=====================  ===========  ================  =============
"""

from functools import partial

from ..core import (
    BackendDescriptor,
    Mode,
    PrimitiveKind,
    Registry,
    default_registry,
    derive_jacobian_from_pushforward,
)
from ..values import as_column, from_entries, shape_of
from .dual import Dual, DualPushforward, dual_primal, dual_pushforward
from .fdm import FDMConfig, StencilWeights, fd_weights, fdm_pushforward
from .higher_order import higher_order
from .tape import Tape, TapeNode, TapePullback, TapeVar, tape_primal, tape_pullback

__all__ = [
    "Dual",
    "DualPushforward",
    "FDMConfig",
    "StencilWeights",
    "Tape",
    "TapeNode",
    "TapePullback",
    "TapeVar",
    "dual_pushforward",
    "fd_weights",
    "fdm_pushforward",
    "higher_order",
    "make_fdm",
    "make_forward_dual",
    "make_tape",
    "new_registry",
    "register_defaults",
    "tape_pullback",
]


def make_fdm(registry, name="fdm", config=None):
    config = config or FDMConfig()
    descriptor = BackendDescriptor(
        name,
        Mode.FINITE_DIFFERENCE,
        PrimitiveKind.PUSHFORWARD,
        config={"grid_points": config.grid_points, "relative_step": config.relative_step},
    )
    return registry.register(descriptor, partial(fdm_pushforward, config))


def _dual_jacobian(f, xs):
    return derive_jacobian_from_pushforward(dual_pushforward(f, xs), [shape_of(x) for x in xs])


def _dual_pullback(f, xs):
    blocks = _dual_jacobian(f, xs)
    shapes = [shape_of(x) for x in xs]

    def pullback(w):
        w = as_column(w)
        return tuple(from_entries(list(J.T @ w), s) for J, s in zip(blocks, shapes))

    return pullback


def make_forward_dual(registry, name="forward-dual", native=PrimitiveKind.PUSHFORWARD):
    """Register the dual-number mechanism declaring ``native`` as its primitive.

    Declaring the Jacobian or the pullback wraps the same pushforward, which
    is how primitive-agnosticism of the engine is exercised.
    """
    if native is PrimitiveKind.PUSHFORWARD:
        descriptor = BackendDescriptor(name, Mode.FORWARD, native, has_native_primal=True)
        return registry.register(descriptor, dual_pushforward, dual_primal)
    impl = _dual_jacobian if native is PrimitiveKind.JACOBIAN else _dual_pullback
    return registry.register(BackendDescriptor(name, Mode.FORWARD, native), impl)


def make_tape(registry, name="tape"):
    descriptor = BackendDescriptor(name, Mode.REVERSE, PrimitiveKind.PULLBACK, has_native_primal=True)
    return registry.register(descriptor, tape_pullback, tape_primal)


def register_defaults(registry):
    make_fdm(registry)
    make_forward_dual(registry)
    make_tape(registry)
    registry.register_higher_order("forward-dual", "tape", "forward-over-reverse")
    registry.register_higher_order("tape", "forward-dual", "reverse-over-forward")
    return registry


def new_registry():
    """A fresh registry holding the default backends."""
    return register_defaults(Registry())


register_defaults(default_registry)
