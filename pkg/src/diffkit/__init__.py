"""Backend-agnostic automatic differentiation.

A backend supplies one native primitive (Jacobian, pushforward or pullback);
every other differentiation operation is derived from it.
"""

from . import ops
from .core import (
    Backend,
    BackendDescriptor,
    DiffFunction,
    HigherOrderBackend,
    Mode,
    PrimitiveKind,
    Registry,
    default_registry,
    derivative,
    derive_jacobian_from_pullback,
    derive_jacobian_from_pushforward,
    get_backend,
    gradient,
    hessian,
    jacobian,
    primal_value,
    pullback_function,
    pushforward_function,
    register_backend,
    value_and_derivative,
    value_and_gradient,
    value_and_hessian,
    value_and_jacobian,
    value_gradient_and_hessian,
)
from .errors import (
    ArityError,
    ConfigurationError,
    ConsistencyError,
    DiffError,
    NumericalError,
    ShapeError,
    UsageError,
)
from .backends import higher_order
from .lazy import (
    LazyDerivative,
    LazyGradient,
    LazyHessian,
    LazyJacobian,
    lazy_derivative,
    lazy_gradient,
    lazy_hessian,
    lazy_jacobian,
)

__version__ = "0.1.0"

__all__ = [
    "ArityError",
    "Backend",
    "BackendDescriptor",
    "ConfigurationError",
    "ConsistencyError",
    "DiffError",
    "DiffFunction",
    "HigherOrderBackend",
    "LazyDerivative",
    "LazyGradient",
    "LazyHessian",
    "LazyJacobian",
    "Mode",
    "NumericalError",
    "PrimitiveKind",
    "Registry",
    "ShapeError",
    "UsageError",
    "default_registry",
    "derivative",
    "derive_jacobian_from_pullback",
    "derive_jacobian_from_pushforward",
    "get_backend",
    "gradient",
    "hessian",
    "higher_order",
    "jacobian",
    "lazy_derivative",
    "lazy_gradient",
    "lazy_hessian",
    "lazy_jacobian",
    "ops",
    "primal_value",
    "pullback_function",
    "pushforward_function",
    "register_backend",
    "value_and_derivative",
    "value_and_gradient",
    "value_and_hessian",
    "value_and_jacobian",
    "value_gradient_and_hessian",
]
