"""Backend contract and the derivation engine.

A backend implements exactly one native primitive:

``Jacobian``
    ``impl(f, xs) -> tuple of 2-D arrays`` (one ``m x n_i`` block per argument)
``Pushforward``
    ``impl(f, xs) -> closure(seeds) -> output tangent``
``Pullback``
    ``impl(f, xs) -> closure(cotangent) -> tuple of input cotangents``

and optionally a primal extractor ``primal_impl(native_result) -> f(*xs)``
that reads the function value from the native forward pass.  Everything
else (derivatives, gradients, Jacobians, Hessians, fused ``value_and_*``
variants and the two non-native primitives) is derived here.
"""

import enum
import inspect
import threading
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import ArityError, ConfigurationError, ConsistencyError, ShapeError
from .values import (
    as_output,
    as_column,
    as_seed,
    as_value,
    basis,
    entries,
    from_entries,
    is_plain_number,
    pack_matrix,
    shape_of,
    size_of,
    zeros,
)


class PrimitiveKind(enum.Enum):
    JACOBIAN = "jacobian"
    PUSHFORWARD = "pushforward"
    PULLBACK = "pullback"


class Mode(enum.Enum):
    FORWARD = "forward"
    REVERSE = "reverse"
    FINITE_DIFFERENCE = "finite-difference"
    HIGHER_ORDER = "higher-order"


@dataclass(frozen=True)
class BackendDescriptor:
    """Identity of a backend.

    ``carrier_generic`` states that the mechanism runs on the scalar carriers
    of other backends, which nested (higher-order) use requires.
    """

    name: str
    mode: Mode
    native_primitive: PrimitiveKind = None
    has_native_primal: bool = False
    config: object = field(default_factory=dict)
    carrier_generic: bool = True
    outer: "BackendDescriptor" = None
    inner: "BackendDescriptor" = None

    def __post_init__(self):
        if isinstance(self.config, dict):
            object.__setattr__(self, "config", MappingProxyType(dict(self.config)))
        if self.mode is Mode.HIGHER_ORDER:
            if self.native_primitive is not None:
                raise ConfigurationError(
                    "higher-order backends have no native primitive", "BackendDescriptor"
                )
            if self.outer is None or self.inner is None:
                raise ConfigurationError(
                    "higher-order backends need an outer and an inner backend", "BackendDescriptor"
                )
        else:
            if not isinstance(self.native_primitive, PrimitiveKind):
                raise ConfigurationError(
                    f"backend {self.name!r} must declare exactly one native primitive",
                    "BackendDescriptor",
                )
            if self.outer is not None or self.inner is not None:
                raise ConfigurationError(
                    "only higher-order backends carry inner descriptors", "BackendDescriptor"
                )


class DiffFunction:
    """A callable with an optionally declared output shape.

    Plain callables are accepted everywhere; wrap one in ``DiffFunction``
    to have the engine verify the output shape it produces.
    """

    def __init__(self, fn, output_shape=None):
        self.fn = fn
        self.output_shape = None if output_shape is None else tuple(output_shape)

    def __call__(self, *args):
        return self.fn(*args)


class Backend:
    """Handle returned by :func:`register_backend`.  Immutable."""

    __slots__ = ("descriptor", "primitive_impl", "primal_impl")

    def __init__(self, descriptor, primitive_impl, primal_impl=None):
        object.__setattr__(self, "descriptor", descriptor)
        object.__setattr__(self, "primitive_impl", primitive_impl)
        object.__setattr__(self, "primal_impl", primal_impl)

    def __setattr__(self, name, value):
        raise AttributeError("backend handles are immutable")

    @property
    def name(self):
        return self.descriptor.name

    @property
    def mode(self):
        return self.descriptor.mode

    @property
    def native_primitive(self):
        return self.descriptor.native_primitive

    @property
    def has_native_primal(self):
        return self.descriptor.has_native_primal

    def __repr__(self):
        return f"<Backend {self.name!r} {self.mode.value} native={self.native_primitive.value}>"


class HigherOrderBackend(Backend):
    """An ordered (outer, inner) pair.

    First-order operations go to ``inner``; a Hessian is the ``outer``
    Jacobian of the ``inner`` gradient.
    """

    __slots__ = ("outer", "inner")

    def __init__(self, outer, inner, name=None):
        for b in (outer, inner):
            if not isinstance(b, Backend):
                raise ConfigurationError(f"{b!r} is not a backend handle", "higher_order")
        if outer.mode in (Mode.FORWARD, Mode.REVERSE, Mode.HIGHER_ORDER) and not _nestable(inner):
            raise ConfigurationError(
                f"{outer.name!r} cannot lift the scalars of {inner.name!r}", "higher_order"
            )
        name = name or f"{outer.name}-over-{inner.name}"
        descriptor = BackendDescriptor(
            name,
            Mode.HIGHER_ORDER,
            has_native_primal=inner.has_native_primal,
            carrier_generic=_nestable(outer) and _nestable(inner),
            outer=outer.descriptor,
            inner=inner.descriptor,
        )
        Backend.__init__(self, descriptor, None, None)
        object.__setattr__(self, "outer", outer)
        object.__setattr__(self, "inner", inner)

    def __repr__(self):
        return f"<HigherOrderBackend {self.name!r} outer={self.outer.name!r} inner={self.inner.name!r}>"


def _nestable(ab):
    return ab.descriptor.carrier_generic


def _first_order(ab):
    while isinstance(ab, HigherOrderBackend):
        ab = ab.inner
    return ab


def _check_signature(impl, n_params, what):
    if not callable(impl):
        raise ConfigurationError(f"{what} is not callable", "register_backend")
    try:
        inspect.signature(impl).bind(*range(n_params))
    except TypeError as exc:
        raise ConfigurationError(f"{what} has an incompatible signature: {exc}", "register_backend") from None
    except ValueError:
        # builtins without introspectable signatures
        pass


class Registry:
    """Name -> backend handle mapping.  Populate at startup, then read."""

    def __init__(self):
        self._backends = {}
        self._lock = threading.Lock()

    def register(self, descriptor, primitive_impl=None, primal_impl=None):
        if not isinstance(descriptor, BackendDescriptor):
            raise ConfigurationError("descriptor must be a BackendDescriptor", "register_backend")
        if descriptor.mode is Mode.HIGHER_ORDER:
            raise ConfigurationError(
                "register higher-order backends with register_higher_order", "register_backend"
            )
        _check_signature(primitive_impl, 2, "primitive implementation")
        if descriptor.has_native_primal != (primal_impl is not None):
            raise ConfigurationError(
                "primal_impl must be given exactly when has_native_primal is set", "register_backend"
            )
        if primal_impl is not None:
            _check_signature(primal_impl, 1, "primal extractor")
        return self._add(Backend(descriptor, primitive_impl, primal_impl))

    def register_higher_order(self, outer, inner, name=None):
        return self._add(HigherOrderBackend(self._resolve(outer), self._resolve(inner), name))

    def _resolve(self, b):
        return self.get(b) if isinstance(b, str) else b

    def _add(self, handle):
        with self._lock:
            if handle.name in self._backends:
                raise ConfigurationError(
                    f"backend {handle.name!r} is already registered", "register_backend"
                )
            self._backends[handle.name] = handle
        return handle

    def get(self, name):
        try:
            return self._backends[name]
        except KeyError:
            raise ConfigurationError(
                f"unknown backend {name!r}; known: {', '.join(self.names())}", "get_backend"
            ) from None

    def names(self):
        return list(self._backends)

    def __contains__(self, name):
        return name in self._backends

    def __iter__(self):
        return iter(list(self._backends.values()))


default_registry = Registry()


def register_backend(descriptor, primitive_impl, primal_impl=None, registry=None):
    """Register a backend that natively implements one primitive."""
    return (registry or default_registry).register(descriptor, primitive_impl, primal_impl)


def get_backend(name, registry=None):
    return (registry or default_registry).get(name)


# --------------------------------------------------------------------------
# derivation rules


def _seed_set(shapes, arg, k):
    return [basis(s, k) if i == arg else zeros(s) for i, s in enumerate(shapes)]


def _shape(y):
    return y.shape if isinstance(y, np.ndarray) else ()


def _jacobian_via_pushforward(pushforward, input_shapes, output_shape):
    blocks = []
    for i, s in enumerate(input_shapes):
        columns = []
        for k in range(size_of(s)):
            y = as_output(pushforward(_seed_set(input_shapes, i, k)), "derive_jacobian_from_pushforward")
            if output_shape is None:
                output_shape = _shape(y)
            elif _shape(y) != tuple(output_shape):
                raise ConsistencyError(
                    f"pushforward produced shape {_shape(y)}, expected {tuple(output_shape)}",
                    "derive_jacobian_from_pushforward",
                )
            columns.append(entries(y))
        m = size_of(tuple(output_shape))
        blocks.append(pack_matrix([[c[r] for c in columns] for r in range(m)], size_of(s)))
    return tuple(blocks), tuple(output_shape)


def derive_jacobian_from_pushforward(pushforward, input_shapes, output_shape=None):
    """Materialize the Jacobian with one basis seed per input coordinate.

    Calls ``pushforward`` exactly ``sum(n_i)`` times.  Column ``c`` of block
    ``i`` is the image of the ``c``-th basis vector of argument ``i`` (all
    other arguments seeded with zeros).
    """
    blocks, _ = _jacobian_via_pushforward(pushforward, [tuple(s) for s in input_shapes], output_shape)
    return blocks


def derive_jacobian_from_pullback(pullback, input_shapes, output_shape):
    """Materialize the Jacobian with one basis cotangent per output entry.

    Calls ``pullback`` exactly ``m`` times; row ``r`` of block ``i`` is the
    ``i``-th returned cotangent for the ``r``-th output basis vector.
    """
    input_shapes = [tuple(s) for s in input_shapes]
    output_shape = tuple(output_shape)
    rows = [[] for _ in input_shapes]
    for r in range(size_of(output_shape)):
        result = pullback(basis(output_shape, r))
        if not isinstance(result, (tuple, list)) or len(result) != len(input_shapes):
            raise ConsistencyError(
                f"pullback must return one cotangent per argument ({len(input_shapes)})",
                "derive_jacobian_from_pullback",
            )
        for i, (g, s) in enumerate(zip(result, input_shapes)):
            if shape_of(g) != s:
                raise ConsistencyError(
                    f"pullback cotangent {i} has shape {shape_of(g)}, expected {s}",
                    "derive_jacobian_from_pullback",
                )
            rows[i].append(entries(g))
    return tuple(pack_matrix(rows[i], size_of(s)) for i, s in enumerate(input_shapes))


class _Call:
    """One differentiation request: backend, function and normalized args.

    The native primitive is built at most once and shared between the
    derived quantities and the primal value, so fused operations reuse the
    backend's forward pass when it has one.
    """

    def __init__(self, ab, f, xs, operation):
        if not isinstance(ab, Backend):
            raise ConfigurationError(f"{ab!r} is not a backend handle", operation)
        if len(xs) == 0:
            raise ShapeError("at least one argument is required", operation)
        self.ab = _first_order(ab)
        self.f = f
        self.operation = operation
        self.xs = tuple(as_value(x, operation) for x in xs)
        self.shapes = [shape_of(x) for x in self.xs]
        declared = getattr(f, "output_shape", None)
        self._declared = None if declared is None else tuple(declared)
        self._out_shape = self._declared
        self._native = None
        self._value = None
        self._jacobian = None

    def native(self):
        if self._native is None:
            ab = self.ab
            result = ab.primitive_impl(self.f, self.xs)
            if ab.native_primitive is PrimitiveKind.JACOBIAN:
                result = self._check_blocks(result)
            elif not callable(result):
                raise ConfigurationError(
                    f"{ab.native_primitive.value} primitive of {ab.name!r} did not return a closure",
                    self.operation,
                )
            self._native = result
        return self._native

    def _check_blocks(self, result):
        if not isinstance(result, (tuple, list)) or len(result) != len(self.xs):
            raise ConfigurationError(
                f"jacobian primitive of {self.ab.name!r} must return one block per argument",
                self.operation,
            )
        blocks = []
        for J, s in zip(result, self.shapes):
            J = J if isinstance(J, np.ndarray) else np.asarray(J)
            if J.ndim != 2 or J.shape[1] != size_of(s):
                raise ConfigurationError(
                    f"jacobian block of shape {J.shape} does not match argument shape {s}",
                    self.operation,
                )
            blocks.append(J)
        return tuple(blocks)

    def _learn_shape(self, shape):
        if self._out_shape is None:
            self._out_shape = shape
        elif self._out_shape != shape:
            raise ShapeError(
                f"function output has shape {shape}, expected {self._out_shape}", self.operation
            )

    def value(self):
        if self._value is None:
            if self.ab.has_native_primal:
                y = as_output(self.ab.primal_impl(self.native()), self.operation)
            else:
                y = as_output(self.f(*self.xs), self.operation)
            self._learn_shape(_shape(y))
            self._value = y
        return self._value

    def out_shape(self):
        if self._out_shape is None:
            self.value()
        return self._out_shape

    def jacobian(self):
        if self._jacobian is None:
            kind = self.ab.native_primitive
            if kind is PrimitiveKind.PUSHFORWARD:
                # a declared shape is checked afterwards so a mismatch is a user-facing shape error
                J, shape = _jacobian_via_pushforward(self.native(), self.shapes, None)
                self._learn_shape(shape)
            elif kind is PrimitiveKind.PULLBACK:
                J = derive_jacobian_from_pullback(self.native(), self.shapes, self.out_shape())
            else:
                J = self.native()
                m = size_of(self.out_shape())
                if any(block.shape[0] != m for block in J):
                    raise ShapeError(
                        f"jacobian has {J[0].shape[0]} rows but the output has {m} entries",
                        self.operation,
                    )
            self._jacobian = J
        return self._jacobian

    def pushforward(self):
        if self.ab.native_primitive is PrimitiveKind.PUSHFORWARD:
            native = self.native()
            return lambda seeds: native(seeds)
        # Jacobian- and pullback-native: materialize J once, reuse per seed
        blocks = self.jacobian()
        out_shape = self.out_shape()

        def pushforward(seeds):
            total = None
            for J, v in zip(blocks, seeds):
                term = J @ as_column(v)
                total = term if total is None else total + term
            return from_entries(list(total), out_shape)

        return pushforward

    def pullback(self):
        if self.ab.native_primitive is PrimitiveKind.PULLBACK:
            native = self.native()
            return lambda w: tuple(native(w))
        blocks = self.jacobian()
        shapes = self.shapes

        def pullback(w):
            w = as_column(w)
            return tuple(from_entries(list(J.T @ w), s) for J, s in zip(blocks, shapes))

        return pullback

    def gradient(self):
        self._require_scalar_output()
        if self.ab.native_primitive is PrimitiveKind.PULLBACK:
            grads = self.native()(1.0)
        else:
            grads = tuple(from_entries(list(J[0]), s) for J, s in zip(self.jacobian(), self.shapes))
            self._require_scalar_output()
        return tuple(grads)

    def _require_scalar_output(self):
        known = self._out_shape
        if known is None and self.ab.native_primitive is PrimitiveKind.PULLBACK:
            known = self.out_shape()
        if known is not None and known != ():
            raise ShapeError(
                f"gradient needs a scalar-valued function, got output shape {known}; "
                "use jacobian for vector-valued functions",
                self.operation,
            )


def _jacobian_result(J):
    return tuple(_plain(block) for block in J)


def _plain(a):
    if isinstance(a, np.ndarray) and a.dtype == object and all(is_plain_number(v) for v in a.flat):
        return a.astype(np.float64)
    return a


# --------------------------------------------------------------------------
# public API


def derivative(ab, f, *xs):
    """Partial derivatives of a scalar function of scalar arguments."""
    call = _Call(ab, f, xs, "derivative")
    if any(s != () for s in call.shapes):
        raise ShapeError("derivative needs scalar arguments; use gradient or jacobian", "derivative")
    return call.gradient()


def gradient(ab, f, *xs):
    """Gradient of a scalar function, one entry per argument."""
    return _Call(ab, f, xs, "gradient").gradient()


def jacobian(ab, f, *xs):
    """Jacobian blocks ``(m x n_i)``, one per argument."""
    return _jacobian_result(_Call(ab, f, xs, "jacobian").jacobian())


def pushforward_function(ab, f, *xs):
    """Return ``v -> sum_i J_i v_i``.

    Seeds are a tuple with one entry per argument; with a single argument
    the bare seed is also accepted.
    """
    call = _Call(ab, f, xs, "pushforward_function")
    shapes = call.shapes
    inner = call.pushforward()

    def pushforward(seeds):
        if not isinstance(seeds, tuple) or (len(shapes) == 1 and len(seeds) != 1):
            seeds = (seeds,)
        if len(seeds) != len(shapes):
            raise ShapeError(f"expected {len(shapes)} seeds, got {len(seeds)}", "pushforward")
        seeds = [as_seed(v, s, "pushforward", f"seed {i}") for i, (v, s) in enumerate(zip(seeds, shapes))]
        y = as_output(inner(seeds), "pushforward")
        call._learn_shape(_shape(y))
        return y

    return pushforward


def pullback_function(ab, f, *xs):
    """Return ``w -> (J_1^T w, ..., J_k^T w)``."""
    call = _Call(ab, f, xs, "pullback_function")
    inner = call.pullback()
    out_shape = call.out_shape()

    def pullback(w):
        w = as_seed(w, out_shape, "pullback", "cotangent")
        return tuple(inner(w))

    return pullback


def primal_value(ab, f, *xs):
    """``f(*xs)``, taken from the backend's forward pass when it has one."""
    return _Call(ab, f, xs, "primal_value").value()


def value_and_derivative(ab, f, *xs):
    call = _Call(ab, f, xs, "value_and_derivative")
    if any(s != () for s in call.shapes):
        raise ShapeError("derivative needs scalar arguments", "value_and_derivative")
    ds = call.gradient()
    return call.value(), ds


def value_and_gradient(ab, f, *xs):
    call = _Call(ab, f, xs, "value_and_gradient")
    gs = call.gradient()
    return call.value(), gs


def value_and_jacobian(ab, f, *xs):
    call = _Call(ab, f, xs, "value_and_jacobian")
    J = call.jacobian()
    return call.value(), _jacobian_result(J)


def _hessian_pair(ab):
    if isinstance(ab, HigherOrderBackend):
        return ab.outer, ab.inner
    if not isinstance(ab, Backend):
        raise ConfigurationError(f"{ab!r} is not a backend handle", "hessian")
    if ab.mode in (Mode.FORWARD, Mode.REVERSE) and not _nestable(ab):
        raise ConfigurationError(f"{ab.name!r} cannot be nested over itself", "hessian")
    return ab, ab


def _hessian(ab, f, xs, operation):
    if len(xs) != 1:
        raise ArityError(f"hessian supports exactly one argument, got {len(xs)}", operation)
    outer, inner = _hessian_pair(ab)
    x = as_value(xs[0], operation)

    def grad(z):
        (g,) = _Call(inner, f, (z,), operation).gradient()
        return g

    (H,) = _Call(outer, grad, (x,), operation).jacobian()
    return _plain(H)


def hessian(ab, f, *xs):
    """Hessian of a scalar function of one argument (``n x n``, ``1 x 1`` for scalars)."""
    return _hessian(ab, f, xs, "hessian")


def value_and_hessian(ab, f, *xs):
    H = _hessian(ab, f, xs, "value_and_hessian")
    inner = ab.inner if isinstance(ab, HigherOrderBackend) else ab
    return _Call(inner, f, xs, "value_and_hessian").value(), H


def value_gradient_and_hessian(ab, f, *xs):
    inner = ab.inner if isinstance(ab, HigherOrderBackend) else ab
    v, g = value_and_gradient(inner, f, *xs)
    return v, g, _hessian(ab, f, xs, "value_gradient_and_hessian")
