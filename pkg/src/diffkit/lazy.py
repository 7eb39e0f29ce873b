"""Matrix-free views of derivatives.

Constructing an operator only evaluates ``f`` once to learn the output
shape.  The first right multiplication builds (and caches) the pushforward
closure, the first left multiplication the pullback closure.  When the
backend has to derive that direction from a materialized Jacobian, the
Jacobian is built once on first use and reused.

``op @ v`` is a right multiplication, ``w @ op`` a left multiplication.
"""

import threading

from .core import _Call, _hessian, _hessian_pair, _jacobian_result, _shape
from .errors import ArityError, ShapeError
from .values import as_output, as_seed

__all__ = [
    "LazyDerivative",
    "LazyGradient",
    "LazyHessian",
    "LazyJacobian",
    "lazy_derivative",
    "lazy_gradient",
    "lazy_hessian",
    "lazy_jacobian",
]


class _Cached:
    def __init__(self):
        self._lock = threading.Lock()
        self._cache = {}

    def get(self, key, build):
        fn = self._cache.get(key)
        if fn is None:
            with self._lock:
                fn = self._cache.get(key)
                if fn is None:
                    fn = self._cache[key] = build()
        return fn


def _seeds(seeds, shapes, operation):
    if not isinstance(seeds, tuple) or (len(shapes) == 1 and len(seeds) != 1):
        seeds = (seeds,)
    if len(seeds) != len(shapes):
        raise ShapeError(f"expected {len(shapes)} seeds, got {len(seeds)}", operation)
    return [as_seed(v, s, operation, f"seed {i}") for i, (v, s) in enumerate(zip(seeds, shapes))]


class LazyJacobian:
    """Jacobian of ``f`` at ``xs`` as a linear operator, one block per argument."""

    __array_ufunc__ = None
    _operation = "lazy_jacobian"

    def __init__(self, ab, f, *xs):
        self._call = _Call(ab, f, xs, self._operation)
        y = as_output(f(*self._call.xs), self._operation)
        self._call._learn_shape(_shape(y))
        self.input_shapes = tuple(self._call.shapes)
        self.output_shape = self._call.out_shape()
        self._closures = _Cached()
        self._validate()

    def _validate(self):
        pass

    @property
    def backend(self):
        return self._call.ab

    def right_multiply(self, v):
        """``J v`` for a tangent with one entry per argument."""
        seeds = _seeds(v, self.input_shapes, "right_multiply")
        pushforward = self._closures.get("pushforward", self._call.pushforward)
        return as_output(pushforward(seeds), "right_multiply")

    def left_multiply(self, w):
        """``J^T w``, one cotangent per argument."""
        w = as_seed(w, self.output_shape, "left_multiply", "cotangent")
        pullback = self._closures.get("pullback", self._call.pullback)
        return tuple(pullback(w))

    def materialize(self):
        return _jacobian_result(self._call.jacobian())

    def __matmul__(self, v):
        return self.right_multiply(v)

    def __rmatmul__(self, w):
        return self.left_multiply(w)


class LazyGradient(LazyJacobian):
    """Gradient of a scalar function: ``g @ v`` is the directional derivative."""

    _operation = "lazy_gradient"

    def _validate(self):
        if self.output_shape != ():
            raise ShapeError(
                "lazy_gradient needs a scalar-valued function; use lazy_jacobian", self._operation
            )

    def materialize(self):
        return self._call.gradient()


class LazyDerivative(LazyGradient):
    """Derivative of a scalar function of scalar arguments."""

    _operation = "lazy_derivative"

    def _validate(self):
        super()._validate()
        if any(s != () for s in self.input_shapes):
            raise ShapeError("lazy_derivative needs scalar arguments", self._operation)


class LazyHessian:
    """Hessian of a scalar function of one argument as a symmetric operator.

    ``H v`` is the pushforward of the gradient map along ``v`` (outer
    backend over inner gradient); ``H`` is never formed unless the outer
    backend can only push forward through a materialized Jacobian.
    """

    __array_ufunc__ = None

    def __init__(self, ab, f, *xs):
        if len(xs) != 1:
            raise ArityError(f"lazy_hessian supports exactly one argument, got {len(xs)}", "lazy_hessian")
        self._ab = ab
        self._f = f
        outer, inner = _hessian_pair(ab)
        probe = _Call(inner, f, xs, "lazy_hessian")
        y = as_output(f(*probe.xs), "lazy_hessian")
        if _shape(y) != ():
            raise ShapeError("lazy_hessian needs a scalar-valued function", "lazy_hessian")
        self.x = probe.xs[0]
        self.shape = probe.shapes[0]

        def grad(z):
            (g,) = _Call(inner, f, (z,), "lazy_hessian").gradient()
            return g

        self._grad_call = _Call(outer, grad, (self.x,), "lazy_hessian")
        self._grad_call._learn_shape(self.shape)
        self._closures = _Cached()

    def hessian_vector_product(self, v):
        v = as_seed(v, self.shape, "hessian_vector_product", "vector")
        pushforward = self._closures.get("pushforward", self._grad_call.pushforward)
        return as_output(pushforward([v]), "hessian_vector_product")

    right_multiply = hessian_vector_product

    def left_multiply(self, w):
        w = as_seed(w, self.shape, "left_multiply", "vector")
        pullback = self._closures.get("pullback", self._grad_call.pullback)
        (out,) = pullback(w)
        return out

    def materialize(self):
        return _hessian(self._ab, self._f, (self.x,), "lazy_hessian")

    def __matmul__(self, v):
        return self.hessian_vector_product(v)

    def __rmatmul__(self, w):
        return self.left_multiply(w)


def lazy_jacobian(ab, f, *xs):
    return LazyJacobian(ab, f, *xs)


def lazy_gradient(ab, f, *xs):
    return LazyGradient(ab, f, *xs)


def lazy_derivative(ab, f, *xs):
    return LazyDerivative(ab, f, *xs)


def lazy_hessian(ab, f, *xs):
    return LazyHessian(ab, f, *xs)
