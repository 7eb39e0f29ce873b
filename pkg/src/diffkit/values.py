"""Value model shared by every backend.

A *numeric value* is either a scalar (a Python ``float``) or a dense 1-D
``numpy`` array.  Plain values use ``float64``; values that carry
differentiation state (dual numbers, tape variables) are stored in
object arrays so that ordinary numpy code runs unchanged on them.

Shapes are numpy shapes: ``()`` for a scalar, ``(n,)`` for a vector.
"""

import itertools
import math
import numbers

import numpy as np

from .errors import ConfigurationError, ShapeError

_tags = itertools.count(1)


def new_tag():
    """Return a fresh perturbation tag.

    Tags increase monotonically, so a carrier created by an inner (later)
    differentiation always outranks the carriers of enclosing ones.
    """
    return next(_tags)


# numpy ufuncs on object arrays call these names as methods on the
# elements.  numpy swallows errors raised during the attribute lookup, so
# they are real methods that raise when called.
_UNSUPPORTED_METHODS = frozenset(
    """tan arcsin arccos arctan arctan2 sinh cosh arcsinh arccosh arctanh
    log2 log10 log1p expm1 exp2 cbrt square reciprocal sign floor ceil rint
    trunc fmod hypot deg2rad rad2deg""".split()
)


def _unsupported(name):
    def method(self, *args):
        raise ConfigurationError(f"unsupported scalar operation {name!r} on {type(self).__name__}")

    method.__name__ = name
    return method


class Carrier:
    """Base class for scalar carriers (dual numbers, tape variables).

    Subclasses define ``_tag`` and the arithmetic.  Binary operations are
    resolved in favour of the operand with the larger tag; an operand with a
    smaller tag is a constant from the point of view of the larger one.
    """

    __slots__ = ()
    _tag = 0

    def __float__(self):
        raise ConfigurationError(
            f"cannot convert {type(self).__name__} to float; use numpy or "
            "diffkit.ops functions instead of the math module"
        )

    def __bool__(self):
        raise ConfigurationError(
            f"truth value of {type(self).__name__} is ambiguous; compare explicitly"
        )


for _name in _UNSUPPORTED_METHODS:
    setattr(Carrier, _name, _unsupported(_name))


def tag_of(x):
    if isinstance(x, Carrier):
        return x._tag
    return 0


def base_float(x):
    """Strip every carrier layer and return the underlying float."""
    while isinstance(x, Carrier):
        x = x.primal
    return float(x)


def is_plain_number(x):
    return isinstance(x, numbers.Real) and not isinstance(x, bool)


def is_scalar(x):
    return isinstance(x, Carrier) or is_plain_number(x)


def shape_of(x):
    if is_scalar(x):
        return ()
    return x.shape


def pack_vector(items):
    """Build a 1-D array, float64 when every entry is a plain number."""
    items = list(items)
    if all(is_plain_number(v) for v in items):
        return np.array(items, dtype=np.float64)
    out = np.empty(len(items), dtype=object)
    for i, v in enumerate(items):
        out[i] = v
    return out


def pack_matrix(rows, n_cols):
    rows = [list(r) for r in rows]
    if all(is_plain_number(v) for r in rows for v in r):
        return np.array(rows, dtype=np.float64).reshape(len(rows), n_cols)
    out = np.empty((len(rows), n_cols), dtype=object)
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            out[i, j] = v
    return out


def entries(x):
    """Flatten a numeric value to a list of scalars."""
    if is_scalar(x):
        return [x]
    return list(x)


def from_entries(items, shape):
    if shape == ():
        (v,) = items
        return float(v) if is_plain_number(v) else v
    return pack_vector(items)


def as_column(v):
    """A numeric value as a 1-D array (scalars become length 1)."""
    return pack_vector(entries(v))


def zeros(shape):
    if shape == ():
        return 0.0
    return np.zeros(shape)


def basis(shape, k):
    if shape == ():
        return 1.0
    e = np.zeros(shape)
    e[k] = 1.0
    return e


def size_of(shape):
    return 1 if shape == () else shape[0]


def _check_finite(values, what, operation):
    if not np.all(np.isfinite(values)):
        raise ShapeError(f"{what} contains NaN or Inf", operation)


def as_value(x, operation, what="argument"):
    """Normalize user input to a numeric value.

    Plain inputs are converted to ``float``/``float64`` and must be finite;
    carrier inputs (from an enclosing differentiation) pass through.
    """
    if isinstance(x, Carrier):
        return x
    if isinstance(x, bool):
        raise ShapeError(f"{what} must be numeric, got bool", operation)
    if is_plain_number(x):
        x = float(x)
        _check_finite(x, what, operation)
        return x
    if isinstance(x, (list, tuple, np.ndarray)):
        if isinstance(x, np.ndarray) and x.dtype == object:
            arr = x
        else:
            try:
                arr = np.asarray(x)
            except ValueError as exc:
                raise ShapeError(f"{what} is not a dense vector: {exc}", operation) from None
        if arr.dtype == object:
            arr = arr.copy()
            if arr.ndim == 0:
                return as_value(arr.item(), operation, what)
            if arr.ndim == 1 and all(is_plain_number(v) for v in arr):
                arr = arr.astype(np.float64)
        elif arr.dtype.kind in "iuf":
            arr = arr.astype(np.float64)
        else:
            raise ShapeError(f"{what} has unsupported dtype {arr.dtype}", operation)
        if arr.ndim == 0:
            return as_value(arr.item(), operation, what)
        if arr.ndim != 1:
            raise ShapeError(f"{what} must be a scalar or 1-D vector, got ndim={arr.ndim}", operation)
        if arr.shape[0] == 0:
            raise ShapeError(f"{what} is an empty vector", operation)
        if arr.dtype == np.float64:
            _check_finite(arr, what, operation)
        else:
            for v in arr:
                if not is_scalar(v):
                    raise ShapeError(f"{what} has non-numeric entry {v!r}", operation)
        return arr
    raise ShapeError(f"{what} must be a number or 1-D vector, got {type(x).__name__}", operation)


def as_output(y, operation):
    """Normalize a function result; non-finite values are kept (surfaced)."""
    if isinstance(y, Carrier):
        return y
    if is_plain_number(y):
        return float(y)
    if isinstance(y, tuple) and any(isinstance(v, (list, tuple, np.ndarray)) for v in y):
        raise ShapeError(
            "functions with multiple outputs are not supported; "
            "return a single concatenated vector instead",
            operation,
        )
    if isinstance(y, (list, tuple, np.ndarray)):
        arr = y if isinstance(y, np.ndarray) else pack_vector(y)
        if arr.ndim == 0:
            return as_output(arr.item(), operation)
        if arr.ndim != 1:
            raise ShapeError(f"function output must be scalar or 1-D, got ndim={arr.ndim}", operation)
        if arr.shape[0] == 0:
            raise ShapeError("function output is an empty vector", operation)
        if arr.dtype == object:
            if all(is_plain_number(v) for v in arr):
                return arr.astype(np.float64)
            return arr
        if arr.dtype.kind not in "iuf":
            raise ShapeError(f"function output has unsupported dtype {arr.dtype}", operation)
        return arr.astype(np.float64, copy=False)
    raise ShapeError(f"function returned unsupported type {type(y).__name__}", operation)


def as_seed(v, shape, operation, what):
    """Validate a tangent/cotangent against the shape it must match."""
    if shape == ():
        if isinstance(v, (list, tuple, np.ndarray)):
            arr = np.asarray(v, dtype=object if isinstance(v, np.ndarray) and v.dtype == object else None)
            if arr.ndim == 0:
                v = arr.item()
            else:
                raise ShapeError(f"{what} must be a scalar", operation)
        if not is_scalar(v):
            raise ShapeError(f"{what} must be a scalar, got {type(v).__name__}", operation)
        v = as_value(v, operation, what)
        return v
    v = as_value(v, operation, what)
    if shape_of(v) != shape:
        raise ShapeError(f"{what} has shape {shape_of(v)}, expected {shape}", operation)
    return v


def isfinite_value(y):
    return all(math.isfinite(base_float(v)) for v in entries(y))
