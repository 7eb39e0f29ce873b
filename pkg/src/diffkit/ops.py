"""Scalar and reduction helpers that work on every carrier.

numpy ufuncs already dispatch to carrier methods on object arrays, so
``np.exp(v)`` works inside differentiated code.  Reductions are different:
float64 ``np.sum``/``np.dot`` use pairwise or BLAS summation, object arrays
use a plain left-to-right loop.  The reductions here always sum left to
right, so a function written with them gives bitwise-identical primal
values on plain floats and on carriers.

Plain scalars go through numpy's scalar ufuncs rather than ``math``: they
round exactly like numpy's array loops (``math.exp`` and ``math.tanh`` do
not), and they return ``inf``/``nan`` instead of raising, so non-finite
intermediates surface as values.
"""

import numpy as np

from .values import Carrier, entries

__all__ = ["abs", "cos", "dot", "exp", "log", "sin", "sqrt", "sum", "tanh"]

_builtin_abs = abs


def _unary(name):
    ufunc = getattr(np, name)

    def op(x):
        if isinstance(x, Carrier):
            return getattr(x, name)()
        if isinstance(x, np.ndarray):
            return ufunc(x)
        return float(ufunc(x))

    op.__name__ = name
    return op


exp = _unary("exp")
log = _unary("log")
sin = _unary("sin")
cos = _unary("cos")
tanh = _unary("tanh")
sqrt = _unary("sqrt")


def tanh_derivative(x, th):
    """``1 - tanh(x)**2``; plain floats use ``1/cosh(x)**2``, which does not cancel."""
    if isinstance(x, Carrier):
        return 1.0 - th * th
    c = float(np.cosh(x))
    return 1.0 / (c * c) if c < 1e154 else 0.0


def divide(a, b):
    """``a / b`` that gives ``inf``/``nan`` for plain floats instead of raising."""
    if isinstance(a, Carrier) or isinstance(b, Carrier):
        return a / b
    return float(np.true_divide(a, b))


def abs(x):  # noqa: A001
    if isinstance(x, np.ndarray):
        return np.abs(x)
    return _builtin_abs(x)


def sum(v):  # noqa: A001
    it = iter(entries(v))
    acc = next(it)
    for x in it:
        acc = acc + x
    return acc


def dot(v, w):
    a, b = entries(v), entries(w)
    if len(a) != len(b):
        raise ValueError(f"dot of vectors with lengths {len(a)} and {len(b)}")
    acc = a[0] * b[0]
    for x, y in zip(a[1:], b[1:]):
        acc = acc + x * y
    return acc
