"""Forward mode: tagged dual numbers.

A :class:`Dual` holds a primal and a tangent, either of which may itself be
a carrier with a *smaller* tag.  Tags keep nested differentiations apart:
an operation between duals of different tags treats the lower-tagged
operand as a constant, which is what prevents perturbation confusion.
"""


import numpy as np

from .. import ops
from ..errors import ConfigurationError
from ..values import (
    Carrier,
    as_output,
    base_float,
    entries,
    from_entries,
    new_tag,
    shape_of,
    tag_of,
    zeros,
)

__all__ = ["Dual", "DualPushforward", "dual_pushforward"]








def _sign(x):
    # abs'(0) is defined as 0
    v = base_float(x)
    return 1.0 if v > 0 else (-1.0 if v < 0 else 0.0)


class Dual(Carrier):
    __slots__ = ("primal", "tangent", "_tag")

    def __init__(self, primal, tangent, tag):
        self.primal = primal
        self.tangent = tangent
        self._tag = tag

    def __repr__(self):
        return f"Dual({self.primal!r}, {self.tangent!r}, tag={self._tag})"

    def _lift(self, other):
        """Split ``other`` into (primal, tangent) at this dual's level.

        Returns None when ``other`` outranks self and must handle the op.
        """
        if isinstance(other, np.ndarray):
            return None
        t = tag_of(other)
        if t == self._tag:
            return other.primal, other.tangent
        if t > self._tag:
            return None
        if isinstance(other, Carrier) or isinstance(other, (int, float, np.floating, np.integer)):
            return other, None
        return None

    # binary arithmetic -------------------------------------------------

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return _defer(other, "__radd__", self)
        if o[1] is None:
            return Dual(self.primal + o[0], self.tangent, self._tag)
        return Dual(self.primal + o[0], self.tangent + o[1], self._tag)

    def __radd__(self, other):
        o = self._lift(other)
        if o is None:
            return _defer(other, "__add__", self)
        return Dual(o[0] + self.primal, self.tangent if o[1] is None else o[1] + self.tangent, self._tag)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return _defer(other, "__rsub__", self)
        if o[1] is None:
            return Dual(self.primal - o[0], self.tangent, self._tag)
        return Dual(self.primal - o[0], self.tangent - o[1], self._tag)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return _defer(other, "__sub__", self)
        if o[1] is None:
            return Dual(o[0] - self.primal, -self.tangent, self._tag)
        return Dual(o[0] - self.primal, o[1] - self.tangent, self._tag)

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return _defer(other, "__rmul__", self)
        p, t = o
        if t is None:
            return Dual(self.primal * p, self.tangent * p, self._tag)
        return Dual(self.primal * p, self.tangent * p + self.primal * t, self._tag)

    def __rmul__(self, other):
        o = self._lift(other)
        if o is None:
            return _defer(other, "__mul__", self)
        p, t = o
        if t is None:
            return Dual(p * self.primal, p * self.tangent, self._tag)
        return Dual(p * self.primal, t * self.primal + p * self.tangent, self._tag)

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return _defer(other, "__rtruediv__", self)
        p, t = o
        q = self.primal / p
        if t is None:
            return Dual(q, self.tangent / p, self._tag)
        return Dual(q, (self.tangent - q * t) / p, self._tag)

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            return _defer(other, "__truediv__", self)
        p, t = o
        q = p / self.primal
        if t is None:
            return Dual(q, -(q * self.tangent) / self.primal, self._tag)
        return Dual(q, (t - q * self.tangent) / self.primal, self._tag)

    def __pow__(self, other):
        o = self._lift(other)
        if o is None:
            return _defer(other, "__rpow__", self)
        p, t = o
        value = self.primal ** p
        if t is None:
            # d/dx x**c = c x**(c-1); c == 0 has zero derivative
            if isinstance(p, (int, float)) and p == 0:
                return Dual(value, 0.0 * self.tangent, self._tag)
            return Dual(value, p * self.primal ** (p - 1) * self.tangent, self._tag)
        d = p * self.primal ** (p - 1) * self.tangent + value * ops.log(self.primal) * t
        return Dual(value, d, self._tag)

    def __rpow__(self, other):
        o = self._lift(other)
        if o is None:
            return _defer(other, "__pow__", self)
        p, t = o
        value = p ** self.primal
        d = value * ops.log(p) * self.tangent
        if t is not None:
            d = d + self.primal * p ** (self.primal - 1) * t
        return Dual(value, d, self._tag)

    # unary ---------------------------------------------------------------

    def __neg__(self):
        return Dual(-self.primal, -self.tangent, self._tag)

    def __pos__(self):
        return self

    def __abs__(self):
        return Dual(abs(self.primal), _sign(self.primal) * self.tangent, self._tag)

    def exp(self):
        e = ops.exp(self.primal)
        return Dual(e, e * self.tangent, self._tag)

    def log(self):
        return Dual(ops.log(self.primal), ops.divide(self.tangent, self.primal), self._tag)

    def sin(self):
        return Dual(ops.sin(self.primal), ops.cos(self.primal) * self.tangent, self._tag)

    def cos(self):
        return Dual(ops.cos(self.primal), -ops.sin(self.primal) * self.tangent, self._tag)

    def tanh(self):
        th = ops.tanh(self.primal)
        return Dual(th, ops.tanh_derivative(self.primal, th) * self.tangent, self._tag)

    def sqrt(self):
        s = ops.sqrt(self.primal)
        return Dual(s, ops.divide(self.tangent, 2.0 * s), self._tag)

    # comparisons act on the primal, so branches follow the actual value

    def __lt__(self, other):
        return base_float(self) < base_float(other)

    def __le__(self, other):
        return base_float(self) <= base_float(other)

    def __gt__(self, other):
        return base_float(self) > base_float(other)

    def __ge__(self, other):
        return base_float(self) >= base_float(other)

    def __eq__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        return base_float(self) == base_float(other)

    def __ne__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        return base_float(self) != base_float(other)

    __hash__ = None


def _defer(other, method, self):
    if isinstance(other, np.ndarray):
        return NotImplemented
    if isinstance(other, Carrier):
        return getattr(other, method)(self)
    raise ConfigurationError(f"unsupported operand type {type(other).__name__} for Dual")


def tangent_at(y, tag):
    """Tangent of ``y`` with respect to perturbation ``tag`` (0 if constant)."""
    if isinstance(y, Dual) and y._tag == tag:
        return y.tangent
    if tag_of(y) > tag:
        raise ConfigurationError("a perturbation escaped from an inner differentiation")
    return 0.0


def primal_at(y, tag):
    if isinstance(y, Dual) and y._tag == tag:
        return y.primal
    return y


class DualPushforward:
    """Pushforward closure of ``f`` at ``xs`` evaluated with dual numbers.

    Each call performs one lifted evaluation.  The primal computed by the
    most recent call is kept so that fused operations need no extra pass.
    """

    def __init__(self, f, xs):
        self.f = f
        self.xs = tuple(xs)
        self._last_primal = None

    def _lift(self, x, v, tag):
        if isinstance(x, np.ndarray):
            vs = v.tolist() if isinstance(v, np.ndarray) else list(v)
            out = np.empty(x.shape[0], dtype=object)
            for i, xi in enumerate(x.tolist()):
                out[i] = Dual(xi, vs[i], tag)
            return out
        return Dual(x, v, tag)

    def _evaluate(self, seeds):
        tag = new_tag()
        args = [self._lift(x, v, tag) for x, v in zip(self.xs, seeds)]
        y = as_output(self.f(*args), "pushforward")
        ys = entries(y)
        shape = () if not isinstance(y, np.ndarray) else y.shape
        primal = from_entries([primal_at(v, tag) for v in ys], shape)
        tangent = from_entries([tangent_at(v, tag) for v in ys], shape)
        return primal, tangent

    def __call__(self, seeds):
        primal, tangent = self._evaluate(seeds)
        self._last_primal = primal
        return tangent

    def primal(self):
        if self._last_primal is None:
            self._last_primal, _ = self._evaluate([zeros(shape_of(x)) for x in self.xs])
        return self._last_primal


def dual_pushforward(f, xs):
    return DualPushforward(f, xs)


def dual_primal(closure):
    return closure.primal()
