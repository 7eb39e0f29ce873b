"""Reverse mode: an append-only tape of scalar operations.

Recording runs ``f`` once on :class:`TapeVar` inputs.  Every operation
appends a node holding up to two parent indices and the local partial
derivatives evaluated at the recorded primals.  A reverse sweep then pushes
a cotangent from the outputs back to the inputs.

Primals and partials may be carriers of an enclosing differentiation, so a
tape can be recorded on top of dual numbers or another tape.  Tapes whose
partials are all plain floats are frozen into arrays and swept by the
compiled kernel.
"""

import threading
from typing import NamedTuple

import numpy as np

from .. import ops
from ..errors import ConfigurationError, UsageError
from ..kernels import reverse_sweep
from ..values import (
    Carrier,
    as_output,
    as_seed,
    base_float,
    entries,
    from_entries,
    is_plain_number,
    new_tag,
    tag_of,
)

__all__ = ["Tape", "TapeNode", "TapeVar", "TapePullback", "tape_pullback"]








class TapeNode(NamedTuple):
    op_name: str
    parent_indices: tuple
    local_partials: tuple
    primal: object
    adjoint_accumulator: object = 0.0


class Tape:
    """Append-only operation record.

    A tape is filled by one thread during recording and then frozen.  After
    freezing it is read-only, so sweeps (which use their own scratch
    adjoints) may run from any thread.
    """

    def __init__(self):
        self._tag = new_tag()
        self.ops = []
        self.primals = []
        self.parent0 = []
        self.parent1 = []
        self.partial0 = []
        self.partial1 = []
        self.input_slots = []
        self.output_slots = []
        self.frozen = False
        self.released = False
        self._all_float = True
        self._arrays = None
        self._owner = threading.get_ident()

    def __len__(self):
        return len(self.ops)

    def push(self, op, primal, p0=-1, d0=0.0, p1=-1, d1=0.0):
        if self.frozen:
            raise UsageError("operation on a variable of a frozen tape")
        if threading.get_ident() != self._owner:
            raise UsageError("a tape may only be recorded from the thread that created it")
        if type(d0) is int:
            d0 = float(d0)
        if type(d1) is int:
            d1 = float(d1)
        if self._all_float and not (type(d0) is float and type(d1) is float):
            self._all_float = False
        self.ops.append(op)
        self.primals.append(primal)
        self.parent0.append(p0)
        self.partial0.append(d0)
        self.parent1.append(p1)
        self.partial1.append(d1)
        return TapeVar(self, len(self.ops) - 1, primal)

    def variable(self, primal):
        var = self.push("input", primal)
        self.input_slots.append(var.index)
        return var

    def freeze(self):
        self.frozen = True
        if self._all_float:
            self._arrays = (
                np.asarray(self.parent0, dtype=np.int64),
                np.asarray(self.parent1, dtype=np.int64),
                np.asarray(self.partial0, dtype=np.float64),
                np.asarray(self.partial1, dtype=np.float64),
            )

    def release(self):
        self.released = True
        self._arrays = None

    @property
    def nodes(self):
        out = []
        for i, op in enumerate(self.ops):
            parents = tuple(p for p in (self.parent0[i], self.parent1[i]) if p >= 0)
            partials = (self.partial0[i], self.partial1[i])[: len(parents)]
            out.append(TapeNode(op, parents, partials, self.primals[i]))
        return out

    def sweep(self, seeds):
        """Reverse sweep from ``seeds`` (pairs of node index and adjoint).

        Returns the full adjoint list.  Nodes whose adjoint is exactly zero
        propagate nothing.
        """
        if self.released:
            raise UsageError("the tape has been released")
        n = len(self.ops)
        start = max((i for i, _ in seeds), default=-1)
        if self._arrays is not None and all(isinstance(w, (float, np.floating)) for _, w in seeds):
            adj = np.zeros(n)
            for i, w in seeds:
                adj[i] += w
            reverse_sweep(*self._arrays, adj, start)
            return adj.tolist()
        adj = [0.0] * n
        for i, w in seeds:
            adj[i] = adj[i] + w
        p0, p1, d0, d1 = self.parent0, self.parent1, self.partial0, self.partial1
        for i in range(start, -1, -1):
            a = adj[i]
            if not isinstance(a, Carrier) and a == 0.0:
                continue
            j = p0[i]
            if j >= 0:
                adj[j] = adj[j] + a * d0[i]
                j = p1[i]
                if j >= 0:
                    adj[j] = adj[j] + a * d1[i]
        return adj


class TapeVar(Carrier):
    __slots__ = ("tape", "index", "primal", "_tag")

    def __init__(self, tape, index, primal):
        self.tape = tape
        self.index = index
        self.primal = primal
        self._tag = tape._tag

    def __repr__(self):
        return f"TapeVar(#{self.index}, {self.primal!r})"

    def _classify(self, other):
        """0: same tape, 1: constant here, 2: other outranks self."""
        if isinstance(other, np.ndarray):
            return 2
        t = tag_of(other)
        if t == self._tag:
            return 0
        if t > self._tag:
            return 2
        if isinstance(other, Carrier) or is_plain_number(other):
            return 1
        return 3

    def _unary(self, op, primal, partial):
        return self.tape.push(op, primal, self.index, partial)

    def __add__(self, other):
        k = self._classify(other)
        if k == 0:
            return self.tape.push("add", self.primal + other.primal, self.index, 1.0, other.index, 1.0)
        if k == 1:
            return self._unary("add", self.primal + other, 1.0)
        return _defer(other, "__radd__", self)

    def __radd__(self, other):
        k = self._classify(other)
        if k == 1:
            return self._unary("add", other + self.primal, 1.0)
        if k == 0:
            return other.__add__(self)
        return _defer(other, "__add__", self)

    def __sub__(self, other):
        k = self._classify(other)
        if k == 0:
            return self.tape.push("sub", self.primal - other.primal, self.index, 1.0, other.index, -1.0)
        if k == 1:
            return self._unary("sub", self.primal - other, 1.0)
        return _defer(other, "__rsub__", self)

    def __rsub__(self, other):
        k = self._classify(other)
        if k == 1:
            return self._unary("sub", other - self.primal, -1.0)
        if k == 0:
            return other.__sub__(self)
        return _defer(other, "__sub__", self)

    def __mul__(self, other):
        k = self._classify(other)
        if k == 0:
            return self.tape.push(
                "mul", self.primal * other.primal, self.index, other.primal, other.index, self.primal
            )
        if k == 1:
            return self._unary("mul", self.primal * other, other)
        return _defer(other, "__rmul__", self)

    def __rmul__(self, other):
        k = self._classify(other)
        if k == 1:
            return self._unary("mul", other * self.primal, other)
        if k == 0:
            return other.__mul__(self)
        return _defer(other, "__mul__", self)

    def __truediv__(self, other):
        k = self._classify(other)
        if k == 0:
            q = self.primal / other.primal
            return self.tape.push("div", q, self.index, 1.0 / other.primal, other.index, -q / other.primal)
        if k == 1:
            return self._unary("div", self.primal / other, 1.0 / other)
        return _defer(other, "__rtruediv__", self)

    def __rtruediv__(self, other):
        k = self._classify(other)
        if k == 1:
            q = other / self.primal
            return self._unary("div", q, -q / self.primal)
        if k == 0:
            return other.__truediv__(self)
        return _defer(other, "__truediv__", self)

    def __pow__(self, other):
        k = self._classify(other)
        if k == 0:
            value = self.primal ** other.primal
            return self.tape.push(
                "pow",
                value,
                self.index,
                other.primal * self.primal ** (other.primal - 1),
                other.index,
                value * ops.log(self.primal),
            )
        if k == 1:
            value = self.primal ** other
            if isinstance(other, (int, float)) and other == 0:
                return self._unary("pow", value, 0.0)
            return self._unary("pow", value, other * self.primal ** (other - 1))
        return _defer(other, "__rpow__", self)

    def __rpow__(self, other):
        k = self._classify(other)
        if k == 1:
            value = other ** self.primal
            return self._unary("pow", value, value * ops.log(other))
        if k == 0:
            return other.__pow__(self)
        return _defer(other, "__pow__", self)

    def __neg__(self):
        return self._unary("neg", -self.primal, -1.0)

    def __pos__(self):
        return self

    def __abs__(self):
        v = base_float(self.primal)
        # abs'(0) is defined as 0
        return self._unary("abs", abs(self.primal), 1.0 if v > 0 else (-1.0 if v < 0 else 0.0))

    def exp(self):
        e = ops.exp(self.primal)
        return self._unary("exp", e, e)

    def log(self):
        return self._unary("log", ops.log(self.primal), ops.divide(1.0, self.primal))

    def sin(self):
        return self._unary("sin", ops.sin(self.primal), ops.cos(self.primal))

    def cos(self):
        return self._unary("cos", ops.cos(self.primal), -ops.sin(self.primal))

    def tanh(self):
        th = ops.tanh(self.primal)
        return self._unary("tanh", th, ops.tanh_derivative(self.primal, th))

    def sqrt(self):
        s = ops.sqrt(self.primal)
        return self._unary("sqrt", s, ops.divide(1.0, 2.0 * s))

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
    raise ConfigurationError(f"unsupported operand type {type(other).__name__} for TapeVar")


class TapePullback:
    """Pullback closure backed by one recorded tape.

    Construction runs the forward sweep; each call is one reverse sweep
    with fresh adjoints.  ``value`` is the primal output of the recording.
    """

    def __init__(self, f, xs):
        tape = Tape()
        args = []
        self.input_indices = []
        for x in xs:
            if isinstance(x, np.ndarray):
                vars_ = np.empty(x.shape[0], dtype=object)
                idx = []
                for i, xi in enumerate(x.tolist()):
                    v = tape.variable(xi)
                    vars_[i] = v
                    idx.append(v.index)
                args.append(vars_)
                self.input_indices.append(idx)
            else:
                v = tape.variable(x)
                args.append(v)
                self.input_indices.append(v.index)
        y = as_output(f(*args), "pullback")
        self.output_shape = () if not isinstance(y, np.ndarray) else y.shape
        outs = entries(y)
        self.output_indices = []
        primals = []
        for v in outs:
            if isinstance(v, TapeVar) and v.tape is tape:
                self.output_indices.append(v.index)
                primals.append(v.primal)
            elif tag_of(v) > tape._tag:
                raise ConfigurationError("a perturbation escaped from an inner differentiation")
            else:
                self.output_indices.append(-1)
                primals.append(v)
        tape.output_slots = [i for i in self.output_indices if i >= 0]
        tape.freeze()
        self.tape = tape
        self.value = from_entries(primals, self.output_shape)

    def __call__(self, cotangent):
        if self.tape.released:
            raise UsageError("pullback called after its tape was released")
        w = as_seed(cotangent, self.output_shape, "pullback", "cotangent")
        seeds = [(i, wi) for i, wi in zip(self.output_indices, entries(w)) if i >= 0]
        adj = self.tape.sweep(seeds)
        out = []
        for idx in self.input_indices:
            if isinstance(idx, list):
                out.append(from_entries([adj[i] for i in idx], (len(idx),)))
            else:
                out.append(adj[idx])
        return tuple(out)

    def release(self):
        self.tape.release()


def tape_pullback(f, xs):
    return TapePullback(f, xs)


def tape_primal(closure):
    return closure.value

