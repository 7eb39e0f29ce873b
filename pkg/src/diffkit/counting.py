"""Call counting for backends and functions.

``counting(ab)`` returns an unregistered handle with the same descriptor
whose native primitive is instrumented: every primitive construction and
every closure invocation is counted.  ``counted(f)`` counts evaluations of
``f`` (plain and lifted).  Both share a :class:`CallCounter`.
"""

import threading
from dataclasses import asdict, dataclass

from .core import Backend, HigherOrderBackend, PrimitiveKind

__all__ = ["CallCounter", "CallCounts", "counted", "counting"]


@dataclass(frozen=True)
class CallCounts:
    builds: int = 0
    jacobian_calls: int = 0
    pushforward_calls: int = 0
    pullback_calls: int = 0
    evaluations: int = 0

    def as_dict(self):
        return asdict(self)


class CallCounter:
    def __init__(self):
        self._lock = threading.Lock()
        self._counts = dict.fromkeys(CallCounts.__dataclass_fields__, 0)

    def add(self, key, n=1):
        with self._lock:
            self._counts[key] += n

    def snapshot(self):
        with self._lock:
            return CallCounts(**self._counts)

    def reset(self):
        with self._lock:
            for k in self._counts:
                self._counts[k] = 0


class _CountedClosure:
    def __init__(self, inner, counter, key):
        self.inner = inner
        self._counter = counter
        self._key = key

    def __call__(self, seed):
        self._counter.add(self._key)
        return self.inner(seed)


_CLOSURE_KEYS = {
    PrimitiveKind.PUSHFORWARD: "pushforward_calls",
    PrimitiveKind.PULLBACK: "pullback_calls",
}


def counting(ab, counter=None):
    """Instrumented copy of ``ab``; returns ``(handle, counter)``."""
    counter = counter or CallCounter()
    if isinstance(ab, HigherOrderBackend):
        outer, _ = counting(ab.outer, counter)
        inner, _ = counting(ab.inner, counter)
        return HigherOrderBackend(outer, inner, ab.name), counter
    impl = ab.primitive_impl
    kind = ab.native_primitive

    def primitive(f, xs):
        counter.add("builds")
        if kind is PrimitiveKind.JACOBIAN:
            counter.add("jacobian_calls")
            return impl(f, xs)
        return _CountedClosure(impl(f, xs), counter, _CLOSURE_KEYS[kind])

    primal = None
    if ab.primal_impl is not None:
        def primal(native):
            return ab.primal_impl(native.inner if isinstance(native, _CountedClosure) else native)

    return Backend(ab.descriptor, primitive, primal), counter


def counted(f, counter=None):
    """Wrap ``f`` so each evaluation increments ``evaluations``."""
    counter = counter or CallCounter()

    def wrapper(*args):
        counter.add("evaluations")
        return f(*args)

    wrapper.output_shape = getattr(f, "output_shape", None)
    return wrapper, counter
