"""Higher-order composition of two backends."""

from ..core import HigherOrderBackend

__all__ = ["higher_order"]


def higher_order(outer, inner, name=None):
    """Pair ``outer`` and ``inner``: Hessians are ``outer``-Jacobians of
    ``inner``-gradients, first-order operations use ``inner``.

    ``higher_order(forward, reverse)`` is forward-over-reverse.
    """
    return HigherOrderBackend(outer, inner, name)
