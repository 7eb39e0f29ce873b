"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``DIFFKIT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _sweep

COMPILED = False
if not os.environ.get("DIFFKIT_PURE_PYTHON"):
    try:
        from ._sweep_ext import reverse_sweep
        COMPILED = True
    except ImportError:
        pass

if not COMPILED:
    reverse_sweep = _sweep.reverse_sweep

python_reverse_sweep = _sweep.reverse_sweep

__all__ = ["COMPILED", "reverse_sweep", "python_reverse_sweep"]
