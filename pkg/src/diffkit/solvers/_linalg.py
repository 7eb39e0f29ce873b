import numpy as np
import scipy.linalg


def rcond(a):
    """Reciprocal 2-norm condition number (0 for singular matrices)."""
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0 or not np.all(np.isfinite(s)):
        return 0.0
    return float(s[-1] / s[0])


def solve_spd(a, b):
    """Solve a symmetric positive semi-definite system.

    Cholesky first; on failure fall back to the symmetric-pivoting
    (Bunch-Kaufman) solver.
    """
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(a), b)
    except np.linalg.LinAlgError:
        return scipy.linalg.solve(a, b, assume_a="sym")


def inf_norm(v):
    return float(np.max(np.abs(v))) if np.size(v) else 0.0
