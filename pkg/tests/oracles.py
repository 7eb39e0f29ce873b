"""Independent reference values for the tests.

Nothing here imports the package's derivative code; the stencil oracle uses
exact rational arithmetic and the Hessians are written out by hand.
"""

from fractions import Fraction
from math import factorial

import numpy as np


def exact_stencil(offsets, order):
    """Solve the moment system in rationals by Gauss-Jordan elimination."""
    n = len(offsets)
    a = [[Fraction(o) ** k for o in offsets] + [Fraction(factorial(order) if k == order else 0)]
         for k in range(n)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        p = a[col][col]
        a[col] = [v / p for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [row[-1] for row in a]


def lagrange_derivative_weights(offsets, order=1, at=0):
    """Weights from differentiating the Lagrange basis, a second exact route."""
    offsets = [Fraction(o) for o in offsets]
    weights = []
    for j, oj in enumerate(offsets):
        # coefficients of the j-th basis polynomial, lowest degree first
        poly = [Fraction(1)]
        denom = Fraction(1)
        for k, ok in enumerate(offsets):
            if k == j:
                continue
            poly = [Fraction(0)] + poly
            for i in range(len(poly) - 1):
                poly[i] -= ok * poly[i + 1]
            denom *= oj - ok
        poly = [c / denom for c in poly]
        for _ in range(order):
            poly = [i * c for i, c in enumerate(poly)][1:]
        weights.append(sum(c * Fraction(at) ** i for i, c in enumerate(poly)))
    return weights


FIVE_POINT_FIRST = [Fraction(1, 12), Fraction(-2, 3), Fraction(0), Fraction(2, 3), Fraction(-1, 12)]


# scalar functions of one vector argument with hand-written Hessians
def _rosen(v):
    return (1.0 - v[0]) ** 2 + 100.0 * (v[1] - v[0] ** 2) ** 2


def _rosen_h(v):
    x, y = v
    return np.array([[2.0 - 400.0 * y + 1200.0 * x * x, -400.0 * x], [-400.0 * x, 200.0]])


def _sum(v):
    total = v[0]
    for t in v[1:]:
        total = total + t
    return total


def _split_dot(z):
    return z[0] * z[2] + z[1] * z[3]


def _split_dot_h(z):
    H = np.zeros((4, 4))
    H[0, 2] = H[2, 0] = H[1, 3] = H[3, 1] = 1.0
    return H


def _product_sin(z):
    return z[0] * z[1] + np.sin(z[0])


def _product_sin_h(z):
    return np.array([[-np.sin(z[0]), 1.0], [1.0, 0.0]])


def _cubic_mix(z):
    return z[0] ** 3 * z[1] + np.exp(z[1]) * np.cos(z[0])


def _cubic_mix_h(z):
    x, y = z
    return np.array([
        [6 * x * y - np.exp(y) * np.cos(x), 3 * x * x - np.exp(y) * np.sin(x)],
        [3 * x * x - np.exp(y) * np.sin(x), np.exp(y) * np.cos(x)],
    ])


HESSIAN_CASES = [
    ("sum", _sum, np.array([1.0, 2.0, 3.0]), lambda v: np.zeros((3, 3))),
    ("rosenbrock", _rosen, np.array([-1.2, 1.0]), _rosen_h),
    ("rosenbrock-min", _rosen, np.array([1.0, 1.0]), _rosen_h),
    ("dot", _split_dot, np.array([1.0, 2.0, 3.0, 4.0]), _split_dot_h),
    ("product-sin", _product_sin, np.array([0.5, 2.0]), _product_sin_h),
    ("cubic-mix", _cubic_mix, np.array([0.3, -0.7]), _cubic_mix_h),
]


def normal_equation_solution(A, b):
    return np.linalg.solve(A.T @ A, A.T @ b)
