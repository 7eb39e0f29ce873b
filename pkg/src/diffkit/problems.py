"""Built-in test problems with analytic derivatives.

Registry version 1.  Changing a problem's function, point or seed is a
breaking change for the agreement suite and must bump ``REGISTRY_VERSION``.
"""

from dataclasses import dataclass

import numpy as np

from . import ops
from .solvers import ResidualProblem

REGISTRY_VERSION = 1


@dataclass(frozen=True)
class Problem:
    name: str
    description: str
    f: object
    args: tuple
    jacobian: object
    hessian: object = None

    @property
    def scalar_output(self):
        return np.ndim(self.f(*self.args)) == 0

    @property
    def operations(self):
        ops_ = ["jacobian"]
        if self.scalar_output:
            ops_.insert(0, "gradient")
            if all(np.ndim(a) == 0 for a in self.args):
                ops_.insert(0, "derivative")
            if len(self.args) == 1:
                ops_.append("hessian")
        return tuple(ops_)


def _sum(v):
    return ops.sum(v)


def _dot(v, w):
    return ops.dot(v, w)


def _product_sin(x, y):
    return x * y + ops.sin(x)


def rosenbrock(v):
    return (1.0 - v[0]) ** 2 + 100.0 * (v[1] - v[0] ** 2) ** 2


def rosenbrock_hessian(v):
    x, y = v
    return np.array([[2.0 - 400.0 * y + 1200.0 * x**2, -400.0 * x], [-400.0 * x, 200.0]])


def rosenbrock_gradient(v):
    x, y = v
    return np.array([-2.0 * (1.0 - x) - 400.0 * x * (y - x**2), 200.0 * (y - x**2)])


def circle_diagonal(v):
    return [v[0] ** 2 + v[1] ** 2 - 1.0, v[0] - v[1]]


class RandomSmoothMap:
    """``f(v)_r = tanh((A v)_r + b_r) + 0.1 sin(v_{r mod n})`` with seeded A, b."""

    def __init__(self, n, m, seed=0):
        rng = np.random.default_rng(seed)
        self.n, self.m = n, m
        self.A = rng.normal(size=(m, n)) / np.sqrt(n)
        self.b = rng.normal(size=m)
        self.point = rng.uniform(-1.0, 1.0, size=n)
        self._rows = self.A.tolist()
        self._b = self.b.tolist()

    def __call__(self, v):
        out = []
        for r in range(self.m):
            z = ops.dot(self._rows[r], v) + self._b[r]
            out.append(ops.tanh(z) + 0.1 * ops.sin(v[r % self.n]))
        return out

    def jacobian(self, v):
        v = np.asarray(v, dtype=float)
        t = np.tanh(self.A @ v + self.b)
        J = (1.0 - t**2)[:, None] * self.A
        for r in range(self.m):
            J[r, r % self.n] += 0.1 * np.cos(v[r % self.n])
        return J


_random_map = RandomSmoothMap(4, 3, seed=0)

PROBLEMS = {
    p.name: p
    for p in [
        Problem(
            "sum",
            "f(v) = sum(v) at (1, 2, 3)",
            _sum,
            (np.array([1.0, 2.0, 3.0]),),
            lambda v: (np.ones((1, 3)),),
            lambda v: np.zeros((3, 3)),
        ),
        Problem(
            "dot",
            "f(v, w) = v.w at (1, 2), (3, 4)",
            _dot,
            (np.array([1.0, 2.0]), np.array([3.0, 4.0])),
            lambda v, w: (np.atleast_2d(w), np.atleast_2d(v)),
        ),
        Problem(
            "product-sin",
            "f(x, y) = x y + sin(x) at (0.5, 2)",
            _product_sin,
            (0.5, 2.0),
            lambda x, y: (np.array([[y + np.cos(x)]]), np.array([[x]])),
        ),
        Problem(
            "rosenbrock",
            "f(v) = (1 - v1)^2 + 100 (v2 - v1^2)^2 at (-1.2, 1)",
            rosenbrock,
            (np.array([-1.2, 1.0]),),
            lambda v: (rosenbrock_gradient(v)[None, :],),
            rosenbrock_hessian,
        ),
        Problem(
            "circle-diagonal",
            "F(v) = (v1^2 + v2^2 - 1, v1 - v2) at (1, 0.5)",
            circle_diagonal,
            (np.array([1.0, 0.5]),),
            lambda v: (np.array([[2.0 * v[0], 2.0 * v[1]], [1.0, -1.0]]),),
        ),
        Problem(
            "random-smooth-map",
            "tanh(A v + b) + 0.1 sin(v), R^4 -> R^3, seed 0",
            _random_map,
            (_random_map.point,),
            lambda v: (_random_map.jacobian(v),),
        ),
    ]
}


def _linear_problem():
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    b = np.array([1.0, 2.0, 3.0])
    return ResidualProblem(lambda x, p: A @ x - p, b, np.zeros(2)), A, b


LINEAR_A = _linear_problem()[1]
LINEAR_B = _linear_problem()[2]


def _rosenbrock_residuals(x, p):
    return [p[0] - x[0], p[1] * (x[1] - x[0] ** 2)]


LEAST_SQUARES = {
    "rosenbrock": ResidualProblem(_rosenbrock_residuals, np.array([1.0, 10.0]), np.array([-1.2, 1.0])),
    "linear": _linear_problem()[0],
}

ROOTS = {
    "circle-diagonal": (circle_diagonal, np.array([1.0, 0.5])),
    "quadratic": (lambda x: x**2 - 4.0, 3.0),
}
