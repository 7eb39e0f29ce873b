import ast
import inspect

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import diffkit as dk
from diffkit import ops
from diffkit import solvers
from diffkit.counting import counting
from diffkit.problems import LEAST_SQUARES, LINEAR_A, LINEAR_B
from diffkit.solvers import (
    GaussNewtonConfig,
    ResidualProblem,
    Termination,
    gauss_newton,
    gauss_newton_step,
    newton_raphson_root,
    objective,
)

from oracles import normal_equation_solution

ALL = ["fdm", "forward-dual", "tape", "forward-over-reverse", "reverse-over-forward"]


def B(name):
    return dk.get_backend(name)


def test_objective_examples():
    assert objective(ResidualProblem(lambda x, p: x - p, 1.0, 0.0), 3.0) == 2.0
    assert objective(ResidualProblem(lambda x, p: x - p, 1.0, 0.0), 1.0) == 0.0
    assert objective(ResidualProblem(lambda x, p: x, 0.0, 0.0), np.array([3.0, 4.0])) == 12.5


@pytest.mark.parametrize("name", ALL)
def test_linear_step_is_exact(name):
    problem = LEAST_SQUARES["linear"]
    x, alpha = gauss_newton_step(problem, problem.x0, B(name))
    assert alpha == 1.0
    np.testing.assert_allclose(x, normal_equation_solution(LINEAR_A, LINEAR_B), atol=1e-10, rtol=0)


def test_step_at_minimizer_is_unchanged():
    problem = LEAST_SQUARES["linear"]
    xstar = normal_equation_solution(LINEAR_A, LINEAR_B)
    x, _ = gauss_newton_step(problem, xstar, B("tape"))
    np.testing.assert_allclose(x, xstar, atol=1e-14)


def test_rosenbrock_step_decreases_along_direction():
    problem = LEAST_SQUARES["rosenbrock"]
    x0 = problem.x0
    x1, alpha = gauss_newton_step(problem, x0, B("tape"))
    assert objective(problem, x1) < objective(problem, x0)
    # brute force: the accepted point lies on the ray, and the full step was rejected
    d = (x1 - x0) / alpha
    assert objective(problem, x0 + d) >= objective(problem, x0) or alpha == 1.0
    for a in np.linspace(alpha / 4, alpha, 5):
        assert np.isfinite(objective(problem, x0 + a * d))


@pytest.mark.parametrize("name", ALL)
def test_gauss_newton_examples(name):
    state = gauss_newton(LEAST_SQUARES["linear"], B(name))
    assert state.termination is Termination.CONVERGED
    assert state.iterations <= 2
    state = gauss_newton(LEAST_SQUARES["rosenbrock"], B(name))
    assert state.termination is Termination.CONVERGED
    assert state.iterations <= 50
    np.testing.assert_allclose(state.x, [1.0, 1.0], atol=1e-6)
    assert state.objectives[-1] <= 1e-12


def test_monotone_objectives():
    state = gauss_newton(LEAST_SQUARES["rosenbrock"], B("forward-dual"))
    s = state.objectives
    assert all(b < a for a, b in zip(s, s[1:]))
    assert len(state.step_lengths) == state.iterations
    assert state.step_length == state.step_lengths[-1]
    assert all(0 < a <= 1.0 for a in state.step_lengths)


def test_already_optimal():
    problem = ResidualProblem(lambda x, p: [x[0] - p[0], x[1] - p[1]], np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    state = gauss_newton(problem, B("tape"))
    assert state.termination is Termination.CONVERGED
    assert state.iterations == 0 and len(state.iterates) == 1


def test_backend_agnostic_histories():
    ref = np.array(gauss_newton(LEAST_SQUARES["rosenbrock"], B("forward-dual")).iterates)
    for name in ALL:
        h = np.array(gauss_newton(LEAST_SQUARES["rosenbrock"], B(name)).iterates)
        assert h.shape == ref.shape
        assert np.max(np.abs(h - ref)) <= (1e-5 if name == "fdm" else 1e-8)


def test_fdm_and_dual_final_iterates_agree():
    a = gauss_newton(LEAST_SQUARES["rosenbrock"], B("fdm")).x
    b = gauss_newton(LEAST_SQUARES["rosenbrock"], B("forward-dual")).x
    np.testing.assert_allclose(a, b, atol=1e-5)


def test_singular_normal_equations():
    # residual ignores x[1]: J has a zero column
    problem = ResidualProblem(lambda x, p: [x[0] - p, x[0] * 2.0 - p], 1.0, np.array([0.0, 0.0]))
    state = gauss_newton(problem, B("tape"))
    assert state.termination is Termination.SINGULAR_NORMAL_EQUATIONS
    with pytest.raises(solvers.SingularNormalEquations):
        gauss_newton_step(problem, problem.x0, B("tape"))


def test_line_search_failure():
    # r = x^2 + 1 from x=1 gives d=-1; steps of 8 and 4 both overshoot
    problem = ResidualProblem(lambda x, p: [x[0] ** 2 + p], 1.0, np.array([1.0]))
    config = GaussNewtonConfig(initial_step_length=8.0, max_halvings=1)
    state = gauss_newton(problem, B("tape"), config)
    assert state.termination is Termination.LINE_SEARCH_FAILED
    assert state.iterations == 0
    with pytest.raises(solvers.LineSearchFailed):
        gauss_newton_step(problem, problem.x0, B("tape"), config)
    # with the default schedule the same problem makes progress
    x, alpha = gauss_newton_step(problem, problem.x0, B("tape"))
    assert alpha == 1.0 and objective(problem, x) < objective(problem, problem.x0)


def test_max_iterations():
    state = gauss_newton(LEAST_SQUARES["rosenbrock"], B("tape"), GaussNewtonConfig(max_iterations=2))
    assert state.termination is Termination.MAX_ITERATIONS
    assert state.iterations == 2


def test_config_validation():
    with pytest.raises(dk.ConfigurationError):
        GaussNewtonConfig(max_iterations=0)
    with pytest.raises(dk.ConfigurationError):
        GaussNewtonConfig(initial_step_length=-1.0)


def test_underdetermined_is_shape_error():
    problem = ResidualProblem(lambda x, p: [x[0] + x[1] - p], 1.0, np.zeros(2))
    with pytest.raises(dk.ShapeError):
        gauss_newton(problem, B("tape"))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), m=st.integers(2, 6), n=st.integers(1, 2))
def test_linear_exactness_property(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n)) + np.eye(m, n) * 3
    b = rng.normal(size=m)
    problem = ResidualProblem(lambda x, p: A @ x - p, b, np.zeros(n))
    x, alpha = gauss_newton_step(problem, problem.x0, B("tape"))
    assert alpha == 1.0
    np.testing.assert_allclose(x, normal_equation_solution(A, b), atol=1e-10, rtol=0)


# --- Newton-Raphson ------------------------------------------------------------


@pytest.mark.parametrize("name", ALL)
def test_newton_examples(name):
    r = newton_raphson_root(lambda x: x**2 - 4.0, 3.0, B(name))
    assert r.converged and r.iterations <= 8
    assert abs(r.root - 2.0) <= 1e-12
    A = np.array([[3.0, 1.0], [1.0, 2.0]])
    b = np.array([9.0, 8.0])
    r = newton_raphson_root(lambda x: A @ x - b, np.zeros(2), B(name))
    # exact Jacobians land in one step; FDM round-off may need a second
    assert r.converged and r.iterations <= (2 if name == "fdm" else 1)
    np.testing.assert_allclose(r.root, np.linalg.solve(A, b), atol=1e-12)
    r = newton_raphson_root(lambda v: [v[0] ** 2 + v[1] ** 2 - 1.0, v[0] - v[1]], np.array([1.0, 0.5]), B(name))
    assert r.converged
    np.testing.assert_allclose(r.root, [np.sqrt(2) / 2] * 2, atol=1e-10)


def test_newton_errors():
    with pytest.raises(dk.ShapeError):
        newton_raphson_root(lambda v: [v[0]], np.ones(2), B("tape"))
    with pytest.raises(dk.NumericalError, match=r"iteration 0, x=0\.0"):
        newton_raphson_root(lambda x: x**2 + 1.0, 0.0, B("tape"))


def test_newton_nonconvergence_flag():
    r = newton_raphson_root(lambda x: x**2 + 1.0, 2.0, B("tape"), max_iterations=3)
    assert not r.converged


# --- architecture ----------------------------------------------------------------


def test_solvers_only_use_core_api():
    backend_names = {"dual", "tape", "fdm", "Dual", "Tape", "TapeVar", "backends"}
    for module in (solvers.gauss_newton, solvers.newton):
        tree = ast.parse(inspect.getsource(module))
        for node in ast.walk(tree):
            if isinstance(node, ast.ImportFrom):
                assert not (node.module or "").startswith(("backends", "..backends")), node.module
                assert "backends" not in (node.module or "")
            if isinstance(node, ast.Name):
                assert node.id not in backend_names


def test_solvers_run_through_a_counting_wrapper():
    ab, c = counting(B("tape"))
    gauss_newton(LEAST_SQUARES["linear"], ab)
    snap = c.snapshot()
    assert snap.builds >= 1 and snap.pullback_calls >= 3
