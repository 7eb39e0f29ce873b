import threading
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import diffkit as dk
from diffkit import kernels, ops
from diffkit.backends import (
    Dual,
    FDMConfig,
    Tape,
    TapePullback,
    dual_pushforward,
    fd_weights,
    fdm_pushforward,
    tape_pullback,
)
from diffkit.core import BackendDescriptor, Mode, PrimitiveKind, Registry
from diffkit.problems import RandomSmoothMap

from oracles import FIVE_POINT_FIRST, HESSIAN_CASES, exact_stencil, lagrange_derivative_weights

AD = ["forward-dual", "tape", "forward-over-reverse", "reverse-over-forward"]


def B(name):
    return dk.get_backend(name)


# --- stencils ----------------------------------------------------------------


def test_oracles_agree_with_each_other():
    for offsets in [(-1, 0, 1), (-2, -1, 0, 1, 2), (-3, -2, -1, 0, 1, 2, 3), (0, 1, 2, 3)]:
        for order in range(len(offsets)):
            assert exact_stencil(offsets, order) == lagrange_derivative_weights(offsets, order)
    assert exact_stencil((-2, -1, 0, 1, 2), 1) == FIVE_POINT_FIRST


@pytest.mark.parametrize(
    "offsets, order, expected",
    [
        ((-1, 0, 1), 1, (-0.5, 0.0, 0.5)),
        ((-2, -1, 0, 1, 2), 1, (1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12)),
        ((0,), 0, (1.0,)),
    ],
)
def test_fd_weights_examples(offsets, order, expected):
    w = fd_weights(offsets, order)
    assert w.offsets == offsets
    np.testing.assert_allclose(w.weights, expected, atol=1e-14, rtol=0)


@pytest.mark.parametrize("half", [1, 2, 3, 4])
@pytest.mark.parametrize("order", [0, 1, 2])
def test_fd_weights_match_exact_oracle(half, order):
    offsets = tuple(range(-half, half + 1))
    exact = [float(v) for v in exact_stencil(offsets, order)]
    np.testing.assert_allclose(fd_weights(offsets, order).weights, exact, atol=1e-12, rtol=0)


@pytest.mark.parametrize("points", [3, 5, 7, 9])
def test_stencil_invariants(points):
    w = FDMConfig(grid_points=points).stencil()
    assert abs(sum(w.weights)) <= 1e-14
    assert abs(sum(a * b for a, b in zip(w.weights, w.offsets)) - 1.0) <= 1e-12
    assert w.offsets == tuple(-o for o in reversed(w.offsets))


@pytest.mark.parametrize("points", [3, 5, 7])
def test_stencil_monomial_exactness(points):
    ab = Registry().register(
        BackendDescriptor("f", Mode.FINITE_DIFFERENCE, PrimitiveKind.PUSHFORWARD),
        lambda f, xs: fdm_pushforward(FDMConfig(grid_points=points), f, xs),
    )
    for k in range(points):
        (d,) = dk.derivative(ab, lambda x: x**k, 1.0)
        expected = float(k)
        assert abs(d - expected) <= 1e-10 * max(1.0, expected), (points, k, d)


def test_fd_weights_errors():
    with pytest.raises(dk.ConfigurationError):
        fd_weights((0, 0, 1), 1)
    with pytest.raises(dk.ConfigurationError):
        fd_weights((0, 1), 2)
    with pytest.raises(dk.ConfigurationError):
        fd_weights((), 0)
    with pytest.raises(dk.ConfigurationError):
        FDMConfig(grid_points=4)
    with pytest.raises(dk.ConfigurationError):
        FDMConfig(derivative_order=2)
    with pytest.raises(dk.ConfigurationError):
        FDMConfig(relative_step=0.0)


def test_fdm_default_step():
    cfg = FDMConfig()
    assert cfg.grid_points == 5
    assert cfg.relative_step == np.finfo(float).eps ** (1 / 5)
    pf = fdm_pushforward(cfg, lambda v: v, [np.array([3.0, -7.0])])
    assert pf.step == cfg.relative_step * 8.0
    # the centre weight is zero, so only four points are evaluated
    assert [o for o, _ in pf.points] == [-2, -1, 1, 2]


def test_fdm_examples():
    fdm = B("fdm")
    assert dk.derivative(fdm, lambda x: x * x, 3.0)[0] == pytest.approx(6.0, abs=1e-8)
    pf = dk.pushforward_function(fdm, lambda v: ops.sin(v[0]) + ops.cos(v[1]), np.zeros(2))
    assert pf(np.ones(2)) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_fdm_nonfinite_is_numerical_error():
    with pytest.raises(dk.NumericalError):
        dk.derivative(B("fdm"), ops.sqrt, 0.0)


# --- dual numbers --------------------------------------------------------------

N_POINTS = 10_000
_rng = np.random.default_rng(99)


def _ld(x):
    return np.asarray(x, dtype=np.longdouble)


CHAIN_RULE_CASES = {
    "exp": (ops.exp, lambda x: np.exp(_ld(x)), (-20, 20)),
    "log": (ops.log, lambda x: 1 / _ld(x), (1e-3, 1e3)),
    "sin": (ops.sin, lambda x: np.cos(_ld(x)), (-10, 10)),
    "cos": (ops.cos, lambda x: -np.sin(_ld(x)), (-10, 10)),
    "tanh": (ops.tanh, lambda x: 1 / np.cosh(_ld(x)) ** 2, (-8, 8)),
    "sqrt": (ops.sqrt, lambda x: 1 / (2 * np.sqrt(_ld(x))), (1e-3, 1e3)),
    "abs": (abs, lambda x: np.sign(_ld(x)), (-5, 5)),
    "neg": (lambda x: -x, lambda x: -np.ones_like(_ld(x)), (-5, 5)),
    "square": (lambda x: x * x, lambda x: 2 * _ld(x), (-5, 5)),
    "cube_pow": (lambda x: x**3, lambda x: 3 * _ld(x) ** 2, (-5, 5)),
    "real_pow": (lambda x: x**2.5, lambda x: 2.5 * _ld(x) ** 1.5, (0.1, 10)),
    "rpow": (lambda x: 2.0**x, lambda x: np.exp2(_ld(x)) * np.log(np.longdouble(2)), (-5, 5)),
    "reciprocal": (lambda x: 1.0 / x, lambda x: -1 / _ld(x) ** 2, (0.1, 10)),
    "add_const": (lambda x: x + 3.0, lambda x: np.ones_like(_ld(x)), (-5, 5)),
    "sub_const": (lambda x: 3.0 - x, lambda x: -np.ones_like(_ld(x)), (-5, 5)),
    "div_const": (lambda x: x / 3.0, lambda x: np.full_like(_ld(x), 1) / 3, (-5, 5)),
}


@pytest.mark.parametrize("name", sorted(CHAIN_RULE_CASES))
def test_dual_chain_rule_within_4_ulps(name):
    f, deriv, (lo, hi) = CHAIN_RULE_CASES[name]
    xs = _rng.uniform(lo, hi, N_POINTS)
    tag = 10**9  # any tag works for a single level
    tangents = np.array([f(Dual(float(x), 1.0, tag)).tangent for x in xs])
    oracle = deriv(xs)
    exact64 = oracle.astype(np.float64)
    ulps = np.abs(tangents.astype(np.longdouble) - oracle) / np.spacing(np.abs(exact64))
    assert np.max(ulps) <= 4, (name, float(np.max(ulps)))


def test_dual_examples():
    fd = B("forward-dual")
    assert dk.derivative(fd, ops.exp, 0.0)[0] == 1.0
    pf = dk.pushforward_function(fd, lambda v: v[0] * v[1], np.array([2.0, 3.0]))
    assert pf(np.array([1.0, 0.0])) == 3.0


def test_abs_at_zero_has_zero_derivative():
    for name in AD:
        assert dk.derivative(B(name), abs, 0.0)[0] == 0.0
        assert dk.derivative(B(name), ops.abs, 0.0)[0] == 0.0
        assert dk.derivative(B(name), abs, -2.0)[0] == -1.0


def test_comparisons_drive_branches():
    def relu_ish(x):
        return x * x if x > 1.0 else 3.0 * x

    for name in AD:
        assert dk.derivative(B(name), relu_ish, 2.0)[0] == 4.0
        assert dk.derivative(B(name), relu_ish, 0.5)[0] == 3.0


def test_carrier_conversion_errors():
    d = Dual(1.0, 1.0, 1)
    with pytest.raises(dk.ConfigurationError):
        float(d)
    with pytest.raises(dk.ConfigurationError):
        bool(d)
    with pytest.raises(dk.ConfigurationError, match="arcsin"):
        np.arcsin(np.array([d], dtype=object))


def test_dual_primal_equals_plain_bitwise():
    f = RandomSmoothMap(6, 5, seed=11)
    pf = dual_pushforward(f, [f.point])
    assert np.asarray(pf.primal()).tobytes() == np.asarray(f(f.point), dtype=float).tobytes()


# --- tape ---------------------------------------------------------------------


def test_tape_examples():
    pb = tape_pullback(ops.sum, [np.array([1.0, 2.0, 3.0])])
    np.testing.assert_array_equal(pb(1.0)[0], [1.0, 1.0, 1.0])
    pb = tape_pullback(lambda v: v[0] * v[1] + ops.sin(v[0]), [np.array([0.0, 2.0])])
    np.testing.assert_array_equal(pb(1.0)[0], [3.0, 0.0])


def test_tape_topological_and_partials():
    pb = tape_pullback(lambda v: ops.exp(v[0]) * v[1], [np.array([0.5, 2.0])])
    nodes = pb.tape.nodes
    for i, node in enumerate(nodes):
        assert all(p < i for p in node.parent_indices)
        assert node.adjoint_accumulator == 0.0
    exp_node = next(n for n in nodes if n.op_name == "exp")
    assert exp_node.local_partials == (ops.exp(0.5),)


def test_tape_replay_determinism():
    f = RandomSmoothMap(8, 6, seed=5)
    pb = tape_pullback(f, [f.point])
    w = np.random.default_rng(0).normal(size=6)
    first, second = pb(w), pb(w)
    assert first[0].tobytes() == second[0].tobytes()


def test_tape_primal_bitwise():
    f = RandomSmoothMap(6, 5, seed=12)
    pb = tape_pullback(f, [f.point])
    assert np.asarray(pb.value).tobytes() == np.asarray(f(f.point), dtype=float).tobytes()


def test_released_tape_is_usage_error():
    pb = tape_pullback(ops.sum, [np.ones(3)])
    pb.release()
    with pytest.raises(dk.UsageError):
        pb(1.0)


def test_tape_confined_to_its_thread():
    tape = Tape()
    x = tape.variable(1.0)
    errors = []

    def other():
        try:
            x * 2.0
        except dk.UsageError as exc:
            errors.append(exc)

    t = threading.Thread(target=other)
    t.start()
    t.join()
    assert len(errors) == 1


def test_distinct_tapes_on_distinct_threads():
    f = RandomSmoothMap(5, 3, seed=2)
    expected = dk.jacobian(B("tape"), f, f.point)[0]
    results = []

    def work():
        results.append(dk.jacobian(B("tape"), f, f.point)[0])

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(np.array_equal(r, expected) for r in results)


def _float_tape(seed, n=6, m=1):
    f = RandomSmoothMap(n, m, seed=seed)
    pb = TapePullback(f, [f.point])
    assert pb.tape._arrays is not None
    return pb


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 30), m=st.integers(1, 4))
def test_compiled_and_python_sweeps_bitwise_identical(seed, n, m):
    pb = _float_tape(seed, n, m)
    arrays = pb.tape._arrays
    rng = np.random.default_rng(seed)
    adj = np.zeros(len(pb.tape))
    slots = [i for i in pb.output_indices if i >= 0]
    for i in slots:
        adj[i] += rng.normal()
    a, b = adj.copy(), adj.copy()
    kernels.reverse_sweep(*arrays, a, max(slots))
    kernels.python_reverse_sweep(*arrays, b, max(slots))
    assert a.tobytes() == b.tobytes()


def test_kernel_selection():
    # built by `pip install -e .`; DIFFKIT_PURE_PYTHON=1 forces the fallback
    import os

    if os.environ.get("DIFFKIT_PURE_PYTHON"):
        assert not kernels.COMPILED
        assert kernels.reverse_sweep is kernels.python_reverse_sweep
    else:
        assert kernels.COMPILED
        assert kernels.reverse_sweep is not kernels.python_reverse_sweep


def test_generic_sweep_matches_float_sweep():
    f = RandomSmoothMap(5, 3, seed=8)
    pb = tape_pullback(f, [f.point])
    w = np.array([0.3, -1.0, 2.0])
    fast = pb(w)[0]
    tape = pb.tape
    saved = tape._arrays
    tape._arrays = None
    try:
        slow = pb(w)[0]
    finally:
        tape._arrays = saved
    assert np.asarray(fast).tobytes() == np.asarray(slow).tobytes()


# --- higher order and nesting ---------------------------------------------------


def test_perturbation_confusion():
    for name in AD:
        ab = B(name)

        def outer(x):
            (d,) = dk.derivative(ab, lambda y: x + y, 1.0)
            return x * d

        for x0 in (1.0, -3.5, 10.0):
            assert dk.derivative(ab, outer, x0)[0] == 1.0


def test_fdm_nesting_perturbation_confusion():
    # no tags to confuse, but nesting must still give d/dx (x * 1) = 1
    ab = B("fdm")

    def outer(x):
        (d,) = dk.derivative(ab, lambda y: x + y, 1.0)
        return x * d

    for x0 in (1.0, -3.5, 10.0):
        assert abs(dk.derivative(ab, outer, x0)[0] - 1.0) <= 1e-5


def test_mixed_nesting_perturbation_confusion():
    for o, i in [("forward-dual", "tape"), ("tape", "forward-dual")]:

        def outer(x):
            (d,) = dk.derivative(B(i), lambda y: x * y, 2.0)
            return x * d

        # d/dx (x * x) = 2x
        assert dk.derivative(B(o), outer, 3.0)[0] == 6.0


def test_four_second_order_compositions_agree():
    fd, tp = B("forward-dual"), B("tape")
    combos = {
        "for": dk.higher_order(fd, tp),
        "rof": dk.higher_order(tp, fd),
        "fof": dk.higher_order(fd, fd),
        "ror": dk.higher_order(tp, tp),
    }
    for _, f, x, oracle in HESSIAN_CASES:
        Hs = {k: dk.hessian(ab, f, x) for k, ab in combos.items()}
        for H in Hs.values():
            np.testing.assert_allclose(H, Hs["for"], atol=1e-9, rtol=0)
            np.testing.assert_allclose(H, oracle(x), atol=1e-9, rtol=0)


def test_fdm_over_tape_hessian():
    ab = dk.higher_order(B("fdm"), B("tape"))
    H = dk.hessian(ab, lambda v: v[0] ** 2 * v[1], np.array([1.0, 2.0]))
    np.testing.assert_allclose(H, [[4, 2], [2, 0]], atol=1e-4)


def test_higher_order_first_order_delegates_to_inner():
    ho = B("forward-over-reverse")
    f = RandomSmoothMap(4, 1, seed=1)

    def g(v):
        return f(v)[0]

    assert np.array_equal(dk.gradient(ho, g, f.point)[0], dk.gradient(B("tape"), g, f.point)[0])
    assert ho.outer.name == "forward-dual" and ho.inner.name == "tape"
    assert ho.mode is Mode.HIGHER_ORDER and ho.native_primitive is None


def test_higher_order_rejects_non_generic_inner():
    reg = Registry()
    opaque = reg.register(
        BackendDescriptor("opaque", Mode.FORWARD, PrimitiveKind.JACOBIAN, carrier_generic=False),
        lambda f, xs: (np.eye(1),),
    )
    with pytest.raises(dk.ConfigurationError):
        dk.higher_order(B("forward-dual"), opaque)


def test_value_gradient_and_hessian_split():
    ho = B("forward-over-reverse")
    v, (g,), H = dk.value_gradient_and_hessian(ho, lambda z: z[0] ** 2 * z[1], np.array([1.0, 2.0]))
    assert v == 2.0
    np.testing.assert_array_equal(g, [4.0, 1.0])
    np.testing.assert_array_equal(H, [[4.0, 2.0], [2.0, 0.0]])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_primal_surfaces_from_carriers():
    for name in ("forward-dual", "tape"):
        v, (d,) = dk.value_and_derivative(B(name), ops.log, 0.0)
        assert v == -np.inf
        assert d == np.inf


def test_fraction_oracle_helper_is_exact():
    assert exact_stencil((-1, 0, 1), 2) == [Fraction(1), Fraction(-2), Fraction(1)]


def test_float_tape_uses_the_array_kernel(monkeypatch):
    # numpy float seeds must take the array path, not the generic loop
    from diffkit.backends import tape as tape_mod

    calls = []
    real = tape_mod.reverse_sweep
    monkeypatch.setattr(tape_mod, "reverse_sweep", lambda *a: calls.append(1) or real(*a))
    f = RandomSmoothMap(3, 2, seed=0)
    dk.jacobian(dk.get_backend("tape"), f, f.point)
    assert len(calls) == 2
