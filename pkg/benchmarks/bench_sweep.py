"""Compiled vs pure-Python reverse sweep.

Two measurements:

* the bare kernel on a synthetic float tape of N nodes;
* an end-to-end ``jacobian`` through the tape backend (tracing included),
  switching the module-level kernel between the two implementations.

Run: ``python3 benchmarks/bench_sweep.py [--nodes 200000] [--repeat 5]``
"""

import argparse
import timeit

import numpy as np

import diffkit as dk
from diffkit import kernels
from diffkit.backends import tape as tape_mod
from diffkit.problems import RandomSmoothMap


def synthetic_tape(n, seed=0):
    rng = np.random.default_rng(seed)
    idx = np.arange(n)
    # every node past the first few reads one or two earlier nodes
    p0 = np.where(idx > 0, rng.integers(0, np.maximum(idx, 1)), -1).astype(np.int64)
    p1 = np.where(idx > 1, rng.integers(0, np.maximum(idx, 1)), -1).astype(np.int64)
    p1[rng.random(n) < 0.3] = -1
    d0 = rng.normal(size=n) * 0.5
    d1 = rng.normal(size=n) * 0.5
    return p0, p1, d0, d1


def time_kernel(fn, arrays, repeat):
    n = len(arrays[0])

    def once():
        adj = np.zeros(n)
        adj[-1] = 1.0
        fn(*arrays, adj, n - 1)
        return adj

    a = once()
    best = min(timeit.repeat(once, number=1, repeat=repeat))
    return best, a


def time_jacobian(sweep, f, x, repeat):
    saved = tape_mod.reverse_sweep
    tape_mod.reverse_sweep = sweep
    try:
        ab = dk.get_backend("tape")
        J = dk.jacobian(ab, f, x)[0]
        best = min(timeit.repeat(lambda: dk.jacobian(ab, f, x), number=1, repeat=repeat))
    finally:
        tape_mod.reverse_sweep = saved
    return best, J


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--m", type=int, default=60)
    args = ap.parse_args(argv)

    if not kernels.COMPILED:
        print("compiled kernel unavailable (build the extension or unset DIFFKIT_PURE_PYTHON)")
        return 1
    from diffkit._sweep_ext import reverse_sweep as compiled

    python = kernels.python_reverse_sweep
    arrays = synthetic_tape(args.nodes)
    tc, ac = time_kernel(compiled, arrays, args.repeat)
    tp, ap_ = time_kernel(python, arrays, args.repeat)
    same = np.array_equal(ac, ap_)
    print(f"kernel    nodes={args.nodes:<8d} compiled {tc * 1e3:9.3f} ms  python {tp * 1e3:9.3f} ms  "
          f"speedup {tp / tc:6.1f}x  bitwise-equal={same}")

    f = RandomSmoothMap(args.n, args.m, seed=0)
    jc_t, jc = time_jacobian(compiled, f, f.point, args.repeat)
    jp_t, jp = time_jacobian(python, f, f.point, args.repeat)
    same = np.array_equal(jc, jp)
    print(f"jacobian  n={args.n} m={args.m:<6d} compiled {jc_t * 1e3:9.3f} ms  python {jp_t * 1e3:9.3f} ms  "
          f"speedup {jp_t / jc_t:6.1f}x  bitwise-equal={same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
