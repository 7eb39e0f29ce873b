"""Command-line front end.

    diffkit <command> [--backends a,b|all] [--problem name] [--n N] [--m M]
                      [--format table|json] [--seed S] [--tol X]

Commands: ``agree``, ``gauss-newton``, ``newton``, ``seedcount``,
``list-backends``.  Exit codes: 0 success, 1 numerical or tolerance
failure, 2 usage error.
"""

import argparse
import itertools
import sys
from dataclasses import dataclass

import numpy as np

from . import core
from .core import Mode, default_registry
from .counting import counted, counting
from .errors import DiffError
from .problems import LEAST_SQUARES, PROBLEMS, ROOTS, RandomSmoothMap
from .report import Report, emit_report
from .solvers import Termination, gauss_newton, newton_raphson_root

__all__ = ["RunSpec", "main", "run"]

AD_AD_TOLERANCE = 1e-8
AD_FDM_TOLERANCE = 1e-5

COMMANDS = ("agree", "gauss-newton", "newton", "seedcount", "list-backends")
_DEFAULT_PROBLEM = {"gauss-newton": "rosenbrock", "newton": "circle-diagonal"}


class UsageFailure(Exception):
    pass


@dataclass(frozen=True)
class RunSpec:
    command: str
    backends: tuple
    problem: str = None
    fmt: str = "table"
    seed: int = 0
    n: int = 10
    m: int = 10
    tol: float = None


def _parser():
    p = argparse.ArgumentParser(prog="diffkit", description="Cross-backend differentiation checks.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--backends", default="all", help="comma-separated names or 'all'")
    p.add_argument("--problem", default=None)
    p.add_argument("--n", type=int, default=10, help="input dimension for seedcount")
    p.add_argument("--m", type=int, default=10, help="output dimension for seedcount")
    p.add_argument("--format", dest="fmt", choices=("table", "json"), default="table")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None, help="override every tolerance")
    return p


def parse_spec(argv, registry=default_registry):
    """Parse and validate; unknown names raise ``UsageFailure``."""
    args = _parser().parse_args(argv)
    names = registry.names()
    if args.backends.strip() == "all":
        backends = tuple(names)
    else:
        backends = tuple(b.strip() for b in args.backends.split(",") if b.strip())
        unknown = [b for b in backends if b not in registry]
        if unknown or not backends:
            raise UsageFailure(f"unknown backend(s): {', '.join(unknown) or '(none)'}; known: {', '.join(names)}")
        if len(set(backends)) != len(backends):
            raise UsageFailure("duplicate backend names")
    known = {"agree": PROBLEMS, "gauss-newton": LEAST_SQUARES, "newton": ROOTS}.get(args.command)
    problem = args.problem
    if problem is not None:
        if known is None:
            raise UsageFailure(f"{args.command} does not take --problem")
        if problem not in known:
            raise UsageFailure(f"unknown problem {problem!r}; known: {', '.join(known)}")
    if args.n < 1 or args.m < 1:
        raise UsageFailure("--n and --m must be >= 1")
    if args.tol is not None and not args.tol > 0:
        raise UsageFailure("--tol must be positive")
    return RunSpec(args.command, backends, problem, args.fmt, args.seed, args.n, args.m, args.tol)


def _flat(result):
    if isinstance(result, tuple):
        return np.concatenate([np.ravel(np.asarray(r, dtype=float)) for r in result])
    return np.ravel(np.asarray(result, dtype=float))


def _compute(ab, op, problem):
    fn = getattr(core, op)
    return _flat(fn(ab, problem.f, *problem.args))


def _is_fdm(ab):
    if isinstance(ab, core.HigherOrderBackend):
        return _is_fdm(ab.outer) or _is_fdm(ab.inner)
    return ab.mode is Mode.FINITE_DIFFERENCE


def run_agreement_suite(spec, registry=default_registry):
    handles = {b: registry.get(b) for b in spec.backends}
    tolerances = {
        "ad_ad": spec.tol or AD_AD_TOLERANCE,
        "ad_fdm": spec.tol or AD_FDM_TOLERANCE,
    }
    problems = [PROBLEMS[spec.problem]] if spec.problem else list(PROBLEMS.values())
    report = Report("agree", list(spec.backends), tolerances=tolerances, seed=spec.seed)
    report.columns = ("problem", "operation", "backend_a", "backend_b", "max_discrepancy", "tolerance", "status")
    failures = []
    for problem in problems:
        for op in problem.operations:
            values = {}
            for name, ab in handles.items():
                try:
                    values[name] = _compute(ab, op, problem)
                except DiffError as exc:
                    values[name] = exc
            for a, b in itertools.combinations(spec.backends, 2):
                fdm = _is_fdm(handles[a]) or _is_fdm(handles[b])
                tol = tolerances["ad_fdm" if fdm else "ad_ad"]
                va, vb = values[a], values[b]
                if isinstance(va, Exception) or isinstance(vb, Exception):
                    err = float("nan")
                else:
                    err = float(np.max(np.abs(va - vb)))
                ok = err <= tol
                report.results.append({
                    "problem": problem.name,
                    "operation": op,
                    "backend_a": a,
                    "backend_b": b,
                    "max_discrepancy": err,
                    "tolerance": tol,
                    "status": "PASS" if ok else "FAIL",
                })
                if not ok:
                    failures.append(f"{problem.name}/{op}/{a} vs {b}")
    if failures:
        report.notes.append("tolerance violations: " + "; ".join(failures))
    return (1 if failures else 0), report


def run_gauss_newton_demo(spec, registry=default_registry):
    name = spec.problem or _DEFAULT_PROBLEM["gauss-newton"]
    problem = LEAST_SQUARES[name]
    report = Report("gauss-newton", list(spec.backends), seed=spec.seed)
    report.tolerances = {"gradient": 1e-10}
    report.columns = ("backend", "iteration", "objective", "step_length", "x", "termination")
    status = 0
    for b in spec.backends:
        state = gauss_newton(problem, registry.get(b))
        last = len(state.iterates) - 1
        for k, (x, s) in enumerate(zip(state.iterates, state.objectives)):
            report.results.append({
                "backend": b,
                "iteration": k,
                "objective": s,
                "step_length": state.step_lengths[k - 1] if k else None,
                "x": [float(v) for v in np.atleast_1d(x)],
                "termination": state.termination.name if k == last else None,
            })
        if state.termination is not Termination.CONVERGED:
            status = 1
            report.notes.append(f"{b}: {state.termination.name.lower().replace('_', ' ')}")
    report.notes.append(f"problem: {name}")
    return status, report


def run_newton_demo(spec, registry=default_registry):
    name = spec.problem or _DEFAULT_PROBLEM["newton"]
    f, x0 = ROOTS[name]
    report = Report("newton", list(spec.backends), seed=spec.seed)
    report.tolerances = {"residual": 1e-12}
    report.columns = ("backend", "converged", "iterations", "root", "residual")
    status = 0
    for b in spec.backends:
        try:
            res = newton_raphson_root(f, x0, registry.get(b))
        except DiffError as exc:
            report.notes.append(f"{b}: {exc}")
            status = 1
            continue
        root = [float(v) for v in np.atleast_1d(res.root)]
        report.results.append({
            "backend": b,
            "converged": res.converged,
            "iterations": res.iterations,
            "root": root,
            "residual": float(np.max(np.abs(np.atleast_1d(f(res.root))))),
        })
        if not res.converged:
            status = 1
    report.notes.append(f"problem: {name}")
    return status, report


def run_seedcount(spec, registry=default_registry):
    n, m = spec.n, spec.m
    fmap = RandomSmoothMap(n, m, seed=spec.seed)
    scalar = RandomSmoothMap(n, 1, seed=spec.seed)
    x = fmap.point

    def scalar_f(v):
        return scalar(v)[0]

    report = Report("seedcount", list(spec.backends), seed=spec.seed)
    report.columns = (
        "backend", "operation", "n", "m", "pushforward_calls", "pullback_calls",
        "jacobian_calls", "evaluations",
    )
    for b in spec.backends:
        for op, fn, out in (("jacobian", fmap, m), ("gradient", scalar_f, 1)):
            handle, counter = counting(registry.get(b))
            f, _ = counted(fn, counter)
            getattr(core, op)(handle, f, x.copy())
            c = counter.snapshot()
            report.results.append({
                "backend": b,
                "operation": op,
                "n": n,
                "m": out,
                "pushforward_calls": c.pushforward_calls,
                "pullback_calls": c.pullback_calls,
                "jacobian_calls": c.jacobian_calls,
                "evaluations": c.evaluations,
            })
    return 0, report


def list_backends(spec, registry=default_registry):
    report = Report("list-backends", list(spec.backends), seed=spec.seed)
    report.columns = ("name", "mode", "native_primitive", "native_primal")
    for b in spec.backends:
        ab = registry.get(b)
        if isinstance(ab, core.HigherOrderBackend):
            prim = f"{ab.outer.name} over {ab.inner.name}"
        else:
            prim = ab.native_primitive.name.lower()
        report.results.append({
            "name": b,
            "mode": ab.mode.name.lower(),
            "native_primitive": prim,
            "native_primal": ab.has_native_primal,
        })
    return 0, report


_RUNNERS = {
    "agree": run_agreement_suite,
    "gauss-newton": run_gauss_newton_demo,
    "newton": run_newton_demo,
    "seedcount": run_seedcount,
    "list-backends": list_backends,
}


def run(spec, registry=default_registry):
    """Execute a validated spec; returns ``(exit_code, report)``."""
    return _RUNNERS[spec.command](spec, registry)


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        spec = parse_spec(argv)
    except UsageFailure as exc:
        print(f"diffkit: error: {exc}", file=stderr)
        return 2
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        code, report = run(spec)
    except DiffError as exc:
        print(f"diffkit: {exc}", file=stderr)
        return 1
    print(emit_report(report, spec.fmt, stream=stdout), file=stdout)
    if code and spec.fmt == "json":
        for note in report.notes:
            print(f"diffkit: {note}", file=stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
