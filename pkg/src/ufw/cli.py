"""Command-line front end: ``gen``, ``solve``, ``bench`` and ``selftest``.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
import io
import json
import os
from pathlib import Path
import sys
import time
from typing import Optional

import numpy as np

from .core import NumericalFailure, StepRule, UfwConfig, uafw_solve, ufw_solve
from .instance_io import (
    ProblemInstance,
    build_problem,
    make_instance,
    parse_inline_spec,
    write_trace_csv,
    write_trace_json,
)
from .objective import estimate_step_eta
from .synth import MatrixGenSpec, TrendGenSpec

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2
DEFAULT_TOLS = {"trend": 1e-4, "matrix": 3e-3}


class UsageError(Exception):
    pass


class Solver(str, Enum):
    UFW_SIMPLE = "ufw-simple"
    UFW_LINESEARCH = "ufw-linesearch"
    UAFW = "uafw"


class TraceFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


@dataclass
class RunConfig:
    problem: str  # "trend" or "matrix"
    solver: Solver
    tol_G: float
    tol_H2: float
    max_iters: int
    instance: str
    output: Optional[str] = None
    eta_override: Optional[float] = None
    trace_format: TraceFormat = TraceFormat.CSV

    def __post_init__(self):
        if self.problem == "matrix" and self.solver is Solver.UAFW:
            raise UsageError(
                "uafw needs a polyhedral constraint set; the nuclear-norm set of matrix "
                "completion is not polyhedral, use ufw-simple or ufw-linesearch"
            )

    def echo(self):
        d = asdict(self)
        d["solver"] = self.solver.value
        d["trace_format"] = self.trace_format.value
        return d


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; usage errors here exit with 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    return [float(v) for v in text.split(",")]


def _int_list(text):
    return [int(v) for v in text.split(",")]


def build_parser():
    p = _Parser(prog="ufw", description="Unbounded Frank-Wolfe solvers for trend filtering "
                                         "and matrix completion with side information.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="write a synthetic instance file")
    gsub = gen.add_subparsers(dest="problem", required=True, parser_class=_Parser)
    gt = gsub.add_parser("trend")
    gt.add_argument("--N", type=int, required=True)
    gt.add_argument("--n", type=int, required=True)
    gt.add_argument("--r", type=int, default=1)
    gt.add_argument("--snr", type=float, default=1.0)
    gt.add_argument("--pieces", type=int, default=5)
    gt.add_argument("--seed", type=int, default=0)
    gt.add_argument("--output", "-o", required=True)
    gm = gsub.add_parser("matrix")
    gm.add_argument("--m", type=int, required=True)
    gm.add_argument("--n", type=int, required=True)
    gm.add_argument("--r", type=int, default=5)
    gm.add_argument("--r1", type=int, default=5)
    gm.add_argument("--snr", type=float, default=5.0)
    gm.add_argument("--nnzr", type=float, default=0.3)
    gm.add_argument("--delta-rel", type=float, default=0.5)
    gm.add_argument("--seed", type=int, default=0)
    gm.add_argument("--output", "-o", required=True)

    sol = sub.add_parser("solve", help="run a solver on an instance")
    sol.add_argument("--instance", required=True,
                     help="instance file, or an inline spec such as trend:N=200,n=100,seed=0")
    sol.add_argument("--solver", choices=[s.value for s in Solver], default=Solver.UFW_SIMPLE.value)
    sol.add_argument("--tol-G", type=float, default=None)
    sol.add_argument("--tol-H2", type=float, default=None)
    sol.add_argument("--max-iters", type=int, default=10_000)
    sol.add_argument("--eta", type=float, default=None)
    sol.add_argument("--output", "-o", default=None, help="trace file (default: none)")
    sol.add_argument("--trace-format", choices=[f.value for f in TraceFormat], default="csv")

    bench = sub.add_parser("bench", help="run a grid of instances and solvers")
    bench.add_argument("--problem", choices=["trend", "matrix"], default="trend")
    bench.add_argument("--N", type=_int_list, default=[200])
    bench.add_argument("--n", type=_int_list, default=[100])
    bench.add_argument("--m", type=_int_list, default=[50])
    bench.add_argument("--r", type=_int_list, default=[1])
    bench.add_argument("--snr", type=_float_list, default=None)
    bench.add_argument("--nnzr", type=float, default=0.3)
    bench.add_argument("--delta-rel", type=float, default=0.5)
    bench.add_argument("--seeds", type=_int_list, default=[0])
    bench.add_argument("--solvers", default="ufw-simple,ufw-linesearch,uafw")
    bench.add_argument("--tol", type=float, default=None)
    bench.add_argument("--max-iters", type=int, default=100_000)
    bench.add_argument("--output", "-o", required=True)
    bench.add_argument("--trace-dir", default=None)
    bench.add_argument("--no-cache", action="store_true")

    sub.add_parser("selftest", help="quick built-in consistency checks")
    return p


def load_instance(text):
    path = Path(text)
    if path.exists():
        return ProblemInstance.load(path)
    if ":" in text:
        return make_instance(parse_inline_spec(text))
    raise UsageError(f"instance {text!r} is neither a readable file nor an inline spec")


def _problem_kind(text):
    """Problem kind without building the instance, so bad combinations fail early."""
    path = Path(text)
    if path.exists():
        try:
            return json.loads(path.read_text(encoding="utf-8"))["problem"]
        except (ValueError, KeyError) as exc:
            raise UsageError(f"{text}: not an instance file ({exc})") from None
    kind = text.partition(":")[0]
    if ":" not in text or kind not in ("trend", "matrix"):
        raise UsageError(f"instance {text!r} is neither a readable file nor an inline spec")
    return kind


def run_solver(solver, objective, region, config):
    if solver is Solver.UAFW:
        return uafw_solve(objective, region, config=config)
    return ufw_solve(objective, region, config=config)


def solver_config(solver, tol_G, tol_H2, max_iters, eta, record_trace=True):
    rule = StepRule.LINESEARCH if solver is Solver.UFW_LINESEARCH else StepRule.SIMPLE
    return UfwConfig(eta=eta, step_rule=rule, max_iters=max_iters, tol_G=tol_G, tol_H2=tol_H2,
                     record_trace=record_trace)


def write_trace(path, fmt, records, meta):
    buf = io.StringIO()
    (write_trace_csv if fmt is TraceFormat.CSV else write_trace_json)(records, meta, buf)
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def cmd_gen(args):
    if args.problem == "trend":
        spec = TrendGenSpec(N=args.N, n=args.n, r=args.r, snr=args.snr, pieces=args.pieces,
                            seed=args.seed)
    else:
        spec = MatrixGenSpec(m=args.m, n=args.n, r=args.r, r1=args.r1, snr=args.snr,
                             nnzr=args.nnzr, delta_rel=args.delta_rel, seed=args.seed)
    inst = make_instance(spec)
    inst.save(args.output)
    print(f"wrote {args.problem} instance {args.output} sha256={inst.content_hash()[:16]}")
    return EXIT_OK


def cmd_solve(args):
    problem = _problem_kind(args.instance)
    tol = DEFAULT_TOLS[problem]
    rc = RunConfig(problem=problem, solver=Solver(args.solver),
                   tol_G=tol if args.tol_G is None else args.tol_G,
                   tol_H2=tol if args.tol_H2 is None else args.tol_H2,
                   max_iters=args.max_iters, instance=args.instance, output=args.output,
                   eta_override=args.eta, trace_format=TraceFormat(args.trace_format))
    inst = load_instance(args.instance)
    objective, region = build_problem(inst)
    eta = estimate_step_eta(objective, region, override=rc.eta_override)
    config = solver_config(rc.solver, rc.tol_G, rc.tol_H2, rc.max_iters, eta)
    meta = {"config": rc.echo(), "eta": eta, "seed": inst.seed, "spec": inst.spec}
    t0 = time.perf_counter()
    try:
        res = run_solver(rc.solver, objective, region, config)
    except NumericalFailure as exc:
        meta.update(termination_reason="NumericalFailure", error=str(exc),
                    wall_ms=1e3 * (time.perf_counter() - t0))
        if rc.output:
            write_trace(rc.output, rc.trace_format, exc.trace, meta)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    wall_ms = 1e3 * (time.perf_counter() - t0)
    meta.update(termination_reason=res.termination_reason.value, wall_ms=wall_ms,
                iterations=res.iterations, best_f=res.best_f)
    if rc.output:
        write_trace(rc.output, rc.trace_format, res.trace, meta)
    last = res.trace[-1]
    print(f"{rc.solver.value} {res.iterations} {res.best_f!r} {last.G!r} {last.H!r} "
          f"{res.termination_reason.value}")
    return EXIT_OK


BENCH_COLUMNS = ("problem", "sizes", "solver", "iters", "best_f", "rel_gap_vs_reference", "wall_ms")


def _bench_specs(args):
    if args.problem == "trend":
        snrs = args.snr or [1.0]
        return [TrendGenSpec(N=N, n=n, r=r, snr=snr, seed=seed)
                for N in args.N for n in args.n for r in args.r for snr in snrs
                for seed in args.seeds]
    snrs = args.snr or [5.0]
    return [MatrixGenSpec(m=m, n=n, snr=snr, nnzr=args.nnzr, delta_rel=args.delta_rel, seed=seed)
            for m in args.m for n in args.n for snr in snrs for seed in args.seeds]


def _sizes(spec):
    if isinstance(spec, TrendGenSpec):
        return f"N={spec.N};n={spec.n};r={spec.r};snr={spec.snr:g};seed={spec.seed}"
    return f"m={spec.m};n={spec.n};snr={spec.snr:g};nnzr={spec.nnzr:g};seed={spec.seed}"


def _bench_cell(task):
    """One (instance, solver) cell; runs in a worker process."""
    from .reference import relative_gap

    spec, solver, tol, max_iters, f_star, trace_path = task
    inst = make_instance(spec)
    problem = inst.problem
    row = {"problem": problem, "sizes": _sizes(spec), "solver": solver}
    if solver == "reference":
        row.update(iters="", best_f=repr(f_star), rel_gap_vs_reference=repr(0.0), wall_ms="")
        return row
    solver = Solver(solver)
    try:
        if problem == "matrix" and solver is Solver.UAFW:
            raise UsageError("uafw is not defined for the non-polyhedral matrix constraint")
        objective, region = build_problem(inst)
        eta = estimate_step_eta(objective, region)
        tol = DEFAULT_TOLS[problem] if tol is None else tol
        config = solver_config(solver, tol, tol, max_iters, eta, record_trace=trace_path is not None)
        t0 = time.perf_counter()
        res = run_solver(solver, objective, region, config)
        wall_ms = 1e3 * (time.perf_counter() - t0)
        if trace_path is not None:
            write_trace(trace_path, TraceFormat.CSV, res.trace,
                        {"spec": inst.spec, "seed": inst.seed, "solver": solver.value,
                         "termination_reason": res.termination_reason.value, "wall_ms": wall_ms})
        row.update(iters=res.iterations, best_f=repr(res.best_f),
                   rel_gap_vs_reference=repr(relative_gap(res.best_f, f_star)),
                   wall_ms=f"{wall_ms:.1f}")
    except (NumericalFailure, UsageError, ValueError, np.linalg.LinAlgError) as exc:
        row.update(iters="", best_f="", rel_gap_vs_reference="",
                   wall_ms=f"error: {type(exc).__name__}: {exc}".replace(",", ";"))
    return row


def _reference_task(args):
    from .reference import reference_value
    spec, use_cache = args
    return reference_value(make_instance(spec), use_cache=use_cache)


def bench_workers():
    value = os.environ.get("UFW_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        raise UsageError(f"UFW_THREADS must be an integer, got {value!r}") from None


def cmd_bench(args):
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    for s in solvers:
        Solver(s)  # ValueError on unknown names
    specs = _bench_specs(args)
    workers = bench_workers()
    trace_dir = Path(args.trace_dir) if args.trace_dir else None
    if trace_dir:
        trace_dir.mkdir(parents=True, exist_ok=True)

    def mapper(fn, items):
        if workers == 1:
            return list(map(fn, items))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))

    # References first: every solver cell of an instance is measured against it.
    refs = mapper(_reference_task, [(spec, not args.no_cache) for spec in specs])
    tasks = []
    for i, (spec, f_star) in enumerate(zip(specs, refs)):
        tasks.append((spec, "reference", None, None, f_star, None))
        for s in solvers:
            path = str(trace_dir / f"cell{i:03d}_{s}.csv") if trace_dir else None
            tasks.append((spec, s, args.tol, args.max_iters, f_star, path))
    rows = mapper(_bench_cell, tasks)
    lines = [",".join(BENCH_COLUMNS)]
    lines += [",".join(str(row[c]) for c in BENCH_COLUMNS) for row in rows]
    Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    print(f"wrote {len(rows)} rows to {args.output}")
    return EXIT_OK


def selftest_checks():
    """(name, passed) pairs for a handful of fast internal consistency checks."""
    from .nucnorm import GenNucNormRegion
    from .rng import SplitMix64
    from .trendfilter import TrendFilterRegion, verify_HL_identity

    checks = []
    rng = SplitMix64(2024)
    region = TrendFilterRegion(10, 2, 1.0)
    ok = True
    for _ in range(10):
        c = rng.normal(10)
        best = min(float(c @ v.point) for v in region.enumerate_vertices())
        ok &= abs(float(c @ region.lmo(c).point) - best) <= 1e-9 * (1 + abs(best))
    checks.append(("trend oracle matches vertex enumeration", bool(ok)))
    checks.append(("difference/cumsum identity", all(verify_HL_identity(12, i) for i in range(1, 5))))

    P1, _ = np.linalg.qr(rng.normal((8, 2)))
    nuc = GenNucNormRegion.side_information(P1, 6, 2.0)
    C = rng.normal((8, 6))
    x = nuc.lmo(C.ravel(order="F")).point
    sigma = np.linalg.svd(nuc.project_Tperp_matrix(C), compute_uv=False)[0]
    checks.append(("nuclear oracle value equals -delta*sigma1",
                   abs(float(C.ravel(order="F") @ x) + 2.0 * sigma) <= 1e-7 * (1 + sigma)))

    inst = make_instance(TrendGenSpec(N=40, n=20, seed=3))
    text = inst.to_json()
    checks.append(("instance round trip", ProblemInstance.from_json(text).to_json() == text))
    objective, region = build_problem(inst)
    cfg = UfwConfig(eta=estimate_step_eta(objective), max_iters=3000, tol_G=1e-10, tol_H2=1e-14)
    a, b = ufw_solve(objective, region, config=cfg), uafw_solve(objective, region, config=cfg)
    checks.append(("uFW and uAFW agree on a small instance",
                   abs(a.best_f - b.best_f) <= 1e-5 * max(1.0, abs(b.best_f))))
    return checks


def cmd_selftest(args):
    checks = selftest_checks()
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_NUMERICAL


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "bench": cmd_bench, "selftest": cmd_selftest}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ufw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"ufw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
