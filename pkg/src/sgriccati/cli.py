"""Command-line interface: generate, solve, verify and bench."""
from __future__ import annotations

import argparse
import logging
import sys

from . import io
from .bench import R21_MODES, emit_reports, random_game_problem, run_trials, summary_text
from .errors import RiccatiError
from .inner import InnerOptions
from .outer import InvalidProblem, SolveOptions, solve_game_riccati, verify_solution
from .problem import validate_problem

EXIT_OK, EXIT_INVALID, EXIT_FAILED, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("sgriccati")


def parse_dims(text: str) -> list:
    """``"1..12"`` (inclusive range) or a comma-separated list."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        dims = list(range(int(lo), int(hi) + 1))
    else:
        dims = [int(x) for x in text.split(",") if x.strip()]
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}")
    return dims


def _options(args) -> SolveOptions:
    return SolveOptions(outer_tolerance=args.tol, max_outer=args.max_outer, nodes=args.grid,
                        inner=InnerOptions(weight_mode=args.weight_mode),
                        source=args.source)


def _cmd_generate(args):
    io.save_problem(args.out, random_game_problem(args.dim, args.seed, args.r21_mode))
    return EXIT_OK


def _cmd_solve(args):
    p = io.load_problem(args.problem)
    try:
        X, trace, report = solve_game_riccati(p, _options(args))
    except InvalidProblem as exc:
        log.error("invalid problem: %s", exc)
        return EXIT_INVALID
    except RiccatiError as exc:
        log.error("solver failed: %s: %s", type(exc).__name__, exc)
        if args.report:
            trace = getattr(exc, "trace", None)
            io.write_json(args.report, {"success": False, "error": f"{type(exc).__name__}: {exc}",
                                        "trace": trace.to_dict() if trace else None})
        return EXIT_FAILED
    io.save_solution(args.out, X)
    if args.report:
        io.write_json(args.report, {**report.to_dict(), "trace": trace.to_dict()})
    print(f"converged in {trace.outer_rounds} outer rounds, "
          f"residual {report.grde_residual:.3e}, success={report.success}")
    return EXIT_OK if report.success else EXIT_FAILED


def _cmd_verify(args):
    p = io.load_problem(args.problem)
    problems = validate_problem(p, args.grid)
    if problems:
        log.error("invalid problem: %s", "; ".join(problems))
        return EXIT_INVALID
    report = verify_solution(p, io.load_solution(args.solution), args.grid)
    if args.report:
        io.write_json(args.report, report.to_dict())
    print(f"residual {report.grde_residual:.3e}, in domain {report.in_domain}, "
          f"stability margin {report.stability_margin:.3e}, success={report.success}")
    return EXIT_OK if report.success else EXIT_FAILED


def _cmd_bench(args):
    records, stats = run_trials(args.dims, args.trials, args.seed, _options(args),
                                workers=args.workers, r21_mode=args.r21_mode)
    emit_reports(records, stats, args.out, args.inner_out, args.summary,
                 timing=not args.no_timing)
    if args.summary is None:
        sys.stdout.write(summary_text(stats))
    return EXIT_OK if all(r.converged for r in records) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sgriccati", description=__doc__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def solver_flags(sp):
        sp.add_argument("--tol", type=float, default=1e-8, help="outer tolerance")
        sp.add_argument("--max-outer", type=int, default=50)
        sp.add_argument("--grid", type=int, default=256, help="time nodes per period")
        sp.add_argument("--weight-mode", choices=("updated", "display"), default="updated")
        sp.add_argument("--source", choices=("v", "defect"), default="v")

    g = sub.add_parser("generate", help="write a random test problem")
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--r21-mode", choices=R21_MODES, default="symmetrize")
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("solve", help="compute the stabilizing solution")
    s.add_argument("--problem", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--report")
    solver_flags(s)
    s.set_defaults(func=_cmd_solve)

    v = sub.add_parser("verify", help="check a candidate solution")
    v.add_argument("--problem", required=True)
    v.add_argument("--solution", required=True)
    v.add_argument("--report")
    v.add_argument("--grid", type=int, default=256)
    v.set_defaults(func=_cmd_verify)

    b = sub.add_parser("bench", help="randomized convergence benchmark")
    b.add_argument("--dims", type=parse_dims, default=parse_dims("1..12"))
    b.add_argument("--trials", type=int, default=200)
    b.add_argument("--seed", type=int, default=20240101)
    b.add_argument("--out")
    b.add_argument("--inner-out")
    b.add_argument("--summary")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--r21-mode", choices=R21_MODES, default="symmetrize")
    b.add_argument("--no-timing", action="store_true",
                   help="write 0 for wall_ms so the CSV is reproducible byte for byte")
    solver_flags(b)
    b.set_defaults(func=_cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (io.FormatError, ValueError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
