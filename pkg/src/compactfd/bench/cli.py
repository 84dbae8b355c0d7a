"""Command line interface.

::

    compactfd run --example 1 --h 2^-k:3..7
    compactfd run --example 2 --h 2^-k:5..6 --scheme bdf4 --assert-golden
    compactfd solve --config problem.json
    compactfd check --example 1 --h 1/32

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 golden
mismatch (with ``--assert-golden``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from fractions import Fraction

import numpy as np

from ..coefficients import TimeSliceContext, bundle_steady, bundle_unsteady
from ..errors import CompactFDError, ConfigError
from ..system import assemble, check_m_matrix
from ..timestep import IntegratorPlan, TauRule
from .config import load_config, parse_h_list, parse_solver, parse_tau
from .examples import build_problem, get_example
from .golden import compare, golden_for
from .study import StudyFailure, emit, grid_for, run_study, solve_problem

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_SOLVER", "EXIT_GOLDEN"]

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_GOLDEN = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors count as configuration errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="compactfd", description="Compact fourth-order finite differences: studies and solves.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="convergence study of a built-in example")
    run.add_argument("--example", type=int, required=True, choices=range(1, 9), metavar="1..8")
    run.add_argument("--h", required=True, help="comma list (1/8,1/16) or 2^-k:k1..k2 or L/2^k:k1..k2")
    run.add_argument("--scheme", choices=["cn", "bdf3", "bdf4"])
    run.add_argument("--tau", default=None, help="ratio:R | quad:C | fixed:V | table")
    run.add_argument("--setting", type=int)
    run.add_argument("--tie-break", choices=["room", "listed", "printed"])
    run.add_argument("--solver", default="direct", help="direct | bicgstab:tol | gmres:tol")
    run.add_argument("--workers", type=int, default=1, help="rows solved concurrently")
    _output_args(run)
    run.add_argument("--assert-golden", action="store_true",
                     help="compare with the reference table; exit 4 on mismatch")

    solve = sub.add_parser("solve", help="solve a user problem from a JSON configuration")
    solve.add_argument("--config", required=True)
    solve.add_argument("--h", help="override the configuration's mesh sizes")
    solve.add_argument("--save", help="write the finest solution to this .npz file")
    _output_args(solve)

    check = sub.add_parser("check", help="M-matrix report of the assembled system")
    check.add_argument("--example", type=int, required=True, choices=range(1, 9), metavar="1..8")
    check.add_argument("--h", required=True)
    check.add_argument("--setting", type=int)
    check.add_argument("--json", action="store_true", help="print the report as JSON")
    return p


def _output_args(p):
    p.add_argument("--format", choices=["csv", "md", "jsonl"], default="md")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--no-timing", action="store_true", help="leave the wall_ms column empty")


@contextmanager
def _open_out(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _plan_for(example, scheme, tau):
    ex = get_example(example)
    if ex.plan is None:
        if scheme or tau:
            raise ConfigError(f"example {example} is steady; --scheme and --tau do not apply")
        return None
    name = (scheme or ex.plan.scheme).upper()
    if tau is None or tau == "table":
        # reference rule: τ = 4h² for CN, τ = h for BDF
        rule = TauRule("quadratic", 4.0) if name == "CN" else TauRule("ratio", 1.0)
    else:
        rule = parse_tau(tau)
    return IntegratorPlan(name, rule)


def _emit(report, args):
    with _open_out(args.out) as fh:
        emit(report, args.format, fh, wall_time=not args.no_timing)


def _cmd_run(args) -> int:
    hs = parse_h_list(args.h)
    plan = _plan_for(args.example, args.scheme, args.tau)
    solver = parse_solver(args.solver)
    try:
        report = run_study(args.example, hs, plan=plan, setting=args.setting, solver=solver,
                           tie_break=args.tie_break, workers=args.workers)
    except StudyFailure as exc:
        _emit(exc.report, args)
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(report, args)
    for note in report.metadata.get("not_reproduced", []):
        print(f"note: not reproduced: {note}", file=sys.stderr)
    if args.assert_golden:
        ex = get_example(args.example)
        setting = args.setting if args.setting is not None else ex.default_setting
        case = golden_for(args.example, plan.scheme if plan else None, setting)
        if plan is not None and case.plan is not None and plan.tau_rule != case.plan.tau_rule:
            raise ConfigError("--assert-golden needs the reference tau rule (use --tau table)")
        if args.tie_break not in (None, "room"):
            raise ConfigError("--assert-golden needs the default tie-break")
        bad = compare(report, case)
        if bad:
            for m in bad:
                print(f"golden mismatch: {m}", file=sys.stderr)
            return EXIT_GOLDEN
        print(f"golden: {len(report.rows)} row(s) match {case.key}", file=sys.stderr)
    return EXIT_OK


def _cmd_solve(args) -> int:
    up = load_config(args.config)
    hs = parse_h_list(args.h) if args.h else up.hs
    if not hs:
        raise ConfigError("no mesh sizes: set 'h' in the configuration or pass --h")
    if up.problem.exact is not None:
        try:
            report = run_study(up.problem, hs, plan=up.plan, solver=up.solver, fp=up.fixed_point)
        except StudyFailure as exc:
            _emit(exc.report, args)
            print(f"solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        _emit(report, args)
    if args.save or up.problem.exact is None:
        grid = grid_for(up.problem, min(hs))
        u = solve_problem(up.problem, grid, up.plan, up.solver, up.fixed_point)
        if args.save:
            np.savez(args.save, u=u, axis=grid.axis(), h=grid.h)
        if up.problem.exact is None:
            print(f"solved h={grid.h:g}: min {u.min():.6e}, max {u.max():.6e}")
    return EXIT_OK


def _cmd_check(args) -> int:
    hs = parse_h_list(args.h)
    if len(hs) != 1:
        raise ConfigError("check takes a single mesh size")
    h = hs[0]
    ex = get_example(args.example)
    problem = build_problem(ex.id, args.setting)
    grid = grid_for(problem, h)
    env = dict(zip("xyz", grid.mesh()))
    if problem.unsteady:
        # first implicit step of the example's scheme, history from the exact solution
        tau = ex.plan.tau_rule.tau(grid.h)
        depth = {"CN": 1, "BDF3": 3, "BDF4": 4}[ex.plan.scheme]
        hist = tuple(problem.exact(dict(env, t=k * tau)) for k in range(depth))
        ctx = TimeSliceContext(ex.plan.scheme, tau, 0, hist)
        u_it = problem.exact(dict(env, t=ctx.target_time)) if problem.nonlinear else None
        bundle = bundle_unsteady(problem, grid, ctx, u_it)
        t = ctx.target_time
    else:
        u_it = problem.exact(dict(env, t=0.0)) if problem.nonlinear else None
        bundle = bundle_steady(problem, grid, u_it)
        t = None
    rep = check_m_matrix(assemble(grid, bundle, g=problem.g, t=t))
    if args.json:
        print(json.dumps({
            "example": ex.id, "h": grid.h, "ok": rep.ok, "sign_ok": rep.sign_ok, "rowsum_ok": rep.rowsum_ok,
            "min_diagonal": rep.min_diagonal, "max_offdiagonal": rep.max_offdiagonal,
            "min_rowsum": rep.min_rowsum, "n_violations": rep.n_violations,
            "violating_nodes": [list(map(int, v)) for v in rep.violating_nodes],
            "n_sign_violations": rep.n_sign_violations,
            "sign_violating_nodes": [list(map(int, v)) for v in rep.sign_violating_nodes],
        }))
    else:
        print(f"example {ex.id}, h = {Fraction(grid.h).limit_denominator(1 << 20)}: "
              f"{'M-matrix conditions hold' if rep.ok else 'M-matrix conditions violated'}")
        print(f"  signs ok: {rep.sign_ok}, row sums ok: {rep.rowsum_ok}")
        print(f"  min diagonal {rep.min_diagonal:.6e}, max off-diagonal {rep.max_offdiagonal:.6e}, "
              f"min row sum {rep.min_rowsum:.6e}")
        if rep.n_violations:
            shown = ", ".join(str(tuple(map(int, v))) for v in rep.violating_nodes)
            print(f"  {rep.n_violations} violating node(s): {shown}")
        if rep.n_sign_violations:
            shown = ", ".join(str(tuple(map(int, v))) for v in rep.sign_violating_nodes)
            print(f"  {rep.n_sign_violations} sign-violating node(s): {shown}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "solve": _cmd_solve, "check": _cmd_check}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CompactFDError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
