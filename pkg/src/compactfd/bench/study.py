"""Convergence studies: one full solve per mesh size, l∞ errors and orders.

A study runs a problem on a list of mesh sizes and tabulates

    h, tau, error, order, wall_ms

where ``order = log2(e_prev / e)`` is filled in only when ``h`` halves
between consecutive rows.  Reports can be written as CSV, markdown or JSON
lines with a fixed column order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from ..coefficients import ProblemSpec, bundle_steady
from ..errors import CompactFDError, ConfigError
from ..fd_ops import OperatorSetting
from ..grid import GridSpec, make_grid
from ..nonlinear import FixedPointConfig, fixed_point_steady
from ..system import SolveConfig, assemble, embed, solve
from ..timestep import IntegratorPlan, march
from .examples import build_problem, get_example

__all__ = [
    "COLUMNS",
    "StudyRow",
    "ConvergenceReport",
    "StudyFailure",
    "l_inf_error",
    "observed_orders",
    "grid_for",
    "solve_problem",
    "run_study",
    "emit",
]

COLUMNS = ("h", "tau", "error", "order", "wall_ms")


@dataclass(frozen=True)
class StudyRow:
    h: float
    tau: Optional[float]
    error: Optional[float]
    order: Optional[float]
    wall_ms: float

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in COLUMNS}


@dataclass
class ConvergenceReport:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def errors(self) -> list:
        return [r.error for r in self.rows]

    @property
    def orders(self) -> list:
        return [r.order for r in self.rows]


class StudyFailure(CompactFDError):
    """A row failed; ``report`` keeps the rows finished before it."""

    def __init__(self, message, report, h):
        self.report = report
        self.h = h
        super().__init__(message)


def l_inf_error(field_, exact, grid: GridSpec, t: Optional[float] = None) -> float:
    """Largest nodal deviation from ``exact`` over every node, boundary included."""
    env = dict(zip("xyz", grid.mesh()))
    env["t"] = 0.0 if t is None else float(t)
    ref = np.broadcast_to(np.asarray(exact(env), dtype=float), grid.shape)
    arr = np.asarray(field_, dtype=float)
    if arr.shape != grid.shape:
        raise ConfigError(f"field shape {arr.shape} does not match grid {grid.shape}")
    return float(np.abs(arr - ref).max())


def observed_orders(hs: Sequence[float], errors: Sequence[Optional[float]]) -> list:
    """log2 error ratios between consecutive rows whose h halves."""
    out = [None] * len(hs)
    for k in range(1, len(hs)):
        e0, e1 = errors[k - 1], errors[k]
        if e0 is None or e1 is None or e0 <= 0 or e1 <= 0:
            continue
        if math.isclose(hs[k - 1] / hs[k], 2.0, rel_tol=1e-9):
            out[k] = math.log2(e0 / e1)
    return out


def grid_for(problem: ProblemSpec, h) -> GridSpec:
    """Grid of spacing ``h``; the domain length must be a whole multiple of h."""
    length = Fraction(problem.l2 - problem.l1).limit_denominator(10**9)
    n = length / Fraction(h).limit_denominator(10**12)
    if n.denominator != 1:
        raise ConfigError(f"h = {float(h)} does not divide the domain length {float(length)}")
    return make_grid(problem.dim, problem.l1, problem.l2, int(n))


def solve_problem(problem: ProblemSpec, grid: GridSpec, plan: Optional[IntegratorPlan] = None,
                  solver: SolveConfig = SolveConfig(), fp: Optional[FixedPointConfig] = None):
    """Full-grid numerical solution (at ``t_end`` for unsteady kinds)."""
    if problem.unsteady:
        if plan is None:
            raise ConfigError("unsteady problems need an integrator plan")
        u, _ = march(plan, problem, grid, solver=solver, fp=fp)
        return u
    if problem.nonlinear:
        u, _ = fixed_point_steady(problem, grid, fp, solver)
        return u
    system = assemble(grid, bundle_steady(problem, grid), g=problem.g)
    interior, _ = solve(system, solver)
    return embed(interior, system)


def _resolve(target, setting, plan, tie_break):
    if isinstance(target, ProblemSpec):
        problem = target
        if isinstance(setting, OperatorSetting):
            problem = replace(problem, setting=setting)
        elif setting is not None:
            raise ConfigError("a numbered setting needs a built-in example")
        meta = {"problem": problem.name or "user", "setting": repr(problem.setting)}
        default_plan, notes = None, ()
    else:
        ex = get_example(target)
        problem = build_problem(ex.id, setting)
        meta = {"example": ex.id, "setting": setting if setting is not None else ex.default_setting}
        default_plan, notes = ex.plan, ex.out_of_scope
    if tie_break is not None:
        problem = replace(problem, setting=replace(problem.setting, tie_break=tie_break))
    plan = plan or default_plan
    meta.update({
        "kind": problem.kind,
        "dim": problem.dim,
        "scheme": plan.scheme if (plan and problem.unsteady) else None,
        "tau_rule": f"{plan.tau_rule.kind}:{plan.tau_rule.value:g}" if (plan and problem.unsteady) else None,
        "not_reproduced": list(notes),
    })
    return problem, plan, meta


def run_study(target: Union[int, ProblemSpec], hs: Sequence[float], plan: Optional[IntegratorPlan] = None,
              setting=None, solver: SolveConfig = SolveConfig(), fp: Optional[FixedPointConfig] = None,
              tie_break: Optional[str] = None, workers: int = 1) -> ConvergenceReport:
    """Solve ``target`` (an example number or a problem) once per mesh size.

    Rows are independent and may run on ``workers`` threads; the report is
    always ordered as ``hs``.  If a row fails, :class:`StudyFailure` carries
    the rows completed before it.
    """
    problem, plan, meta = _resolve(target, setting, plan, tie_break)
    if problem.exact is None:
        raise ConfigError("a convergence study needs the exact solution")
    meta["solver"] = solver.method
    hs = [float(h) for h in hs]
    grids = [grid_for(problem, h) for h in hs]
    t_end = problem.t_end if problem.unsteady else None

    def one(grid):
        t0 = time.perf_counter()
        u = solve_problem(problem, grid, plan, solver, fp)
        err = l_inf_error(u, problem.exact, grid, t_end)
        tau = plan.tau_rule.tau(grid.h) if problem.unsteady else None
        return tau, err, 1e3 * (time.perf_counter() - t0)

    results = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(one, g) for g in grids]
            for h, fut in zip(hs, futures):
                try:
                    results.append(fut.result())
                except CompactFDError as exc:
                    raise StudyFailure(f"h = {h:g}: {exc}", _report(hs, results, meta), h) from exc
    else:
        for h, g in zip(hs, grids):
            try:
                results.append(one(g))
            except CompactFDError as exc:
                raise StudyFailure(f"h = {h:g}: {exc}", _report(hs, results, meta), h) from exc
    return _report(hs, results, meta)


def _report(hs, results, meta) -> ConvergenceReport:
    hs = hs[: len(results)]
    orders = observed_orders(hs, [r[1] for r in results])
    rows = [StudyRow(h, tau, err, od, ms) for h, (tau, err, ms), od in zip(hs, results, orders)]
    return ConvergenceReport(rows, dict(meta))


def _fmt(value, spec):
    return "" if value is None else format(value, spec)


def emit(report: ConvergenceReport, fmt: str = "csv", stream=None, wall_time: bool = True) -> str:
    """Write ``report`` as ``csv``, ``md`` (markdown) or ``jsonl``.

    Returns the text; also writes it to ``stream`` when given.  With
    ``wall_time=False`` the timing column is left empty, which makes output
    of repeated runs byte-identical.
    """
    rows = []
    for r in report.rows:
        d = r.as_dict()
        if not wall_time:
            d["wall_ms"] = None
        rows.append(d)
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(COLUMNS)
        for d in rows:
            w.writerow([_fmt(d["h"], ".10g"), _fmt(d["tau"], ".10g"), _fmt(d["error"], ".4E"),
                        _fmt(d["order"], ".2f"), _fmt(d["wall_ms"], ".1f")])
    elif fmt in ("md", "markdown"):
        buf.write("| h | tau | error | order | wall_ms |\n")
        buf.write("|---|---|---|---|---|\n")
        for d in rows:
            cells = [_h_label(d["h"]), _h_label(d["tau"]) if d["tau"] is not None else "—",
                     _fmt(d["error"], ".4E"), _fmt(d["order"], ".2f"), _fmt(d["wall_ms"], ".1f")]
            buf.write("| " + " | ".join(cells) + " |\n")
    elif fmt == "jsonl":
        for d in rows:
            buf.write(json.dumps(d) + "\n")
    else:
        raise ConfigError(f"unknown format {fmt!r}; use csv, md or jsonl")
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def _h_label(h):
    """``1/2^k`` style label when h is a power-of-two fraction."""
    fr = Fraction(h).limit_denominator(1 << 20)
    if abs(float(fr) - h) > 1e-12 * h:
        return format(h, ".6g")
    num, den = fr.numerator, fr.denominator
    if den > 1 and den & (den - 1) == 0:
        return f"{num}/2^{den.bit_length() - 1}"
    return str(fr)
