"""Implicit time marching (CN, BDF3, BDF4) by reduction to steady-form solves.

Every step poses the compact steady-form equation at the step's target time
(``t_{n+1/2}`` for CN, the new level for BDF) with the time-difference folded
into the coefficients.  BDF schemes are started with CN steps of size
``h/2`` that land exactly on the first multiples of τ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .coefficients import ProblemSpec, TimeSliceContext, bundle_unsteady
from .errors import ConfigError, StartupRatioError
from .grid import GridSpec, time_grid_from_step
from .nonlinear import FixedPointConfig, boundary_field, default_fixed_point, fixed_point_step_unsteady
from .system import SolveConfig, assemble, embed, solve

__all__ = ["TauRule", "IntegratorPlan", "solve_level", "cn_step", "bdf3_step", "bdf4_step", "bdf_step", "march"]

_DEPTH = {"CN": 1, "BDF3": 3, "BDF4": 4}


@dataclass(frozen=True)
class TauRule:
    """``ratio``: τ = r·h; ``quadratic``: τ = c·h²; ``fixed``: τ = v."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("ratio", "quadratic", "fixed"):
            raise ConfigError(f"unknown tau rule {self.kind!r}")
        if not self.value > 0:
            raise ConfigError("tau rule value must be positive")

    def tau(self, h: float) -> float:
        if self.kind == "ratio":
            return self.value * h
        if self.kind == "quadratic":
            return self.value * h * h
        return self.value


@dataclass(frozen=True)
class IntegratorPlan:
    scheme: str = "BDF3"
    tau_rule: TauRule = TauRule("ratio", 1.0)
    startup_ratio: float = 0.5  # startup CN step = startup_ratio * h
    cn_boundary: str = "extrapolate"

    def __post_init__(self):
        if self.scheme not in _DEPTH:
            raise ConfigError(f"scheme must be one of {tuple(_DEPTH)}")
        if self.cn_boundary not in ("extrapolate", "exact"):
            raise ConfigError("cn_boundary must be 'extrapolate' or 'exact'")

    @property
    def history_needed(self) -> int:
        return _DEPTH[self.scheme] - 1


def solve_level(problem: ProblemSpec, grid: GridSpec, ctx: TimeSliceContext,
                solver: SolveConfig = SolveConfig(), fp: Optional[FixedPointConfig] = None):
    """Full-grid solution of one steady-form level plus a diagnostics dict."""
    if problem.nonlinear:
        u, trace = fixed_point_step_unsteady(problem, grid, ctx, fp or default_fixed_point(problem), solver)
        stats = trace.solver_stats[-1]
        return u, {"iterations": len(trace), "residual": float(stats.residual), "picard_diff": trace.diffs[-1]}
    system = assemble(grid, bundle_unsteady(problem, grid, ctx), g=problem.g, t=ctx.target_time)
    interior, stats = solve(system, solver)
    return embed(interior, system), {"iterations": stats.iterations, "residual": float(stats.residual)}


def cn_step(problem, grid, u_n, n, tau, solver=SolveConfig(), fp=None, boundary="extrapolate"):
    """Advance ``u_n`` (full grid at t = nτ) to t = (n+1)τ.

    ``boundary="extrapolate"`` applies ``2 u^{n+1/2} - u^n`` on every node,
    so boundary values carry an O(τ²) defect; ``"exact"`` resets them to g.
    """
    ctx = TimeSliceContext("CN", tau, n, (np.asarray(u_n, dtype=float),))
    u_half, diag = solve_level(problem, grid, ctx, solver, fp)
    u_next = 2.0 * u_half - np.asarray(u_n, dtype=float)
    if boundary == "exact":
        g_next = boundary_field(problem, grid, (n + 1) * tau)
        mask = grid.boundary_mask()
        u_next[mask] = g_next[mask]
    elif boundary != "extrapolate":
        raise ConfigError(f"boundary must be 'extrapolate' or 'exact', got {boundary!r}")
    return u_next, diag


def bdf_step(scheme, problem, grid, history, n, tau, solver=SolveConfig(), fp=None):
    """One BDF step from ``history`` (oldest first, levels n..n+depth-1)."""
    ctx = TimeSliceContext(scheme, tau, n, tuple(np.asarray(u, dtype=float) for u in history))
    return solve_level(problem, grid, ctx, solver, fp)


def bdf3_step(problem, grid, history, n, tau, solver=SolveConfig(), fp=None):
    return bdf_step("BDF3", problem, grid, history, n, tau, solver, fp)


def bdf4_step(problem, grid, history, n, tau, solver=SolveConfig(), fp=None):
    return bdf_step("BDF4", problem, grid, history, n, tau, solver, fp)


def _startup_substeps(tau: float, tau_start: float) -> int:
    q = tau / tau_start
    k = round(q)
    if k < 1 or abs(q - k) > 1e-12 * max(1.0, q):
        raise StartupRatioError(f"tau/tau_start = {q} is not a positive integer")
    return k


def march(plan: IntegratorPlan, problem: ProblemSpec, grid: GridSpec, t_end: Optional[float] = None,
          solver: SolveConfig = SolveConfig(), fp: Optional[FixedPointConfig] = None,
          tau: Optional[float] = None, on_step: Optional[Callable[[dict], None]] = None):
    """March from the initial data to ``t_end``.

    Returns ``(u_full_at_t_end, diagnostics)`` where diagnostics is a list of
    per-step dicts (step, t, phase, iterations, residual, min, max).
    """
    t_end = problem.t_end if t_end is None else t_end
    tau = plan.tau_rule.tau(grid.h) if tau is None else tau
    tgrid = time_grid_from_step(t_end, tau)
    diags = []

    def record(step, t, phase, u, d):
        inner = u[(slice(1, -1),) * grid.dim]
        rec = {"step": step, "t": t, "phase": phase, **d,
               "min": float(inner.min()), "max": float(inner.max())}
        diags.append(rec)
        if on_step:
            on_step(rec)

    env = dict(zip("xyz", grid.mesh()))
    env["t"] = 0.0
    u0 = np.broadcast_to(np.asarray(problem.initial(env), dtype=float), grid.shape).copy()

    if plan.scheme == "CN":
        u = u0
        for n in range(tgrid.n2):
            u, d = cn_step(problem, grid, u, n, tau, solver, fp, plan.cn_boundary)
            record(n + 1, tgrid.time(n + 1), "CN", u, d)
        return u, diags

    need = plan.history_needed
    tau_s = plan.startup_ratio * grid.h
    q = _startup_substeps(tau, tau_s)
    tau_s = tau / q
    levels = [u0]
    u = u0
    sub = 0
    for m in range(1, min(need, tgrid.n2) + 1):
        for _ in range(q):
            u, d = cn_step(problem, grid, u, sub, tau_s, solver, fp, plan.cn_boundary)
            sub += 1
        levels.append(u)
        record(m, tgrid.time(m), "startup-CN", u, d)
    for n in range(0, tgrid.n2 - need):
        u, d = bdf_step(plan.scheme, problem, grid, levels[-(need + 1):], n, tau, solver, fp)
        levels.append(u)
        levels = levels[-(need + 1):]
        record(n + need + 1, tgrid.time(n + need + 1), plan.scheme, u, d)
    return levels[-1], diags
