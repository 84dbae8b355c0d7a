"""Picard (frozen-coefficient) iteration for the nonlinear problem kinds.

Each iteration freezes κ, α, β, (γ,) λ and the gradient inside the
normalized coefficients at the current iterate, solves the resulting linear
compact system and takes its solution as the next iterate.  No damping and
no early stop by default: the iteration count is fixed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coefficients import ProblemSpec, TimeSliceContext, bundle_steady, bundle_unsteady
from .errors import CompactFDError, ConfigError
from .grid import GridSpec
from .system import SolveConfig, assemble, embed, solve

__all__ = [
    "FixedPointConfig",
    "IterationTrace",
    "default_fixed_point",
    "boundary_field",
    "fixed_point_steady",
    "fixed_point_step_unsteady",
    "FixedPointFailure",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FixedPointConfig:
    max_iters: int = 40
    early_stop_tol: Optional[float] = None
    damping: float = 1.0

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError("max_iters must be a positive integer")
        if self.damping != 1.0:
            raise ConfigError("only undamped iteration (damping = 1.0) is supported")


def default_fixed_point(problem: ProblemSpec) -> FixedPointConfig:
    """Iteration counts used by the reference experiments: 40 for steady
    problems, 20 for 2D unsteady and 40 for 3D unsteady."""
    if problem.unsteady and problem.dim == 2:
        return FixedPointConfig(20)
    return FixedPointConfig(40)


@dataclass
class IterationTrace:
    diffs: list = field(default_factory=list)
    solver_stats: list = field(default_factory=list)
    error: Optional[str] = None

    def __len__(self):
        return len(self.diffs)

    def records(self):
        for k, (dv, st) in enumerate(zip(self.diffs, self.solver_stats), start=1):
            yield {"iteration": k, "diff_inf": dv, "solver": st.method, "residual": float(st.residual)}

    def contraction_ok(self, after: int = 3, floor: float = 0.0) -> bool:
        """True when the successive differences decrease after ``after`` iterations.

        Differences at or below ``floor`` count as converged; once the
        iteration reaches roundoff they fluctuate and carry no signal.
        """
        tail = self.diffs[after:]
        return all(b <= a or b <= floor for a, b in zip(tail, tail[1:]))


class FixedPointFailure(CompactFDError):
    """Solver failure inside the outer iteration; ``trace`` holds the history."""

    def __init__(self, message, trace):
        self.trace = trace
        super().__init__(message)


def boundary_field(problem: ProblemSpec, grid: GridSpec, t: float = 0.0) -> np.ndarray:
    env = dict(zip("xyz", grid.mesh()))
    env["t"] = float(t)
    return np.broadcast_to(np.asarray(problem.g(env), dtype=float), grid.shape).copy()


def _iterate(build, grid, g_full, u_start, cfg, solver):
    trace = IterationTrace()
    u = u_start
    for _ in range(cfg.max_iters):
        try:
            system = assemble(grid, build(u), g=g_full)
            interior, stats = solve(system, solver)
        except CompactFDError as exc:
            trace.error = str(exc)
            raise FixedPointFailure(f"iteration {len(trace) + 1} failed: {exc}", trace) from exc
        u_next = embed(interior, system)
        trace.diffs.append(float(np.abs(u_next - u).max()))
        trace.solver_stats.append(stats)
        u = u_next
        if cfg.early_stop_tol is not None and trace.diffs[-1] < cfg.early_stop_tol:
            break
    floor = 1e-12 * max(1.0, float(np.abs(u).max()))
    if len(trace.diffs) > 4 and not trace.contraction_ok(floor=floor):
        log.warning("fixed-point differences are not monotonically decreasing: %s", trace.diffs[-5:])
    return u, trace


def fixed_point_steady(problem: ProblemSpec, grid: GridSpec, cfg: Optional[FixedPointConfig] = None,
                       solver: SolveConfig = SolveConfig(), u_start=None):
    """Iterate from ``u = 0`` on the whole grid.

    The boundary of every solved iterate is g; only the coefficients of the
    first linear problem see the zero start on the boundary.  Returns
    ``(u_full, trace)``.
    """
    cfg = cfg or default_fixed_point(problem)
    g_full = boundary_field(problem, grid, 0.0)
    if u_start is None:
        u_start = np.zeros(grid.shape)
    return _iterate(lambda u: bundle_steady(problem, grid, u), grid, g_full, u_start, cfg, solver)


def fixed_point_step_unsteady(problem: ProblemSpec, grid: GridSpec, ctx: TimeSliceContext,
                              cfg: Optional[FixedPointConfig] = None, solver: SolveConfig = SolveConfig()):
    """Solve one implicit level by Picard iteration.

    The initial guess is the newest history level with its boundary replaced
    by g at the target time.  Returns ``(u_target_full, trace)``; for CN the
    target is the half level, and the caller extrapolates.
    """
    cfg = cfg or default_fixed_point(problem)
    g_full = boundary_field(problem, grid, ctx.target_time)
    u_start = np.array(ctx.history[-1], dtype=float)
    u_start[grid.boundary_mask()] = g_full[grid.boundary_mask()]
    return _iterate(lambda u: bundle_unsteady(problem, grid, ctx, u), grid, g_full, u_start, cfg, solver)
