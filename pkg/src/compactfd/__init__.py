"""Fourth-order compact finite differences for convection-diffusion-reaction problems.

The package solves

    u_t - ∇·(κ∇u) + α u_x + β u_y (+ γ u_z) + λ u = φ

with Dirichlet data on squares and cubes, using a 9-point stencil in 2D and
a 19-point stencil in 3D.  Coefficients may depend on the solution (Picard
iteration) and on time (Crank-Nicolson, BDF3, BDF4).

Typical use::

    from compactfd import make_grid, run_study
    report = run_study(1, [1 / 8, 1 / 16, 1 / 32])
"""

from .coefficients import ProblemSpec, bundle_steady, bundle_unsteady, const
from .errors import CompactFDError, ConfigError, SolverError
from .expr import compile_expr, evaluate, parse
from .fd_ops import CATALOG, OperatorSetting, derivative_along, partials
from .grid import GridSpec, TimeGrid, make_grid
from .nonlinear import FixedPointConfig, fixed_point_steady
from .system import SolveConfig, assemble, check_m_matrix, embed, solve
from .timestep import IntegratorPlan, TauRule, march
from .bench.study import l_inf_error, run_study

__version__ = "0.1.0"

__all__ = [
    "ProblemSpec", "bundle_steady", "bundle_unsteady", "const",
    "CompactFDError", "ConfigError", "SolverError",
    "compile_expr", "evaluate", "parse",
    "CATALOG", "OperatorSetting", "derivative_along", "partials",
    "GridSpec", "TimeGrid", "make_grid",
    "FixedPointConfig", "fixed_point_steady",
    "SolveConfig", "assemble", "check_m_matrix", "embed", "solve",
    "IntegratorPlan", "TauRule", "march",
    "l_inf_error", "run_study",
]
