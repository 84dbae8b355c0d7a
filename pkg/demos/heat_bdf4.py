"""A variable-coefficient heat problem marched with BDF4 through the API.

u = sin(πx) sin(πy) e^{-t}, κ = 1 + x y / 2, no convection or reaction.
The source is written out by hand.  With τ = h the error ratio per halving
of h sits between 8 and 16.
"""

import numpy as np

from compactfd import IntegratorPlan, ProblemSpec, TauRule, const, l_inf_error, make_grid, march

pi = np.pi


def exact(env):
    return np.sin(pi * env["x"]) * np.sin(pi * env["y"]) * np.exp(-env["t"])


def source(env):
    x, y = env["x"], env["y"]
    u = exact(env)
    ux = pi * np.cos(pi * x) * np.sin(pi * y) * np.exp(-env["t"])
    uy = pi * np.sin(pi * x) * np.cos(pi * y) * np.exp(-env["t"])
    kappa = 1 + x * y / 2
    # u_t - (κ u_x)_x - (κ u_y)_y
    return -u - (y / 2 * ux + x / 2 * uy) + kappa * 2 * pi**2 * u


zero = const(0.0)
problem = ProblemSpec(
    dim=2, kind="linear-unsteady", l1=0.0, l2=1.0,
    kappa=lambda env: 1 + env["x"] * env["y"] / 2, alpha=zero, beta=zero, lam=zero,
    phi=source, g=exact, exact=exact,
)
plan = IntegratorPlan("BDF4", TauRule("ratio", 1.0))

previous = None
for n in (8, 16, 32):
    grid = make_grid(2, 0.0, 1.0, n)
    u, steps = march(plan, problem, grid)
    err = l_inf_error(u, exact, grid, t=1.0)
    ratio = "" if previous is None else f"  ratio {previous / err:6.2f}"
    print(f"h = 1/{n:<3d} steps {len(steps):3d}  error {err:.4E}{ratio}")
    previous = err
