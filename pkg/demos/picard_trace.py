"""Fixed-point history for the small-diffusion nonlinear example."""

from compactfd import FixedPointConfig, fixed_point_steady, l_inf_error, make_grid
from compactfd.bench import build_problem

problem = build_problem(3, 2)
grid = make_grid(2, 0.0, 1.0, 32)
u, trace = fixed_point_steady(problem, grid, FixedPointConfig(40))
for rec in trace.records():
    if rec["iteration"] <= 5 or rec["iteration"] % 10 == 0:
        print(f"iteration {rec['iteration']:2d}  max change {rec['diff_inf']:.3E}")
print(f"error against the exact solution: {l_inf_error(u, problem.exact, grid):.4E}")
