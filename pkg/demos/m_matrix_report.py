"""M-matrix sign and row-sum report for built-in examples on several grids."""

from compactfd.bench import build_problem
from compactfd.coefficients import bundle_steady
from compactfd.system import assemble, check_m_matrix
from compactfd.grid import make_grid

for example, counts in ((1, (2, 4, 8, 32)), (5, (4, 8, 16, 32))):
    problem = build_problem(example)
    for n in counts:
        grid = make_grid(problem.dim, problem.l1, problem.l2, n)
        rep = check_m_matrix(assemble(grid, bundle_steady(problem, grid)))
        where = f" at {rep.sign_violating_nodes[:3]}" if rep.n_sign_violations else ""
        print(f"example {example}  h = {grid.h:<8.5g} signs ok {rep.sign_ok!s:5}  "
              f"row sums ok {rep.rowsum_ok!s:5}  sign violations {rep.n_sign_violations}{where}")
