import numpy as np
import pytest
import scipy.io
from hypothesis import given, settings
from hypothesis import strategies as st

from compactfd.bench.examples import build_problem
from compactfd.bench.study import l_inf_error
from compactfd.coefficients import ProblemSpec, bundle_steady, const
from compactfd.errors import BundleMismatchError, DivergenceError, SingularMatrixError
from compactfd.grid import make_grid
from compactfd.system import (
    SolveConfig,
    assemble,
    check_m_matrix,
    embed,
    export_matrix_market,
    nested_dissection,
    solve,
)


def _poisson(dim=2, g=0.0, phi=0.0, l1=0.0, l2=1.0):
    zero = const(0.0)
    return ProblemSpec(
        dim=dim, kind="linear-steady", l1=l1, l2=l2, kappa=const(1.0), alpha=zero, beta=zero,
        gamma=zero if dim == 3 else None, lam=zero, phi=phi if callable(phi) else const(phi),
        g=g if callable(g) else const(g),
    )


def _solve_full(problem, grid, cfg=SolveConfig()):
    system = assemble(grid, bundle_steady(problem, grid), g=problem.g)
    interior, stats = solve(system, cfg)
    return embed(interior, system), system, stats


@pytest.mark.parametrize("gval", [0.0, 1.0])
def test_single_unknown_poisson(gval):
    grid = make_grid(2, 0.0, 1.0, 2)
    u, system, _ = _solve_full(_poisson(g=gval), grid)
    assert system.n_unknowns == 1
    assert u[1, 1] == pytest.approx(gval, abs=1e-14)


def test_example1_coarsest_row():
    problem = build_problem(1)
    grid = make_grid(2, 0.0, 1.0, 8)
    u, _, _ = _solve_full(problem, grid)
    err = l_inf_error(u, problem.exact, grid)
    assert err == pytest.approx(7.1938e-3, rel=5e-4)


def test_example5_coarse_row():
    problem = build_problem(5)
    grid = make_grid(3, -1.0, 1.0, 8)
    u, _, _ = _solve_full(problem, grid)
    err = l_inf_error(u, problem.exact, grid)
    assert err == pytest.approx(2.7194e-3, rel=5e-4)


def test_m_matrix_poisson():
    grid = make_grid(2, 0.0, 1.0, 16)
    rep = check_m_matrix(assemble(grid, bundle_steady(_poisson(), grid)))
    assert rep.ok and rep.n_violations == 0 and rep.violating_nodes == []
    assert rep.min_diagonal == pytest.approx(10 / 3)
    assert rep.max_offdiagonal == pytest.approx(-1 / 6)


def test_m_matrix_example1_fine_ok():
    problem = build_problem(1)
    grid = make_grid(2, 0.0, 1.0, 32)
    rep = check_m_matrix(assemble(grid, bundle_steady(problem, grid)))
    assert rep.sign_ok and rep.rowsum_ok


def test_m_matrix_example1_coarse_reports_violation():
    problem = build_problem(1)
    grid = make_grid(2, 0.0, 1.0, 2)
    rep = check_m_matrix(assemble(grid, bundle_steady(problem, grid)))
    assert not rep.ok
    assert rep.n_violations == 1
    assert rep.violating_nodes == [(1, 1)]


def test_m_matrix_example5():
    problem = build_problem(5)
    fine = make_grid(3, -1.0, 1.0, 32)
    assert check_m_matrix(assemble(fine, bundle_steady(problem, fine))).sign_ok
    # At h = 2/16 a single off-diagonal weight next to the corner (-1, 1, 1)
    # turns positive; the report must locate it.
    coarse = make_grid(3, -1.0, 1.0, 16)
    rep = check_m_matrix(assemble(coarse, bundle_steady(problem, coarse)))
    assert not rep.sign_ok
    assert rep.n_sign_violations == 1
    assert rep.sign_violating_nodes == [(1, 15, 15)]
    assert 0 < rep.max_offdiagonal < 1e-2
    # λ changes sign in this domain, so negative row sums are expected.
    assert not rep.rowsum_ok and rep.min_rowsum < 0


def test_laplace_linear_data_reproduced():
    grid = make_grid(2, 0.0, 1.0, 16)
    g = lambda env: env["x"] + env["y"]
    u, _, _ = _solve_full(_poisson(g=g), grid)
    X, Y = grid.mesh()
    assert np.abs(u - (X + Y)).max() <= 1e-11


def _cubic(coef):
    def ev(env):
        x, y = env["x"], env["y"]
        z = env.get("z", 0.0)
        c0, c1, c2, c3, c4 = coef
        return c0 + c1 * x * y + c2 * x**3 + c3 * y**2 * x + c4 * x * y * z + 0 * x
    return ev


def _cubic_lap(coef):
    def ev(env):
        x, y = env["x"], env["y"]
        _, _, c2, c3, _ = coef
        # -Δ of the cubic above
        return -(6 * c2 * x + 2 * c3 * x)
    return ev


@settings(max_examples=15)
@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=5, max_size=5), st.sampled_from([2, 3]))
def test_cubic_reproduction(coef, dim):
    grid = make_grid(dim, 0.0, 1.0, 6)
    problem = _poisson(dim=dim, g=_cubic(coef), phi=_cubic_lap(coef))
    u, _, _ = _solve_full(problem, grid)
    exact = _cubic(coef)(dict(zip("xyz", grid.mesh())))
    assert np.abs(u - exact).max() <= 1e-11 * (1 + np.abs(exact).max())


def test_residual_bound():
    problem = build_problem(1)
    grid = make_grid(2, 0.0, 1.0, 32)
    system = assemble(grid, bundle_steady(problem, grid), g=problem.g)
    interior, stats = solve(system)
    x = interior.transpose().reshape(-1)
    A, b = system.matrix, system.rhs
    r = np.linalg.norm(A @ x - b, np.inf)
    anorm = abs(A).sum(axis=1).max()
    assert r <= 1e-9 * (anorm * np.linalg.norm(x, np.inf) + np.linalg.norm(b, np.inf))
    assert stats.method == "direct" and stats.iterations == 1


@pytest.mark.parametrize("method", ["bicgstab", "gmres"])
def test_iterative_matches_direct(method):
    problem = build_problem(1)
    grid = make_grid(2, 0.0, 1.0, 16)
    system = assemble(grid, bundle_steady(problem, grid), g=problem.g)
    ref, _ = solve(system)
    got, stats = solve(system, SolveConfig(method, rel_tol=1e-12, preconditioner="ilu"))
    assert np.abs(got - ref).max() <= 1e-8 * max(1.0, np.abs(ref).max())
    assert stats.iterations == len(stats.residual_history) >= 1


def test_monotone_sign():
    # Ex1 coefficients with differenced κ partials, φ = -κ (so f = 1) and
    # zero boundary data: the solution cannot exceed zero.
    base = build_problem(1)
    problem = ProblemSpec(
        dim=2, kind="linear-steady", l1=0.0, l2=1.0, kappa=base.kappa, alpha=base.alpha,
        beta=base.beta, lam=base.lam, phi=lambda env: -base.kappa(env), g=const(0.0), derivative_mode="fd",
    )
    grid = make_grid(2, 0.0, 1.0, 32)
    system = assemble(grid, bundle_steady(problem, grid), g=0.0)
    assert check_m_matrix(system).ok
    assert np.all(system.rhs <= 0)
    interior, _ = solve(system)
    assert interior.max() <= 1e-12


@pytest.mark.parametrize("dim,limit", [(2, 9), (3, 19)])
def test_sparsity(dim, limit):
    grid = make_grid(dim, 0.0, 1.0, 6)
    system = assemble(grid, bundle_steady(_poisson(dim=dim), grid))
    A = system.matrix
    assert np.diff(A.indptr).max() == limit
    pattern = (A != 0).astype(int)
    assert (pattern != pattern.T).nnz == 0


def test_matrix_market_export(tmp_path):
    grid = make_grid(2, 0.0, 1.0, 4)
    system = assemble(grid, bundle_steady(_poisson(), grid))
    path = tmp_path / "a.mtx"
    export_matrix_market(system, path)
    assert path.read_text().startswith("%%MatrixMarket matrix coordinate real general")
    back = scipy.io.mmread(str(path)).tocsr()
    assert abs(back - system.matrix).max() == 0


def test_solve_config_validation():
    with pytest.raises(ValueError):
        SolveConfig("cg")
    with pytest.raises(ValueError):
        SolveConfig(rel_tol=1e-2)
    with pytest.raises(ValueError):
        SolveConfig(preconditioner="amg")
    with pytest.raises(ValueError):
        SolveConfig(max_iters=0)


def test_singular_matrix():
    grid = make_grid(2, 0.0, 1.0, 4)
    system = assemble(grid, bundle_steady(_poisson(), grid))
    system.matrix = system.matrix * 0.0
    with pytest.raises(SingularMatrixError):
        solve(system)


def test_divergence_carries_history():
    problem = build_problem(1)
    grid = make_grid(2, 0.0, 1.0, 32)
    system = assemble(grid, bundle_steady(problem, grid), g=problem.g)
    with pytest.raises(DivergenceError) as info:
        solve(system, SolveConfig("bicgstab", rel_tol=1e-12, max_iters=2))
    assert len(info.value.residuals) >= 1


@pytest.mark.parametrize("m,dim", [(1, 2), (7, 2), (10, 2), (5, 3), (8, 3)])
def test_nested_dissection_is_permutation(m, dim):
    perm = nested_dissection(m, dim)
    assert sorted(perm.tolist()) == list(range(m**dim))


def test_bundle_mismatch():
    grid = make_grid(2, 0.0, 1.0, 8)
    other = make_grid(2, 0.0, 1.0, 16)
    with pytest.raises(BundleMismatchError):
        assemble(other, bundle_steady(_poisson(), grid))
