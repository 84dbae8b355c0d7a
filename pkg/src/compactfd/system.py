"""Global sparse system assembly, M-matrix diagnostics and linear solves.

Scaling convention: every row is multiplied by ``-h²``, so the row of an
interior node stores ``-C`` and the right-hand side stores
``-h² F + Σ C·g`` over neighbours that lie on the boundary.  With this
convention the M-matrix sign conditions are literal sign checks on stored
entries.
"""

from __future__ import annotations

import itertools
import time
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coefficients import CoefficientBundle
from .errors import DivergenceError, SingularMatrixError, SolverError
from .grid import GridSpec
from .stencil2d import stencil_at as stencil_2d
from .stencil3d import stencil_at as stencil_3d

__all__ = [
    "SparseSystem",
    "MMatrixReport",
    "SolveConfig",
    "SolveStats",
    "default_stencil",
    "assemble",
    "check_m_matrix",
    "solve",
    "embed",
    "export_matrix_market",
    "nested_dissection",
    "interior_index",
]


def default_stencil(dim: int) -> Callable:
    return stencil_2d if dim == 2 else stencil_3d


def _offsets(dim):
    offs = list(itertools.product((-1, 0, 1), repeat=dim))
    if dim == 3:
        offs = [o for o in offs if sum(map(abs, o)) < 3]
    return offs


def interior_index(grid: GridSpec) -> np.ndarray:
    """Full-grid array holding the lex index of interior nodes and -1 elsewhere."""
    m = grid.n1 - 1
    idx = -np.ones(grid.shape, dtype=np.int64)
    idx[(slice(1, -1),) * grid.dim] = np.arange(m**grid.dim).reshape((m,) * grid.dim).transpose()
    return idx


@dataclass
class SparseSystem:
    grid: GridSpec
    matrix: sp.csr_matrix
    rhs: np.ndarray
    stencil: np.ndarray = field(repr=False)  # pre-elimination C, shape (3,)*dim + interior
    boundary: np.ndarray = field(repr=False)  # full-grid array with g on the boundary

    @property
    def n_unknowns(self) -> int:
        return self.matrix.shape[0]


def _boundary_values(g, grid: GridSpec, t=None) -> np.ndarray:
    if callable(g):
        env = dict(zip("xyz", grid.mesh()))
        env["t"] = 0.0 if t is None else float(t)
        vals = np.broadcast_to(np.asarray(g(env), dtype=float), grid.shape).copy()
    else:
        vals = np.array(g, dtype=float)
        if vals.shape != grid.shape:
            vals = np.broadcast_to(vals, grid.shape).copy()
    vals[(slice(1, -1),) * grid.dim] = 0.0
    return vals


def assemble(grid: GridSpec, bundle: CoefficientBundle, stencil_fn: Optional[Callable] = None,
             g=0.0, t: Optional[float] = None) -> SparseSystem:
    """Build ``-L_h u_h = -F`` over interior unknowns with Dirichlet elimination.

    ``g`` is an evaluator (called with the grid environment at time ``t``), a
    full-grid array, or a scalar.
    """
    bundle.check_grid(grid)
    stencil_fn = stencil_fn or default_stencil(grid.dim)
    st = stencil_fn(bundle, grid.h)
    n = grid.n1
    dim = grid.dim
    idx = interior_index(grid)
    gvals = _boundary_values(g, grid, t)
    rows_all = idx[(slice(1, -1),) * dim].transpose().reshape(-1)
    rhs = (-grid.h**2 * st.rhs).transpose().reshape(-1).copy()

    rows, cols, vals = [], [], []
    for off in _offsets(dim):
        coef = st.c[tuple(o + 1 for o in off)]
        sl = tuple(slice(1 + o, n + o) for o in off)
        nb = idx[sl].transpose().reshape(-1)
        cflat = coef.transpose().reshape(-1)
        inside = nb >= 0
        rows.append(rows_all[inside])
        cols.append(nb[inside])
        vals.append(-cflat[inside])
        if not np.all(inside):
            gb = gvals[sl].transpose().reshape(-1)
            rhs[~inside] += cflat[~inside] * gb[~inside]
    N = grid.n_interior
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )
    A.sum_duplicates()
    A.sort_indices()
    return SparseSystem(grid, A, rhs, st.c, gvals)


@dataclass
class MMatrixReport:
    sign_ok: bool
    rowsum_ok: bool
    min_diagonal: float
    max_offdiagonal: float
    min_rowsum: float
    violating_nodes: list
    n_violations: int
    sign_violating_nodes: list = field(default_factory=list)
    n_sign_violations: int = 0

    @property
    def ok(self) -> bool:
        return self.sign_ok and self.rowsum_ok


def check_m_matrix(system: SparseSystem, max_listed: int = 20, rowsum_rtol: float = 64 * np.finfo(float).eps
                   ) -> MMatrixReport:
    """Sign and row-sum conditions on the pre-elimination rows of ``-L_h``.

    Row sums are accepted down to ``-rowsum_rtol * Σ|C|`` so that an exact
    zero computed in floating point is not flagged.
    """
    grid = system.grid
    dim = grid.dim
    neg = -system.stencil
    center = (1,) * dim
    diag = neg[center]
    off_mask = np.ones((3,) * dim, dtype=bool)
    off_mask[center] = False
    off = neg[off_mask]  # shape (n_off,) + interior
    max_off = off.max(axis=0)
    rowsum = neg.sum(axis=tuple(range(dim)))
    scale = np.abs(neg).sum(axis=tuple(range(dim)))
    sign_bad = (diag <= 0) | (max_off > 0)
    sum_bad = rowsum < -rowsum_rtol * scale
    bad = sign_bad | sum_bad
    def listed(mask):
        return [tuple(int(v) + 1 for v in p) for p in np.argwhere(mask)[:max_listed]]

    return MMatrixReport(
        sign_ok=not bool(np.any(sign_bad)),
        rowsum_ok=not bool(np.any(sum_bad)),
        min_diagonal=float(diag.min()),
        max_offdiagonal=float(max_off.max()),
        min_rowsum=float(rowsum.min()),
        violating_nodes=listed(bad),
        n_violations=int(np.count_nonzero(bad)),
        sign_violating_nodes=listed(sign_bad),
        n_sign_violations=int(np.count_nonzero(sign_bad)),
    )


@lru_cache(maxsize=16)
def nested_dissection(m: int, dim: int, leaf: int = 2) -> np.ndarray:
    """Geometric nested-dissection ordering of an ``m**dim`` box of unknowns.

    The box is split recursively across its longest axis by a one-node-thick
    plane, which separates the two halves because the stencils only couple
    nearest neighbours.  Returns a permutation of the lex indices.
    """
    idx = np.arange(m**dim).reshape((m,) * dim)
    out = []

    def rec(block):
        sh = block.shape
        if block.size == 0:
            return
        if max(sh) <= leaf:
            out.append(block.ravel())
            return
        ax = int(np.argmax(sh))
        mid = sh[ax] // 2
        rec(np.take(block, range(0, mid), axis=ax))
        rec(np.take(block, range(mid + 1, sh[ax]), axis=ax))
        out.append(np.take(block, [mid], axis=ax).ravel())

    rec(idx)
    perm = np.concatenate(out)
    perm.setflags(write=False)
    return perm


def _direct(system: SparseSystem):
    """Sparse LU with a nested-dissection ordering, falling back to SuperLU's
    own partial pivoting when the unpivoted factorization is inaccurate."""
    A, b = system.matrix, system.rhs
    perm = nested_dissection(system.grid.n1 - 1, system.grid.dim)
    try:
        Ap = A[perm][:, perm].tocsc()
        lu = spla.splu(Ap, permc_spec="NATURAL", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
        x = np.empty_like(b)
        x[perm] = lu.solve(b[perm])
        if np.all(np.isfinite(x)) and _rel_residual(A, x, b) <= 1e-11:
            return x
    except RuntimeError:
        pass
    try:
        lu = spla.splu(A.tocsc())
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from None
    return lu.solve(b)


@dataclass(frozen=True)
class SolveConfig:
    method: str = "direct"
    rel_tol: float = 1e-12
    max_iters: int = 2000
    preconditioner: str = "none"
    restart: int = 50

    def __post_init__(self):
        if self.method not in ("direct", "bicgstab", "gmres"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (0 < self.rel_tol <= 1e-4):
            raise ValueError("rel_tol must lie in (0, 1e-4]")
        if self.preconditioner not in ("none", "ilu"):
            raise ValueError("preconditioner must be 'none' or 'ilu'")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


@dataclass
class SolveStats:
    method: str
    iterations: int
    residual: float
    wall_s: float
    residual_history: list = field(default_factory=list)


def _rel_residual(A, x, b):
    r = np.abs(A @ x - b).max()
    nb = np.abs(b).max()
    return r / nb if nb > 0 else r


def solve(system: SparseSystem, cfg: SolveConfig = SolveConfig()):
    """Solve the system; returns ``(interior_field, SolveStats)``.

    The interior field has the grid's interior shape.
    """
    A, b = system.matrix, system.rhs
    t0 = time.perf_counter()
    if cfg.method == "direct":
        x = _direct(system)
        if not np.all(np.isfinite(x)):
            raise SingularMatrixError("direct solve produced non-finite values")
        res = _rel_residual(A, x, b)
        if res > 1e-10:
            raise SolverError(f"direct solve residual {res:.3e} exceeds 1e-10")
        stats = SolveStats("direct", 1, float(res), time.perf_counter() - t0)
    else:
        M = None
        if cfg.preconditioner == "ilu":
            try:
                ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=10)
            except RuntimeError as exc:
                raise SingularMatrixError(str(exc)) from None
            M = spla.LinearOperator(A.shape, ilu.solve)
        history = []

        def record(xk):
            history.append(float(_rel_residual(A, xk, b)))

        if cfg.method == "bicgstab":
            x, info = spla.bicgstab(A, b, rtol=cfg.rel_tol, maxiter=cfg.max_iters, M=M, callback=record)
        else:
            x, info = spla.gmres(A, b, rtol=cfg.rel_tol, restart=cfg.restart, maxiter=cfg.max_iters, M=M,
                                 callback=record, callback_type="x")
        res = _rel_residual(A, x, b)
        if info != 0 or not np.isfinite(res):
            raise DivergenceError(f"{cfg.method} did not converge (info={info}, residual={res:.3e})", history)
        stats = SolveStats(cfg.method, len(history), float(res), time.perf_counter() - t0, history)
    return x.reshape(system.grid.interior_shape[::-1]).transpose(), stats


def embed(interior: np.ndarray, system_or_boundary) -> np.ndarray:
    """Full-grid field: boundary from the system's Dirichlet data, interior given."""
    if isinstance(system_or_boundary, SparseSystem):
        full = system_or_boundary.boundary.copy()
    else:
        full = np.array(system_or_boundary, dtype=float)
    full[(slice(1, -1),) * full.ndim] = interior
    return full


def export_matrix_market(system: SparseSystem, path) -> None:
    """Write the matrix in Matrix Market coordinate format."""
    scipy.io.mmwrite(str(path), system.matrix.tocoo(), field="real", symmetry="general")
