"""Problem data and the normalized coefficient bundle.

The governing equation

    u_t - ∇·(κ∇u) + α u_x + β u_y (+ γ u_z) + λ u = φ

is divided by -κ to give ``Δu + a u_x + b u_y (+ c u_z) + d u = f`` with

    a = (κ_x - α)/κ,  b = (κ_y - β)/κ,  c = (κ_z - γ)/κ,  d = -λ/κ,  f = -φ/κ.

Time-dependent problems are reduced to that form at each step by folding the
time-difference mass term into ``d`` and the history into ``f``.

Coefficient callables ("evaluators") take a mapping of variable arrays with
keys ``x, y, z, t, u`` (plus the mesh size ``h``) and return an array
broadcastable to the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    BundleMismatchError,
    ConfigError,
    HistoryUnderflowError,
    MissingIterateError,
    NonPositiveKappaError,
)
from .fd_ops import OperatorSetting, derivative_along, get_operator, partials
from .grid import GridSpec

__all__ = [
    "KINDS",
    "INTEGRATORS",
    "ProblemSpec",
    "CoefficientBundle",
    "TimeSliceContext",
    "bundle_steady",
    "bundle_unsteady",
    "const",
    "target_time",
    "KAPPA_MIN",
]

Evaluator = Callable[[Mapping[str, np.ndarray]], np.ndarray]

KINDS = ("linear-steady", "linear-unsteady", "nonlinear-steady", "nonlinear-unsteady")
INTEGRATORS = ("CN", "BDF3", "BDF4")
KAPPA_MIN = 1e-300

# mass coefficient m and history weights w (oldest level first):
#   u_t at the target level ~ (m u_target - Σ w_k u_k) / τ
_MASS = {"CN": Fraction(2), "BDF3": Fraction(11, 6), "BDF4": Fraction(25, 12)}
_HISTORY = {
    "CN": (Fraction(2),),
    "BDF3": (Fraction(2, 6), Fraction(-9, 6), Fraction(18, 6)),
    "BDF4": (Fraction(-3, 12), Fraction(16, 12), Fraction(-36, 12), Fraction(48, 12)),
}
_TARGET_OFFSET = {"CN": Fraction(1, 2), "BDF3": Fraction(3), "BDF4": Fraction(4)}


def const(value: float) -> Evaluator:
    """Evaluator returning a constant."""
    def ev(env):
        return np.full(np.shape(env["x"]), float(value))
    ev.constant = float(value)
    return ev


@dataclass(frozen=True)
class ProblemSpec:
    """A Dirichlet problem on ``(l1, l2)**dim``.

    ``kappa_grad`` optionally supplies the explicit spatial partials of κ
    (holding u fixed).  When absent they are approximated by differencing
    the κ evaluator at shifted points with the setting's gradient operator.
    ``analytic_bundle`` (analytic derivative mode, linear kinds only) maps an
    environment to a dict with every key required by the stencil.  For
    linear-unsteady problems it must also carry ``r = 1/κ`` and its partials;
    the time-difference mass term is then exact and only the history term,
    which involves the numerical solution, is differenced.
    """

    dim: int
    kind: str
    l1: float
    l2: float
    kappa: Evaluator
    alpha: Evaluator
    beta: Evaluator
    lam: Evaluator
    phi: Evaluator
    g: Evaluator
    gamma: Optional[Evaluator] = None
    kappa_u: Optional[Evaluator] = None
    kappa_grad: Optional[Sequence[Evaluator]] = None
    u0: Optional[Evaluator] = None
    exact: Optional[Evaluator] = None
    derivative_mode: str = "fd"
    setting: OperatorSetting = field(default_factory=OperatorSetting)
    analytic_bundle: Optional[Callable[[Mapping[str, np.ndarray]], dict]] = None
    t_end: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.dim not in (2, 3):
            raise ConfigError("dim must be 2 or 3")
        if self.dim == 3 and self.gamma is None:
            raise ConfigError("3D problems need gamma")
        if self.nonlinear and self.kappa_u is None:
            raise ConfigError("nonlinear problems need kappa_u")
        if self.derivative_mode not in ("fd", "analytic"):
            raise ConfigError("derivative_mode must be 'fd' or 'analytic'")
        if self.derivative_mode == "analytic":
            if self.analytic_bundle is None:
                raise ConfigError("analytic derivative mode needs analytic_bundle")
            if self.nonlinear:
                raise ConfigError("analytic derivative mode is only available for linear problems")

    @property
    def nonlinear(self) -> bool:
        return self.kind.startswith("nonlinear")

    @property
    def unsteady(self) -> bool:
        return self.kind.endswith("unsteady")

    @property
    def convection(self) -> tuple:
        return (self.alpha, self.beta, self.gamma)[: self.dim]

    def initial(self, env):
        return (self.u0 or self.g)(env)


@dataclass
class CoefficientBundle:
    """Interior-node values of a, b, (c,) d, f and their partials up to order 2.

    Keys look like ``'a'``, ``'a_x'``, ``'d_yy'``, ``'f_xz'``.  Arrays have the
    grid's interior shape.
    """

    dim: int
    h: float
    values: dict
    t: Optional[float] = None

    def __getitem__(self, key):
        return self.values[key]

    def __contains__(self, key):
        return key in self.values

    def keys(self):
        return self.values.keys()

    @property
    def interior_shape(self):
        return next(iter(self.values.values())).shape

    def check_grid(self, grid: GridSpec):
        if grid.dim != self.dim or self.interior_shape != grid.interior_shape or grid.h != self.h:
            raise BundleMismatchError(
                f"bundle (dim={self.dim}, shape={self.interior_shape}, h={self.h}) does not match grid "
                f"(dim={grid.dim}, shape={grid.interior_shape}, h={grid.h})"
            )


@dataclass(frozen=True)
class TimeSliceContext:
    """``history`` holds full-grid fields oldest first: uⁿ, uⁿ⁺¹, ...."""

    integrator: str
    tau: float
    n: int
    history: tuple

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}")
        need = len(_HISTORY[self.integrator])
        if len(self.history) < need:
            raise HistoryUnderflowError(
                f"{self.integrator} needs {need} history levels, got {len(self.history)}"
            )

    @property
    def depth(self) -> int:
        return len(_HISTORY[self.integrator])

    @property
    def target_time(self) -> float:
        return target_time(self.integrator, self.n, self.tau)

    @property
    def mass(self) -> float:
        return float(_MASS[self.integrator])

    def history_sum(self):
        """Σ w_k u_k over the history levels actually needed (the newest ones)."""
        levels = self.history[-self.depth:]
        out = 0.0
        for w, u in zip(_HISTORY[self.integrator], levels):
            out = out + float(w) * np.asarray(u, dtype=float)
        return out


def target_time(integrator: str, n: int, tau: float) -> float:
    """Time at which the steady-form equation of one step is posed."""
    return (n + float(_TARGET_OFFSET[integrator])) * tau


def _env(grid: GridSpec, t, u=None):
    mesh = grid.mesh()
    env = dict(zip("xyz", mesh))
    env["t"] = 0.0 if t is None else float(t)
    env["h"] = grid.h  # mesh size, for sources built by numerical differentiation
    if u is not None:
        env["u"] = u
    return env


def _full(value, grid):
    return np.broadcast_to(np.asarray(value, dtype=float), grid.shape)


def _explicit_kappa_grad(spec: ProblemSpec, grid: GridSpec, env) -> list:
    """Explicit partials of κ (u held fixed at each node)."""
    if spec.kappa_grad is not None:
        return [_full(ev(env), grid) for ev in spec.kappa_grad[: spec.dim]]
    if getattr(spec.kappa, "constant", None) is not None:
        return [np.zeros(grid.shape)] * spec.dim
    # difference the evaluator at shifted points; off-grid samples are fine
    op = get_operator(spec.setting.gradient)
    v = min(op.variants, key=lambda var: var.lopsidedness)
    h = grid.h
    out = []
    for axis, name in enumerate("xyz"[: spec.dim]):
        acc = 0.0
        for o, w in zip(v.offsets, v.weights):
            shifted = dict(env)
            shifted[name] = env[name] + o * h
            acc = acc + float(w) * _full(spec.kappa(shifted), grid)
        out.append(acc / h)
    return out


def _check_kappa(kappa):
    bad = ~(kappa >= KAPPA_MIN)
    if np.any(bad):
        raise NonPositiveKappaError(
            f"kappa must be positive; min value {np.nanmin(kappa):.3e} at {np.count_nonzero(bad)} node(s)"
        )


def _composite_fields(spec: ProblemSpec, grid: GridSpec, env, u_iterate):
    """Full-grid a, b, (c,) plus κ for the given environment."""
    kappa = _full(spec.kappa(env), grid)
    _check_kappa(kappa)
    kgrad = _explicit_kappa_grad(spec, grid, env)
    if spec.nonlinear:
        ku = _full(spec.kappa_u(env), grid)
        gop = spec.setting.gradient
        for axis in range(spec.dim):
            kgrad[axis] = kgrad[axis] + ku * derivative_along(u_iterate, gop, axis, grid.h, spec.setting.tie_break)
    conv = [_full(ev(env), grid) for ev in spec.convection]
    fields = {name: (kgrad[k] - conv[k]) / kappa for k, name in enumerate("abc"[: spec.dim])}
    return fields, kappa


_SUFFIXES = {
    2: ("x", "y", "xx", "xy", "yy"),
    3: ("x", "y", "z", "xx", "xy", "xz", "yy", "yz", "zz"),
}


def _finish(spec, grid, fields, t) -> CoefficientBundle:
    inner = (slice(1, -1),) * grid.dim
    values = {}
    for name, arr in fields.items():
        values[name] = np.ascontiguousarray(arr[inner])
        if np.all(arr == arr.flat[0]):
            # exactly constant: zero partials, and no stencil-width demand on tiny grids
            for suffix in _SUFFIXES[grid.dim]:
                values[f"{name}_{suffix}"] = np.zeros(grid.interior_shape)
            continue
        for suffix, parr in partials(arr, grid.h, spec.setting, 2).items():
            values[f"{name}_{suffix}"] = np.ascontiguousarray(parr[inner])
    return CoefficientBundle(grid.dim, grid.h, values, t)


def _require_iterate(spec, grid, u_iterate):
    if not spec.nonlinear:
        return None
    if u_iterate is None:
        raise MissingIterateError("nonlinear problems need the current iterate on the full grid")
    u = np.asarray(u_iterate, dtype=float)
    if u.shape != grid.shape:
        raise BundleMismatchError(f"iterate shape {u.shape} does not match grid {grid.shape}")
    return u


def _analytic_values(spec, grid, t) -> dict:
    inner_env = dict(zip("xyz", grid.interior_mesh()))
    inner_env["t"] = 0.0 if t is None else float(t)
    kappa = np.asarray(spec.kappa(inner_env), dtype=float)
    _check_kappa(np.broadcast_to(kappa, grid.interior_shape))
    raw = spec.analytic_bundle(inner_env)
    return {k: np.ascontiguousarray(np.broadcast_to(np.asarray(v, dtype=float), grid.interior_shape))
            for k, v in raw.items()}


def _analytic_unsteady(spec, grid, ctx) -> CoefficientBundle:
    t = ctx.target_time
    values = _analytic_values(spec, grid, t)
    if "r" not in values:
        raise BundleMismatchError("unsteady analytic bundles need r = 1/kappa and its partials")
    scale = ctx.mass / ctx.tau
    for key in [k for k in values if k == "d" or k.startswith("d_")]:
        values[key] = values[key] - scale * values["r" + key[1:]]
    # the history enters only through f and is the one part differenced
    kappa = _full(spec.kappa(_env(grid, t)), grid)
    _check_kappa(kappa)
    hist = -ctx.history_sum() / (ctx.tau * kappa)
    inner = (slice(1, -1),) * grid.dim
    values["f"] = values["f"] + hist[inner]
    for suffix, parr in partials(hist, grid.h, spec.setting, 2).items():
        key = f"f_{suffix}"
        if key in values:
            values[key] = values[key] + parr[inner]
    return CoefficientBundle(grid.dim, grid.h, values, t)


def bundle_steady(spec: ProblemSpec, grid: GridSpec, u_iterate=None, t: float | None = None) -> CoefficientBundle:
    """Normalized coefficients for the steady problem (frozen at ``u_iterate``
    for nonlinear kinds)."""
    u = _require_iterate(spec, grid, u_iterate)
    if spec.derivative_mode == "analytic":
        return CoefficientBundle(grid.dim, grid.h, _analytic_values(spec, grid, t), t)
    env = _env(grid, t, u)
    fields, kappa = _composite_fields(spec, grid, env, u)
    fields["d"] = -_full(spec.lam(env), grid) / kappa
    fields["f"] = -_full(spec.phi(env), grid) / kappa
    return _finish(spec, grid, fields, t)


def bundle_unsteady(spec: ProblemSpec, grid: GridSpec, ctx: TimeSliceContext, u_iterate=None) -> CoefficientBundle:
    """Coefficients of the steady-form equation solved at one implicit step.

    The target level is ``n + 1/2`` (CN), ``n + 3`` (BDF3) or ``n + 4``
    (BDF4).  History fields are converged solutions; only the target level is
    frozen at ``u_iterate`` for nonlinear kinds.
    """
    u = _require_iterate(spec, grid, u_iterate)
    for lvl in ctx.history:
        if np.shape(lvl) != grid.shape:
            raise BundleMismatchError("history field does not match the grid")
    t = ctx.target_time
    if spec.derivative_mode == "analytic":
        return _analytic_unsteady(spec, grid, ctx)
    env = _env(grid, t, u)
    fields, kappa = _composite_fields(spec, grid, env, u)
    inv = 1.0 / (ctx.tau * kappa)
    fields["d"] = -_full(spec.lam(env), grid) / kappa - ctx.mass * inv
    fields["f"] = -_full(spec.phi(env), grid) / kappa - ctx.history_sum() * inv
    return _finish(spec, grid, fields, t)
