"""The eight built-in manufactured-solution problems.

Closed forms are written with sympy.  The source φ, the boundary data and
the initial data come from substituting the exact solution into

    u_t - ∇·(κ∇u) + α u_x + β u_y (+ γ u_z) + λ u = φ.

For the nonlinear problems κ, α, ... are functions of u and are composed
with the exact solution when φ is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Mapping, Optional, Union

import numpy as np
import sympy as sp

from ..coefficients import ProblemSpec
from ..errors import ConfigError
from ..fd_ops import OperatorSetting
from ..timestep import IntegratorPlan, TauRule

__all__ = ["ExampleDef", "EXAMPLES", "get_example", "build_problem", "manufacture_source", "lambdify_env",
           "symbols"]

x, y, z, t, u = sp.symbols("x y z t u", real=True)
symbols = {"x": x, "y": y, "z": z, "t": t, "u": u}
_ARGS = (x, y, z, t, u)


def lambdify_env(expr, cse: bool = False):
    """Evaluator ``env -> array`` for a sympy expression in x, y, z, t, u."""
    fn = sp.lambdify(_ARGS, expr, modules="numpy", cse=cse)

    def ev(env):
        X = env["x"]
        out = fn(X, env["y"], env.get("z", 0.0), env.get("t", 0.0), env.get("u", 0.0))
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(X, out).shape)

    ev.expr = expr
    if expr.is_number:
        ev.constant = float(expr)
    return ev


@dataclass(frozen=True)
class ExampleDef:
    id: int
    dim: int
    kind: str
    l1: float
    l2: float
    exact: sp.Expr
    kappa: sp.Expr
    alpha: sp.Expr
    beta: sp.Expr
    lam: sp.Expr
    gamma: Optional[sp.Expr] = None
    derivative_mode: str = "fd"
    settings: dict = field(default_factory=dict)
    default_setting: Optional[int] = None
    plan: Optional[IntegratorPlan] = None
    description: str = ""
    out_of_scope: tuple = ()

    @property
    def nonlinear(self):
        return self.kind.startswith("nonlinear")

    @property
    def coords(self):
        return (x, y, z)[: self.dim]

    def coefficient(self, name):
        return getattr(self, name)

    def composed(self, expr):
        """Coefficient with the exact solution substituted for u."""
        return expr.subs(u, self.exact) if self.nonlinear else expr

    def source(self) -> sp.Expr:
        U = self.exact
        K = self.composed(self.kappa)
        conv = [self.composed(c) for c in (self.alpha, self.beta, self.gamma)[: self.dim]]
        phi = sp.diff(U, t) + self.composed(self.lam) * U
        for v, c in zip(self.coords, conv):
            phi += -sp.diff(K * sp.diff(U, v), v) + c * sp.diff(U, v)
        return phi


def _s(first, second, gradient="ux4", third="uxxx2"):
    return OperatorSetting(first=first, second=second, third=third, gradient=gradient)


_NONLIN_SETTINGS = {
    1: _s("ux2", "uxx2", gradient="ux3"),
    2: _s("ux3", "uxx43", gradient="ux4"),
    3: _s("ux4", "uxx4", gradient="ux5"),
}

EXAMPLES = {
    1: ExampleDef(
        1, 2, "linear-steady", 0.0, 1.0,
        exact=sp.exp(x - 2 * y) * sp.cos(8 * x + 4 * y),
        kappa=1 / (3 + sp.sin(4 * x) * sp.cos(4 * y)),
        alpha=sp.cos(x) * sp.cos(y), beta=sp.sin(x) * sp.sin(y), lam=sp.exp(x + 2 * y),
        derivative_mode="analytic",
        description="2D linear steady, closed-form coefficient derivatives",
    ),
    2: ExampleDef(
        2, 2, "linear-unsteady", 0.0, 1.0,
        exact=sp.sin(100 * x) * sp.sin(100 * y) * sp.exp(t),
        kappa=sp.exp(2 * x - y + t),
        alpha=sp.cos(x) * sp.cos(y) * sp.sin(t), beta=sp.sin(x) * sp.sin(y) * sp.cos(t),
        lam=sp.exp(x - y) * sp.sin(t - x),
        derivative_mode="analytic",
        settings={1: _s("ux2", "uxx2")}, default_setting=1,
        plan=IntegratorPlan("BDF3", TauRule("ratio", 1.0)),
        description="2D linear unsteady, high-frequency solution",
    ),
    3: ExampleDef(
        3, 2, "nonlinear-steady", 0.0, 1.0,
        exact=sp.sin(x) * sp.sin(y),
        kappa=sp.Rational(1, 10**4) * sp.exp(u), alpha=u**2, beta=u**3, lam=sp.exp(-u),
        settings=_NONLIN_SETTINGS, default_setting=2,
        description="2D nonlinear steady, small diffusion",
    ),
    4: ExampleDef(
        4, 2, "nonlinear-unsteady", 0.0, 1.0,
        exact=sp.sin(2 * x) * sp.sin(2 * y) * sp.exp(t),
        kappa=2 + sp.sin(u), alpha=sp.cos(u), beta=sp.sin(u), lam=sp.sin(3 * u),
        settings={1: _s("ux4", "uxx43", gradient="ux4", third="uxxx2"),
                  2: _s("ux5", "uxx4", gradient="ux5", third="uxxx3")},
        default_setting=1,
        plan=IntegratorPlan("BDF4", TauRule("ratio", 1.0)),
        description="2D nonlinear unsteady",
        out_of_scope=("BDF3/BDF4 columns computed with the unsteady-specific fourth-order stencil "
                      "(coefficients not available)",),
    ),
    5: ExampleDef(
        5, 3, "linear-steady", -1.0, 1.0,
        exact=sp.exp(x**2 - y**2) * sp.sin(z),
        kappa=sp.exp(x * y * z),
        alpha=sp.sin(x) * sp.sin(y) * sp.sin(z), beta=sp.cos(x) * sp.cos(y) * sp.cos(z),
        gamma=x**2 + 2 * y**2 + 4 * z**2, lam=x**3 + 3 * y**3 + 6 * z**3,
        derivative_mode="analytic",
        description="3D linear steady, closed-form coefficient derivatives",
    ),
    6: ExampleDef(
        6, 3, "linear-unsteady", 0.0, 1.0,
        exact=sp.cos(2 * (x + y - z)) * sp.exp(t),
        kappa=2 + sp.sin(2 * x - y - z + t),
        alpha=sp.exp(x + y + z - t), beta=sp.exp(x - y + z + 2 * t),
        gamma=sp.sin(x + y + z - 3 * t), lam=sp.cos(x + y + z + 4 * t),
        derivative_mode="analytic",
        settings={1: _s("ux2", "uxx2"), 2: _s("ux3", "uxx2"), 3: _s("ux4", "uxx43"), 4: _s("ux5", "uxx4")},
        default_setting=3,
        plan=IntegratorPlan("BDF3", TauRule("ratio", 1.0)),
        description="3D linear unsteady",
    ),
    7: ExampleDef(
        7, 3, "nonlinear-steady", -1.0, 1.0,
        exact=sp.cos(x + y - z),
        kappa=sp.exp(u), alpha=sp.sin(u), beta=sp.cos(u), gamma=u**2, lam=u**3,
        settings=_NONLIN_SETTINGS, default_setting=2,
        description="3D nonlinear steady",
    ),
    8: ExampleDef(
        8, 3, "nonlinear-unsteady", 0.0, 1.0,
        exact=sp.cos(x + y - z) * sp.exp(-t),
        kappa=sp.exp(2 * u), alpha=sp.cos(u), beta=sp.sin(u), gamma=u**2, lam=3 + sp.cos(u),
        settings={1: _s("ux3", "uxx43", gradient="ux4", third="uxxx2")}, default_setting=1,
        plan=IntegratorPlan("BDF4", TauRule("ratio", 1.0)),
        description="3D nonlinear unsteady",
        out_of_scope=("right block computed with the unsteady-specific fourth-order 3D stencil "
                      "(coefficients not available)",),
    ),
}


def get_example(example_id: int) -> ExampleDef:
    try:
        return EXAMPLES[int(example_id)]
    except (KeyError, ValueError):
        raise ConfigError(f"unknown example {example_id!r}; choose 1..8") from None


def _analytic_exprs(ex: ExampleDef) -> dict:
    """a, b, (c,) d, f and all their partials of order <= 2, as sympy.

    Unsteady problems also get ``r = 1/κ`` for the exact mass term.
    """
    K = ex.kappa
    conv = (ex.alpha, ex.beta, ex.gamma)[: ex.dim]
    base = {}
    for name, v, c in zip("abc", ex.coords, conv):
        base[name] = (sp.diff(K, v) - c) / K
    base["d"] = -ex.lam / K
    base["f"] = -ex.source() / K
    if ex.kind == "linear-unsteady":
        base["r"] = 1 / K
    out = {}
    names = [v.name for v in ex.coords]
    for key, e in base.items():
        out[key] = e
        for i, vi in enumerate(names):
            di = sp.diff(e, symbols[vi])
            out[f"{key}_{vi}"] = di
            for vj in names[i:]:
                out[f"{key}_{vi}{vj}"] = sp.diff(di, symbols[vj])
    return out


@lru_cache(maxsize=None)
def _analytic_bundle(example_id: int):
    ex = get_example(example_id)
    exprs = _analytic_exprs(ex)
    keys = list(exprs)
    fn = sp.lambdify(_ARGS, [exprs[k] for k in keys], modules="numpy", cse=True)

    def bundle(env):
        X = env["x"]
        vals = fn(X, env["y"], env.get("z", 0.0), env.get("t", 0.0), 0.0)
        return {k: np.broadcast_to(np.asarray(v, dtype=float), np.shape(X)) for k, v in zip(keys, vals)}

    return bundle


@lru_cache(maxsize=None)
def _evaluators(example_id: int):
    ex = get_example(example_id)
    ev = {
        "kappa": lambdify_env(ex.kappa),
        "alpha": lambdify_env(ex.alpha),
        "beta": lambdify_env(ex.beta),
        "lam": lambdify_env(ex.lam),
        "phi": lambdify_env(ex.source(), cse=True),
        "g": lambdify_env(ex.exact),
        "gamma": lambdify_env(ex.gamma) if ex.gamma is not None else None,
    }
    if ex.nonlinear:
        ev["kappa_u"] = lambdify_env(sp.diff(ex.kappa, u))
    ev["kappa_grad"] = tuple(lambdify_env(sp.diff(ex.kappa, v)) for v in ex.coords)
    return ev


def build_problem(example_id: int, setting=None, **overrides) -> ProblemSpec:
    """ProblemSpec for a built-in example.

    ``setting`` is a table setting number or an :class:`OperatorSetting`.
    """
    ex = get_example(example_id)
    if isinstance(setting, OperatorSetting):
        op_setting = setting
    elif ex.settings:
        key = ex.default_setting if setting is None else int(setting)
        if key not in ex.settings:
            raise ConfigError(f"example {ex.id} has settings {sorted(ex.settings)}, not {setting}")
        op_setting = ex.settings[key]
    else:
        if setting is not None:
            raise ConfigError(f"example {ex.id} uses closed-form derivatives and has no settings")
        op_setting = OperatorSetting()
    ev = _evaluators(ex.id)
    spec = ProblemSpec(
        dim=ex.dim, kind=ex.kind, l1=ex.l1, l2=ex.l2,
        kappa=ev["kappa"], alpha=ev["alpha"], beta=ev["beta"], lam=ev["lam"], phi=ev["phi"],
        g=ev["g"], gamma=ev["gamma"], kappa_u=ev.get("kappa_u"), kappa_grad=ev["kappa_grad"],
        u0=ev["g"], exact=ev["g"], derivative_mode=ex.derivative_mode, setting=op_setting,
        analytic_bundle=_analytic_bundle(ex.id) if ex.derivative_mode == "analytic" else None,
        t_end=1.0, name=f"example-{ex.id}",
    )
    if "tie_break" in overrides:
        spec = replace(spec, setting=replace(spec.setting, tie_break=overrides.pop("tie_break")))
    return replace(spec, **overrides) if overrides else spec


def manufacture_source(target: Union[int, Mapping]) -> dict:
    """Evaluators ``phi``, ``g`` and ``u0`` closing a problem around its exact solution.

    ``target`` is a built-in example number (closed forms) or a decoded
    configuration mapping with ``exact_u`` (φ differenced numerically unless
    the configuration gives ``source``; its evaluator then needs ``h`` in the
    environment).
    """
    if isinstance(target, Mapping):
        from .config import parse_config

        if "exact_u" not in target:
            raise ConfigError("manufacturing a source needs exact_u")
        problem = parse_config(target).problem
        return {"phi": problem.phi, "g": problem.g, "u0": problem.u0}
    ev = _evaluators(get_example(target).id)
    return {"phi": ev["phi"], "g": ev["g"], "u0": ev["g"]}
