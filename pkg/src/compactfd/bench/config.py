"""User problems from JSON configuration files.

A configuration names the kind, the domain, the coefficients as expression
strings and, optionally, an exact solution::

    {
      "dim": 2,
      "kind": "linear-steady",
      "domain": {"l1": 0, "l2": 1},
      "coefficients": {"kappa": "1", "alpha": "0", "beta": "0", "lambda": "0"},
      "exact_u": "sin(pi*x)*sin(pi*y)",
      "h": [0.125, 0.0625]
    }

Without ``exact_u`` the keys ``source``, ``boundary`` and (unsteady)
``initial`` are required.  With it, missing ones are manufactured: g and u⁰
are the exact solution, and φ is obtained by differencing the expressions
numerically (see :func:`numeric_source`).  Nonlinear kinds must give
``kappa_u``, the partial of κ with respect to u.

Optional blocks: ``scheme`` (``{"name": "bdf3", "tau": "ratio:1"}``),
``setting`` (operator names and ``tie_break``), ``solver``
(``"direct"``, ``"bicgstab:1e-10"``, ``"gmres:1e-10"``), ``picard``
(``{"iterations": 40}``) and ``t_end``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np

from ..coefficients import KINDS, ProblemSpec
from ..errors import ConfigError, ExprError
from ..expr import free_variables, parse, evaluate
from ..fd_ops import OperatorSetting, get_operator
from ..nonlinear import FixedPointConfig
from ..system import SolveConfig
from ..timestep import IntegratorPlan, TauRule

__all__ = [
    "UserProblem",
    "load_config",
    "parse_config",
    "parse_tau",
    "parse_solver",
    "parse_h_list",
    "expr_evaluator",
    "numeric_source",
]

_COEFF_KEYS = {"kappa", "alpha", "beta", "gamma", "lambda"}
_TOP_KEYS = {"dim", "kind", "domain", "coefficients", "kappa_u", "exact_u", "source", "boundary",
             "initial", "scheme", "setting", "solver", "picard", "h", "t_end", "name"}


@dataclass(frozen=True)
class UserProblem:
    problem: ProblemSpec
    hs: tuple
    plan: Optional[IntegratorPlan]
    solver: SolveConfig
    fixed_point: Optional[FixedPointConfig]


def expr_evaluator(source: str, allowed: frozenset, what: str):
    """Evaluator ``env -> array`` for an expression string."""
    try:
        tree = parse(source)
    except ExprError as exc:
        raise ConfigError(f"{what}: {exc}") from exc
    extra = free_variables(tree) - allowed
    if extra:
        raise ConfigError(f"{what} uses {sorted(extra)}, allowed here: {sorted(allowed)}")
    used = free_variables(tree)

    def ev(env):
        out = evaluate(tree, {k: env[k] for k in used})
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(env["x"]))

    ev.tree = tree
    if not used:
        ev.constant = float(evaluate(tree, {}))
    return ev


def _fd_weights(name: str):
    v = min(get_operator(name).variants, key=lambda var: var.lopsidedness)
    return [(o, float(w)) for o, w in zip(v.offsets, v.weights)]


def numeric_source(dim, exact, kappa, convection, lam, nonlinear: bool, unsteady: bool, refine: int = 4):
    """φ = u_t − ∇·(κ∇u) + Σ v_i u_{x_i} + λu by numerical differentiation.

    Derivatives use the 6-point accuracy-5 first-derivative and the 6-point
    accuracy-4 second-derivative operators on an auxiliary line of spacing
    ``h / refine``, where ``h`` comes from ``env["h"]``.  This is an
    approximation whose error is far below the discretization error for
    smooth data.
    """
    d1, d2 = _fd_weights("ux5"), _fd_weights("uxx4")
    axes = "xyz"[:dim]

    def shifted(env, name, s):
        out = dict(env)
        out[name] = env[name] + s
        return out

    def line(fn, env, name, weights, delta, order):
        acc = 0.0
        for o, w in weights:
            acc = acc + w * fn(shifted(env, name, o * delta))
        return acc / delta**order

    def phi(env):
        delta = float(env["h"]) / refine
        env = {k: v for k, v in env.items() if k != "h"}
        u = exact(env)
        with_u = dict(env, u=u)

        def kap(e):
            return kappa(dict(e, u=exact(e)) if nonlinear else e)

        out = lam(with_u) * u
        if unsteady:
            out = out + line(exact, env, "t", d1, delta, 1)
        k0 = kappa(with_u)
        for name, v in zip(axes, convection):
            ux = line(exact, env, name, d1, delta, 1)
            uxx = line(exact, env, name, d2, delta, 2)
            kx = line(kap, env, name, d1, delta, 1)
            out = out - (kx * ux + k0 * uxx) + v(with_u) * ux
        return out

    phi.needs_h = True
    return phi


def parse_tau(text: str) -> TauRule:
    """``ratio:R``, ``quad:C`` or ``fixed:V``."""
    try:
        kind, value = text.split(":")
        kind = {"ratio": "ratio", "quad": "quadratic", "quadratic": "quadratic", "fixed": "fixed"}[kind]
        return TauRule(kind, float(Fraction(value)))
    except (ValueError, KeyError, ZeroDivisionError):
        raise ConfigError(f"bad tau rule {text!r}; use ratio:R, quad:C or fixed:V") from None


def parse_solver(text: str) -> SolveConfig:
    """``direct``, ``bicgstab[:tol]`` or ``gmres[:tol]``."""
    name, _, tol = text.partition(":")
    if name not in ("direct", "bicgstab", "gmres"):
        raise ConfigError(f"unknown solver {name!r}")
    try:
        rel_tol = float(tol) if tol else 1e-12
    except ValueError:
        raise ConfigError(f"bad solver tolerance {tol!r}") from None
    precond = "none" if name == "direct" else "ilu"
    return SolveConfig(method=name, rel_tol=rel_tol, preconditioner=precond)


def parse_h_list(spec) -> tuple:
    """Mesh sizes from a list or from ``"2^-k:k1..k2"`` / ``"L/2^k:k1..k2"``."""
    if isinstance(spec, (list, tuple)):
        try:
            return tuple(float(Fraction(str(h))) for h in spec)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"bad h list {spec!r}") from None
    text = str(spec).replace(" ", "")
    if ":" in text:
        head, _, rng = text.partition(":")
        lo, sep, hi = rng.partition("..")
        if head == "2^-k":
            num = Fraction(1)
        elif head.endswith("/2^k"):
            try:
                num = Fraction(head[:-4])
            except ValueError:
                raise ConfigError(f"bad h range {text!r}") from None
        else:
            raise ConfigError(f"bad h range {text!r}; use 2^-k:k1..k2 or L/2^k:k1..k2")
        try:
            k1, k2 = int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"bad h range {text!r}") from None
        if not sep or k2 < k1:
            raise ConfigError(f"bad h range {text!r}")
        return tuple(float(num / 2**k) for k in range(k1, k2 + 1))
    return parse_h_list(text.split(","))


def _setting(block) -> OperatorSetting:
    if block is None:
        return OperatorSetting()
    if not isinstance(block, Mapping):
        raise ConfigError("setting must be an object with operator names")
    unknown = set(block) - {"first", "second", "third", "gradient", "tie_break"}
    if unknown:
        raise ConfigError(f"unknown setting keys {sorted(unknown)}")
    try:
        return OperatorSetting(**block)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"setting: {exc}") from exc


def parse_config(data: Mapping, base_h=None) -> UserProblem:
    """Build a :class:`UserProblem` from already-decoded JSON."""
    if not isinstance(data, Mapping):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    for key in ("dim", "kind", "domain", "coefficients"):
        if key not in data:
            raise ConfigError(f"missing key {key!r}")
    dim, kind = data["dim"], data["kind"]
    if dim not in (2, 3):
        raise ConfigError("dim must be 2 or 3")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}")
    nonlinear, unsteady = kind.startswith("nonlinear"), kind.endswith("unsteady")
    dom = data["domain"]
    try:
        l1, l2 = float(dom["l1"]), float(dom["l2"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("domain needs numeric l1 and l2") from None

    allowed = set("xyz"[:dim])
    if unsteady:
        allowed.add("t")
    known = frozenset(allowed)
    coeff_vars = frozenset(allowed | ({"u"} if nonlinear else set()))

    coeffs = data["coefficients"]
    if not isinstance(coeffs, Mapping):
        raise ConfigError("coefficients must be an object")
    bad = set(coeffs) - _COEFF_KEYS
    if bad:
        raise ConfigError(f"unknown coefficients {sorted(bad)}")
    need = {"kappa", "alpha", "beta", "lambda"} | ({"gamma"} if dim == 3 else set())
    missing = need - set(coeffs)
    if missing:
        raise ConfigError(f"missing coefficients {sorted(missing)}")
    ev = {k: expr_evaluator(str(coeffs[k]), coeff_vars, k) for k in need}

    kappa_u = None
    if nonlinear:
        if "kappa_u" not in data:
            raise ConfigError("nonlinear kinds need kappa_u (the partial of kappa with respect to u)")
        kappa_u = expr_evaluator(str(data["kappa_u"]), coeff_vars, "kappa_u")

    exact = expr_evaluator(str(data["exact_u"]), known, "exact_u") if "exact_u" in data else None
    conv = [ev["alpha"], ev["beta"]] + ([ev["gamma"]] if dim == 3 else [])
    if "source" in data:
        phi = expr_evaluator(str(data["source"]), known, "source")
    elif exact is not None:
        phi = numeric_source(dim, exact, ev["kappa"], conv, ev["lambda"], nonlinear, unsteady)
    else:
        raise ConfigError("give either exact_u or source")
    g = expr_evaluator(str(data["boundary"]), known, "boundary") if "boundary" in data else exact
    if g is None:
        raise ConfigError("give either exact_u or boundary")
    u0 = expr_evaluator(str(data["initial"]), known, "initial") if "initial" in data else exact
    if unsteady and u0 is None:
        raise ConfigError("unsteady kinds need exact_u or initial")

    plan = None
    if unsteady:
        block = data.get("scheme", {})
        if not isinstance(block, Mapping):
            raise ConfigError("scheme must be an object")
        try:
            plan = IntegratorPlan(str(block.get("name", "bdf3")).upper(), parse_tau(block.get("tau", "ratio:1")))
        except ConfigError:
            raise
    t_end = float(data.get("t_end", 1.0))
    if unsteady and not t_end > 0:
        raise ConfigError("t_end must be positive")

    fp = None
    if "picard" in data:
        try:
            fp = FixedPointConfig(int(data["picard"]["iterations"]))
        except (KeyError, TypeError, ValueError):
            raise ConfigError("picard needs an integer 'iterations'") from None

    hs = parse_h_list(data["h"]) if "h" in data else ()
    problem = ProblemSpec(
        dim=dim, kind=kind, l1=l1, l2=l2,
        kappa=ev["kappa"], alpha=ev["alpha"], beta=ev["beta"], lam=ev["lambda"],
        phi=phi, g=g, gamma=ev.get("gamma"), kappa_u=kappa_u, u0=u0, exact=exact,
        setting=_setting(data.get("setting")), t_end=t_end, name=str(data.get("name", "user")),
    )
    return UserProblem(problem, hs, plan, parse_solver(str(data.get("solver", "direct"))), fp)


def load_config(path: Union[str, Path]) -> UserProblem:
    """Read and validate a JSON configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_config(data)
