"""Fourth-order compact 9-point stencil for

    Δu + a u_x + b u_y + d u = f

with variable a, b, d, f.  The discrete equation at node (i, j) is
``(1/h²) Σ C[r, l] u[i+r, j+l] = F``.  All functions are vectorised: every
input value may be a scalar or an array of node values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import MissingPartialError

__all__ = ["Stencil2D", "REQUIRED_KEYS_2D", "coefficients_2d", "rhs_2d", "stencil_at", "leading_truncation_2d", "U_PARTIALS_2D", "U_SIXTH_2D"]

REQUIRED_KEYS_2D = tuple(
    f"{v}{s}" for v in "abdf" for s in ("", "_x", "_y", "_xx", "_yy")
)


@dataclass(frozen=True)
class Stencil2D:
    """``c[r + 1, l + 1]`` holds C_{r,l}; trailing axes (if any) run over nodes."""

    c: np.ndarray
    rhs: np.ndarray
    h: float

    def coef(self, r: int, l: int):
        return self.c[r + 1, l + 1]

    def row_sum(self):
        return self.c.sum(axis=(0, 1))


def _get(bundle: Mapping, key: str):
    try:
        return bundle[key]
    except KeyError:
        raise MissingPartialError(key) from None


def _float_q(n, m=1):
    return n / m


def coefficients_2d(g: Mapping, h, q=_float_q) -> dict:
    """The nine C_{r,l} as a dict keyed by ``(r, l)``.

    Works on any number type: ``q(n, m)`` builds the rational n/m in that
    type, so Fractions or sympy symbols give exact results.
    """
    a, ax, ay, axx, ayy = (g[k] for k in ("a", "a_x", "a_y", "a_xx", "a_yy"))
    b, bx, by, bxx, byy = (g[k] for k in ("b", "b_x", "b_y", "b_xx", "b_yy"))
    d, dx, dy, dxx, dyy = (g[k] for k in ("d", "d_x", "d_y", "d_xx", "d_yy"))

    lap_a, lap_b, lap_d = axx + ayy, bxx + byy, dxx + dyy
    h2, h3, h4 = h * h, h**3, h**4
    # shared subexpressions
    mix = a * b + ay + bx
    qa = a * a + a * b + d + 2 * ax + ay + bx
    ta = a * (ax + d) + b * ay + 2 * dx + lap_a
    tb = a * bx + b * (by + d) + 2 * dy + lap_b
    bdy = b * dy
    c6, c3, c23 = q(1, 6), q(1, 3), q(2, 3)
    c12, c24 = q(1, 12), q(1, 24)

    return {
        (-1, -1): c6 - (a + b) * h * c12,
        (-1, 0): c23 - a * h * c3 + qa * h2 * c12 - ta * h3 * c24,
        (-1, 1): c6 - (a - b) * h * c12 - mix * h2 * c12,
        (0, -1): (c23 - b * h * c3 + (b * b + a * b + ay + bx + 2 * by + d) * h2 * c12
                  - tb * h3 * c24 + bdy * h4 * c12),
        (0, 0): (q(-10, 3) - (a * a + a * b + b * b - 4 * d + 2 * ax + ay + bx + 2 * by) * h2 * c6
                 + (a * dx + lap_d) * h4 * c12),
        (0, 1): c23 + b * h * c3 + (a * b + b * b + d + ay + bx + 2 * by) * h2 * c12 + tb * h3 * c24,
        (1, -1): c6 + (a - b) * h * c12 - mix * h2 * c12 - bdy * h4 * c12,
        (1, 0): c23 + a * h * c3 + qa * h2 * c12 + ta * h3 * c24 + bdy * h4 * c12,
        (1, 1): c6 + (a + b) * h * c12,
    }


def rhs_2d(g: Mapping, h, q=_float_q):
    """F = f + (h²/12)(a f_x + b f_y + Δf)."""
    return g["f"] + h * h * q(1, 12) * (g["a"] * g["f_x"] + g["b"] * g["f_y"] + g["f_xx"] + g["f_yy"])


def stencil_at(bundle: Mapping, h: float) -> Stencil2D:
    """Evaluate the nine coefficients and the right-hand side."""
    g = {k: np.asarray(_get(bundle, k), dtype=float) for k in REQUIRED_KEYS_2D}
    shape = np.broadcast(*g.values()).shape
    coefs = coefficients_2d(g, float(h))
    c = np.empty((3, 3) + shape)
    for (r, l), v in coefs.items():
        c[r + 1, l + 1] = v
    rhs = np.broadcast_to(rhs_2d(g, float(h)), shape).copy()
    return Stencil2D(c, rhs, float(h))


U_PARTIALS_2D = ("yyy", "yyyy", "yyyyy", "xy", "xyyy", "xyyyy", "xxyy", "xxyyy",
                 "xxx", "xxxy", "xxxyy", "xxxx", "xxxxy", "xxxxx")
U_SIXTH_2D = ("xxxxxx", "xxxxyy", "xxyyyy", "yyyyyy")


def leading_truncation_2d(u: Mapping, bundle: Mapping, h: float, include_sixth: bool = True):
    """Per-node leading term of ``L_h u - F`` (the h⁴ coefficient times h⁴).

    ``u`` maps derivative suffixes (``'xxxy'`` etc.) to values of the exact
    solution's partials; ``bundle`` supplies a, b, d and their partials.
    The caller takes the max (signed or absolute) over the domain.

    The h⁴ coefficient contains the pure sixth-order group
    ``(u_xxxxxx + 5 u_xxxxyy + 5 u_xxyyyy + u_yyyyyy) / 360`` in addition to
    the convection/reaction terms; ``include_sixth=False`` drops it and
    returns only the coefficient-dependent part.
    """
    def U(k):
        try:
            return np.asarray(u[k], dtype=float)
        except KeyError:
            raise MissingPartialError(f"u_{k}") from None

    g = {k: np.asarray(_get(bundle, k), dtype=float)
         for k in REQUIRED_KEYS_2D if not k.startswith("f")}
    a, ax, ay, lap_a = g["a"], g["a_x"], g["a_y"], g["a_xx"] + g["a_yy"]
    b, bx, by, lap_b = g["b"], g["b_x"], g["b_y"], g["b_xx"] + g["b_yy"]
    d, dx, dy = g["d"], g["d_x"], g["d_y"]
    mix = ay + bx + a * b
    val = (
        (lap_b + a * bx + (by + d) * b + 2 * dy) / 72 * U("yyy")
        + (2 * by + b * b + d) / 144 * U("yyyy")
        + b / 120 * U("yyyyy")
        + b * dy / 12 * U("xy")
        + mix / 36 * U("xyyy")
        + a / 72 * U("xyyyy")
        - mix / 24 * U("xxyy")
        + b / 36 * U("xxyyy")
        + (lap_a + (ax + d) * a + ay * b + 2 * dx) / 72 * U("xxx")
        + mix / 36 * U("xxxy")
        + a / 36 * U("xxxyy")
        + (a * a + 2 * ax + d) / 144 * U("xxxx")
        + b / 72 * U("xxxxy")
        + a / 120 * U("xxxxx")
    )
    if include_sixth:
        val = val + (U("xxxxxx") + 5 * U("xxxxyy") + 5 * U("xxyyyy") + U("yyyyyy")) / 360
    return val * h**4
