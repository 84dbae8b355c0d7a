"""Fourth-order compact 19-point stencil for

    Δu + a u_x + b u_y + c u_z + d u = f

in three dimensions.  The discrete equation at node (i, j, k) is
``(1/h²) Σ C[r, l, s] u[i+r, j+l, k+s] = F``; the eight cube-corner
coefficients are identically zero.

A bracketed derivative such as ``[φ₇]_y`` is the derivative of the defining
sum, here ``a_y + b_y + c_y``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import MissingPartialError

__all__ = ["Stencil3D", "REQUIRED_KEYS_3D", "CORNERS", "phi", "coefficients_3d", "rhs_3d", "stencil_at"]

REQUIRED_KEYS_3D = tuple(
    f"{v}{s}" for v in "abcdf" for s in ("", "_x", "_y", "_z", "_xx", "_yy", "_zz")
)
CORNERS = tuple(itertools.product((-1, 1), repeat=3))


@dataclass(frozen=True)
class Stencil3D:
    """``c[r + 1, l + 1, s + 1]`` holds C_{r,l,s}; trailing axes run over nodes."""

    c: np.ndarray
    rhs: np.ndarray
    h: float

    def coef(self, r: int, l: int, s: int):
        return self.c[r + 1, l + 1, s + 1]

    def row_sum(self):
        return self.c.sum(axis=(0, 1, 2))


def _float_q(n, m=1):
    return n / m


def _get(bundle: Mapping, key: str):
    try:
        return bundle[key]
    except KeyError:
        raise MissingPartialError(key) from None


def phi(g: Mapping) -> dict:
    """The helper quantities φ₁..φ₂₁, keyed 1..21."""
    a, b, c, d = g["a"], g["b"], g["c"], g["d"]
    ax, ay, az = g["a_x"], g["a_y"], g["a_z"]
    bx, by, bz = g["b_x"], g["b_y"], g["b_z"]
    cx, cy, cz = g["c_x"], g["c_y"], g["c_z"]
    dx, dy, dz = g["d_x"], g["d_y"], g["d_z"]
    lap_a = g["a_xx"] + g["a_yy"] + g["a_zz"]
    lap_c = g["c_xx"] + g["c_yy"] + g["c_zz"]
    return {
        1: a + b, 2: a + c, 3: b + c, 4: a - b, 5: a - c, 6: b - c,
        7: a + b + c, 8: a + b - c,
        9: ax + ay + az, 10: bx + by + bz, 11: cx + cy + cz,
        12: ax + by + cz, 13: ax - bx - cx,
        14: dx + dy + dz, 15: a * dx + b * dy + c * dz,
        16: g["b_xx"] + g["b_yy"], 17: g["d_yy"] + g["d_zz"],
        18: lap_a + lap_c,
        19: a * b + ay + bx, 20: a * c + az + cx, 21: b * c + bz + cy,
    }


def coefficients_3d(g: Mapping, h, q=_float_q) -> dict:
    """The 27 C_{r,l,s} keyed by ``(r, l, s)``; corners are exact zeros."""
    p = phi(g)
    a, b, c, d = g["a"], g["b"], g["c"], g["d"]
    ax, az = g["a_x"], g["a_z"]
    bx, by, bz = g["b_x"], g["b_y"], g["b_z"]
    cx, cy = g["c_x"], g["c_y"]
    dx, dy, dz = g["d_x"], g["d_y"], g["d_z"]
    lap_a = g["a_xx"] + g["a_yy"] + g["a_zz"]
    lap_d = g["d_xx"] + g["d_yy"] + g["d_zz"]
    bzz, dxx = g["b_zz"], g["d_xx"]
    # derivatives of the defining sums
    p7x = ax + bx + cx
    p7y = g["a_y"] + by + cy
    p7z = az + bz + g["c_z"]
    p4x = ax - bx
    p5x = ax - cx
    p2z = az + g["c_z"]

    h2, h3, h4 = h * h, h**3, h**4
    c6, c3, c12, c24 = q(1, 6), q(1, 3), q(1, 12), q(1, 24)
    zero = q(0)

    C = {k: zero for k in CORNERS}
    C[-1, -1, 0] = c6 - p[1] * h * c12 - a * ax * h3 * c24 - (a * dx + c * dz) * h4 * c12
    C[-1, 0, -1] = c6 - p[2] * h * c12
    C[-1, 0, 0] = (c3 - a * h * c6 + (a * p[7] + d + p7x + p[9]) * h2 * c12
                   - (d * p[1] + b * p7y) * h3 * c12 + c * dz * h4 * c12)
    C[-1, 0, 1] = (c6 - p[5] * h * c12 - p[20] * h2 * c12
                   + (a * d + b * (cy + d + p7y) - az * c - 2 * dx - lap_a) * h3 * c24)
    C[-1, 1, 0] = c6 - p[4] * h * c12 - p[19] * h2 * c12 + b * (by + d) * h3 * c24
    C[0, -1, -1] = c6 - p[3] * h * c12
    C[0, -1, 0] = (c3 - b * h * c6 + (b * p[7] + d + p7y + p[10]) * h2 * c12
                   - (2 * p[14] + p[16] + p[18]) * h3 * c12 + (a * dx + p[15]) * h4 * c12)
    C[0, -1, 1] = (c6 - p[6] * h * c12 - p[21] * h2 * c12
                   + (a * (ax + p4x) - c * bz - 2 * dy - bzz + 4 * p[14] + p[16] + 2 * p[18]) * h3 * c24)
    C[0, 0, -1] = c3 - c * h * c6 + (c * p[7] + d + p7z + p[11]) * h2 * c12 - b * dy * h4 * c12
    C[0, 0, 0] = (q(-4) - (a * p[7] + b * p[3] + c * c - 3 * d + p[9] + p[10] + p[11] + p[12]) * h2 * c6
                  + (a * p[13] + b * p7y - c * p7z + d * p[8] - bzz + 2 * p[14] + p[16] + p[18]) * h3 * c12)
    C[0, 0, 1] = (c3 + c * h * c6 + (c * p[7] + d + p7z + p[11]) * h2 * c12
                  + (c * p7z - a * (p4x + p5x) - b * p7y - d * p[8] + bzz - 2 * p[14] - p[16] - p[18]) * h3 * c12
                  + dxx * h4 * c12)
    C[0, 1, -1] = (c6 + p[6] * h * c12 - p[21] * h2 * c12
                   - (c * (p2z + d) + a * cx + 2 * (dx + dz) - bzz + p[18]) * h3 * c24
                   + (a * dx + b * dy + lap_d) * h4 * c12)
    C[0, 1, 0] = (c3 + b * h * c6 + (b * p[7] + d + p[10] + p7y) * h2 * c12
                  + (c * (p7z + d) - a * p[13]) * h3 * c12 - dxx * h4 * c12)
    C[0, 1, 1] = c6 + p[3] * h * c12 - (c * (p7z + d) - a * (ax + p[13]) - 2 * p[14] - p[16] - p[18]) * h3 * c24
    C[1, -1, 0] = c6 + p[4] * h * c12 - p[19] * h2 * c12 - (ax * a + b * (by + d)) * h3 * c24 + p[17] * h4 * c12
    C[1, 0, -1] = (c6 + p[5] * h * c12 - p[20] * h2 * c12
                   + (az * c - b * cy + 2 * dx - bzz + lap_a) * h3 * c24 - (a * dx + p[17]) * h4 * c12)
    C[1, 0, 0] = c3 + a * h * c6 + (a * p[7] + d + p7x + p[9]) * h2 * c12 + (a * ax + bzz) * h3 * c12
    C[1, 0, 1] = c6 + p[2] * h * c12 + (d * p[1] + b * p7y - bzz) * h3 * c24
    C[1, 1, 0] = c6 + p[1] * h * c12
    return C


def rhs_3d(g: Mapping, h, q=_float_q):
    """F = f + (h²/12)(a f_x + b f_y + c f_z + Δf)."""
    lap_f = g["f_xx"] + g["f_yy"] + g["f_zz"]
    return g["f"] + h * h * q(1, 12) * (g["a"] * g["f_x"] + g["b"] * g["f_y"] + g["c"] * g["f_z"] + lap_f)


def stencil_at(bundle: Mapping, h: float) -> Stencil3D:
    """Evaluate the 27 coefficients and the right-hand side."""
    g = {k: np.asarray(_get(bundle, k), dtype=float) for k in REQUIRED_KEYS_3D}
    shape = np.broadcast(*g.values()).shape
    coefs = coefficients_3d(g, float(h))
    c = np.zeros((3, 3, 3) + shape)
    for (r, l, s), v in coefs.items():
        c[r + 1, l + 1, s + 1] = v
    rhs = np.broadcast_to(rhs_3d(g, float(h)), shape).copy()
    return Stencil3D(c, rhs, float(h))
