"""One-dimensional finite-difference operators and mixed-partial composition.

Every operator carries a list of variants, one per stencil footprint.  A
variant is feasible at node ``i`` of a line with ``n + 1`` samples when its
footprint stays inside ``[0, n]``.  Among feasible variants the one with the
smallest lopsidedness ``|min(offsets) + max(offsets)|`` wins, so centered
forms beat lopsided interior forms, which beat fully one-sided forms.  Ties
between a left- and right-leaning form are broken by ``tie_break``:

``"room"``
    lean toward the side with more samples; at the exact midpoint of the
    line take the left-leaning form.
``"listed"``
    always take the first form in catalog order.
``"printed"``
    ignore lopsidedness and take the first feasible form in catalog order.

Weights are stored as exact fractions and converted to floats once.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction as Fr
from functools import lru_cache

import numpy as np

from .errors import NoFeasibleVariantError
from .grid import GridSpec

__all__ = [
    "FdVariant",
    "FdOperator",
    "CATALOG",
    "OperatorSetting",
    "get_operator",
    "select_variant",
    "apply_1d",
    "diff_matrix",
    "derivative_along",
    "partial_names",
    "partials",
    "partials_2d",
    "partials_3d",
]

TIE_BREAKS = ("room", "listed", "printed")


@dataclass(frozen=True)
class FdVariant:
    offsets: tuple[int, ...]
    weights: tuple[Fr, ...]

    @property
    def lopsidedness(self) -> int:
        return abs(min(self.offsets) + max(self.offsets))

    @property
    def lean(self) -> int:
        """+1 for right-leaning, -1 for left-leaning, 0 for centered."""
        s = min(self.offsets) + max(self.offsets)
        return (s > 0) - (s < 0)

    def fits(self, i: int, n: int) -> bool:
        return i + min(self.offsets) >= 0 and i + max(self.offsets) <= n

    def mirrored(self, derivative_order: int) -> "FdVariant":
        sign = -1 if derivative_order % 2 else 1
        pairs = sorted((-o, sign * w) for o, w in zip(self.offsets, self.weights))
        return FdVariant(tuple(o for o, _ in pairs), tuple(w for _, w in pairs))


@dataclass(frozen=True)
class FdOperator:
    name: str
    derivative_order: int
    accuracy_order: int
    variants: tuple[FdVariant, ...] = field(repr=False)

    @property
    def max_reach(self) -> int:
        return max(max(abs(o) for o in v.offsets) for v in self.variants)


def _fr(*vals):
    return tuple(Fr(v) for v in vals)


def _op(name, dorder, acc, fixed=(), right_sided=()):
    """Build an operator from explicit variants plus right-sided forms that
    are mirrored to the left (the tables' ``x_{i±k}`` rows)."""
    variants = [FdVariant(tuple(o), _fr(*w)) for o, w in fixed]
    for o, w in right_sided:
        v = FdVariant(tuple(o), _fr(*w))
        variants.append(v)
        variants.append(v.mirrored(dorder))
    return FdOperator(name, dorder, acc, tuple(variants))


_R = range
CATALOG: dict[str, FdOperator] = {
    op.name: op
    for op in [
        _op("ux2", 1, 2,
            fixed=[((-1, 0, 1), ("-1/2", 0, "1/2"))],
            right_sided=[((0, 1, 2), ("-3/2", 2, "-1/2"))]),
        _op("ux3", 1, 3,
            fixed=[((-1, 0, 1, 2), ("-1/3", "-1/2", 1, "-1/6")),
                   ((-2, -1, 0, 1), ("1/6", -1, "1/2", "1/3"))],
            right_sided=[(_R(0, 4), ("-11/6", 3, "-3/2", "1/3"))]),
        _op("ux4", 1, 4,
            fixed=[(_R(-2, 3), ("1/12", "-2/3", 0, "2/3", "-1/12"))],
            right_sided=[(_R(0, 5), ("-25/12", 4, -3, "4/3", "-1/4")),
                         (_R(-1, 4), ("-1/4", "-5/6", "3/2", "-1/2", "1/12"))]),
        _op("ux5", 1, 5,
            fixed=[(_R(-2, 4), ("1/20", "-1/2", "-1/3", 1, "-1/4", "1/30")),
                   (_R(-3, 3), ("-1/30", "1/4", -1, "1/3", "1/2", "-1/20"))],
            right_sided=[(_R(0, 6), ("-137/60", 5, -5, "10/3", "-5/4", "1/5")),
                         (_R(-1, 5), ("-1/5", "-13/12", 2, -1, "1/3", "-1/20"))]),
        _op("uxx2", 2, 2,
            fixed=[((-1, 0, 1), (1, -2, 1))],
            right_sided=[(_R(0, 4), (2, -5, 4, -1))]),
        _op("uxx43", 2, 4,
            fixed=[(_R(-2, 3), ("-1/12", "4/3", "-5/2", "4/3", "-1/12"))],
            right_sided=[(_R(0, 5), ("35/12", "-26/3", "19/2", "-14/3", "11/12")),
                         (_R(-1, 4), ("11/12", "-5/3", "1/2", "1/3", "-1/12"))]),
        _op("uxx4", 2, 4,
            fixed=[(_R(-2, 3), ("-1/12", "4/3", "-5/2", "4/3", "-1/12"))],
            right_sided=[(_R(0, 6), ("15/4", "-77/6", "107/6", -13, "61/12", "-5/6")),
                         (_R(-1, 5), ("5/6", "-5/4", "-1/3", "7/6", "-1/2", "1/12"))]),
        _op("uxxx1", 3, 1,
            fixed=[(_R(-1, 3), (-1, 3, -3, 1)),
                   (_R(-2, 2), (-1, 3, -3, 1))],
            right_sided=[(_R(0, 4), (-1, 3, -3, 1))]),
        _op("uxxx2", 3, 2,
            fixed=[(_R(-2, 3), ("-1/2", 1, 0, -1, "1/2"))],
            right_sided=[(_R(0, 5), ("-5/2", 9, -12, 7, "-3/2")),
                         (_R(-1, 4), ("-3/2", 5, -6, 3, "-1/2"))]),
        _op("uxxx3", 3, 3,
            fixed=[(_R(-2, 4), ("-1/4", "-1/4", "5/2", "-7/2", "7/4", "-1/4")),
                   (_R(-3, 3), ("1/4", "-7/4", "7/2", "-5/2", "1/4", "1/4"))],
            right_sided=[(_R(0, 6), ("-17/4", "71/4", "-59/2", "49/2", "-41/4", "7/4")),
                         (_R(-1, 5), ("-7/4", "25/4", "-17/2", "11/2", "-7/4", "1/4"))]),
    ]
}


def get_operator(name: str | FdOperator) -> FdOperator:
    if isinstance(name, FdOperator):
        return name
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown FD operator {name!r}; known: {sorted(CATALOG)}") from None


@dataclass(frozen=True)
class OperatorSetting:
    """Which catalog entry to use for each derivative order.

    ``gradient`` is used only for the solution gradient inside nonlinear
    coefficients; ``first``/``second``/``third`` are used for partials of the
    normalized coefficients.
    """

    first: str = "ux3"
    second: str = "uxx43"
    third: str = "uxxx2"
    gradient: str = "ux4"
    tie_break: str = "room"

    def __post_init__(self):
        for attr, order in (("first", 1), ("second", 2), ("third", 3), ("gradient", 1)):
            op = get_operator(getattr(self, attr))
            if op.derivative_order != order:
                raise ValueError(f"{attr}={op.name} is not a derivative of order {order}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")

    def for_order(self, order: int) -> str:
        return (self.first, self.second, self.third)[order - 1]


def select_variant(op, i: int, n: int, tie_break: str = "room") -> FdVariant:
    """Pick the variant of ``op`` used at node ``i`` of a line with nodes ``0..n``."""
    op = get_operator(op)
    feasible = [v for v in op.variants if v.fits(i, n)]
    if not feasible:
        raise NoFeasibleVariantError(
            f"{op.name} has no variant fitting node {i} of a line with {n + 1} nodes"
        )
    if tie_break == "printed":
        return feasible[0]
    best = min(v.lopsidedness for v in feasible)
    cands = [v for v in feasible if v.lopsidedness == best]
    if len(cands) == 1 or tie_break == "listed":
        return cands[0]
    want = 1 if n - i > i else -1
    for v in cands:
        if v.lean == want:
            return v
    return cands[0]


def apply_1d(op, samples, i: int, h: float, tie_break: str = "room") -> float:
    """Approximate the derivative at sample ``i`` of an equispaced line."""
    op = get_operator(op)
    samples = np.asarray(samples, dtype=float)
    v = select_variant(op, i, len(samples) - 1, tie_break)
    acc = 0.0
    for o, w in zip(v.offsets, v.weights):
        acc += float(w) * samples[i + o]
    return acc / h**op.derivative_order


@lru_cache(maxsize=256)
def _unit_matrix(name: str, n: int, tie_break: str) -> np.ndarray:
    op = CATALOG[name]
    D = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        v = select_variant(op, i, n, tie_break)
        for o, w in zip(v.offsets, v.weights):
            D[i, i + o] = float(w)
    D.setflags(write=False)
    return D


def diff_matrix(op, n: int, h: float, tie_break: str = "room") -> np.ndarray:
    """Dense ``(n+1, n+1)`` matrix applying ``op`` at every node of a line."""
    op = get_operator(op)
    return _unit_matrix(op.name, n, tie_break) / h**op.derivative_order


def derivative_along(field_, op, axis: int, h: float, tie_break: str = "room") -> np.ndarray:
    """Apply ``op`` along ``axis`` of a full-grid sample array."""
    op = get_operator(op)
    arr = np.asarray(field_, dtype=float)
    D = diff_matrix(op, arr.shape[axis] - 1, h, tie_break)
    out = np.tensordot(D, arr, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


_AXES = "xyz"


def partial_names(dim: int, max_order: int) -> list[str]:
    """Derivative suffixes such as ``'x'``, ``'xy'``, ``'yyz'`` up to ``max_order``."""
    names = []
    for order in range(1, max_order + 1):
        for combo in itertools.combinations_with_replacement(_AXES[:dim], order):
            names.append("".join(combo))
    return names


def _composition(name: str):
    """Order in which pure derivatives are applied for a mixed partial.

    Highest-order pure derivative first, ties in x, y, z order, so
    ``xy -> x then y``, ``xxy -> xx then y``, ``xyy -> yy then x``.
    """
    counts = [(name.count(ax), k) for k, ax in enumerate(_AXES) if name.count(ax)]
    counts.sort(key=lambda c: (-c[0], c[1]))
    return [(k, m) for m, k in counts]


def partials(field_, h: float, setting: OperatorSetting, max_order: int = 2) -> dict[str, np.ndarray]:
    """All partial derivatives of a full-grid field up to ``max_order``.

    Returns a dict keyed by derivative suffix.  Intermediate pure derivatives
    are computed over the whole grid (boundary lines included) before the
    outer operator is applied, so mixed partials are compositions of the 1D
    operators.
    """
    arr = np.asarray(field_, dtype=float)
    dim = arr.ndim
    tb = setting.tie_break
    cache: dict[tuple, np.ndarray] = {(): arr}

    def chain(steps):
        key = tuple(steps)
        if key not in cache:
            prev = chain(steps[:-1])
            axis, m = steps[-1]
            cache[key] = derivative_along(prev, setting.for_order(m), axis, h, tb)
        return cache[key]

    return {name: chain(_composition(name)) for name in partial_names(dim, max_order)}


def _node_partials(field_, node, grid: GridSpec, setting, max_order):
    arr = np.asarray(field_, dtype=float)
    if arr.shape != grid.shape:
        raise ValueError(f"field shape {arr.shape} does not match grid {grid.shape}")
    full = partials(arr, grid.h, setting, max_order)
    return {k: float(v[tuple(node)]) for k, v in full.items()}


def partials_2d(field_, node, grid: GridSpec, setting: OperatorSetting, max_order: int = 3):
    """Partials ``d^{m+n}/dx^m dy^n`` (``m + n <= max_order``) at one node."""
    return _node_partials(field_, node, grid, setting, max_order)


def partials_3d(field_, node, grid: GridSpec, setting: OperatorSetting, max_order: int = 3):
    return _node_partials(field_, node, grid, setting, max_order)
