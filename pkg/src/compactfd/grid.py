"""Uniform Cartesian grids on square/cubic domains and uniform time grids."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidCountError, InvalidExtentError, NodeIndexError


class NodeKind(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``(l1, l2)**dim`` with ``n1`` subdivisions per axis."""

    dim: int
    l1: float
    l2: float
    n1: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidCountError(f"dim must be 2 or 3, got {self.dim}")
        if not (self.l2 > self.l1):
            raise InvalidExtentError(f"need l2 > l1, got l1={self.l1}, l2={self.l2}")
        if int(self.n1) != self.n1 or self.n1 < 2:
            raise InvalidCountError(f"need an integer n1 >= 2, got {self.n1}")

    @property
    def h(self) -> float:
        return (self.l2 - self.l1) / self.n1

    @property
    def nodes_per_axis(self) -> int:
        return self.n1 + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n1 + 1,) * self.dim

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return (self.n1 - 1,) * self.dim

    @property
    def n_interior(self) -> int:
        return (self.n1 - 1) ** self.dim

    def axis(self) -> np.ndarray:
        # one multiply-add per node, no cumulative sums
        return self.l1 + np.arange(self.n1 + 1) * self.h

    def coordinate(self, i: int) -> float:
        return self.l1 + i * self.h

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of shape ``self.shape``; axis 0 is x."""
        ax = self.axis()
        return tuple(np.meshgrid(*([ax] * self.dim), indexing="ij"))

    def interior_mesh(self) -> tuple[np.ndarray, ...]:
        ax = self.axis()[1:-1]
        return tuple(np.meshgrid(*([ax] * self.dim), indexing="ij"))

    def interior(self, field: np.ndarray) -> np.ndarray:
        """View of the interior part of a full-grid field."""
        return field[(slice(1, -1),) * self.dim]

    def boundary_mask(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        mask[(slice(1, -1),) * self.dim] = False
        return mask


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    n2: int

    def __post_init__(self):
        if self.t_end < 0:
            raise InvalidExtentError(f"t_end must be >= 0, got {self.t_end}")
        if int(self.n2) != self.n2 or self.n2 < 1:
            raise InvalidCountError(f"n2 must be a positive integer, got {self.n2}")

    @property
    def tau(self) -> float:
        return self.t_end / self.n2

    def time(self, n: float) -> float:
        return n * self.tau


def make_grid(dim: int, l1: float, l2: float, n1: int) -> GridSpec:
    """Build a validated grid; integral floats such as ``8.0`` are accepted for n1."""
    if isinstance(n1, float) and n1.is_integer():
        n1 = int(n1)
    return GridSpec(dim, float(l1), float(l2), n1)


def time_grid_from_step(t_end: float, tau: float) -> TimeGrid:
    """Build a time grid, insisting that ``t_end / tau`` is an integer up to 1 ulp."""
    ratio = t_end / tau
    n2 = round(ratio)
    if n2 < 1 or abs(ratio - n2) > math.ulp(ratio) or abs(n2 * tau - t_end) > 4 * math.ulp(max(t_end, 1.0)):
        raise InvalidCountError(f"t_end={t_end} is not an integer multiple of tau={tau}")
    return TimeGrid(t_end, n2)


def _check_node(node, grid: GridSpec):
    if len(node) != grid.dim:
        raise NodeIndexError(f"expected {grid.dim} indices, got {len(node)}")
    for v in node:
        if int(v) != v or v < 0 or v > grid.n1:
            raise NodeIndexError(f"index {v} outside [0, {grid.n1}]")


def classify(node, grid: GridSpec) -> NodeKind:
    _check_node(node, grid)
    if any(v == 0 or v == grid.n1 for v in node):
        return NodeKind.BOUNDARY
    return NodeKind.INTERIOR


def lex_index(node, grid: GridSpec) -> int:
    """Flat index of an interior node, x-index fastest."""
    if classify(node, grid) is not NodeKind.INTERIOR:
        raise NodeIndexError(f"node {tuple(node)} is on the boundary")
    m = grid.n1 - 1
    flat = 0
    for v in reversed(node):
        flat = flat * m + (v - 1)
    return int(flat)


def node_from_lex(flat: int, grid: GridSpec) -> tuple[int, ...]:
    m = grid.n1 - 1
    if not 0 <= flat < m**grid.dim:
        raise NodeIndexError(f"flat index {flat} out of range")
    out = []
    for _ in range(grid.dim):
        flat, r = divmod(flat, m)
        out.append(r + 1)
    return tuple(out)


def interior_nodes(grid: GridSpec):
    """Interior nodes in lexicographic order (x fastest)."""
    rng = range(1, grid.n1)
    for rev in itertools.product(rng, repeat=grid.dim):
        yield tuple(reversed(rev))


def flatten_interior(field_interior: np.ndarray) -> np.ndarray:
    """Flatten an interior array indexed ``[i, j(, k)]`` into lex order."""
    return np.asarray(field_interior).transpose().reshape(-1)


def unflatten_interior(vec: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.asarray(vec).reshape(grid.interior_shape).transpose()
