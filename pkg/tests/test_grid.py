import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from compactfd.errors import InvalidCountError, InvalidExtentError, NodeIndexError
from compactfd.grid import (
    NodeKind,
    classify,
    flatten_interior,
    interior_nodes,
    lex_index,
    make_grid,
    node_from_lex,
    time_grid_from_step,
    unflatten_interior,
)


def test_unit_square_quarter_spacing():
    g = make_grid(2, 0, 1, 4)
    assert g.h == 0.25
    assert g.axis().tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert g.shape == (5, 5)


def test_cube_minus_one_to_one():
    g = make_grid(3, -1, 1, 8)
    assert g.h == 2 / 2**3
    assert np.prod(g.shape) == 9**3


def test_finest_table_grid():
    assert make_grid(2, 0, 1, 1024).h == 1 / 2**10


@pytest.mark.parametrize("l1,l2", [(1, 1), (1, 0)])
def test_bad_extent(l1, l2):
    with pytest.raises(InvalidExtentError):
        make_grid(2, l1, l2, 4)


@pytest.mark.parametrize("n1", [1, 0, -3, 2.5])
def test_bad_count(n1):
    with pytest.raises(InvalidCountError):
        make_grid(2, 0, 1, n1)


def test_integral_float_count_accepted():
    assert make_grid(2, 0, 1, 8.0).n1 == 8


def test_classify_examples():
    g2 = make_grid(2, 0, 1, 8)
    assert classify((0, 3), g2) is NodeKind.BOUNDARY
    assert classify((4, 4), g2) is NodeKind.INTERIOR
    g3 = make_grid(3, 0, 1, 8)
    assert classify((1, 1, 8), g3) is NodeKind.BOUNDARY


@pytest.mark.parametrize("node", [(9, 1), (-1, 2), (1,)])
def test_classify_out_of_range(node):
    with pytest.raises(NodeIndexError):
        classify(node, make_grid(2, 0, 1, 8))


def test_lex_index_examples():
    g2 = make_grid(2, 0, 1, 4)
    assert lex_index((1, 1), g2) == 0
    assert lex_index((3, 1), g2) == 2
    assert lex_index((1, 1, 2), make_grid(3, 0, 1, 4)) == 9


def test_lex_index_rejects_boundary():
    with pytest.raises(NodeIndexError):
        lex_index((0, 2), make_grid(2, 0, 1, 4))


@given(dim=st.sampled_from([2, 3]), n1=st.integers(2, 16),
       l1=st.floats(-10, 10), width=st.floats(1e-3, 50))
def test_coordinates_are_single_multiply_add(dim, n1, l1, width):
    g = make_grid(dim, l1, l1 + width, n1)
    ax = g.axis()
    ref = np.array([l1 + i * g.h for i in range(n1 + 1)])
    assert np.array_equal(ax, ref)
    assert np.array_equal(ax, make_grid(dim, l1, l1 + width, n1).axis())
    for axis_k, m in enumerate(g.mesh()):
        assert np.array_equal(np.moveaxis(m, axis_k, 0)[(slice(None),) + (0,) * (dim - 1)], ref)


@given(dim=st.sampled_from([2, 3]), n1=st.integers(2, 10))
def test_classify_partitions_nodes(dim, n1):
    g = make_grid(dim, 0, 1, n1)
    kinds = [classify(node, g) for node in np.ndindex(*g.shape)]
    n_int = sum(k is NodeKind.INTERIOR for k in kinds)
    assert n_int == g.n_interior
    assert len(kinds) == (n1 + 1) ** dim
    assert np.count_nonzero(g.boundary_mask()) == len(kinds) - n_int


@given(dim=st.sampled_from([2, 3]), n1=st.integers(2, 16))
def test_lex_index_bijection(dim, n1):
    if dim == 3 and n1 > 10:
        n1 = 10
    g = make_grid(dim, 0, 1, n1)
    seen = [lex_index(node, g) for node in interior_nodes(g)]
    assert seen == list(range(g.n_interior))
    for k in range(g.n_interior):
        assert lex_index(node_from_lex(k, g), g) == k


def test_flatten_roundtrip_matches_lex_order():
    g = make_grid(3, 0, 1, 5)
    arr = np.random.default_rng(0).random(g.interior_shape)
    flat = flatten_interior(arr)
    for node in interior_nodes(g):
        assert flat[lex_index(node, g)] == arr[tuple(v - 1 for v in node)]
    assert np.array_equal(unflatten_interior(flat, g), arr)


def test_time_grid():
    tg = time_grid_from_step(1.0, 1 / 16)
    assert tg.n2 == 16
    assert tg.time(3) == 3 * tg.tau
    with pytest.raises(InvalidCountError):
        time_grid_from_step(1.0, 0.3)
