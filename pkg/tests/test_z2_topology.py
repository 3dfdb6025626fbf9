import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    OCTAHEDRON_EQUATOR,
    OCTAHEDRON_TRIANGLES,
    RP2_TRIANGLES,
    TORUS_TRIANGLES,
    boundary_dense,
    faces_of,
    gf2_rank,
    relative_betti,
)
from quadrtop.omega_geometry import PolyhedralCone, build_mesh, cone_complex, dual_cone
from quadrtop.z2_topology import (
    OrderError,
    SimplicialComplex,
    Subcomplex,
    Z2Matrix,
    betti,
    bits,
    boundary_matrix,
    coboundary,
    cup_product,
    reduced_betti,
    relative_cohomology,
    unit_cochain,
)


def sphere2(depth=0):
    return build_mesh(dual_cone(PolyhedralCone.zero(3)), depth)


def cochain_from(cx: SimplicialComplex, simplices) -> int:
    d = len(next(iter(simplices))) - 1
    return sum(1 << cx.index[d][tuple(sorted(s))] for s in simplices)


def h1_generators(cx: SimplicialComplex) -> list[int]:
    return relative_cohomology(cx, None, None, 1).representatives


# ------------------------------------------------------------- boundaries


def test_triangle_boundary_rank():
    cx = SimplicialComplex.from_cells([(0, 1), (1, 2), (0, 2)])
    m = boundary_matrix(cx, 1)
    assert (m.nrows, m.ncols) == (3, 3) and m.rank() == 2


def test_single_simplex_boundary():
    cx = SimplicialComplex.from_cells([(0, 1, 2)])
    assert boundary_matrix(cx, 2).to_dense().tolist() == [[1], [1], [1]]


def test_icosahedron_rank_19():
    mesh = sphere2(0)
    cx = mesh.complex
    assert [cx.count(d) for d in range(3)] == [12, 30, 20]
    assert boundary_matrix(cx, 2).rank() == 19
    assert gf2_rank(boundary_dense(faces_of(cx.simplices[2]), 2)) == 19


def test_boundary_degree_out_of_range():
    cx = SimplicialComplex.from_cells([(0, 1)])
    with pytest.raises(ValueError):
        boundary_matrix(cx, 2)


# ------------------------------------------------------------------ betti


@pytest.mark.parametrize(
    "cells, expected",
    [
        (RP2_TRIANGLES, [1, 1, 1]),
        (OCTAHEDRON_TRIANGLES, [1, 0, 1]),
        (TORUS_TRIANGLES, [1, 2, 1]),
    ],
)
def test_betti_standard_surfaces(cells, expected):
    cx = SimplicialComplex.from_cells(cells)
    assert betti(cx) == expected == relative_betti(cells)


def test_betti_icosahedron():
    assert betti(sphere2(0).complex) == [1, 0, 1]


def test_reduced_betti_of_point_and_pair():
    cx = SimplicialComplex.from_cells([(0,), (1,)])
    assert reduced_betti(cx.whole()) == [1]
    assert reduced_betti(cx.full_subcomplex(lambda v: v == 0)) == [0]


def test_relative_betti_matches_oracle():
    cx = SimplicialComplex.from_cells(OCTAHEDRON_TRIANGLES)
    sub = Subcomplex.closure(cx, {1: cochain_from(cx, OCTAHEDRON_EQUATOR)})
    assert betti(cx.whole(), sub) == relative_betti(OCTAHEDRON_TRIANGLES, OCTAHEDRON_EQUATOR) == [0, 0, 2]


# ---------------------------------------------------------- relative groups


def test_cone_over_sphere_top_class():
    cone = cone_complex(sphere2(0))
    cx = cone.complex
    base = cx.full_subcomplex(lambda v: v != cone.apex)
    dims = [relative_cohomology(cx, None, base, i).dim for i in range(4)]
    assert dims == [0, 0, 0, 1]


def test_empty_subcomplex_gives_absolute_cohomology():
    cone = cone_complex(sphere2(0))
    cx = cone.complex
    dims = [relative_cohomology(cx, None, cx.empty(), i).dim for i in range(4)]
    assert dims == [1, 0, 0, 0]


def test_relative_pair_needs_inclusion():
    cx = SimplicialComplex.from_cells([(0, 1), (1, 2)])
    a = cx.full_subcomplex(lambda v: v < 2)
    b = cx.full_subcomplex(lambda v: v > 0)
    with pytest.raises(ValueError):
        relative_cohomology(cx, a, b, 0)


def test_foreign_subcomplex_rejected():
    cx = SimplicialComplex.from_cells([(0, 1)])
    other = SimplicialComplex.from_cells([(0, 1)])
    with pytest.raises(OrderError):
        relative_cohomology(cx, None, other.empty(), 0)


def test_unsorted_simplex_rejected():
    with pytest.raises(OrderError):
        SimplicialComplex([[(0,), (1,)], [(1, 0)]])


def test_coordinates_of_coboundary_shift():
    cx = SimplicialComplex.from_cells(TORUS_TRIANGLES)
    basis = relative_cohomology(cx, None, None, 1)
    z = basis.representatives[0] ^ coboundary(cx, 1 << 3, 0)
    assert basis.coordinates(z) == 1
    assert basis.is_coboundary(coboundary(cx, 0b1011, 0))
    with pytest.raises(ValueError):
        basis.coordinates(1)


# ------------------------------------------------------------- cup product


def test_unit_is_neutral():
    cx = SimplicialComplex.from_cells(TORUS_TRIANGLES)
    for b in h1_generators(cx):
        assert cup_product(cx, unit_cochain(cx), 0, b, 1) == b
        assert cup_product(cx, b, 1, unit_cochain(cx), 0) == b


def test_rp2_square_is_nonzero():
    cx = SimplicialComplex.from_cells(RP2_TRIANGLES)
    (x,) = h1_generators(cx)
    sq = cup_product(cx, x, 1, x, 1)
    h2 = relative_cohomology(cx, None, None, 2)
    assert h2.dim == 1 and h2.coordinates(sq) == 1


def test_torus_product_is_nonzero_and_squares_vanish():
    cx = SimplicialComplex.from_cells(TORUS_TRIANGLES)
    a, b = h1_generators(cx)
    h2 = relative_cohomology(cx, None, None, 2)
    assert h2.coordinates(cup_product(cx, a, 1, b, 1)) == 1
    assert h2.coordinates(cup_product(cx, a, 1, a, 1)) == 0
    assert h2.coordinates(cup_product(cx, b, 1, b, 1)) == 0


def test_disjoint_supports_multiply_to_zero():
    cx = SimplicialComplex.from_cells([(0, 1, 2), (3, 4, 5)])
    a = cochain_from(cx, [(0, 1)])
    b = cochain_from(cx, [(3, 4), (4, 5)])
    assert cup_product(cx, a, 1, b, 1) == 0


def test_degree_overflow_returns_zero():
    cx = SimplicialComplex.from_cells([(0, 1, 2)])
    e = cx.full_mask(1)
    assert cup_product(cx, e, 1, cx.full_mask(2), 2) == 0


# --------------------------------------------------------------- coboundary


def test_coboundary_of_cocycle_vanishes():
    cx = SimplicialComplex.from_cells(RP2_TRIANGLES)
    (x,) = h1_generators(cx)
    assert coboundary(cx, x, 1) == 0
    assert coboundary(cx, 0, 1) == 0


def test_connecting_map_of_equator():
    cx = SimplicialComplex.from_cells(OCTAHEDRON_TRIANGLES)
    equator = Subcomplex.closure(cx, {1: cochain_from(cx, OCTAHEDRON_EQUATOR)})
    w = cochain_from(cx, [OCTAHEDRON_EQUATOR[0]])
    gamma = coboundary(cx, w, 1)
    assert gamma & equator.mask(2) == 0
    rel = relative_cohomology(cx, None, equator, 2)
    assert rel.dim == 2
    # the two hemisphere classes both pick up the cut edge
    assert rel.coordinates(gamma) != 0
    assert not rel.is_coboundary(gamma)


# -------------------------------------------------------------- properties


@st.composite
def complexes(draw):
    nv = draw(st.integers(4, 7))
    tris = list(itertools.combinations(range(nv), 3))
    picked = draw(st.lists(st.sampled_from(tris), min_size=1, max_size=10, unique=True))
    extra = draw(st.lists(st.sampled_from(list(itertools.combinations(range(nv), 4))), max_size=2, unique=True))
    return SimplicialComplex.from_cells(picked + extra)


@settings(max_examples=150, deadline=None)
@given(complexes())
def test_boundary_squares_to_zero(cx):
    for d in range(2, cx.dim + 1):
        dd = boundary_matrix(cx, d - 1).to_dense().astype(int) @ boundary_matrix(cx, d).to_dense().astype(int)
        assert not (dd % 2).any()


@settings(max_examples=150, deadline=None)
@given(complexes(), st.data())
def test_coboundary_squares_to_zero(cx, data):
    for d in range(cx.dim - 1):
        c = data.draw(st.integers(0, cx.full_mask(d)))
        assert coboundary(cx, coboundary(cx, c, d), d + 1) == 0


@settings(max_examples=150, deadline=None)
@given(complexes())
def test_rank_equals_transpose_rank_and_oracle(cx):
    for d in range(1, cx.dim + 1):
        m = boundary_matrix(cx, d)
        assert m.rank() == m.transpose().rank() == gf2_rank(m.to_dense())


@settings(max_examples=150, deadline=None)
@given(complexes())
def test_betti_matches_oracle_and_euler(cx):
    b = betti(cx)
    top = [s for level in cx.simplices for s in level]
    assert b == relative_betti(top)[: len(b)]
    assert sum((-1) ** d * v for d, v in enumerate(b)) == sum((-1) ** d * cx.count(d) for d in range(cx.dim + 1))


@settings(max_examples=150, deadline=None)
@given(complexes(), st.data())
def test_leibniz_rule(cx, data):
    p = data.draw(st.integers(0, 1))
    q = data.draw(st.integers(0, 1))
    a = data.draw(st.integers(0, cx.full_mask(p)))
    b = data.draw(st.integers(0, cx.full_mask(q)))
    lhs = coboundary(cx, cup_product(cx, a, p, b, q), p + q)
    rhs = cup_product(cx, coboundary(cx, a, p), p + 1, b, q) ^ cup_product(cx, a, p, coboundary(cx, b, q), q + 1)
    assert lhs == rhs


@settings(max_examples=150, deadline=None)
@given(complexes(), st.data())
def test_relative_times_absolute_vanishes_on_subcomplex(cx, data):
    keep = data.draw(st.sets(st.integers(0, cx.count(0) - 1)))
    sub = cx.full_subcomplex(lambda v: v in keep)
    rel = relative_cohomology(cx, None, sub, 1)
    b = data.draw(st.integers(0, cx.full_mask(1)))
    for a in rel.representatives:
        assert cup_product(cx, a, 1, b, 1) & sub.mask(2) == 0


@settings(max_examples=100, deadline=None)
@given(complexes())
def test_cup_is_commutative_and_associative_on_classes(cx):
    h1 = h1_generators(cx)
    h2 = relative_cohomology(cx, None, None, 2)
    for a, b in itertools.product(h1, repeat=2):
        ab = cup_product(cx, a, 1, b, 1)
        ba = cup_product(cx, b, 1, a, 1)
        assert h2.is_coboundary(ab ^ ba)
    for a, b, c in itertools.product(h1[:2], repeat=3):
        left = cup_product(cx, cup_product(cx, a, 1, b, 1), 2, c, 1)
        right = cup_product(cx, a, 1, cup_product(cx, b, 1, c, 1), 2)
        assert left == right


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_z2matrix_roundtrip(r, c, data):
    arr = np.array(data.draw(st.lists(st.lists(st.integers(0, 1), min_size=c, max_size=c), min_size=r, max_size=r)))
    m = Z2Matrix.from_dense(arr)
    assert (m.to_dense() == arr).all()
    assert Z2Matrix.from_columns(r, m.columns).rows == m.rows
    v = data.draw(st.integers(0, (1 << c) - 1))
    expected = (arr @ np.array([(v >> i) & 1 for i in range(c)])) % 2
    assert m.apply(v) == sum(int(x) << i for i, x in enumerate(expected))
    assert sorted(bits(v)) == [i for i in range(c) if (v >> i) & 1]
