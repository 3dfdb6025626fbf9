from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circle_rel_two_points
from quadrtop.cli_runner.corpus import example11_problem
from quadrtop.cli_runner.problem import ProblemSpec
from quadrtop.cli_runner.runner import prepare_mesh, run_analyze
from quadrtop.hyperplane_section import ContainmentError, G2Table, HyperplaneSpec, assemble_G2, check_containment
from quadrtop.omega_geometry import cone_complex, omega_V_strata, subcomplex_for
from quadrtop.quad_core import Inertia, QuadraticForm, QuadraticMap, RankError, restrict_to_subspace

CONIC = [QuadraticForm.diagonal([1, 1, -1])]


def spec_of(forms, n, k, name=""):
    return ProblemSpec(n, k, forms, "zero", {}, name)


def g2_for(spec, normal):
    hyper = HyperplaneSpec(tuple(normal))
    cone = cone_complex(prepare_mesh(spec, hyper.basis))
    return cone, hyper, assemble_G2(cone, spec.qmap, hyper)


def euler_of_degrees(values):
    return sum((-1) ** b * v for b, v in enumerate(values))


# ------------------------------------------------------------------ inputs


def test_hyperplane_basis_spans_kernel():
    h = HyperplaneSpec((1, 2, 3))
    assert len(h.basis) == 2
    for vec in h.basis:
        assert sum(a * b for a, b in zip(vec, h.normal)) == 0


def test_hyperplane_parse():
    assert HyperplaneSpec.parse("1,1/2,-3").normal == (1, Fraction(1, 2), -3)


def test_zero_normal_rejected():
    with pytest.raises(RankError):
        HyperplaneSpec((0, 0, 0))


def test_totals_collect_antidiagonals():
    t = G2Table(2, 0, [[0, 1, 0], [1, 0, 0]])
    assert t.totals() == [0, 2, 0]
    assert t.euler() == -2


# --------------------------------------------------------- worked examples


def test_conic_cut_through_two_points():
    # V = {x0 = 0} meets x0^2 + x1^2 = x2^2 in two points
    _, _, g2 = g2_for(spec_of(CONIC, 2, 0), (1, 0, 0))
    assert g2.dims == [[0, 1, 0], [1, 0, 0]]
    assert g2.totals() == circle_rel_two_points() + [0]


def test_conic_missed_by_hyperplane():
    # x2 = 0 forces x0 = x1 = 0, so X cap V is empty and the pair is just X
    _, _, g2 = g2_for(spec_of(CONIC, 2, 0), (0, 0, 1))
    assert g2.totals() == [1, 1, 0]


def test_whole_plane_relative_to_line():
    # zero map: X = P^2, X cap V = P^1
    _, _, g2 = g2_for(spec_of([QuadraticForm.zero(3)], 2, 0), (1, 2, 3))
    assert g2.totals() == [0, 0, 1]


@pytest.mark.parametrize(
    "forms, n, k, normal",
    [
        (CONIC, 2, 0, (1, 0, 0)),
        (CONIC, 2, 0, (1, 2, 3)),
        ([QuadraticForm.diagonal([1, 1, -1, -1])], 3, 0, (1, 0, 0, 0)),
        ([QuadraticForm.diagonal([1, -1, -1, -1])], 3, 0, (0, 1, 1, 0)),
        (example11_problem().forms, 2, 2, (1, 1, 0)),
    ],
)
def test_euler_of_pair(forms, n, k, normal):
    spec = spec_of(list(forms), n, k)
    _, hyper, g2 = g2_for(spec, normal)
    whole = run_analyze(spec).betti.betti
    cut = QuadraticMap(tuple(restrict_to_subspace(f, hyper.basis) for f in spec.forms))
    section = run_analyze(spec_of(list(cut.forms), n - 1, k)).betti.betti
    # totals can miss cells below degree 0, so compare the Euler number of the whole page
    assert (-1) ** n * g2.euler() == euler_of_degrees(whole) - euler_of_degrees(section)


# ------------------------------------------------------- structural checks


def test_equal_strata_give_zero_rows():
    spec = example11_problem()
    cone, hyper, g2 = g2_for(spec, (1, 1, 0))
    seen = 0
    for j in range(1, spec.n + 1):
        if omega_V_strata(cone, spec.qmap, hyper.basis, j) == subcomplex_for(cone, j + 1):
            seen += 1
            assert all(g2.dims[i][j] == 0 for i in range(spec.k + 2))
    assert seen


def test_containment_violation_detected():
    spec = spec_of(CONIC, 2, 0)
    hyper = HyperplaneSpec((1, 0, 0))
    mesh = prepare_mesh(spec, hyper.basis)
    check_containment(mesh)
    bad = list(mesh.restricted_labels)
    v = next(i for i, lab in enumerate(mesh.labels) if lab is not None and lab.pos == 2)
    bad[v] = Inertia(0, 0, 2)
    with pytest.raises(ContainmentError):
        check_containment(replace(mesh, restricted_labels=bad))


def test_restricted_labels_interlace_on_mesh():
    spec = example11_problem()
    mesh = prepare_mesh(spec, HyperplaneSpec((1, -1, 2)).basis)
    check_containment(mesh)


def sym(rng, m):
    a = rng.standard_normal((m, m))
    return (a + a.T) / 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_large_penalty_adds_one_to_restricted_index(seed):
    # i+(Q + t h h^T) for large t equals i+(Q restricted to h-perp) + 1
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    q = sym(rng, m)
    h = rng.standard_normal(m)
    basis = np.linalg.svd(h[None, :])[2][1:].T
    restricted = basis.T @ q @ basis
    pos_v = int((np.linalg.eigvalsh(restricted) > 1e-9).sum())
    t = 1e6 * (1 + np.abs(q).max())
    pos_t = int((np.linalg.eigvalsh(q + t * np.outer(h, h)) > 1e-6).sum())
    assert pos_t == pos_v + 1
