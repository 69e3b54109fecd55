import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhi.decor import (
    Cocycle,
    DegenerateModulus,
    NotIdealizable,
    TransitFails,
    random_psl,
    check_cocycle,
    check_edge_compat,
    coboundary,
    cocycle_transit,
    gauge_transform,
    ideal_transit_0_2,
    ideal_transit_2_3,
    idealize,
    idealize_tet,
    moduli_from_w0,
    perturb_to_idealizable,
    transit_branchings,
    transit_orientation,
)
from qhi.fixtures import label_rank
from qhi.moebius import IDENTITY, PSL2C
from qhi.qdilog import five_points
from qhi.triangulation import Triangulation, b_sign, move_0_2, move_2_3, orientation, total_order_branching

nonzero = st.complex_numbers(min_magnitude=0.2, max_magnitude=3, allow_nan=False, allow_infinity=False)


def test_identity_and_coboundaries_are_cocycles(closed):
    tri, b = closed.tri, closed.branch
    ident = Cocycle(tuple([IDENTITY] * tri.n_edges))
    assert check_cocycle(tri, b, ident).ok
    rng = np.random.default_rng(0)
    lam = [random_psl(rng, 1.0) for _ in range(tri.n_vertices)]
    assert check_cocycle(tri, b, coboundary(tri, lam)).ok
    assert check_cocycle(tri, b, closed.cocycle).ok


def test_perturbed_edge_breaks_its_faces(closed):
    tri, b = closed.tri, closed.branch
    vals = list(closed.cocycle.values)
    vals[0] = PSL2C.parabolic(0.5) @ vals[0]
    rep = check_cocycle(tri, b, Cocycle(tuple(vals)))
    assert not rep.ok
    faces = {int(p.split()[1]) for p in rep.problems}
    touching = {tri.face_of[t][f] for t, a, bb in tri.edge_embeddings[0] for f in range(4) if f not in (a, bb)}
    assert faces == touching


def test_parabolic_example():
    m = idealize_tet(PSL2C.parabolic(1), PSL2C.parabolic(1), PSL2C.parabolic(1))
    assert abs(m.w0 - 0.75) < 1e-12
    assert abs(m.w1 - 4) < 1e-12
    assert abs(m.w2 + 1 / 3) < 1e-12
    assert abs(m.w0 * m.w1 * m.w2 + 1) < 1e-12


@settings(max_examples=50, deadline=None)
@given(x0=nonzero, x1=nonzero, x0p=nonzero)
def test_parabolic_cocycle_matches_borel_formula(x0, x1, x0p):
    # q_j products of opposite edge labels, q_2 with a minus sign
    x2, x2p, x1p = x0 + x1, x1 + x0p, x0 + x1 + x0p
    if min(abs(x2), abs(x2p), abs(x1p)) < 0.05:
        return
    try:
        m = idealize_tet(PSL2C.parabolic(x0), PSL2C.parabolic(x1), PSL2C.parabolic(x0p))
    except NotIdealizable:
        return
    q = (x0 * x0p, x1 * x1p, -x2 * x2p)
    for j in range(3):
        expect = -q[(j + 1) % 3] / q[(j + 2) % 3]
        assert abs(m.w[j] - expect) <= 1e-9 * max(1, abs(expect))
    assert m.residuals() < 1e-9


def test_identity_edge_is_not_idealizable():
    with pytest.raises(NotIdealizable):
        idealize_tet(IDENTITY, PSL2C.parabolic(1), PSL2C.parabolic(1))


def test_identity_cocycle_on_simplex_is_not_idealizable(closed):
    ident = Cocycle(tuple([IDENTITY] * closed.tri.n_edges))
    with pytest.raises(NotIdealizable):
        idealize(closed.tri, closed.branch, ident, closed.orient)


def test_fixture_edge_compatibility(closed, fig8):
    assert check_edge_compat(closed.TI).ok
    assert check_edge_compat(fig8.TI).ok


def test_scrambled_moduli_fail_edge_compatibility(closed):
    TI = closed.TI
    bad = type(TI)(TI.tri, TI.branch, TI.orient, [moduli_from_w0(0.3 + 0.4j * (t + 1)) for t in range(5)], None)
    assert not check_edge_compat(bad).ok


def test_gauge_changes_moduli_but_keeps_compatibility(closed):
    rng = np.random.default_rng(1)
    lam = [random_psl(rng, 0.3) for _ in range(closed.tri.n_vertices)]
    z2 = gauge_transform(closed.tri, closed.cocycle, lam)
    TI2 = idealize(closed.tri, closed.branch, z2, closed.orient)
    assert check_edge_compat(TI2).ok
    assert max(abs(a.w0 - b.w0) for a, b in zip(TI2.moduli, closed.TI.moduli)) > 1e-3


def test_perturb_is_deterministic(closed):
    z = coboundary(closed.tri, [IDENTITY] * 5)
    a = perturb_to_idealizable(closed.tri, closed.branch, z, seed=11)
    b = perturb_to_idealizable(closed.tri, closed.branch, z, seed=11)
    assert all(u.close(v, 0) for u, v in zip(a.values, b.values))
    assert perturb_to_idealizable(closed.tri, closed.branch, a, seed=5) is a


def test_degenerate_modulus():
    with pytest.raises(DegenerateModulus):
        moduli_from_w0(1.0)
    with pytest.raises(DegenerateModulus):
        moduli_from_w0(0.0)


@settings(max_examples=50, deadline=None)
@given(w=st.complex_numbers(min_magnitude=0.05, max_magnitude=20))
def test_modular_triple_relations(w):
    if abs(w - 1) < 0.05:
        return
    m = moduli_from_w0(w)
    assert m.residuals() < 1e-9


def test_2_3_cocycle_transit_is_a_cocycle(closed):
    res = move_2_3(closed.tri, 0, 0)
    z2 = cocycle_transit(closed.tri, closed.cocycle, res)
    for br in transit_branchings(closed.tri, closed.branch, res):
        assert check_cocycle(res.tri, br, z2).ok
    # new edge value is the product along a path in the shared face
    tn, a, b = res.new_edge_corners[0]
    e = res.tri.edge(tn, a, b)
    assert len(z2.values) == res.tri.n_edges
    assert z2.values[e] is not None


def _two_tet_config(x, y):
    P = five_points(x, y)
    labels = [(0, 2, 3, 4), (0, 1, 2, 4)]
    tri = Triangulation.from_labelled_tets(labels)
    rank = label_rank(tri, labels)
    branch = total_order_branching(tri, rank)
    z = coboundary(tri, [PSL2C.parabolic(P[rank[v]]) for v in range(tri.n_vertices)])
    return idealize(tri, branch, z, orientation(tri))


def test_ideal_2_3_example_both_paths():
    x, y = 0.3 + 0.2j, 0.5 + 0.5j
    expect = sorted([x, y / x, (1 - x) / (1 - y)], key=abs)
    TI = _two_tet_config(x, y)
    via_points, _ = ideal_transit_2_3(TI, 0, 2)
    TI.points = None
    realized, _ = ideal_transit_2_3(TI, 0, 2)
    for out in (via_points, realized):
        got = sorted([m.w0 for m in out.moduli], key=abs)
        assert np.allclose(got, expect, atol=1e-10)


def test_ideal_2_3_degenerate_configuration_fails():
    with pytest.raises((TransitFails, NotIdealizable)):
        _two_tet_config(0.4 + 0.1j, 0.4 + 0.1j)


def test_d_transits_dominate_i_transits(closed):
    res = move_2_3(closed.tri, 0, 0)
    z2 = cocycle_transit(closed.tri, closed.cocycle, res)
    o2 = transit_orientation(closed.orient, res)
    for k, br in enumerate(transit_branchings(closed.tri, closed.branch, res)):
        direct = idealize(res.tri, br, z2, o2)
        ideal, _ = ideal_transit_2_3(closed.TI, 0, 0, branch_choice=k)
        for a, b in zip(direct.moduli, ideal.moduli):
            assert abs(a.w0 - b.w0) < 1e-8


@pytest.mark.parametrize("faces", [(0, 1), (0, 2), (1, 2)])
def test_ideal_0_2_lune(closed, faces):
    res = move_0_2(closed.tri, 0, 0, 2, *faces)
    o2 = transit_orientation(closed.orient, res)
    z2 = cocycle_transit(closed.tri, closed.cocycle, res)
    for br in transit_branchings(closed.tri, closed.branch, res):
        TI2 = ideal_transit_0_2(closed.TI, res, br)
        new = [t for t in range(res.tri.n_tets) if t not in res.tet_map.values()]
        P, Q = new
        assert TI2.moduli[P].w0 == TI2.moduli[Q].w0
        assert sorted(b_sign(res.tri, o2, br, t) for t in new) == [-1, 1]
        assert check_edge_compat(TI2).ok
        direct = idealize(res.tri, br, z2, o2)
        assert abs(direct.moduli[P].w0 - TI2.moduli[P].w0) < 1e-8
