import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhi.fixtures import closed_fixture, figure_eight, label_rank, simplex_boundary
from qhi.triangulation import (
    Branching,
    IllegalMove,
    NoBranching,
    NotQuasiRegular,
    Triangulation,
    b_sign,
    bubble,
    collapse_edge,
    edge_walk,
    face_io_assignment,
    find_branching,
    hamiltonian_components,
    homology_h1,
    is_hamiltonian,
    is_quasi_regular,
    isomorphic,
    move_0_2,
    move_2_0,
    move_2_3,
    move_3_2,
    orientation,
    total_order_branching,
    validate,
)

# a one-tetrahedron closed manifold whose single edge class pattern admits no branching
ONE_TET = [(0, 0, 0, 1, (1, 2, 3, 0)), (0, 2, 0, 3, (1, 2, 3, 0))]


def euler(tri):
    return tri.n_vertices - tri.n_edges + tri.n_faces - tri.n_tets


def simplex():
    tri, labels = simplex_boundary()
    return tri, label_rank(tri, labels)


def test_simplex_counts_and_validity():
    tri, _ = simplex()
    rep = validate(tri, ideal=False)
    assert rep.ok and rep.closed and rep.orientable
    assert (tri.n_tets, tri.n_faces, tri.n_edges, tri.n_vertices) == (5, 10, 10, 5)
    assert euler(tri) == 0
    assert tri.n_edges - tri.n_vertices == tri.n_tets


def test_unglued_face_is_invalid():
    tri, _ = simplex()
    g = [x for x in tri.gluing_tuples()][1:]
    open_tri = Triangulation.from_gluings(5, g)
    rep = validate(open_tri)
    assert not rep.ok
    assert any("unglued" in p for p in rep.problems)


def test_nonzero_euler_characteristic_is_invalid_as_closed_manifold():
    tri = figure_eight()
    assert euler(tri) != 0
    assert not validate(tri, ideal=False).ok
    assert validate(tri, ideal=True).ok


def test_gluing_must_send_face_to_face():
    with pytest.raises(ValueError):
        Triangulation.from_gluings(2, [(0, 0, 1, 1, (0, 1, 2, 3))])


def test_quasi_regular():
    tri, _ = simplex()
    assert is_quasi_regular(tri)
    assert not is_quasi_regular(figure_eight())


def test_total_order_branching():
    tri, rank = simplex()
    b = total_order_branching(tri, rank)
    assert b.is_valid(tri)
    rev = total_order_branching(tri, [-r for r in rank])
    assert rev.is_valid(tri)
    for t in range(tri.n_tets):
        assert rev.order[t] == tuple(reversed(b.order[t]))
    with pytest.raises(NotQuasiRegular):
        total_order_branching(figure_eight())


def test_find_branching():
    tri, _ = simplex()
    assert find_branching(tri).is_valid(tri)
    fig8 = figure_eight()
    assert find_branching(fig8).is_valid(fig8)


def test_no_branching_fixture_confirmed_by_brute_force():
    tri = Triangulation.from_gluings(1, ONE_TET)
    assert validate(tri).ok
    with pytest.raises(NoBranching):
        find_branching(tri)
    perms = itertools.permutations(range(4))
    assert not any(Branching((p,)).is_valid(tri) for p in perms)


def test_b_sign_parity():
    tri, rank = simplex()
    o = orientation(tri)
    b = total_order_branching(tri, rank)
    signs = [b_sign(tri, o, b, t) for t in range(5)]
    assert all(signs[t] * signs[0] == (-1) ** t for t in range(5))
    # swapping two vertices of one tetrahedron flips its sign
    order = list(b.order)
    v = list(order[0])
    v[0], v[1] = v[1], v[0]
    order[0] = tuple(v)
    assert b_sign(tri, o, Branching(tuple(order)), 0) == -signs[0]


def test_face_roles_are_complementary():
    for tri, o, b in (
        (closed_fixture().tri, closed_fixture().orient, closed_fixture().branch),
        (figure_eight(), orientation(figure_eight()), find_branching(figure_eight())),
    ):
        role = {}
        for t in range(tri.n_tets):
            ins, outs = face_io_assignment(tri, o, b, t)
            for f in ins:
                role.setdefault(tri.face_of[t][f], []).append("in")
            for f in outs:
                role.setdefault(tri.face_of[t][f], []).append("out")
        assert all(sorted(r) == ["in", "out"] for r in role.values())


def test_face_io_convention():
    tri, rank = simplex()
    o = orientation(tri)
    b = total_order_branching(tri, rank)
    for t in range(5):
        v = b.order[t]
        ins, outs = face_io_assignment(tri, o, b, t)
        if b_sign(tri, o, b, t) > 0:
            assert ins == (v[3], v[1]) and outs == (v[2], v[0])
        else:
            assert outs == (v[3], v[1]) and ins == (v[2], v[0])


def test_hamiltonian_checks():
    f = closed_fixture()
    assert is_hamiltonian(f.tri, f.H)
    assert hamiltonian_components(f.tri, f.H) == 1
    assert not is_hamiltonian(f.tri, list(f.H)[:4])


@pytest.mark.parametrize("t,f", [(t, f) for t in range(5) for f in range(4)])
def test_2_3_on_every_face(t, f):
    tri, _ = simplex()
    res = move_2_3(tri, t, f)
    assert res.tri.n_tets == 6
    assert validate(res.tri, ideal=False).ok
    assert euler(res.tri) == 0
    tn, a, b = res.new_edge_corners[0]
    back = move_3_2(res.tri, res.tri.edge(tn, a, b))
    assert isomorphic(back.tri, tri)


def test_3_2_on_H_edge_is_illegal():
    f = closed_fixture()
    res = move_2_3(f.tri, 0, 0)
    emap = res.edge_map(f.tri)
    H = {emap[e] for e in f.H}
    deg3 = [e for e in range(res.tri.n_edges) if len(res.tri.edge_embeddings[e]) == 3]
    on_H = [e for e in deg3 if e in H]
    assert on_H
    with pytest.raises(IllegalMove):
        move_3_2(res.tri, on_H[0], H)


def test_0_2_and_2_0_round_trip():
    tri, _ = simplex()
    res = move_0_2(tri, 0, 0, 2, 0, 1)
    assert res.tri.n_tets == 7 and validate(res.tri, ideal=False).ok
    lune = [e for e in range(res.tri.n_edges) if len(res.tri.edge_embeddings[e]) == 2]
    back = [move_2_0(res.tri, e) for e in lune]
    assert any(isomorphic(r.tri, tri) for r in back)


def test_bubble_adds_vertex_and_splits_H_edge():
    f = closed_fixture()
    res, H2 = bubble(f.tri, 0, 3, f.H, (0, 1))
    assert res.tri.n_vertices == f.tri.n_vertices + 1
    assert len(H2) == len(f.H) + 1
    assert is_hamiltonian(res.tri, H2)
    assert is_quasi_regular(res.tri)
    assert validate(res.tri, ideal=False).ok


def test_bubble_needs_edge_on_face():
    f = closed_fixture()
    with pytest.raises(IllegalMove):
        bubble(f.tri, 0, 0, f.H, (0, 1))


def test_edge_walk_closes():
    tri, _ = simplex()
    for e, emb in enumerate(tri.edge_embeddings):
        t, a, b = emb[0]
        assert len(edge_walk(tri, t, a, b)) == len(emb) == 3


def test_homology():
    tri, _ = simplex()
    assert homology_h1(tri) == (0, ())
    assert homology_h1(figure_eight()) == (1, ())
    lens = Triangulation.from_gluings(1, ONE_TET)
    betti, torsion = homology_h1(lens)
    assert betti == 0 and torsion


def test_collapse_edge_undoes_a_bubble_vertex():
    f = closed_fixture()
    res, _ = bubble(f.tri, 0, 3, f.H, (0, 1))
    tn, vn = res.new_vertex
    v = res.tri.vertex_of[tn][vn]
    ends = [e for e, (a, b) in enumerate(res.tri.edge_endpoints) if v in (a, b)]
    collapsed = []
    for e in ends:
        try:
            collapsed.append(collapse_edge(res.tri, e))
        except ValueError:
            continue
    assert collapsed
    for new in collapsed:
        assert new.n_vertices == f.tri.n_vertices
        assert validate(new, ideal=False).ok
        assert homology_h1(new) == (0, ())


def _random_moves(data, tri, steps):
    for _ in range(steps):
        kind = data.draw(st.sampled_from(["2-3", "3-2"]))
        if kind == "2-3":
            t = data.draw(st.integers(0, tri.n_tets - 1))
            f = data.draw(st.integers(0, 3))
            try:
                tri = move_2_3(tri, t, f).tri
            except IllegalMove:
                continue
        else:
            deg3 = [e for e in range(tri.n_edges) if len(tri.edge_embeddings[e]) == 3]
            if not deg3:
                continue
            e = data.draw(st.sampled_from(deg3))
            try:
                tri = move_3_2(tri, e).tri
            except IllegalMove:
                continue
    return tri


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_pachner_moves_preserve_manifold(data):
    tri, _ = simplex()
    tri = _random_moves(data, tri, 4)
    rep = validate(tri, ideal=False)
    assert rep.ok
    assert euler(tri) == 0
    assert tri.n_edges - tri.n_vertices == tri.n_tets
    assert homology_h1(tri) == (0, ())
    assert orientation(tri) is not None
