"""Singular triangulations of closed or cusped 3-manifolds.

A triangulation is a list of abstract tetrahedra with local vertices 0..3.
Face ``f`` of a tetrahedron is the face opposite local vertex ``f``.  Each
face is glued to a face of some tetrahedron by a vertex permutation
``perm`` (``perm[v]`` is the image of local vertex ``v``; ``perm[f]`` is
the opposite vertex of the partner face).  Edge, face and vertex classes
are derived.  Moves return new objects together with a correspondence.
"""
from __future__ import annotations

import itertools
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

__all__ = [
    "TriangulationError",
    "IllegalMove",
    "NotQuasiRegular",
    "InconsistentOrientation",
    "NoBranching",
    "Triangulation",
    "Branching",
    "ValidationReport",
    "MoveResult",
    "validate",
    "is_quasi_regular",
    "orientation",
    "total_order_branching",
    "find_branching",
    "b_sign",
    "face_io_assignment",
    "is_hamiltonian",
    "move_2_3",
    "move_3_2",
    "move_0_2",
    "move_2_0",
    "collapse_edge",
    "bubble",
    "isomorphic",
    "canonical_form",
    "edge_walk",
    "homology_h1",
    "hamiltonian_components",
    "perm_sign",
]

Perm = tuple[int, int, int, int]
IDENTITY: Perm = (0, 1, 2, 3)

# local edges in a fixed order
LOCAL_EDGES = tuple(itertools.combinations(range(4), 2))


class TriangulationError(ValueError):
    pass


class IllegalMove(TriangulationError):
    pass


class NotQuasiRegular(TriangulationError):
    pass


class InconsistentOrientation(TriangulationError):
    pass


class NoBranching(TriangulationError):
    pass


def perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def perm_inverse(perm: Sequence[int]) -> Perm:
    inv = [0] * 4
    for i, v in enumerate(perm):
        inv[v] = i
    return tuple(inv)


def perm_compose(outer: Sequence[int], inner: Sequence[int]) -> Perm:
    """(outer o inner)[i] = outer[inner[i]]."""
    return tuple(outer[inner[i]] for i in range(4))


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


class Triangulation:
    """Immutable gluing data plus lazily derived classes.

    ``adj[t][f]`` is ``(t2, perm)`` or ``None`` for an unglued face.
    """

    def __init__(self, adj: Sequence[Sequence[tuple[int, Perm] | None]]):
        self.adj: tuple[tuple[tuple[int, Perm] | None, ...], ...] = tuple(
            tuple(None if g is None else (int(g[0]), tuple(int(v) for v in g[1])) for g in row)
            for row in adj
        )

    # -- construction -------------------------------------------------------

    @classmethod
    def from_gluings(cls, n_tets: int, gluings: Iterable[tuple]) -> "Triangulation":
        """Build from tuples (tet_a, face_a, tet_b, face_b, perm)."""
        adj: list[list] = [[None] * 4 for _ in range(n_tets)]
        for ta, fa, tb, fb, perm in gluings:
            perm = tuple(perm)
            if perm[fa] != fb:
                raise TriangulationError(f"perm does not send face {fa} to {fb}")
            for t, f, g in ((ta, fa, (tb, perm)), (tb, fb, (ta, perm_inverse(perm)))):
                if adj[t][f] is not None and adj[t][f] != g:
                    raise TriangulationError(f"face ({t},{f}) glued twice")
                adj[t][f] = g
        return cls(adj)

    @classmethod
    def from_labelled_tets(cls, tets: Sequence[Sequence]) -> "Triangulation":
        """Glue tetrahedra given as 4-tuples of vertex labels along equal faces.

        Each 3-set of labels must occur in at most two tetrahedra.  Local
        vertex ``i`` of tetrahedron ``t`` carries label ``tets[t][i]``.
        """
        faces: dict = defaultdict(list)
        for t, labels in enumerate(tets):
            if len(set(labels)) != 4:
                raise TriangulationError(f"tetrahedron {t} repeats a label")
            for f in range(4):
                key = frozenset(labels[i] for i in range(4) if i != f)
                faces[key].append((t, f))
        adj: list[list] = [[None] * 4 for _ in tets]
        for key, occ in faces.items():
            if len(occ) > 2:
                raise TriangulationError(f"face {sorted(key)} occurs {len(occ)} times")
            if len(occ) == 2:
                (ta, fa), (tb, fb) = occ
                pos_b = {lab: i for i, lab in enumerate(tets[tb])}
                perm = tuple(pos_b[tets[ta][i]] if i != fa else fb for i in range(4))
                adj[ta][fa] = (tb, perm)
                adj[tb][fb] = (ta, perm_inverse(perm))
        return cls(adj)

    def gluing_tuples(self) -> list[tuple]:
        out = []
        for t, row in enumerate(self.adj):
            for f, g in enumerate(row):
                if g is None:
                    continue
                t2, perm = g
                if (t, f) <= (t2, perm[f]):
                    out.append((t, f, t2, perm[f], perm))
        return out

    def __len__(self) -> int:
        return len(self.adj)

    @property
    def n_tets(self) -> int:
        return len(self.adj)

    def __repr__(self) -> str:
        return (
            f"Triangulation(tets={self.n_tets}, faces={self.n_faces}, "
            f"edges={self.n_edges}, vertices={self.n_vertices})"
        )

    # -- derived classes ----------------------------------------------------

    @cached_property
    def _vertex_uf(self):
        uf = _UnionFind()
        for t in range(self.n_tets):
            for v in range(4):
                uf.add((t, v))
        for t, row in enumerate(self.adj):
            for f, g in enumerate(row):
                if g is None:
                    continue
                t2, perm = g
                for v in range(4):
                    if v != f:
                        uf.union((t, v), (t2, perm[v]))
        return uf

    @cached_property
    def vertex_of(self) -> tuple[tuple[int, ...], ...]:
        """vertex_of[t][v] = vertex class id, numbered by first appearance."""
        uf = self._vertex_uf
        ids: dict = {}
        out = []
        for t in range(self.n_tets):
            row = []
            for v in range(4):
                r = uf.find((t, v))
                row.append(ids.setdefault(r, len(ids)))
            out.append(tuple(row))
        return tuple(out)

    @property
    def n_vertices(self) -> int:
        return 1 + max((max(r) for r in self.vertex_of), default=-1)

    @cached_property
    def _edge_data(self):
        # union (t, a, b) ordered pairs; track orientation relative to root
        parent: dict = {}
        flip: dict = {}

        def find(x):
            # returns (root, orientation of x relative to root)
            o = 0
            path = []
            while parent[x] != x:
                path.append(x)
                o ^= flip[x]
                x = parent[x]
            root = x
            # path compression with orientation bookkeeping
            acc = o
            for y in path:
                fy = flip[y]
                parent[y] = root
                flip[y] = acc
                acc ^= fy
            return root, o

        for t in range(self.n_tets):
            for a, b in LOCAL_EDGES:
                parent[(t, a, b)] = (t, a, b)
                flip[(t, a, b)] = 0
        reversed_self = []
        for t, row in enumerate(self.adj):
            for f, g in enumerate(row):
                if g is None:
                    continue
                t2, perm = g
                for a, b in LOCAL_EDGES:
                    if f in (a, b):
                        continue
                    a2, b2 = perm[a], perm[b]
                    rel = 0
                    if a2 > b2:
                        a2, b2 = b2, a2
                        rel = 1
                    ra, oa = find((t, a, b))
                    rb, ob = find((t2, a2, b2))
                    if ra == rb:
                        if oa ^ ob ^ rel:
                            reversed_self.append(ra)
                        continue
                    if rb < ra:
                        ra, rb, oa, ob = rb, ra, ob, oa
                    parent[rb] = ra
                    flip[rb] = oa ^ ob ^ rel
        ids: dict = {}
        edge_of = []
        edge_dir = []
        for t in range(self.n_tets):
            row, drow = {}, {}
            for a, b in LOCAL_EDGES:
                r, o = find((t, a, b))
                row[(a, b)] = ids.setdefault(r, len(ids))
                drow[(a, b)] = o
            edge_of.append(row)
            edge_dir.append(drow)
        bad = {ids[find(r)[0]] for r in reversed_self}
        return edge_of, edge_dir, bad

    def edge(self, t: int, a: int, b: int) -> int:
        """Edge class of local edge (a, b) of tetrahedron t."""
        if a > b:
            a, b = b, a
        return self._edge_data[0][t][(a, b)]

    def edge_direction(self, t: int, a: int, b: int) -> int:
        """+1 if local a->b agrees with the class reference direction, else -1."""
        sgn = 1
        if a > b:
            a, b = b, a
            sgn = -1
        return sgn * (1 - 2 * self._edge_data[1][t][(a, b)])

    @property
    def n_edges(self) -> int:
        return 1 + max((max(r.values()) for r in self._edge_data[0]), default=-1)

    @cached_property
    def edge_embeddings(self) -> tuple[tuple[tuple[int, int, int], ...], ...]:
        """For each edge class, the local edges (t, a, b) with a < b."""
        emb = [[] for _ in range(self.n_edges)]
        for t in range(self.n_tets):
            for a, b in LOCAL_EDGES:
                emb[self.edge(t, a, b)].append((t, a, b))
        return tuple(tuple(e) for e in emb)

    def edge_valence(self, e: int) -> int:
        return len(self.edge_embeddings[e])

    @cached_property
    def edge_endpoints(self) -> tuple[tuple[int, int], ...]:
        """Vertex classes at the reference tail and head of each edge."""
        out = []
        for e, emb in enumerate(self.edge_embeddings):
            t, a, b = emb[0]
            if self.edge_direction(t, a, b) < 0:
                a, b = b, a
            out.append((self.vertex_of[t][a], self.vertex_of[t][b]))
        return tuple(out)

    @cached_property
    def face_of(self) -> tuple[tuple[int, ...], ...]:
        ids: dict = {}
        out = []
        for t, row in enumerate(self.adj):
            r = []
            for f, g in enumerate(row):
                key = (t, f) if g is None else min((t, f), (g[0], g[1][f]))
                r.append(ids.setdefault(key, len(ids)))
            out.append(tuple(r))
        return tuple(out)

    @property
    def n_faces(self) -> int:
        return 1 + max((max(r) for r in self.face_of), default=-1)

    def is_closed(self) -> bool:
        return all(g is not None for row in self.adj for g in row)

    def dual_graph(self) -> list[tuple[int, int, int]]:
        """Dual edges (face id, t, t2) with t, t2 the incident tetrahedra."""
        seen = set()
        out = []
        for t, row in enumerate(self.adj):
            for f, g in enumerate(row):
                fid = self.face_of[t][f]
                if g is None or fid in seen:
                    continue
                seen.add(fid)
                out.append((fid, t, g[0]))
        return out

    @cached_property
    def vertex_link_euler(self) -> tuple[int, ...]:
        """Euler characteristic of the link of each vertex class."""
        nv = self.n_vertices
        tri = [0] * nv
        edges = [0] * nv
        uf = _UnionFind()
        for t in range(self.n_tets):
            for v in range(4):
                cls_ = self.vertex_of[t][v]
                tri[cls_] += 1
                for u in range(4):
                    if u != v:
                        uf.add((t, v, u))
        for t, row in enumerate(self.adj):
            for f, g in enumerate(row):
                for v in range(4):
                    if v == f:
                        continue
                    if g is None:
                        edges[self.vertex_of[t][v]] += 2  # boundary edge counted once below
                        continue
                    t2, perm = g
                    edges[self.vertex_of[t][v]] += 1
                    for u in range(4):
                        if u != v and u != f:
                            uf.union((t, v, u), (t2, perm[v], perm[u]))
        verts = [set() for _ in range(nv)]
        for t in range(self.n_tets):
            for v in range(4):
                for u in range(4):
                    if u != v:
                        verts[self.vertex_of[t][v]].add(uf.find((t, v, u)))
        return tuple(len(verts[i]) - edges[i] // 2 + tri[i] for i in range(nv))


# ----------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    ok: bool
    closed: bool
    ideal: bool
    orientable: bool
    vertex_link_euler: tuple[int, ...]
    problems: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _check_pairing(tri: Triangulation) -> list[str]:
    problems = []
    for t, row in enumerate(tri.adj):
        for f, g in enumerate(row):
            if g is None:
                continue
            t2, perm = g
            if sorted(perm) != [0, 1, 2, 3]:
                problems.append(f"({t},{f}) has a non-permutation")
                continue
            if not 0 <= t2 < tri.n_tets:
                problems.append(f"({t},{f}) points outside")
                continue
            back = tri.adj[t2][perm[f]]
            if back is None or back[0] != t or tuple(back[1]) != perm_inverse(perm):
                problems.append(f"gluing ({t},{f}) is not symmetric")
            if t2 == t and perm[f] == f:
                problems.append(f"face ({t},{f}) glued to itself")
    return problems


def orientation(tri: Triangulation) -> tuple[int, ...] | None:
    """A sign per tetrahedron making every gluing orientation reversing.

    Returns None for non-orientable gluings.  Tetrahedron 0 of each
    component gets +1.
    """
    sign = [0] * tri.n_tets
    for start in range(tri.n_tets):
        if sign[start]:
            continue
        sign[start] = 1
        queue = deque([start])
        while queue:
            t = queue.popleft()
            for g in tri.adj[t]:
                if g is None:
                    continue
                t2, perm = g
                want = -perm_sign(perm) * sign[t]
                if sign[t2] == 0:
                    sign[t2] = want
                    queue.append(t2)
                elif sign[t2] != want:
                    return None
    return tuple(sign)


def validate(tri: Triangulation, ideal: bool | None = None) -> ValidationReport:
    """Check gluing consistency, edge/vertex links and orientability.

    With ``ideal=None`` vertices may have sphere (finite) or torus (cusp)
    links; ``ideal=True`` requires all torus links, ``False`` all spheres.
    """
    problems = _check_pairing(tri)
    if problems:
        return ValidationReport(False, False, False, False, (), problems)
    closed = tri.is_closed()
    if not closed:
        problems.append("unglued faces present")
    if tri._edge_data[2]:
        problems.append(f"edges identified with themselves reversed: {sorted(tri._edge_data[2])}")
    chi = tri.vertex_link_euler
    orient = orientation(tri)
    if orient is None:
        problems.append("non-orientable")
    spheres = all(c == 2 for c in chi)
    tori = all(c == 0 for c in chi)
    if closed:
        if ideal is True and not tori:
            problems.append("vertex links are not all tori")
        if ideal is False and not spheres:
            problems.append("vertex links are not all spheres")
        if ideal is None and not all(c in (0, 2) for c in chi):
            problems.append("vertex link neither sphere nor torus")
    return ValidationReport(not problems, closed, tori and closed, orient is not None, chi, problems)


def is_quasi_regular(tri: Triangulation) -> bool:
    """Every edge joins two distinct vertex classes."""
    return all(a != b for a, b in tri.edge_endpoints)


# ----------------------------------------------------------------------------
# branchings


@dataclass(frozen=True)
class Branching:
    """order[t] lists the local vertices of tetrahedron t as (v0, v1, v2, v3)."""

    order: tuple[tuple[int, int, int, int], ...]

    def position(self, t: int, v: int) -> int:
        return self.order[t].index(v)

    def is_valid(self, tri: Triangulation) -> bool:
        if len(self.order) != tri.n_tets:
            return False
        for t, row in enumerate(tri.adj):
            if sorted(self.order[t]) != [0, 1, 2, 3]:
                return False
            for f, g in enumerate(row):
                if g is None:
                    continue
                t2, perm = g
                shared = [v for v in range(4) if v != f]
                here = sorted(shared, key=lambda v: self.position(t, v))
                there = sorted(shared, key=lambda v: self.position(t2, perm[v]))
                if here != there:
                    return False
        return True


def total_order_branching(tri: Triangulation, rank: Sequence[int] | None = None) -> Branching:
    """Branching induced by a total order on vertex classes (default: by id)."""
    if not is_quasi_regular(tri):
        raise NotQuasiRegular("an edge has coinciding endpoints")
    rank = list(range(tri.n_vertices)) if rank is None else list(rank)
    order = []
    for t in range(tri.n_tets):
        vs = tri.vertex_of[t]
        order.append(tuple(sorted(range(4), key=lambda v: rank[vs[v]])))
    return Branching(tuple(order))


def _branching_from_orientation(tri: Triangulation, edge_sign: Sequence[int]) -> Branching:
    order = []
    for t in range(tri.n_tets):
        out_deg = [0] * 4
        for a, b in LOCAL_EDGES:
            if edge_sign[tri.edge(t, a, b)] * tri.edge_direction(t, a, b) > 0:
                out_deg[a] += 1
            else:
                out_deg[b] += 1
        order.append(tuple(sorted(range(4), key=lambda v: -out_deg[v])))
    return Branching(tuple(order))


def find_branching(tri: Triangulation, exclude: Iterable[Branching] = ()) -> Branching:
    """Backtracking search for an edge orientation with no cyclic face.

    Branchings listed in ``exclude`` are skipped, which lets callers ask for
    a second, distinct branching.
    """
    excluded = {b.order for b in exclude}
    n = tri.n_edges
    # each face of each tetrahedron as three (edge class, local direction) triples
    face_constraints = []
    edge_faces = defaultdict(list)
    for t in range(tri.n_tets):
        for f in range(4):
            a, b, c = [v for v in range(4) if v != f]
            cons = []
            for u, v in ((a, b), (b, c), (c, a)):
                cons.append((tri.edge(t, u, v), tri.edge_direction(t, u, v)))
            idx = len(face_constraints)
            face_constraints.append(cons)
            for e, _ in cons:
                edge_faces[e].append(idx)
    sign = [0] * n
    # order edges by descending constraint count for early pruning
    order = sorted(range(n), key=lambda e: -len(edge_faces[e]))

    def face_ok(idx):
        vals = []
        for e, d in face_constraints[idx]:
            if sign[e] == 0:
                return True
            vals.append(sign[e] * d)
        return not (vals[0] == vals[1] == vals[2])

    def rec(k):
        if k == n:
            br = _branching_from_orientation(tri, sign)
            if br.order in excluded or not br.is_valid(tri):
                return None
            return br
        e = order[k]
        for s in (1, -1):
            sign[e] = s
            if all(face_ok(i) for i in edge_faces[e]):
                res = rec(k + 1)
                if res is not None:
                    return res
        sign[e] = 0
        return None

    res = rec(0)
    if res is None:
        raise NoBranching("no branching exists (beyond the excluded ones)")
    return res


def b_sign(tri: Triangulation, orient: Sequence[int], branch: Branching, t: int) -> int:
    """+1 when the branching order of t agrees with the ambient orientation."""
    return orient[t] * perm_sign(branch.order[t])


def check_orientation(tri: Triangulation, orient: Sequence[int]) -> None:
    for t, row in enumerate(tri.adj):
        for g in row:
            if g is None:
                continue
            t2, perm = g
            if orient[t2] != -perm_sign(perm) * orient[t]:
                raise InconsistentOrientation(f"tetrahedra {t} and {t2} disagree")


def face_io_assignment(tri: Triangulation, orient: Sequence[int], branch: Branching, t: int):
    """Faces feeding the tensor of t: ((I1, I2), (O1, O2)) as local face indices.

    Positive tetrahedra read the faces opposite v3 and v1 as inputs and
    those opposite v2 and v0 as outputs; negative ones the other way round.
    """
    v = branch.order[t]
    pair_a = (v[3], v[1])
    pair_b = (v[2], v[0])
    if b_sign(tri, orient, branch, t) > 0:
        return pair_a, pair_b
    return pair_b, pair_a


def is_hamiltonian(tri: Triangulation, H: Iterable[int]) -> bool:
    """H is a set of edge classes forming disjoint cycles through every vertex."""
    H = set(H)
    deg = defaultdict(int)
    for e in H:
        a, b = tri.edge_endpoints[e]
        if a == b:
            return False
        deg[a] += 1
        deg[b] += 1
    return len(deg) == tri.n_vertices and all(d == 2 for d in deg.values())


def hamiltonian_components(tri: Triangulation, H: Iterable[int]) -> int:
    uf = _UnionFind()
    for v in range(tri.n_vertices):
        uf.add(v)
    for e in H:
        a, b = tri.edge_endpoints[e]
        uf.union(a, b)
    return len({uf.find(v) for v in range(tri.n_vertices)})


# ----------------------------------------------------------------------------
# moves


@dataclass
class MoveResult:
    """Outcome of a move.

    ``tet_map`` sends surviving old tetrahedra to their new index.
    ``new_tets`` lists the created tetrahedra.  ``corner_links`` and
    ``edge_links`` tie local corners/edges of created tetrahedra to old
    corners/edges, so vertex and edge data can be carried across.
    """

    tri: Triangulation
    tet_map: dict[int, int]
    new_tets: list[int]
    corner_links: list[tuple[tuple[int, int], tuple[int, int]]]
    edge_links: list[tuple[tuple[int, int, int], tuple[int, int, int]]]
    new_vertex: tuple[int, int] | None = None  # a corner of the created vertex
    new_edge_corners: list[tuple[int, int, int]] = field(default_factory=list)

    def vertex_map(self, old: Triangulation) -> dict[int, int]:
        """Old vertex class -> new vertex class."""
        out = {}
        for t_old, t_new in self.tet_map.items():
            for v in range(4):
                out[old.vertex_of[t_old][v]] = self.tri.vertex_of[t_new][v]
        for (tn, vn), (to, vo) in self.corner_links:
            out.setdefault(old.vertex_of[to][vo], self.tri.vertex_of[tn][vn])
        return out

    def edge_map(self, old: Triangulation) -> dict[int, int]:
        """Old edge class -> a new edge class carrying it (if it survives)."""
        out = {}
        for t_old, t_new in self.tet_map.items():
            for a, b in LOCAL_EDGES:
                out.setdefault(old.edge(t_old, a, b), self.tri.edge(t_new, a, b))
        for (tn, an, bn), (to, ao, bo) in self.edge_links:
            out.setdefault(old.edge(to, ao, bo), self.tri.edge(tn, an, bn))
        return out


def _replace(tri: Triangulation, removed: dict[int, tuple], new_labels: list[tuple], skip_faces: set):
    """Swap the tetrahedra in ``removed`` (tet -> 4 labels) for new ones.

    Labels identify configuration vertices.  Faces of new tetrahedra are
    glued to each other when their label sets match, and otherwise take
    over the outer gluing of the removed face with the same label set.
    ``skip_faces`` are removed faces interior to the old configuration.
    """
    keep = [t for t in range(tri.n_tets) if t not in removed]
    tet_map = {t: i for i, t in enumerate(keep)}
    base = len(keep)
    new_ids = list(range(base, base + len(new_labels)))

    face_by_labels: dict = {}
    for t, labels in removed.items():
        for f in range(4):
            if (t, f) in skip_faces:
                continue
            key = frozenset(labels[i] for i in range(4) if i != f)
            if key in face_by_labels:
                raise IllegalMove("configuration faces are not distinct")
            face_by_labels[key] = (t, f)

    new_faces: dict = defaultdict(list)
    for k, labels in enumerate(new_labels):
        for g in range(4):
            new_faces[frozenset(labels[i] for i in range(4) if i != g)].append((base + k, g))

    # where each removed outer face went: (new tet, new face, map old local -> new local)
    replaced = {}
    for key, occ in new_faces.items():
        if len(occ) == 1:
            if key not in face_by_labels:
                raise IllegalMove("a new face has no counterpart")
            tn, g = occ[0]
            to, fo = face_by_labels[key]
            lab_new = new_labels[tn - base]
            pos_new = {lab: i for i, lab in enumerate(lab_new)}
            lab_old = removed[to]
            m = tuple(pos_new[lab_old[v]] if v != fo else g for v in range(4))
            replaced[(to, fo)] = (tn, g, m)

    adj = [[None] * 4 for _ in range(base + len(new_labels))]
    for t in keep:
        for f, gl in enumerate(tri.adj[t]):
            if gl is None:
                continue
            t2, perm = gl
            if t2 in removed:
                tn, g, m = replaced[(t2, perm[f])]
                adj[tet_map[t]][f] = (tn, perm_compose(m, perm))
            else:
                adj[tet_map[t]][f] = (tet_map[t2], perm)
    for key, occ in new_faces.items():
        if len(occ) == 2:
            (ta, fa), (tb, fb) = occ
            la, lb = new_labels[ta - base], new_labels[tb - base]
            pos_b = {lab: i for i, lab in enumerate(lb)}
            perm = tuple(pos_b[la[i]] if i != fa else fb for i in range(4))
            adj[ta][fa] = (tb, perm)
            adj[tb][fb] = (ta, perm_inverse(perm))
        elif len(occ) > 2:
            raise IllegalMove("label face used more than twice")
    for (to, fo), (tn, g, m) in replaced.items():
        gl = tri.adj[to][fo]
        if gl is None:
            continue
        t2, perm = gl
        if t2 in removed:
            tn2, g2, m2 = replaced[(t2, perm[fo])]
            # new local -> old local -> partner old local -> partner new local
            inv_m = perm_inverse(m)
            adj[tn][g] = (tn2, tuple(m2[perm[inv_m[i]]] for i in range(4)))
        else:
            inv_m = perm_inverse(m)
            adj[tn][g] = (tet_map[t2], tuple(perm[inv_m[i]] for i in range(4)))

    corner_links = []
    edge_links = []
    for k, labels in enumerate(new_labels):
        for i, lab in enumerate(labels):
            for to, lo in removed.items():
                if lab in lo:
                    corner_links.append(((base + k, i), (to, lo.index(lab))))
                    break
        for i, j in LOCAL_EDGES:
            for to, lo in removed.items():
                if labels[i] in lo and labels[j] in lo:
                    edge_links.append(((base + k, i, j), (to, lo.index(labels[i]), lo.index(labels[j]))))
                    break
    return Triangulation(adj), tet_map, new_ids, corner_links, edge_links


def move_2_3(tri: Triangulation, t: int, f: int) -> MoveResult:
    """Replace the two tetrahedra meeting at face (t, f) by three."""
    gl = tri.adj[t][f]
    if gl is None:
        raise IllegalMove("face is unglued")
    t2, perm = gl
    if t2 == t:
        raise IllegalMove("face is glued to its own tetrahedron")
    others = [v for v in range(4) if v != f]
    lab1 = [None] * 4
    lab2 = [None] * 4
    for k, v in enumerate(others):
        lab1[v] = k
        lab2[perm[v]] = k
    lab1[f] = 3
    lab2[perm[f]] = 4
    new_labels = [(0, 1, 3, 4), (1, 2, 3, 4), (0, 2, 3, 4)]
    res = _replace(tri, {t: tuple(lab1), t2: tuple(lab2)}, new_labels, {(t, f), (t2, perm[f])})
    out = MoveResult(*res)
    base = out.new_tets[0]
    out.new_edge_corners = [(base, 2, 3)]
    return out


def edge_walk(tri: Triangulation, t: int, a: int, b: int) -> list[tuple[int, int, int, int, int]]:
    """Tetrahedra around an edge as (tet, a, b, c, d).

    The walk leaves each tetrahedron through the face opposite c (which
    contains a, b, d) and arrives with the image of d as the next c.
    """
    c, d = [v for v in range(4) if v not in (a, b)]
    start = (t, a, b, c, d)
    out = [start]
    cur = start
    for _ in range(6 * tri.n_tets + 6):
        tt, aa, bb, cc, dd = cur
        gl = tri.adj[tt][cc]
        if gl is None:
            raise IllegalMove("edge meets the boundary")
        t2, perm = gl
        na, nb, nc = perm[aa], perm[bb], perm[dd]
        nd = perm[cc]
        nxt = (t2, na, nb, nc, nd)
        if (t2, na, nb) == (t, a, b) or (t2, nb, na) == (t, a, b):
            if (t2, na, nb) != (t, a, b):
                raise IllegalMove("edge is identified with itself reversed")
            return out
        out.append(nxt)
        cur = nxt
    raise TriangulationError("edge walk did not close")


def move_3_2(tri: Triangulation, e: int, H: Iterable[int] = ()) -> MoveResult:
    """Remove an edge of valence three lying in three distinct tetrahedra.

    The removed edge may not belong to H.
    """
    if e in set(H):
        raise IllegalMove("the removed edge belongs to H")
    t, a, b = tri.edge_embeddings[e][0]
    walk = edge_walk(tri, t, a, b)
    if len(walk) != 3 or len({w[0] for w in walk}) != 3:
        raise IllegalMove("edge must have valence 3 in three distinct tetrahedra")
    removed = {}
    # labels: edge ends 3 and 4, outer vertices 0, 1, 2 around the edge
    for k, (tt, aa, bb, cc, dd) in enumerate(walk):
        lab = [None] * 4
        lab[aa], lab[bb] = 3, 4
        lab[cc] = k
        lab[dd] = (k + 1) % 3
        removed[tt] = tuple(lab)
    skip = set()
    for tt, aa, bb, cc, dd in walk:
        skip.add((tt, cc))
        skip.add((tt, dd))
    res = _replace(tri, removed, [(0, 1, 2, 3), (0, 1, 2, 4)], skip)
    return MoveResult(*res)


def _unglue_and_insert(tri: Triangulation, extra: int):
    adj = [list(row) for row in tri.adj] + [[None] * 4 for _ in range(extra)]
    return adj


def _set(adj, t, f, t2, perm):
    adj[t][f] = (t2, tuple(perm))
    adj[t2][perm[f]] = (t, perm_inverse(perm))


def move_0_2(tri: Triangulation, t: int, a: int, b: int, i: int, j: int, H: Iterable[int] = ()) -> MoveResult:
    """Open the two faces i < j of the walk around edge (t, a, b) and insert a lune.

    Face k of the walk is the face crossed when leaving walk entry k.  The
    new tetrahedra P, Q have local vertices (A, B, C, D) = (a, b, third
    vertex of face i, third vertex of face j) and are glued to each other
    along the faces opposite A and B.
    """
    walk = edge_walk(tri, t, a, b)
    k = len(walk)
    if not (0 <= i < j < k):
        raise IllegalMove("need 0 <= i < j < valence")
    if tri.edge(t, a, b) in set(H):
        raise IllegalMove("cannot split an edge of H")
    ti, ai, bi, ci, di = walk[i]
    tj, aj, bj, cj, dj = walk[j]
    if tri.face_of[ti][ci] == tri.face_of[tj][cj]:
        raise IllegalMove("the two faces coincide")
    yi_t, yi_perm = tri.adj[ti][ci]
    yj_t, yj_perm = tri.adj[tj][cj]
    n = tri.n_tets
    P, Q = n, n + 1
    adj = _unglue_and_insert(tri, 2)
    # P faces the wedge i+1..j, Q the wedge j+1..i
    _set(adj, P, 3, yi_t, (yi_perm[ai], yi_perm[bi], yi_perm[di], yi_perm[ci]))
    _set(adj, P, 2, tj, (aj, bj, cj, dj))
    _set(adj, Q, 3, ti, (ai, bi, di, ci))
    _set(adj, Q, 2, yj_t, (yj_perm[aj], yj_perm[bj], yj_perm[cj], yj_perm[dj]))
    _set(adj, P, 0, Q, IDENTITY)
    _set(adj, P, 1, Q, IDENTITY)
    new = Triangulation(adj)
    tet_map = {s: s for s in range(n)}
    corner_links = [
        ((P, 0), (ti, ai)), ((P, 1), (ti, bi)), ((P, 2), (ti, di)), ((P, 3), (tj, dj)),
        ((Q, 0), (ti, ai)), ((Q, 1), (ti, bi)), ((Q, 2), (ti, di)), ((Q, 3), (tj, dj)),
    ]
    return MoveResult(new, tet_map, [P, Q], corner_links, [], None, [(P, 2, 3)])


def move_2_0(tri: Triangulation, e: int, H: Iterable[int] = ()) -> MoveResult:
    """Collapse a lune: an edge of valence two in two distinct tetrahedra.

    The removed edge may not belong to H.
    """
    if e in set(H):
        raise IllegalMove("the removed edge belongs to H")
    t, a, b = tri.edge_embeddings[e][0]
    walk = edge_walk(tri, t, a, b)
    if len(walk) != 2 or walk[0][0] == walk[1][0]:
        raise IllegalMove("edge must have valence 2 in two distinct tetrahedra")
    (P, pa, pb, pc, pd), (Q, qa, qb, qc, qd) = walk
    # faces of P and Q not containing the edge: opposite pa and pb (resp. qa, qb)
    # P's vertex pc corresponds to Q's qd (crossing P's face opp pc lands with pd->qc ...)
    gl = tri.adj[P][pc]
    _, perm_pq = gl  # P local -> Q local across the face opposite pc
    gl2 = tri.adj[P][pd]
    if gl2 is None or gl2[0] != Q:
        raise IllegalMove("not a lune")
    _, perm_pq2 = gl2
    # the vertex correspondence between P and Q: shared vertices pa, pb, and
    # pd via perm_pq, pc via perm_pq2
    corr = [None] * 4
    corr[pa] = perm_pq[pa]
    corr[pb] = perm_pq[pb]
    corr[pd] = perm_pq[pd]
    corr[pc] = perm_pq2[pc]
    if perm_pq2[pa] != corr[pa] or perm_pq2[pb] != corr[pb] or sorted(corr) != [0, 1, 2, 3]:
        raise IllegalMove("lune faces are glued inconsistently")
    outer = []
    for v in (pa, pb):
        gp = tri.adj[P][v]
        gq = tri.adj[Q][corr[v]]
        if gp is None or gq is None:
            raise IllegalMove("lune meets the boundary")
        if gp[0] in (P, Q) or gq[0] in (P, Q):
            raise IllegalMove("lune is glued to itself")
        outer.append((gp, gq))
    e1 = tri.edge(P, pc, pd)
    e2 = tri.edge(Q, corr[pc], corr[pd])
    if e1 == e2:
        raise IllegalMove("the two opposite edges coincide")
    keep = [s for s in range(tri.n_tets) if s not in (P, Q)]
    tet_map = {s: i for i, s in enumerate(keep)}
    adj = [[None] * 4 for _ in keep]
    for s in keep:
        for f, g in enumerate(tri.adj[s]):
            if g is not None and g[0] not in (P, Q):
                adj[tet_map[s]][f] = (tet_map[g[0]], g[1])
    for v, ((xp, permx), (yq, permy)) in zip((pa, pb), outer):
        # x local -> P local -> Q local -> y local
        inv_x = perm_inverse(permx)
        fx = permx[v]
        m = tuple(permy[corr[inv_x[i]]] for i in range(4))
        adj[tet_map[xp]][fx] = (tet_map[yq], m)
        adj[tet_map[yq]][m[fx]] = (tet_map[xp], perm_inverse(m))
    new = Triangulation(adj)
    if _check_pairing(new) or new._edge_data[2]:
        raise IllegalMove("collapse would produce an invalid triangulation")
    return MoveResult(new, tet_map, [], [], [])


def collapse_edge(tri: Triangulation, e: int) -> Triangulation:
    """Shrink edge e to a point, flattening every tetrahedron around it.

    Needs distinct endpoints with at least one finite (sphere link), e
    embedded once per tetrahedron, and no cycles among the edge and face
    identifications the flattening causes; under these conditions the
    underlying manifold is unchanged.
    """
    u, v = tri.edge_endpoints[e]
    if u == v:
        raise IllegalMove("edge is a loop")
    chi = tri.vertex_link_euler
    if chi[u] != 2 and chi[v] != 2:
        raise IllegalMove("both endpoints are ideal")
    emb = tri.edge_embeddings[e]
    flat = {}
    for t, a, b in emb:
        if t in flat:
            raise IllegalMove("edge occurs twice in one tetrahedron")
        flat[t] = (a, b)
    edges, faces = _UnionFind(), _UnionFind()
    seen_faces = set()
    for t, (a, b) in flat.items():
        fa, fb = tri.face_of[t][a], tri.face_of[t][b]
        faces.add(fa)
        faces.add(fb)
        if faces.find(fa) == faces.find(fb):
            raise IllegalMove("flattening would identify a face with itself")
        faces.union(fa, fb)
        for c in range(4):
            if c in (a, b):
                continue
            d = 6 - a - b - c
            fid = tri.face_of[t][d]
            if fid in seen_faces:
                continue
            seen_faces.add(fid)
            ea, eb = tri.edge(t, a, c), tri.edge(t, b, c)
            edges.add(ea)
            edges.add(eb)
            if edges.find(ea) == edges.find(eb):
                raise IllegalMove("flattening would identify an edge with itself")
            edges.union(ea, eb)
    keep = [t for t in range(tri.n_tets) if t not in flat]
    index = {t: i for i, t in enumerate(keep)}
    adj = [[None] * 4 for _ in keep]
    for t in keep:
        for f, g in enumerate(tri.adj[t]):
            if g is None:
                continue
            t2, perm = g
            steps = 0
            while t2 in flat:
                a, b = flat[t2]
                g2 = perm[f]
                if g2 not in (a, b):
                    raise IllegalMove("kept face meets the collapsed edge")
                swap = list(range(4))
                swap[a], swap[b] = b, a
                perm = tuple(swap[perm[i]] for i in range(4))
                nxt = tri.adj[t2][perm[f]]
                if nxt is None:
                    raise IllegalMove("collapse reaches the boundary")
                t2, p2 = nxt
                perm = perm_compose(p2, perm)
                steps += 1
                if steps > 4 * tri.n_tets:
                    raise IllegalMove("face chase does not terminate")
            adj[index[t]][f] = (index[t2], perm)
    new = Triangulation(adj)
    if _check_pairing(new) or new._edge_data[2]:
        raise IllegalMove("collapse would produce an invalid triangulation")
    chi_new = sorted(new.vertex_link_euler)
    chi_old = sorted(chi)
    chi_old.remove(2)
    if chi_new != chi_old:
        raise IllegalMove("collapse changes the vertex links")
    return new


def bubble(tri: Triangulation, t: int, f: int, H: Iterable[int], h_edge: tuple[int, int]):
    """Insert a pillow with a new interior vertex at face (t, f).

    ``h_edge`` is a local edge of the face lying in H.  Returns the move
    result and the new edge set H' (the H-edge replaced by the two edges
    through the new vertex).
    """
    H = set(H)
    a, b = h_edge
    if f in (a, b) or a == b:
        raise IllegalMove("the H-edge must lie on the chosen face")
    old_h = tri.edge(t, a, b)
    if old_h not in H:
        raise IllegalMove("the chosen edge is not in H")
    gl = tri.adj[t][f]
    if gl is None:
        raise IllegalMove("face is unglued")
    t2, perm = gl
    A, B, C = [v for v in range(4) if v != f]
    n = tri.n_tets
    P, Q = n, n + 1
    adj = _unglue_and_insert(tri, 2)
    adj[t][f] = None
    adj[t2][perm[f]] = None
    _set(adj, P, 3, t, (A, B, C, f))
    _set(adj, Q, 3, t2, (perm[A], perm[B], perm[C], perm[f]))
    for g in range(3):
        _set(adj, P, g, Q, IDENTITY)
    new = Triangulation(adj)
    tet_map = {s: s for s in range(n)}
    corner_links = [((P, 0), (t, A)), ((P, 1), (t, B)), ((P, 2), (t, C))]
    edge_links = [((P, 0, 1), (t, A, B)), ((P, 1, 2), (t, B, C)), ((P, 0, 2), (t, A, C))]
    res = MoveResult(new, tet_map, [P, Q], corner_links, edge_links, (P, 3), [])
    emap = res.edge_map(tri)
    pa, pb = [k for k, v in enumerate((A, B, C)) if v in (a, b)]
    H_new = {emap[e] for e in H if e != old_h}
    H_new.add(new.edge(P, pa, 3))
    H_new.add(new.edge(P, pb, 3))
    return res, H_new


# ----------------------------------------------------------------------------
# isomorphism


def canonical_form(tri: Triangulation) -> tuple:
    """Lexicographically least relabelled gluing code over all starts."""
    best = None
    for start in range(tri.n_tets):
        for p in itertools.permutations(range(4)):
            code = _relabel_code(tri, start, p)
            if best is None or code < best:
                best = code
    return best


def _relabel_code(tri: Triangulation, start: int, start_perm) -> tuple:
    # start_perm sends new local vertex -> old local vertex of `start`
    new_index = {start: 0}
    maps = {start: tuple(start_perm)}
    order = [start]
    code = []
    k = 0
    while k < len(order):
        t = order[k]
        m = maps[t]  # new local -> old local
        for fn in range(4):
            fo = m[fn]
            g = tri.adj[t][fo]
            if g is None:
                code.append((-1,))
                continue
            t2, perm = g
            if t2 not in new_index:
                new_index[t2] = len(order)
                order.append(t2)
                # choose the map of t2 so that the gluing becomes identity-like
                m2 = [None] * 4
                for vn in range(4):
                    m2[vn] = perm[m[vn]]
                maps[t2] = tuple(m2)
            m2 = maps[t2]
            inv2 = perm_inverse(m2)
            code.append((new_index[t2],) + tuple(inv2[perm[m[vn]]] for vn in range(4)))
        k += 1
    if len(order) != tri.n_tets:
        code.append(("disconnected", tri.n_tets - len(order)))
    return tuple(code)


def isomorphic(a: Triangulation, b: Triangulation) -> bool:
    if a.n_tets != b.n_tets:
        return False
    target = _relabel_code(b, 0, IDENTITY) if b.n_tets else ()
    for start in range(a.n_tets):
        for p in itertools.permutations(range(4)):
            if _relabel_code(a, start, p) == target:
                return True
    return a.n_tets == 0


# ----------------------------------------------------------------------------
# homology


def homology_h1(tri: Triangulation) -> tuple[int, tuple[int, ...]]:
    """First homology as (Betti number, torsion coefficients).

    Uses the dual 2-complex: tetrahedra are 0-cells, faces 1-cells and
    edges 2-cells.  Valid for closed manifolds and for ideal
    triangulations (the dual spine carries the homotopy type).
    """
    from sympy import Matrix, ZZ
    from sympy.matrices.normalforms import invariant_factors

    n_f = tri.n_faces
    # orient each dual edge from its canonical side (t, f) to the partner
    canon = {}
    for t, row in enumerate(tri.adj):
        for f, g in enumerate(row):
            if g is None:
                raise TriangulationError("homology needs a closed gluing")
            other = (g[0], g[1][f])
            canon[(t, f)] = min((t, f), other) == (t, f)
    d1 = [[0] * n_f for _ in range(tri.n_tets)]
    for t, row in enumerate(tri.adj):
        for f, g in enumerate(row):
            if canon[(t, f)]:
                fid = tri.face_of[t][f]
                d1[t][fid] -= 1
                d1[g[0]][fid] += 1
    d2 = [[0] * tri.n_edges for _ in range(n_f)]
    for e, emb in enumerate(tri.edge_embeddings):
        t, a, b = emb[0]
        for tt, aa, bb, cc, dd in edge_walk(tri, t, a, b):
            fid = tri.face_of[tt][cc]
            d2[fid][e] += 1 if canon[(tt, cc)] else -1
    M1 = Matrix(d1)
    M2 = Matrix(d2)
    r1 = M1.rank()
    r2 = M2.rank()
    betti = n_f - r1 - r2
    torsion = tuple(
        int(abs(x)) for x in invariant_factors(M2, domain=ZZ) if abs(int(x)) > 1
    ) if r2 else ()
    return betti, torsion
