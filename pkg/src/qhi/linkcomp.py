"""Link diagrams (PD codes) compiled into triangulations.

A diagram is read from PD text.  ``compile_distinguished`` builds a
simplicial triangulation of S^3 in which the link is a Hamiltonian
subcomplex; ``compile_complement`` turns the same pair into an ideal
triangulation of the link complement.

Construction of the pair: the diagram sphere S^2 is triangulated with the
subdivided diagram in its 1-skeleton, thickened to S^2 x [0, 1] by
staircase prisms and capped by two cones.  The link runs in S^2 x 0
except at crossings, where the over-strand climbs to the level-1 copy of
the crossing vertex.  Edge contractions satisfying the link condition and
finger moves of the link across triangles then shrink the complex until
every vertex lies on the link.
"""
from __future__ import annotations

import itertools
import re
from collections import defaultdict
from dataclasses import dataclass

from .triangulation import (
    IllegalMove,
    Triangulation,
    collapse_edge,
    hamiltonian_components,
    homology_h1,
    is_hamiltonian,
    is_quasi_regular,
    move_2_0,
    move_2_3,
    move_3_2,
    validate,
)

__all__ = [
    "PDSyntaxError",
    "NonDiskRegion",
    "CompileError",
    "LinkDiagram",
    "parse_pd",
    "compile_distinguished",
    "compile_complement",
    "link_pair",
]


class PDSyntaxError(SyntaxError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class NonDiskRegion(ValueError):
    pass


class CompileError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


Dart = tuple[int, int]  # (crossing, slot)


@dataclass(frozen=True)
class LinkDiagram:
    """Crossings list arc labels counterclockwise from the incoming under-strand.

    ``regions`` are boundary dart cycles; ``components`` list the darts a
    component leaves through, in traversal order.
    """

    crossings: tuple[tuple[int, int, int, int], ...]
    regions: tuple[tuple[Dart, ...], ...]
    components: tuple[tuple[Dart, ...], ...]

    @property
    def arcs(self) -> tuple[int, ...]:
        return tuple(sorted({a for x in self.crossings for a in x}))

    def other_end(self, dart: Dart) -> Dart:
        return self._ends[dart]

    @property
    def _ends(self) -> dict:
        ends = defaultdict(list)
        for k, x in enumerate(self.crossings):
            for i, a in enumerate(x):
                ends[a].append((k, i))
        out = {}
        for a, (d1, d2) in ends.items():
            out[d1] = d2
            out[d2] = d1
        return out


_TERM = re.compile(r"X\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)")


def parse_pd(text: str) -> LinkDiagram:
    crossings = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos == len(text):
            break
        m = _TERM.match(text, pos)
        if m is None:
            raise PDSyntaxError("expected X(a,b,c,d)", pos)
        labels = tuple(int(g) for g in m.groups())
        if min(labels) < 1:
            raise PDSyntaxError("arc labels must be positive", pos)
        crossings.append(labels)
        pos = m.end()
    if not crossings:
        raise PDSyntaxError("no crossings", 0)
    count = defaultdict(int)
    for x in crossings:
        for a in x:
            count[a] += 1
    bad = sorted(a for a, k in count.items() if k != 2)
    if bad:
        raise PDSyntaxError(f"arc {bad[0]} appears {count[bad[0]]} times", 0)
    diagram = LinkDiagram(tuple(crossings), (), ())
    ends = diagram._ends
    regions = _trace_regions(crossings, ends)
    n_v, n_e = len(crossings), len(count)
    if not _connected(crossings, ends) or n_v - n_e + len(regions) != 2:
        raise NonDiskRegion("diagram is split or has a region that is not a disk")
    return LinkDiagram(tuple(crossings), regions, _trace_components(crossings, ends))


def _trace_regions(crossings, ends) -> tuple:
    seen = set()
    regions = []
    for k in range(len(crossings)):
        for i in range(4):
            if (k, i) in seen:
                continue
            cycle = []
            d = (k, i)
            while d not in seen:
                seen.add(d)
                cycle.append(d)
                y, j = ends[d]
                d = (y, (j + 1) % 4)
            regions.append(tuple(cycle))
    return tuple(regions)


def _connected(crossings, ends) -> bool:
    reach = {0}
    stack = [0]
    while stack:
        k = stack.pop()
        for i in range(4):
            y = ends[(k, i)][0]
            if y not in reach:
                reach.add(y)
                stack.append(y)
    return len(reach) == len(crossings)


def _trace_components(crossings, ends) -> tuple:
    seen = set()
    comps = []
    for k in range(len(crossings)):
        for i in range(4):
            if (k, i) in seen:
                continue
            comp = []
            d = (k, i)
            while d not in seen:
                seen.add(d)
                comp.append(d)
                y, j = ends[d]
                seen.add((y, j))
                d = (y, (j + 2) % 4)
            comps.append(tuple(comp))
    return tuple(comps)


# ----------------------------------------------------------------------------
# the simplicial pair (S^3, L)


def _sphere(diagram: LinkDiagram):
    """Triangles of S^2 plus the level-0 link path pieces.

    Each arc gets two interior vertices; each region is an annulus of
    corner vertices around a central vertex, which keeps the complex
    simplicial even when a region meets a crossing twice.
    """
    ends = diagram._ends

    def arc_points(dart):
        # interior vertices of the arc leaving through dart, in that direction
        a = diagram.crossings[dart[0]][dart[1]]
        d1, d2 = sorted((dart, ends[dart]))
        pts = [("a", a, 1), ("a", a, 2)]
        return pts if dart == d1 else pts[::-1]

    triangles = []
    for r, cycle in enumerate(diagram.regions):
        boundary = []
        for d in cycle:
            boundary.append(("x", d[0]))
            boundary.extend(arc_points(d))
        m = len(boundary)
        ring = [("q", r, i) for i in range(m)]
        center = ("c", r)
        for i in range(m):
            b0, b1 = boundary[i], boundary[(i + 1) % m]
            q0, q1 = ring[i], ring[(i + 1) % m]
            triangles += [(b0, b1, q0), (b1, q1, q0), (center, q0, q1)]
    return triangles, arc_points


def _rank(v) -> tuple:
    # crossings come last so every neighbour of a crossing precedes it
    return (1 if v[0] == "x" else 0, repr(v))


def _thicken(diagram: LinkDiagram):
    triangles, arc_points = _sphere(diagram)
    tets = []
    for tri_ in triangles:
        u, v, w = sorted(tri_, key=_rank)
        lo = [(u, 0), (v, 0), (w, 0)]
        hi = [(u, 1), (v, 1), (w, 1)]
        tets += [
            (lo[0], lo[1], lo[2], hi[2]),
            (lo[0], lo[1], hi[1], hi[2]),
            (lo[0], hi[0], hi[1], hi[2]),
            (("bottom",), lo[0], lo[1], lo[2]),
            (("top",), hi[0], hi[1], hi[2]),
        ]
    link_edges = []
    for comp in diagram.components:
        for d in comp:
            k, i = d
            y, j = diagram.other_end(d)
            start = ("x", k), (1 if i % 2 else 0)
            stop = ("x", y), (1 if j % 2 else 0)
            path = [(start[0], start[1])] + [(p, 0) for p in arc_points(d)] + [(stop[0], stop[1])]
            link_edges += list(zip(path, path[1:]))
    return tets, [frozenset(e) for e in link_edges]


def _rank_simplex(simplex) -> list:
    # hash-independent order for sets of vertex labels
    return sorted(repr(v) for v in simplex)


class _Pair:
    """A simplicial 3-manifold as vertex-label tetrahedra plus a 1-subcomplex L."""

    def __init__(self, tets, link_edges):
        self.tets = {frozenset(t) for t in tets}
        self.L = set(link_edges)
        self._index()

    def _index(self):
        self.star = defaultdict(set)
        for t in self.tets:
            for v in t:
                self.star[v].add(t)
        self.lverts = defaultdict(set)
        for e in self.L:
            a, b = tuple(e)
            self.lverts[a].add(b)
            self.lverts[b].add(a)

    def vertices(self):
        return list(self.star)

    def neighbours(self, v):
        out = set()
        for t in self.star[v]:
            out |= t
        out.discard(v)
        return out

    def _link(self, simplex) -> set:
        out = set()
        for t in self.tets:
            if simplex <= t:
                rest = t - simplex
                for k in range(1, len(rest) + 1):
                    out.update(frozenset(c) for c in itertools.combinations(rest, k))
        return out

    def _link_of_vertex(self, v) -> set:
        out = set()
        for t in self.star[v]:
            rest = t - {v}
            for k in range(1, 4):
                out.update(frozenset(c) for c in itertools.combinations(rest, k))
        return out

    def can_contract(self, u, v) -> bool:
        edge = frozenset((u, v))
        common = self._link_of_vertex(u) & self._link_of_vertex(v)
        lk_uv = set()
        for t in self.star[u] & self.star[v]:
            rest = t - edge
            for k in range(1, 3):
                lk_uv.update(frozenset(c) for c in itertools.combinations(rest, k))
        if common != lk_uv:
            return False
        on_u, on_v = u in self.lverts, v in self.lverts
        if edge in self.L:
            if self.lverts[u] & self.lverts[v]:
                return False
            return len(self._component(u)) > 3
        return not (on_u and on_v)

    def _component(self, v) -> set:
        seen = {v}
        stack = [v]
        while stack:
            x = stack.pop()
            for y in self.lverts[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    def contract(self, u, v):
        """Merge u into v (u disappears)."""
        if u in self.lverts and v not in self.lverts:
            u, v = v, u
        new = set()
        for t in self.tets:
            if u in t:
                if v in t:
                    continue
                t = (t - {u}) | {v}
            new.add(t)
        L = set()
        for e in self.L:
            if e == frozenset((u, v)):
                continue
            if u in e:
                (w,) = e - {u}
                e = frozenset((w, v))
            L.add(e)
        self.tets, self.L = new, L
        self._index()

    def finger(self, u) -> bool:
        """Reroute an L-edge ab through u across a triangle abu."""
        for t in sorted(self.star[u], key=_rank_simplex):
            for a, b in itertools.combinations(sorted(t - {u}, key=repr), 2):
                if frozenset((a, b)) in self.L:
                    self.L.discard(frozenset((a, b)))
                    self.L |= {frozenset((a, u)), frozenset((u, b))}
                    self._index()
                    return True
        return False

    def shrink(self):
        """Contract edges until no legal contraction remains."""
        changed = True
        while changed:
            changed = False
            for u in sorted(self.vertices(), key=repr):
                if u not in self.star:
                    continue
                nbrs = sorted(self.neighbours(u), key=lambda w: (w not in self.lverts, repr(w)))
                for v in nbrs:
                    if self.can_contract(u, v):
                        self.contract(u, v)
                        changed = True
                        break

    def make_hamiltonian(self):
        self.shrink()
        for _ in range(len(self.star) + 1):
            off = sorted((v for v in self.star if v not in self.lverts), key=repr)
            if not off:
                break
            moved = False
            for u in off:
                if self.finger(u):
                    moved = True
                    break
            if not moved:
                raise CompileError("hamiltonian", "a vertex off the link has no triangle on the link")
            self.shrink()
        if any(v not in self.lverts for v in self.star):
            raise CompileError("hamiltonian", "vertices off the link remain")

    def triangulation(self):
        order = sorted(self.star, key=repr)
        rank = {v: i for i, v in enumerate(order)}
        tets = [tuple(sorted(t, key=rank.get)) for t in sorted(self.tets, key=lambda t: sorted(rank[v] for v in t))]
        tri = Triangulation.from_labelled_tets([[rank[v] for v in t] for t in tets])
        label_of = {}
        for t, labels in enumerate(tets):
            for i, v in enumerate(labels):
                label_of[tri.vertex_of[t][i]] = v
        H = set()
        for e, emb in enumerate(tri.edge_embeddings):
            t, a, b = emb[0]
            if frozenset((tets[t][a], tets[t][b])) in self.L:
                H.add(e)
        return tri, H, tets


def link_pair(diagram: LinkDiagram) -> _Pair:
    """The simplified simplicial pair with every vertex on the link."""
    tets, L = _thicken(diagram)
    pair = _Pair(tets, L)
    pair.make_hamiltonian()
    return pair


def compile_distinguished(diagram: LinkDiagram):
    """(Triangulation of S^3, Hamiltonian edge set realizing the link)."""
    pair = link_pair(diagram)
    tri, H, _ = pair.triangulation()
    rep = validate(tri, ideal=False)
    if not rep.ok:
        raise CompileError("validate", "; ".join(rep.problems))
    if not is_quasi_regular(tri):
        raise CompileError("validate", "not quasi-regular")
    if not is_hamiltonian(tri, H):
        raise CompileError("hamiltonian", "link is not Hamiltonian")
    if hamiltonian_components(tri, H) != len(diagram.components):
        raise CompileError("hamiltonian", "component count differs from the diagram")
    if homology_h1(tri) != (0, ()):
        raise CompileError("homology", f"H1 = {homology_h1(tri)}")
    return tri, H


# ----------------------------------------------------------------------------
# complement


def _subdivide(tets):
    """First barycentric subdivision; new labels are the simplices themselves."""
    out = []
    for t in tets:
        for order in itertools.permutations(sorted(t, key=repr)):
            chain = tuple(frozenset(order[:k]) for k in range(1, 5))
            out.append(chain)
    return out


def compile_complement(diagram: LinkDiagram) -> Triangulation:
    """Ideal triangulation of the link complement, one torus cusp per component.

    In the barycentric subdivision the subdivided link L' is full, so each
    tetrahedron meets it in nothing, a vertex or an edge.  Tetrahedra
    meeting L' in an edge are squashed; in the others the L' vertex is
    replaced by an ideal vertex for its component.  Finite vertices are
    then removed by edge collapses.
    """
    pair = link_pair(diagram)
    comp_of = {}
    for k, v in enumerate(sorted(pair.lverts, key=repr)):
        if v not in comp_of:
            for w in pair._component(v):
                comp_of[w] = k
    on_link = set(pair.lverts) | set(pair.L)

    def in_link(simplex):
        return simplex in on_link or (len(simplex) == 1 and next(iter(simplex)) in pair.lverts)

    def ideal_label(simplex):
        return ("cusp", comp_of[next(iter(simplex))])

    chains = _subdivide(sorted(pair.tets, key=_rank_simplex))
    by_face = defaultdict(list)
    for idx, chain in enumerate(chains):
        for f in range(4):
            by_face[frozenset(chain[:f] + chain[f + 1:])].append((idx, f))
    kind = []
    for chain in chains:
        k = sum(1 for s in chain if in_link(s))
        if k > 2:
            raise CompileError("complement", "subdivided link is not full")
        kind.append(k)
    keep = [i for i, k in enumerate(kind) if k < 2]
    index = {i: n for n, i in enumerate(keep)}

    gluings = []
    for i in keep:
        for f in range(4):
            face = frozenset(chains[i][:f] + chains[i][f + 1:])
            # label map: chain entries of tet i, link entries renamed to the cusp
            src = {}
            for v in range(4):
                s = chains[i][v]
                src[v] = ideal_label(s) if in_link(s) else s
            cur, cur_face = i, face
            steps = 0
            while True:
                (j, g), = [x for x in by_face[cur_face] if x[0] != cur]
                if kind[j] < 2:
                    break
                # squash: swap the two link entries of the pillow
                links = [s for s in chains[j] if in_link(s)]
                here = [s for s in cur_face if in_link(s)]
                other = links[1] if here[0] == links[0] else links[0]
                cur_face = frozenset(s for s in cur_face if not in_link(s)) | {other}
                cur = j
                steps += 1
                if steps > len(chains):
                    raise CompileError("complement", "pillow chase does not end")
            dst = {}
            for v in range(4):
                s = chains[j][v]
                dst[ideal_label(s) if in_link(s) else s] = v
            perm = [None] * 4
            for v in range(4):
                if v == f:
                    continue
                perm[v] = dst[src[v]]
            perm[f] = 6 - sum(perm[v] for v in range(4) if v != f)
            if (index[i], f) <= (index[j], perm[f]):
                gluings.append((index[i], f, index[j], perm[f], tuple(perm)))
    tri = Triangulation.from_gluings(len(keep), gluings)
    tri = _remove_finite_vertices(tri)
    tri = _simplify(tri)
    rep = validate(tri, ideal=True)
    if not rep.ok:
        raise CompileError("validate", "; ".join(rep.problems))
    betti, torsion = homology_h1(tri)
    if betti != len(diagram.components):
        raise CompileError("homology", f"H1 rank {betti}, expected {len(diagram.components)}")
    return tri


def _remove_finite_vertices(tri: Triangulation, attempts: int = 200) -> Triangulation:
    """Collapse edges at finite vertices; 2-3 moves unblock stuck cases."""
    blocked = 0
    while True:
        chi = tri.vertex_link_euler
        finite = {v for v, c in enumerate(chi) if c == 2}
        if not finite:
            return tri
        order = sorted(
            range(tri.n_edges),
            key=lambda e: (
                not any(v not in finite for v in tri.edge_endpoints[e]),
                tri.edge_valence(e),
                e,
            ),
        )
        for e in order:
            a, b = tri.edge_endpoints[e]
            if a == b or (a not in finite and b not in finite):
                continue
            try:
                tri = collapse_edge(tri, e)
                break
            except IllegalMove:
                continue
        else:
            if blocked >= attempts:
                raise CompileError("complement", f"{len(finite)} finite vertices cannot be collapsed")
            tri = _unblock(tri, finite, blocked)
            blocked += 1


def _unblock(tri: Triangulation, finite: set, k: int) -> Triangulation:
    # a 2-3 move on the k-th face (cyclically) touching a finite vertex
    faces = []
    for t in range(tri.n_tets):
        for f in range(4):
            if any(tri.vertex_of[t][v] in finite for v in range(4) if v != f):
                faces.append((t, f))
    for shift in range(len(faces)):
        t, f = faces[(k + shift) % len(faces)]
        try:
            new = move_2_3(tri, t, f).tri
        except IllegalMove:
            continue
        if validate(new).ok:
            return new
    raise CompileError("complement", "no 2-3 move near a finite vertex")


def _simplify(tri: Triangulation) -> Triangulation:
    """Greedy 3-2 and 2-0 moves until none applies."""
    changed = True
    while changed:
        changed = False
        for e in range(tri.n_edges):
            val = tri.edge_valence(e)
            move = move_3_2 if val == 3 else move_2_0 if val == 2 else None
            if move is None:
                continue
            try:
                new = move(tri, e).tri
            except IllegalMove:
                continue
            if validate(new).ok:
                tri = new
                changed = True
                break
    return tri
