"""PSL(2,C) cocycles on branched triangulations and their idealization.

A cocycle stores one matrix per edge class, read along the class reference
direction (see ``Triangulation.edge_direction``).  Cocycles built as
coboundaries of a 0-cochain keep that cochain as ``gauge``; its values at
0 give a global point per vertex, which fixes edge-consistent N-th roots
downstream.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .moebius import PSL2C, IDENTITY, act, chordal_distance, compose, inverse, is_inf
from .triangulation import (
    LOCAL_EDGES,
    Branching,
    MoveResult,
    Triangulation,
    ValidationReport,
    b_sign,
    orientation,
)

__all__ = [
    "NotIdealizable",
    "TransitFails",
    "DegenerateModulus",
    "RetriesExhausted",
    "Cocycle",
    "ModuliTriple",
    "ITriangulation",
    "coboundary",
    "check_cocycle",
    "idealize_tet",
    "idealize",
    "check_edge_compat",
    "perturb_to_idealizable",
    "random_psl",
    "gauge_transform",
    "cocycle_transit",
    "ideal_transit_2_3",
    "ideal_transit_0_2",
    "moduli_from_w0",
    "edge_position",
    "transit_branchings",
    "transit_orientation",
    "transit_gauge",
    "realize_points",
    "idealize_points",
]

COINCIDENCE_TOL = 1e-12


class NotIdealizable(ValueError):
    pass


class TransitFails(ValueError):
    pass


class DegenerateModulus(ValueError):
    pass


class RetriesExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class Cocycle:
    values: tuple[PSL2C, ...]
    gauge: tuple[PSL2C, ...] | None = None

    def along(self, tri: Triangulation, t: int, a: int, b: int) -> PSL2C:
        """Value on the local edge a -> b of tetrahedron t."""
        z = self.values[tri.edge(t, a, b)]
        return z if tri.edge_direction(t, a, b) > 0 else inverse(z)

    def points(self) -> list[complex] | None:
        """Vertex points gauge[v](0), when the cocycle is a coboundary."""
        if self.gauge is None:
            return None
        return [act(g, 0.0) for g in self.gauge]

    def conjugate(self) -> "Cocycle":
        """Complex-conjugate cocycle, the decoration of the mirror image."""
        gauge = None if self.gauge is None else tuple(g.conjugate() for g in self.gauge)
        return Cocycle(tuple(m.conjugate() for m in self.values), gauge)


def coboundary(tri: Triangulation, lam: Sequence[PSL2C]) -> Cocycle:
    """z(u -> v) = lam(u)^-1 lam(v) on every edge class."""
    vals = []
    for e, emb in enumerate(tri.edge_embeddings):
        u, v = tri.edge_endpoints[e]
        vals.append(compose(inverse(lam[u]), lam[v]))
    return Cocycle(tuple(vals), tuple(lam))


def gauge_transform(tri: Triangulation, z: Cocycle, lam: Sequence[PSL2C]) -> Cocycle:
    """z'(u -> v) = lam(u)^-1 z(u -> v) lam(v)."""
    vals = []
    for e in range(tri.n_edges):
        u, v = tri.edge_endpoints[e]
        vals.append(compose(compose(inverse(lam[u]), z.values[e]), lam[v]))
    gauge = None
    if z.gauge is not None:
        gauge = tuple(compose(g, l) for g, l in zip(z.gauge, lam))
    return Cocycle(tuple(vals), gauge)


def check_cocycle(tri: Triangulation, branch: Branching, z: Cocycle, tol: float = 1e-9) -> ValidationReport:
    problems = []
    for t in range(tri.n_tets):
        o = branch.order[t]
        for f in range(4):
            x, y, w = [v for v in o if v != f]
            lhs = compose(compose(z.along(tri, t, x, y), z.along(tri, t, y, w)), inverse(z.along(tri, t, x, w)))
            if not lhs.close(IDENTITY, tol):
                problems.append(f"face {tri.face_of[t][f]} (tet {t}, opposite {f}) fails")
    return ValidationReport(not problems, tri.is_closed(), False, True, (), problems)


@dataclass(frozen=True)
class ModuliTriple:
    w0: complex
    w1: complex
    w2: complex
    p: tuple[complex, complex, complex] | None = None

    @property
    def w(self) -> tuple[complex, complex, complex]:
        return (self.w0, self.w1, self.w2)

    @property
    def star(self) -> int:
        """Sign of the common imaginary part (0 when degenerate)."""
        im = self.w0.imag
        return 0 if abs(im) < 1e-14 else (1 if im > 0 else -1)

    def residuals(self) -> float:
        r = max(
            abs(self.w1 - 1 / (1 - self.w0)),
            abs(self.w2 - 1 / (1 - self.w1)),
            abs(self.w0 * self.w1 * self.w2 + 1),
        )
        if self.p is not None:
            p0, p1, p2 = self.p
            scale = max(abs(p0), abs(p1), abs(p2))
            r = max(r, abs(p0 + p1 + p2) / scale)
        return r


def moduli_from_w0(w0: complex) -> ModuliTriple:
    if abs(w0) < COINCIDENCE_TOL or abs(w0 - 1) < COINCIDENCE_TOL:
        raise DegenerateModulus(f"modulus {w0} is 0 or 1")
    w1 = 1 / (1 - w0)
    return ModuliTriple(complex(w0), complex(w1), complex(1 / (1 - w1)), (1 - w0, w0, -1 + 0j))


def _moduli_from_p(p0, p1, p2) -> ModuliTriple:
    return ModuliTriple(-p1 / p2, -p2 / p0, -p0 / p1, (p0, p1, p2))


def _points_p(u) -> tuple[complex, complex, complex]:
    u0, u1, u2, u3 = u
    return ((u1 - u0) * (u3 - u2), (u2 - u1) * (u3 - u0), -(u2 - u0) * (u3 - u1))


def idealize_points(u) -> ModuliTriple:
    """Moduli of four ordered points; raises NotIdealizable if degenerate."""
    for i in range(4):
        if is_inf(u[i]):
            raise NotIdealizable(f"u{i} is infinite")
        for j in range(i):
            if chordal_distance(u[i], u[j]) < COINCIDENCE_TOL:
                raise NotIdealizable(f"u{j} and u{i} coincide")
    return _moduli_from_p(*_points_p(u))


def idealize_tet(z0: PSL2C, z1: PSL2C, z0p: PSL2C) -> ModuliTriple:
    """Moduli from the cocycle on the branched edges v0v1, v1v2, v2v3."""
    m01 = z0
    m02 = compose(z0, z1)
    m03 = compose(m02, z0p)
    u = (0.0 + 0j, act(m01, 0.0), act(m02, 0.0), act(m03, 0.0))
    return idealize_points(u)


def edge_position(branch: Branching, t: int, a: int, b: int) -> int:
    """Which modulus (0, 1, 2) sits on the local edge (a, b) of t."""
    i, j = sorted((branch.position(t, a), branch.position(t, b)))
    if (i, j) in ((0, 1), (2, 3)):
        return 0
    if (i, j) in ((1, 2), (0, 3)):
        return 1
    return 2


@dataclass
class ITriangulation:
    """Branched triangulation with a modular triple and N-th root data per tet.

    ``points`` (one per vertex class) are present when the moduli come from a
    coboundary; they select edge-consistent roots.
    """

    tri: Triangulation
    branch: Branching
    orient: tuple[int, ...]
    moduli: list[ModuliTriple]
    points: list[complex] | None = None

    def sign(self, t: int) -> int:
        return b_sign(self.tri, self.orient, self.branch, t)

    def ordered_vertices(self, t: int) -> tuple[int, ...]:
        return tuple(self.tri.vertex_of[t][v] for v in self.branch.order[t])


def idealize(
    tri: Triangulation,
    branch: Branching,
    z: Cocycle,
    orient: Sequence[int] | None = None,
) -> ITriangulation:
    orient = tuple(orientation(tri) if orient is None else orient)
    moduli = []
    for t in range(tri.n_tets):
        v0, v1, v2, v3 = branch.order[t]
        try:
            moduli.append(idealize_tet(z.along(tri, t, v0, v1), z.along(tri, t, v1, v2), z.along(tri, t, v2, v3)))
        except NotIdealizable as exc:
            raise NotIdealizable(f"tetrahedron {t}: {exc}") from None
    return ITriangulation(tri, branch, orient, moduli, z.points())


def check_edge_compat(TI: ITriangulation, tol: float = 1e-8) -> ValidationReport:
    problems = []
    tri = TI.tri
    for e, emb in enumerate(tri.edge_embeddings):
        prod = 1.0 + 0j
        for t, a, b in emb:
            w = TI.moduli[t].w[edge_position(TI.branch, t, a, b)]
            prod *= w ** TI.sign(t)
        if abs(prod - 1) > tol:
            problems.append(f"edge {e}: product {prod:.6g}")
    return ValidationReport(not problems, tri.is_closed(), False, True, (), problems)


def random_psl(rng: np.random.Generator, scale: float) -> PSL2C:
    m = np.eye(2) + scale * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    return PSL2C.from_matrix(m)


def perturb_to_idealizable(
    tri: Triangulation, branch: Branching, z: Cocycle, seed: int = 0, scale: float = 0.1, retries: int = 100
) -> Cocycle:
    """Gauge z by a random 0-cochain near the identity until it idealizes."""
    try:
        idealize(tri, branch, z)
        return z
    except NotIdealizable:
        pass
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        lam = [random_psl(rng, scale) for _ in range(tri.n_vertices)]
        z2 = gauge_transform(tri, z, lam)
        try:
            idealize(tri, branch, z2)
            return z2
        except NotIdealizable:
            continue
    raise RetriesExhausted("no idealizable gauge found")


# ----------------------------------------------------------------------------
# transits


def transit_branchings(old: Triangulation, branch: Branching, res: MoveResult) -> list[Branching]:
    """All branchings of the new triangulation extending the old one.

    Kept tetrahedra keep their order.  Edges of created tetrahedra that
    carry an old edge inherit its orientation; new edges range over both
    orientations.
    """
    new = res.tri
    fixed: dict[int, int] = {}  # new edge class -> sign relative to reference direction
    inv_map = {v: k for k, v in res.tet_map.items()}
    for tn in range(new.n_tets):
        if tn not in inv_map:
            continue
        to = inv_map[tn]
        for a, b in LOCAL_EDGES:
            s = 1 if branch.position(to, a) < branch.position(to, b) else -1
            fixed[new.edge(tn, a, b)] = s * new.edge_direction(tn, a, b)
    for (tn, an, bn), (to, ao, bo) in res.edge_links:
        s = 1 if branch.position(to, ao) < branch.position(to, bo) else -1
        fixed.setdefault(new.edge(tn, an, bn), s * new.edge_direction(tn, an, bn))
    free = sorted({new.edge(tn, a, b) for tn in res.new_tets for a, b in LOCAL_EDGES} - set(fixed))
    out = []
    for mask in range(1 << len(free)):
        sign = dict(fixed)
        for k, e in enumerate(free):
            sign[e] = 1 if (mask >> k) & 1 == 0 else -1
        order = []
        ok = True
        for tn in range(new.n_tets):
            if tn in inv_map:
                order.append(branch.order[inv_map[tn]])
                continue
            out_deg = [0] * 4
            for a, b in LOCAL_EDGES:
                if sign[new.edge(tn, a, b)] * new.edge_direction(tn, a, b) > 0:
                    out_deg[a] += 1
                else:
                    out_deg[b] += 1
            if sorted(out_deg) != [0, 1, 2, 3]:
                ok = False
                break
            order.append(tuple(sorted(range(4), key=lambda v: -out_deg[v])))
        if ok:
            br = Branching(tuple(order))
            if br.is_valid(new):
                out.append(br)
    return out


def transit_orientation(old_orient: Sequence[int], res: MoveResult) -> tuple[int, ...]:
    o = orientation(res.tri)
    if o is None:
        raise ValueError("transit produced a non-orientable triangulation")
    for to, tn in res.tet_map.items():
        if o[tn] != old_orient[to]:
            return tuple(-s for s in o)
        break
    return o


def transit_gauge(old: Triangulation, z: Cocycle, res: MoveResult, free: PSL2C | None = None) -> Cocycle:
    """Carry a coboundary across a move; a created vertex takes ``free``."""
    if z.gauge is None:
        raise ValueError("gauge transport needs a coboundary")
    vmap = res.vertex_map(old)
    new_gauge = [None] * res.tri.n_vertices
    for vo, vn in vmap.items():
        new_gauge[vn] = z.gauge[vo]
    for k, g in enumerate(new_gauge):
        if g is None:
            new_gauge[k] = IDENTITY if free is None else free
    return coboundary(res.tri, new_gauge)


def cocycle_transit(old: Triangulation, z: Cocycle, res: MoveResult, free: PSL2C | None = None) -> Cocycle:
    """Carry a cocycle across a move.

    Old edge values are kept; values on new edges are forced by the face
    relations, except the edges at a created vertex, where one edge takes
    ``free`` (identity by default).
    """
    if z.gauge is not None:
        return transit_gauge(old, z, res, free)
    new = res.tri
    emap = res.edge_map(old)
    vals: dict[int, PSL2C] = {}
    for eo, en in emap.items():
        # orient the old value along the new class reference direction
        t, a, b = old.edge_embeddings[eo][0]
        z_ab = z.along(old, t, a, b)
        vals[en] = _orient_to_class(new, en, old, t, a, b, res, z_ab)
    _propagate(new, vals, res, free)
    return Cocycle(tuple(vals[e] for e in range(new.n_edges)))


def _orient_to_class(new, en, old, t, a, b, res, z_ab):
    # find a new local edge carrying old (t, a, b) and compare directions
    if t in res.tet_map:
        tn = res.tet_map[t]
        return z_ab if new.edge_direction(tn, a, b) > 0 else inverse(z_ab)
    for (tn, an, bn), (to, ao, bo) in res.edge_links:
        if old.edge(to, ao, bo) == old.edge(t, a, b):
            same = old.edge_direction(to, ao, bo) == old.edge_direction(t, a, b)
            za = z_ab if same else inverse(z_ab)
            return za if new.edge_direction(tn, an, bn) > 0 else inverse(za)
    for tn in range(new.n_tets):
        for a2, b2 in LOCAL_EDGES:
            if new.edge(tn, a2, b2) == en:
                return z_ab
    raise ValueError("edge correspondence missing")


def _propagate(new: Triangulation, vals: dict, res: MoveResult, free: PSL2C | None) -> None:
    def along(t, a, b):
        e = new.edge(t, a, b)
        if e not in vals:
            return None
        v = vals[e]
        return v if new.edge_direction(t, a, b) > 0 else inverse(v)

    def assign(t, a, b, m):
        e = new.edge(t, a, b)
        vals[e] = m if new.edge_direction(t, a, b) > 0 else inverse(m)

    if res.new_vertex is not None:
        tn, v = res.new_vertex
        u = 0 if v != 0 else 1
        assign(tn, u, v, IDENTITY if free is None else free)
    changed = True
    while changed and len(vals) < new.n_edges:
        changed = False
        for t in range(new.n_tets):
            for f in range(4):
                x, y, w = [v for v in range(4) if v != f]
                zxy, zyw, zxw = along(t, x, y), along(t, y, w), along(t, x, w)
                known = sum(m is not None for m in (zxy, zyw, zxw))
                if known != 2:
                    continue
                if zxy is None:
                    assign(t, x, y, compose(zxw, inverse(zyw)))
                elif zyw is None:
                    assign(t, y, w, compose(inverse(zxy), zxw))
                else:
                    assign(t, x, w, compose(zxy, zyw))
                changed = True
    if len(vals) < new.n_edges:
        raise ValueError("cocycle transit left undetermined edges")


def _solve_fourth_point(known: dict[int, complex], w0: complex) -> complex:
    """Position the missing point of an ordered quadruple with modulus w0."""
    def w_of(u):
        pts = [known.get(i, u) for i in range(4)]
        p0, p1, p2 = _points_p(pts)
        return -p1 / p2

    # w_of is a Moebius function of u; recover it from three samples
    samples = [0.37 + 0.11j, -1.3 + 0.7j, 2.1 - 0.4j]
    vals = [w_of(s) for s in samples]
    # solve (a u + b) - w (c u + d) = 0 for (a, b, c, d) up to scale
    M = np.array([[s, 1, -v * s, -v] for s, v in zip(samples, vals)], dtype=complex)
    _, _, vh = np.linalg.svd(M)
    a, b, c, d = vh[-1].conj()
    # invert: u = (d w - b) / (a - c w)
    den = a - c * w0
    if abs(den) < 1e-14:
        raise TransitFails("fourth point at infinity")
    return (d * w0 - b) / den


def realize_points(TI: ITriangulation, tets: Sequence[int]) -> dict[int, complex]:
    """Place the vertices of a chain of tetrahedra on the sphere.

    The first tetrahedron is normalized to (0, 1, 2, *); each later one must
    share three already placed vertex classes.
    """
    pts: dict[int, complex] = {}
    for k, t in enumerate(tets):
        verts = TI.ordered_vertices(t)
        if k == 0:
            pts[verts[0]], pts[verts[1]], pts[verts[2]] = 0j, 1 + 0j, 2 + 0j
        known = {i: pts[v] for i, v in enumerate(verts) if v in pts}
        if len(known) == 4:
            continue
        if len(known) != 3:
            raise TransitFails("configuration is not a chain of face-adjacent tetrahedra")
        miss = ({0, 1, 2, 3} - set(known)).pop()
        pts[verts[miss]] = _solve_fourth_point(known, TI.moduli[t].w0)
    return pts


def ideal_transit_2_3(TI: ITriangulation, t: int, f: int, branch_choice: int = 0):
    """2->3 I-transit through point realization.

    Returns (new ITriangulation, MoveResult).  The two old tetrahedra must
    have distinct vertex classes at the five configuration vertices.
    """
    from .triangulation import move_2_3

    res = move_2_3(TI.tri, t, f)
    t2 = TI.tri.adj[t][f][0]
    verts = set(TI.ordered_vertices(t)) | set(TI.ordered_vertices(t2))
    if len(verts) != 5:
        raise TransitFails("configuration vertices are not distinct")
    if TI.points is not None:
        pts = {v: TI.points[v] for v in verts}
    else:
        pts = realize_points(TI, [t, t2])
    branches = transit_branchings(TI.tri, TI.branch, res)
    if not branches:
        raise TransitFails("no branching transit")
    br = branches[branch_choice % len(branches)]
    new = res.tri
    orient = transit_orientation(TI.orient, res)
    vmap = res.vertex_map(TI.tri)
    moduli = []
    inv_map = {v: k for k, v in res.tet_map.items()}
    for tn in range(new.n_tets):
        if tn in inv_map:
            moduli.append(TI.moduli[inv_map[tn]])
            continue
        back = {vn: vo for vo, vn in vmap.items()}
        u = [pts[back[new.vertex_of[tn][v]]] for v in br.order[tn]]
        try:
            moduli.append(idealize_points(u))
        except NotIdealizable as exc:
            raise TransitFails(str(exc)) from None
    new_points = None
    if TI.points is not None:
        new_points = [None] * new.n_vertices
        for vo, vn in vmap.items():
            new_points[vn] = TI.points[vo]
    return ITriangulation(new, br, orient, moduli, new_points), res


def ideal_transit_0_2(TI: ITriangulation, res: MoveResult, branch: Branching) -> ITriangulation:
    """Lune I-transit: both new tetrahedra carry one modulus, fixed by the split edge.

    The lune splits an old edge class in two; each half holds one new
    tetrahedron, so edge compatibility on that half determines the shared
    modulus.  The other half then closes up because the two new signs are
    opposite.
    """
    new = res.tri
    orient = transit_orientation(TI.orient, res)
    inv_map = {v: k for k, v in res.tet_map.items()}
    created = [t for t in range(new.n_tets) if t not in inv_map]
    P = created[0]
    target = None
    for e, emb in enumerate(new.edge_embeddings):
        mine = [(t, a, b) for t, a, b in emb if t == P]
        if len(mine) != 1 or any(t in created and t != P for t, _, _ in emb):
            continue
        prod = 1.0 + 0j
        for t, a, b in emb:
            if t != P:
                old = inv_map[t]
                prod *= TI.moduli[old].w[edge_position(branch, t, a, b)] ** b_sign(new, orient, branch, t)
        _, a, b = mine[0]
        target = (edge_position(branch, P, a, b), prod ** (-b_sign(new, orient, branch, P)))
        break
    if target is None:
        raise TransitFails("no split edge found for the lune")
    pos, w = target
    w0 = (w, 1 - 1 / w, 1 / (1 - w))[pos]
    trip = moduli_from_w0(w0)
    moduli = [TI.moduli[inv_map[tn]] if tn in inv_map else trip for tn in range(new.n_tets)]
    return ITriangulation(new, branch, orient, moduli, None)
