"""Integral charges on distinguished triangulations.

Charges are stored per tetrahedron on the three pairs of opposite local
edges, independent of any branching:

    pair 0 = {01, 23},  pair 1 = {12, 03},  pair 2 = {02, 13}.

``branched`` re-reads them as (c0, c1, c2) on the branching pairs
{e0, e0'}, {e1, e1'}, {e2, e2'} with e0 = v0v1, e1 = v1v2, e2 = v0v2.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from sympy import ZZ
from sympy.polys.matrices import DomainMatrix

from .triangulation import (
    LOCAL_EDGES,
    Branching,
    IllegalMove,
    MoveResult,
    Triangulation,
    b_sign,
    is_hamiltonian,
    perm_sign,
)

__all__ = [
    "Infeasible",
    "ChargeAssignment",
    "local_pair",
    "branched_pair",
    "solve_integer",
    "charge_constraints",
    "validate_charge",
    "solve_charge",
    "lattice_vector",
    "lattice_delta",
    "apply_lattice",
    "mod2_holonomy",
    "charge_transit",
    "dual_cycles",
    "link_cycles",
    "cusp_holonomy",
    "charge_kernel",
]


class Infeasible(ValueError):
    pass


def local_pair(a: int, b: int) -> int:
    """Opposite-edge pair containing local edge (a, b)."""
    s = frozenset((a, b))
    if s in (frozenset((0, 1)), frozenset((2, 3))):
        return 0
    if s in (frozenset((1, 2)), frozenset((0, 3))):
        return 1
    return 2


def branched_pair(branch: Branching, t: int, j: int) -> int:
    """Local pair carrying the branching pair j of tetrahedron t."""
    o = branch.order[t]
    edge = {0: (o[0], o[1]), 1: (o[1], o[2]), 2: (o[0], o[2])}[j]
    return local_pair(*edge)


@dataclass(frozen=True)
class ChargeAssignment:
    local: tuple[tuple[int, int, int], ...]

    def branched(self, branch: Branching) -> list[tuple[int, int, int]]:
        return [
            tuple(self.local[t][branched_pair(branch, t, j)] for j in range(3))
            for t in range(len(self.local))
        ]

    @classmethod
    def from_branched(cls, branch: Branching, triples: Sequence[Sequence[int]]) -> "ChargeAssignment":
        out = []
        for t, c in enumerate(triples):
            loc = [0, 0, 0]
            for j in range(3):
                loc[branched_pair(branch, t, j)] = int(c[j])
            out.append(tuple(loc))
        return cls(tuple(out))

    def flat(self) -> list[int]:
        return [v for tr in self.local for v in tr]

    @classmethod
    def from_flat(cls, x: Sequence[int]) -> "ChargeAssignment":
        return cls(tuple(tuple(int(v) for v in x[3 * t:3 * t + 3]) for t in range(len(x) // 3)))

    def edge_sums(self, tri: Triangulation) -> list[int]:
        sums = [0] * tri.n_edges
        for t in range(tri.n_tets):
            for a, b in LOCAL_EDGES:
                sums[tri.edge(t, a, b)] += self.local[t][local_pair(a, b)]
        return sums


# ----------------------------------------------------------------------------
# exact integer linear algebra


def _xgcd(a: int, b: int):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def solve_integer(A: Sequence[Sequence[int]], b: Sequence[int]):
    """Integer solution x of A x = b and a basis of the integer kernel.

    Column Hermite reduction A V = [H | 0] with V unimodular, forward
    substitution for H, and the trailing columns of V as kernel.  Raises
    Infeasible when no integer solution exists.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    cols = [[int(A[i][j]) for i in range(m)] for j in range(n)]
    V = [[1 if i == j else 0 for i in range(n)] for j in range(n)]
    pivots = []  # (row, col)
    k = 0
    for r in range(m):
        if k == n:
            break
        nz = [j for j in range(k, n) if cols[j][r] != 0]
        if not nz:
            continue
        # bring the gcd of row r into column k by extended-gcd column steps
        j0 = nz[0]
        if j0 != k:
            cols[k], cols[j0] = cols[j0], cols[k]
            V[k], V[j0] = V[j0], V[k]
        for j in range(k + 1, n):
            bj = cols[j][r]
            if bj == 0:
                continue
            ak = cols[k][r]
            g, s, t = _xgcd(ak, bj)
            u, v = ak // g, bj // g
            ck, cj = cols[k], cols[j]
            cols[k] = [s * x + t * y for x, y in zip(ck, cj)]
            cols[j] = [-v * x + u * y for x, y in zip(ck, cj)]
            Vk, Vj = V[k], V[j]
            V[k] = [s * x + t * y for x, y in zip(Vk, Vj)]
            V[j] = [-v * x + u * y for x, y in zip(Vk, Vj)]
        if cols[k][r] < 0:
            cols[k] = [-x for x in cols[k]]
            V[k] = [-x for x in V[k]]
        pivots.append((r, k))
        k += 1
    rank = k
    y = [0] * n
    piv_row = {r: c for r, c in pivots}
    for r in range(m):
        acc = int(b[r]) - sum(cols[j][r] * y[j] for j in range(rank))
        if r in piv_row:
            c = piv_row[r]
            if acc % cols[c][r]:
                raise Infeasible("no integer solution")
            y[c] = acc // cols[c][r]
        elif acc != 0:
            raise Infeasible("inconsistent linear system")
    x = [sum(V[j][i] * y[j] for j in range(rank)) for i in range(n)]
    kernel = [V[j] for j in range(rank, n)]
    return x, kernel


def _lll(basis: list[list[int]]) -> list[list[int]]:
    if not basis:
        return basis
    M = DomainMatrix([[ZZ(v) for v in row] for row in basis], (len(basis), len(basis[0])), ZZ)
    red = M.lll().to_Matrix()
    return [[int(v) for v in red.row(i)] for i in range(red.rows)]


def _shorten(x: list[int], kernel: list[list[int]], rounds: int = 50) -> list[int]:
    """Greedy reduction of max-norm then 2-norm by kernel steps."""
    def key(v):
        return (max((abs(a) for a in v), default=0), sum(a * a for a in v))

    best = list(x)
    for _ in range(rounds):
        improved = False
        for kv in kernel:
            for s in (1, -1):
                cand = [a + s * b for a, b in zip(best, kv)]
                if key(cand) < key(best):
                    best = cand
                    improved = True
        if not improved:
            break
    return best


# ----------------------------------------------------------------------------
# constraints


def charge_constraints(tri: Triangulation, H: Iterable[int], cusped: bool = False):
    """Rows for per-tet sums and edge sums over the 3 n local variables."""
    H = set(H)
    n = tri.n_tets
    rows, rhs = [], []
    for t in range(n):
        row = [0] * (3 * n)
        row[3 * t:3 * t + 3] = [1, 1, 1]
        rows.append(row)
        rhs.append(1)
    for e, emb in enumerate(tri.edge_embeddings):
        row = [0] * (3 * n)
        for t, a, b in emb:
            row[3 * t + local_pair(a, b)] += 1
        rows.append(row)
        rhs.append(0 if (e in H and not cusped) else 2)
    return rows, rhs


def dual_cycles(tri: Triangulation) -> list[list[tuple[int, int, int]]]:
    """Fundamental cycles of the dual graph as (tet, in_face, out_face) lists."""
    parent: dict[int, tuple[int, int] | None] = {}
    depth = {}
    tree_faces = set()
    for root in range(tri.n_tets):
        if root in parent:
            continue
        parent[root] = None
        depth[root] = 0
        stack = [root]
        while stack:
            t = stack.pop(0)
            for f, g in enumerate(tri.adj[t]):
                if g is None:
                    continue
                t2, perm = g
                if t2 not in parent:
                    parent[t2] = (t, perm[f])  # (parent, face of t2 toward parent)
                    depth[t2] = depth[t] + 1
                    tree_faces.add((t, f))
                    tree_faces.add((t2, perm[f]))
                    stack.append(t2)
    cycles = []
    seen = set()
    for t, row in enumerate(tri.adj):
        for f, g in enumerate(row):
            if g is None or (t, f) in tree_faces or (t, f) in seen:
                continue
            t2, perm = g
            seen.add((t, f))
            seen.add((t2, perm[f]))
            # walk: from t2 up to the common ancestor, down to t, chord back to t2
            up, down = [], []
            a, b = t2, t
            while depth[a] > depth[b]:
                up.append((a, parent[a][1]))
                a = parent[a][0]
            while depth[b] > depth[a]:
                down.append(b)
                b = parent[b][0]
            while a != b:
                up.append((a, parent[a][1]))
                a = parent[a][0]
                down.append(b)
                b = parent[b][0]
            steps = list(up)  # (tet, out face)
            for y in reversed(down):
                py, fy = parent[y]
                steps.append((py, tri.adj[y][fy][1][fy]))
            steps.append((t, f))
            walk = []
            for i, (x, fout) in enumerate(steps):
                px, pf = steps[i - 1]
                fin = tri.adj[px][pf][1][pf]
                walk.append((x, fin, fout))
            cycles.append(walk)
    return cycles


def _cycle_vector(n: int, walk) -> list[int]:
    v = [0] * (3 * n)
    for t, fin, fout in walk:
        if fin == fout:
            raise ValueError("back-tracking cycle")
        v[3 * t + local_pair(fin, fout)] += 1
    return v


def mod2_holonomy(tri: Triangulation, c: ChargeAssignment) -> list[int]:
    x = c.flat()
    out = []
    for walk in dual_cycles(tri):
        v = _cycle_vector(tri.n_tets, walk)
        out.append(sum(a * b for a, b in zip(v, x)) % 2)
    return out


def validate_charge(tri: Triangulation, H: Iterable[int], c: ChargeAssignment, cusped: bool = False) -> list[str]:
    """Violated conditions (empty when c is an integral charge)."""
    problems = []
    if len(c.local) != tri.n_tets:
        return ["wrong number of tetrahedra"]
    for t, tr in enumerate(c.local):
        if sum(tr) != 1:
            problems.append(f"tet {t} sums to {sum(tr)}")
    H = set(H)
    for e, s in enumerate(c.edge_sums(tri)):
        want = 0 if (e in H and not cusped) else 2
        if s != want:
            problems.append(f"edge {e} sums to {s}, want {want}")
    if not cusped and any(mod2_holonomy(tri, c)):
        problems.append("mod-2 holonomy is nonzero")
    return problems


def _gf2_solve(columns: list[list[int]], target: list[int]) -> list[int] | None:
    """Coefficients a (mod 2) with sum a_j columns[j] = target (mod 2)."""
    m = len(target)
    ncol = len(columns)
    rows = [[columns[j][i] % 2 for j in range(ncol)] + [target[i] % 2] for i in range(m)]
    piv = []
    r = 0
    for c in range(ncol):
        p = next((i for i in range(r, m) if rows[i][c]), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        for i in range(m):
            if i != r and rows[i][c]:
                rows[i] = [x ^ y for x, y in zip(rows[i], rows[r])]
        piv.append(c)
        r += 1
    if any(rows[i][-1] for i in range(r, m)):
        return None
    coef = [0] * ncol
    for i, c in enumerate(piv):
        coef[c] = rows[i][-1]
    return coef


def charge_kernel(tri: Triangulation, H: Iterable[int], cusped: bool = False):
    """A particular charge (flat) and an LLL-reduced kernel basis."""
    A, b = charge_constraints(tri, set(H), cusped)
    x, kernel = solve_integer(A, b)
    kernel = _lll(kernel)
    return _shorten(x, kernel), kernel


def solve_charge(tri: Triangulation, H: Iterable[int], cusped: bool = False) -> ChargeAssignment:
    """Some integral charge on (T, H); all edges sum to 2 when ``cusped``."""
    H = set(H)
    if not cusped and not is_hamiltonian(tri, H):
        raise ValueError("H must be a Hamiltonian subcomplex")
    A, b = charge_constraints(tri, H, cusped)
    x, kernel = solve_integer(A, b)
    kernel = _lll(kernel)
    x = _shorten(x, kernel)
    if not cusped:
        cycles = [_cycle_vector(tri.n_tets, w) for w in dual_cycles(tri)]
        hol = [sum(a * b for a, b in zip(v, x)) % 2 for v in cycles]
        if any(hol):
            cols = [[sum(a * b for a, b in zip(v, k)) % 2 for v in cycles] for k in kernel]
            coef = _gf2_solve(cols, hol)
            if coef is None:
                raise Infeasible("mod-2 holonomy cannot be cancelled")
            for a, k in zip(coef, kernel):
                if a:
                    x = [u + w for u, w in zip(x, k)]
            # keep holonomy while shortening: only even kernel steps
            x = _shorten(x, [[2 * v for v in k] for k in kernel])
    c = ChargeAssignment.from_flat(x)
    probs = validate_charge(tri, H, c, cusped)
    if probs:
        raise Infeasible("; ".join(probs))
    return c


# ----------------------------------------------------------------------------
# vertex links


def link_cycles(tri: Triangulation) -> list[list[tuple[tuple[int, int], int]]]:
    """Fundamental cycles of the dual graph of the vertex links.

    Link triangles are corners (t, v); two are adjacent across a face of
    t other than v.  A cycle is a list of (corner, exit face); it visits
    each corner at most once, so it is a simple closed curve in the link.
    """
    parent: dict[tuple[int, int], tuple[tuple[int, int], int] | None] = {}
    used = set()
    chords = []
    for t0 in range(tri.n_tets):
        for v0 in range(4):
            root = (t0, v0)
            if root in parent:
                continue
            parent[root] = None
            queue = [root]
            while queue:
                node = queue.pop(0)
                t, v = node
                for f in range(4):
                    g = tri.adj[t][f] if f != v else None
                    if g is None:
                        continue
                    t2, perm = g
                    side = frozenset(((t, v, f), (t2, perm[v], perm[f])))
                    if side in used:
                        continue
                    used.add(side)
                    nxt = (t2, perm[v])
                    if nxt not in parent:
                        parent[nxt] = (node, f)
                        queue.append(nxt)
                    else:
                        chords.append((node, f, nxt))

    def to_root(node):
        path = [node]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]][0])
        return path

    cycles = []
    for node, f, nxt in chords:
        pa, pb = to_root(node), to_root(nxt)
        on_a = set(pa)
        top = next(x for x in pb if x in on_a)
        down = list(reversed(pa[:pa.index(top) + 1]))
        up = pb[:pb.index(top) + 1]
        steps = [(a, parent[b][1]) for a, b in zip(down, down[1:])]
        steps.append((node, f))
        for a, b in zip(up, up[1:]):
            fb = parent[a][1]
            steps.append((a, tri.adj[b[0]][fb][1][fb]))
        cycles.append(steps)
    return cycles


def cusp_holonomy(tri: Triangulation, orient: Sequence[int], angles, cycle) -> float:
    """Signed sum of corner angles turned by a link cycle.

    ``angles[t][pair]`` may be a charge or a dihedral angle divided by pi;
    corners passed on the left count positively.  A small loop around a
    link vertex gives +-2 for anything with edge sums 2.
    """
    total = 0
    for i, ((t, v), f_out) in enumerate(cycle):
        (tp, vp), fp = cycle[i - 1]
        f_in = tri.adj[tp][fp][1][fp]
        w = 6 - v - f_in - f_out
        total += perm_sign((v, f_in, w, f_out)) * orient[t] * angles[t][local_pair(v, w)]
    return total


# ----------------------------------------------------------------------------
# lattice vectors


def lattice_delta(tri: Triangulation, orient: Sequence[int], branch: Branching, e: int) -> list[tuple[int, int, int]]:
    """Change of the branched (c0, c1, c2) per tet induced by w(e).

    Each occurrence of e on branched pair j adds s to pair j+1 and
    subtracts s from pair j+2 (indices mod 3), s = *_b of the tetrahedron.
    """
    out = [[0, 0, 0] for _ in range(tri.n_tets)]
    for t, a, b in tri.edge_embeddings[e]:
        i, k = sorted((branch.position(t, a), branch.position(t, b)))
        j = {(0, 1): 0, (2, 3): 0, (1, 2): 1, (0, 3): 1, (0, 2): 2, (1, 3): 2}[(i, k)]
        s = b_sign(tri, orient, branch, t)
        out[t][(j + 1) % 3] += s
        out[t][(j + 2) % 3] -= s
    return [tuple(v) for v in out]


def lattice_vector(tri: Triangulation, orient: Sequence[int], branch: Branching, e: int) -> list[int]:
    """w(e) in the coordinates (c0 of each tet, then -c1 of each tet)."""
    d = lattice_delta(tri, orient, branch, e)
    return [v[0] for v in d] + [-v[1] for v in d]


def apply_lattice(c: ChargeAssignment, branch: Branching, delta, times: int = 1) -> ChargeAssignment:
    br = c.branched(branch)
    new = [tuple(x + times * y for x, y in zip(a, b)) for a, b in zip(br, delta)]
    return ChargeAssignment.from_branched(branch, new)


# ----------------------------------------------------------------------------
# transits


def charge_transit(
    old: Triangulation,
    c: ChargeAssignment,
    res: MoveResult,
    H_new: Iterable[int],
    lam: int = 0,
    orient: Sequence[int] | None = None,
    branch: Branching | None = None,
    cusped: bool = False,
) -> ChargeAssignment:
    """Charge on the new triangulation agreeing with c on kept tetrahedra.

    The charges of created tetrahedra solve the edge-sum conditions.  The
    base solution minimizes the largest new charge (lexicographic ties);
    ``lam`` moves along the first kernel direction, which for a 2->3 move
    is w of the new edge (needs ``orient`` and ``branch``).
    """
    new = res.tri
    H_new = set(H_new)
    n = new.n_tets
    inv_map = {v: k for k, v in res.tet_map.items()}
    unknown = [t for t in range(n) if t not in inv_map]
    idx = {t: i for i, t in enumerate(unknown)}
    rows, rhs = [], []
    for t in unknown:
        row = [0] * (3 * len(unknown))
        row[3 * idx[t]:3 * idx[t] + 3] = [1, 1, 1]
        rows.append(row)
        rhs.append(1)
    for e, emb in enumerate(new.edge_embeddings):
        row = [0] * (3 * len(unknown))
        fixed = 0
        touched = False
        for t, a, b in emb:
            p = local_pair(a, b)
            if t in idx:
                row[3 * idx[t] + p] += 1
                touched = True
            else:
                fixed += c.local[inv_map[t]][p]
        want = 0 if (e in H_new and not cusped) else 2
        if touched:
            rows.append(row)
            rhs.append(want - fixed)
        elif fixed != want:
            raise IllegalMove(f"edge {e} sums to {fixed} after the move, want {want}")
    local = [None] * n
    for t in inv_map:
        local[t] = c.local[inv_map[t]]
    if unknown:
        x, kernel = solve_integer(rows, rhs)
        kernel = _lll(kernel)
        box = range(-3, 4)
        best = None
        for coef in itertools.product(box, repeat=len(kernel)):
            cand = [xi + sum(a * k[i] for a, k in zip(coef, kernel)) for i, xi in enumerate(x)]
            key = (max(abs(v) for v in cand), sum(v * v for v in cand), cand)
            if best is None or key < best:
                best = key
        x = best[2]
        for t in unknown:
            local[t] = tuple(x[3 * idx[t]:3 * idx[t] + 3])
        if lam and kernel:
            direction = None
            if orient is not None and branch is not None and res.new_edge_corners and len(kernel) == 1:
                tn, a, b = res.new_edge_corners[0]
                delta = lattice_delta(new, orient, branch, new.edge(tn, a, b))
                direction = ChargeAssignment.from_branched(branch, delta).flat()
                direction = [direction[3 * t + j] for t in unknown for j in range(3)]
            if direction is None:
                direction = kernel[0]
            for t in unknown:
                i = idx[t]
                local[t] = tuple(local[t][j] + lam * direction[3 * i + j] for j in range(3))
    out = ChargeAssignment(tuple(local))
    probs = validate_charge(new, H_new, out, cusped)
    if probs:
        raise IllegalMove("charge transit failed: " + "; ".join(probs))
    return out
