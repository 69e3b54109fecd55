"""Tensor-network state sums over charged I-triangulations.

Each tetrahedron contributes its symmetrized tensor; letter slots
(alpha, beta, gamma, delta) are bound to the face classes opposite
(v3, v1, v2, v0) of its branching order.  A state assigns a value in
Z/N to every face class; the state sum adds, over all states, the product
of tensor entries.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .charge import ChargeAssignment, charge_kernel, cusp_holonomy, link_cycles, validate_charge
from .cycloarith import RootContext, common_nth_roots, make_context
from .decor import ITriangulation
from .qdilog import SLOT_FACES, roots_from_points, sym_tet_entries, sym_tet_tensor
from .triangulation import face_io_assignment

__all__ = [
    "NetworkError",
    "TensorNetwork",
    "ContractionPlan",
    "tet_roots",
    "build_network",
    "plan_contraction",
    "contract",
    "naive_statesum",
    "H_N",
    "K_N",
    "compare_up_to_phase",
    "cusped_statesum",
    "constrained_statesum",
    "select_cusped_charge",
]


class NetworkError(ValueError):
    pass


@dataclass
class TensorNetwork:
    N: int
    tensors: list[np.ndarray]
    bindings: list[tuple[int, int, int, int]]  # face class per letter slot
    n_faces: int
    # lazy data for the constrained evaluator
    specs: list[tuple[int, tuple, tuple]] = field(default_factory=list)


@dataclass
class ContractionPlan:
    steps: list[tuple[int, int]]  # node ids merged; the merged node takes a new id
    peak_rank: int
    cost: float


def tet_roots(ctx: RootContext, TI: ITriangulation, t: int):
    """Root triple for tetrahedron t, edge-consistent when points are known."""
    if TI.points is not None:
        return roots_from_points(ctx, TI.points, TI.ordered_vertices(t))
    m = TI.moduli[t]
    if m.p is None:
        raise NetworkError("moduli without p data")
    return common_nth_roots(ctx, *m.p)


def _bindings(TI: ITriangulation, t: int) -> tuple[int, int, int, int]:
    o = TI.branch.order[t]
    return tuple(TI.tri.face_of[t][o[k]] for k in SLOT_FACES)


def _check_roles(TI: ITriangulation) -> None:
    tri = TI.tri
    seen: dict[int, list[bool]] = {}
    for t in range(tri.n_tets):
        ins, _ = face_io_assignment(tri, TI.orient, TI.branch, t)
        for f in range(4):
            seen.setdefault(tri.face_of[t][f], []).append(f in ins)
    for fid, roles in seen.items():
        if len(roles) != 2:
            raise NetworkError(f"face {fid} bound {len(roles)} times")
        if roles[0] == roles[1]:
            raise NetworkError(f"face {fid} has two {'inputs' if roles[0] else 'outputs'}")


def build_network(TI: ITriangulation, c: ChargeAssignment, ctx: RootContext, dense: bool = True) -> TensorNetwork:
    """Symmetrized tensors with face bindings.

    ``dense=False`` skips the N^4 arrays and keeps only what the
    constrained evaluator needs.
    """
    if not TI.tri.is_closed():
        raise NetworkError("unglued faces")
    _check_roles(TI)
    charges = c.branched(TI.branch)
    tensors, bindings, specs = [], [], []
    for t in range(TI.tri.n_tets):
        roots = tet_roots(ctx, TI, t)
        sign = TI.sign(t)
        if dense:
            tensors.append(sym_tet_tensor(ctx, sign, roots, charges[t]).data)
        specs.append((sign, roots, charges[t]))
        bindings.append(_bindings(TI, t))
    return TensorNetwork(ctx.N, tensors, bindings, TI.tri.n_faces, specs)


# ----------------------------------------------------------------------------
# planning


def plan_contraction(net: TensorNetwork) -> ContractionPlan:
    """Greedy pairwise merges minimizing the rank of the merged tensor.

    Only pairs sharing an index are merged while such pairs exist; ties go
    to the lexicographically smallest node pair.  Disconnected pieces are
    multiplied at the end.
    """
    nodes = {i: _free_indices(b) for i, b in enumerate(net.bindings)}
    next_id = len(nodes)
    steps = []
    peak = max((len(v) for v in nodes.values()), default=0)
    cost = 0.0
    N = net.N
    while len(nodes) > 1:
        best = None
        ids = sorted(nodes)
        for a, b in itertools.combinations(ids, 2):
            shared = nodes[a] & nodes[b]
            if not shared and best is not None and best[0] == 0:
                continue
            merged = nodes[a] ^ nodes[b]
            key = (0 if shared else 1, len(merged), -len(shared), a, b)
            if best is None or key < best[:5]:
                best = key + (merged, shared)
        _, _, _, a, b, merged, shared = best
        cost += float(N) ** len(nodes[a] | nodes[b])
        steps.append((a, b))
        del nodes[a], nodes[b]
        nodes[next_id] = merged
        next_id += 1
        peak = max(peak, len(merged))
    return ContractionPlan(steps, peak, cost)


def _free_indices(binding) -> frozenset:
    counts: dict[int, int] = {}
    for f in binding:
        counts[f] = counts.get(f, 0) + 1
    return frozenset(f for f, k in counts.items() if k == 1)


def _self_trace(tensor: np.ndarray, binding) -> tuple[np.ndarray, list[int]]:
    free = [f for f in binding if list(binding).count(f) == 1]
    out = np.einsum(tensor, list(binding), free)
    return out, free


def contract(net: TensorNetwork, plan: ContractionPlan | None = None, threads: int = 1) -> complex:
    """Scalar value of the network following ``plan``.

    With threads > 1, merges whose inputs are ready run concurrently; the
    single-threaded order is the reference.
    """
    if not net.tensors:
        return 1.0 + 0j
    plan = plan or plan_contraction(net)
    live = {}
    for i, (T, b) in enumerate(zip(net.tensors, net.bindings)):
        live[i] = _self_trace(T, b)
    next_id = len(live)

    def merge(x, y):
        (Ta, ia), (Tb, ib) = x, y
        out = [f for f in ia if f not in ib] + [f for f in ib if f not in ia]
        return np.einsum(Ta, ia, Tb, ib, out), out

    if threads <= 1:
        for a, b in plan.steps:
            live[next_id] = merge(live.pop(a), live.pop(b))
            next_id += 1
    else:
        # run steps in waves of mutually independent merges
        pending = list(enumerate(plan.steps))
        ids = {k: len(net.tensors) + k for k in range(len(plan.steps))}
        with ThreadPoolExecutor(max_workers=threads) as pool:
            while pending:
                wave, rest = [], []
                for k, (a, b) in pending:
                    if a in live and b in live and not any(a in w[1] or b in w[1] for w in wave):
                        wave.append((k, (a, b)))
                    else:
                        rest.append((k, (a, b)))
                futures = [(k, pool.submit(merge, live[a], live[b]), a, b) for k, (a, b) in wave]
                for k, fut, a, b in futures:
                    live[ids[k]] = fut.result()
                    del live[a], live[b]
                pending = rest
    (T, idx), = live.values()
    if idx:
        raise NetworkError("contraction left open indices")
    return complex(T)


def naive_statesum(net: TensorNetwork) -> complex:
    """Sum over all N^faces states, for small oracle checks."""
    N = net.N
    F = net.n_faces
    total = 0j
    states = np.array(list(itertools.product(range(N), repeat=F)), dtype=np.int64)
    prod = np.ones(len(states), dtype=complex)
    for T, b in zip(net.tensors, net.bindings):
        prod *= T[states[:, b[0]], states[:, b[1]], states[:, b[2]], states[:, b[3]]]
    total = prod.sum()
    return complex(total)


# ----------------------------------------------------------------------------
# invariants


def H_N(TI: ITriangulation, c: ChargeAssignment, ctx: RootContext, threads: int = 1) -> complex:
    net = build_network(TI, c, ctx)
    value = contract(net, plan_contraction(net), threads)
    return value * float(ctx.N) ** (-TI.tri.n_vertices)


def K_N(TI: ITriangulation, c: ChargeAssignment, ctx: RootContext, threads: int = 1) -> complex:
    return H_N(TI, c, ctx, threads) ** (2 * ctx.N)


def compare_up_to_phase(a: complex, b: complex, ctx: RootContext, tol: float = 1e-6) -> bool:
    """a = lambda b with lambda^{2N} = 1, within tol."""
    if b == 0:
        if a == 0:
            return True
        raise ZeroDivisionError("b is zero while a is not")
    if abs(abs(a) - abs(b)) > tol * abs(a):
        return False
    return abs((a / b) ** (2 * ctx.N) - 1) <= tol


# ----------------------------------------------------------------------------
# constrained evaluation (cusped, large N)


def _constraint_rows(net: TensorNetwork) -> list[list[int]]:
    # each tensor forces beta = gamma + delta on its faces
    rows = []
    for b in net.bindings:
        row = [0] * net.n_faces
        row[b[1]] -= 1
        row[b[2]] += 1
        row[b[3]] += 1
        rows.append(row)
    return rows


def _parametrize(rows: list[list[int]], n: int, N: int):
    """Express all face values as integer combinations of free ones mod N.

    Eliminates with unit pivots only; returns (free list, expression
    matrix) or None if a non-unit pivot would be needed.
    """
    rows = [list(r) for r in rows]
    pivots = {}
    for r in rows:
        for f, p in list(pivots.items()):
            if r[f]:
                # r -= r[f] * inv(p_row[f]) * p_row, p_row normalized to 1 at f
                k = r[f]
                r[:] = [(x - k * y) % N for x, y in zip(r, p)]
        r[:] = [x % N for x in r]
        col = next((j for j in range(n) if r[j] and np.gcd(r[j], N) == 1), None)
        if col is None:
            if any(r):
                return None
            continue
        inv = pow(int(r[col]), -1, N)
        r[:] = [(x * inv) % N for x in r]
        for f, p in pivots.items():
            if p[col]:
                k = p[col]
                p[:] = [(x - k * y) % N for x, y in zip(p, r)]
        pivots[col] = r
    free = [j for j in range(n) if j not in pivots]
    expr = np.zeros((n, len(free)), dtype=np.int64)
    for k, j in enumerate(free):
        expr[j, k] = 1
    for col, p in pivots.items():
        for k, j in enumerate(free):
            expr[col, k] = (-p[j]) % N
    return free, expr


def constrained_statesum(net: TensorNetwork, ctx: RootContext, chunk: int = 1 << 20) -> complex:
    """State sum over the solutions of the tensor support constraints only."""
    n = net.n_faces
    par = _parametrize(_constraint_rows(net), n, ctx.N)
    if par is None:
        raise NetworkError("support constraints need a non-unit pivot")
    free, expr = par
    N = ctx.N
    total = 0j
    n_states = N ** len(free)
    for start in range(0, n_states, chunk):
        idx = np.arange(start, min(n_states, start + chunk), dtype=np.int64)
        digits = np.empty((len(free), len(idx)), dtype=np.int64)
        rem = idx.copy()
        for k in range(len(free)):
            digits[k] = rem % N
            rem //= N
        values = (expr @ digits) % N
        prod = np.ones(len(idx), dtype=complex)
        for (sign, roots, ch), b in zip(net.specs, net.bindings):
            prod *= sym_tet_entries(ctx, sign, roots, ch, values[b[0]], values[b[1]], values[b[2]], values[b[3]])
        total += prod.sum()
    return complex(total)


def cusped_statesum(TI: ITriangulation, c: ChargeAssignment, ctx: RootContext, method: str = "auto") -> complex:
    """Raw state sum of an ideal triangulation (no vertex normalization)."""
    if method == "auto":
        method = "dense" if ctx.N <= 7 else "constrained"
    net = build_network(TI, c, ctx, dense=(method == "dense"))
    if method == "dense":
        return contract(net, plan_contraction(net))
    return constrained_statesum(net, ctx)


def select_cusped_charge(TI: ITriangulation, probe_N: int = 11, box: int = 2) -> ChargeAssignment:
    """Cusped charge whose cusp-holonomy class maximizes |state sum| at probe_N.

    Charges with all edge sums 2 split into classes by their holonomy
    along the vertex-link cycles; the modulus of the state sum depends
    only on that class.  Candidates are the particular solution plus
    kernel combinations with coefficients in [-box, box]; each class is
    represented by its smallest member.
    """
    tri = TI.tri
    x, kernel = charge_kernel(tri, (), cusped=True)
    cycles = link_cycles(tri)
    classes: dict[tuple, tuple] = {}
    for coef in itertools.product(range(-box, box + 1), repeat=len(kernel)):
        flat = [xi + sum(a * k[i] for a, k in zip(coef, kernel)) for i, xi in enumerate(x)]
        c = ChargeAssignment.from_flat(flat)
        if validate_charge(tri, (), c, cusped=True):
            continue
        hol = tuple(cusp_holonomy(tri, TI.orient, c.local, cyc) for cyc in cycles)
        key = (max(abs(v) for v in flat), sum(v * v for v in flat), flat)
        if hol not in classes or key < classes[hol][0]:
            classes[hol] = (key, c)
    if not classes:
        raise NetworkError("no cusped charge in the search box")
    ctx = make_context(probe_N)
    best = None
    for hol in sorted(classes):
        c = classes[hol][1]
        size = abs(cusped_statesum(TI, c, ctx))
        if best is None or size > best[0] * (1 + 1e-9):
            best = (size, c)
    return best[1]
