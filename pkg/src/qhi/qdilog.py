"""Matrix quantum dilogarithms and their identity checks.

Tensors are stored as ``(N, N, N, N)`` arrays in a fixed letter layout
``[alpha, beta, gamma, delta]`` regardless of type.  For the plain tensor
``R`` the lower pair is ``(alpha, beta)``; for the inverse ``Rbar`` the
lower pair is ``(gamma, delta)``.  ``QTensor.matrix()`` returns the
``N^2 x N^2`` matrix with rows indexed by the lower pair, so products of
matrices compose the way the operator identities are written.

Face binding for a tetrahedron with branching order ``(v0, v1, v2, v3)``:
alpha sits on the face opposite v3, beta opposite v1, gamma opposite v2
and delta opposite v0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cycloarith import (
    PoleHit,
    nth_root,
    RootContext,
    ZeroArgument,
    bracket,
    common_nth_roots,
    h_func,
    omega_table,
    sqrt_n_phase,
)

__all__ = [
    "QTensor",
    "PhaseReport",
    "NonRegularParameters",
    "R_tensor",
    "Rbar_tensor",
    "charged_tensor",
    "basic_tet_tensor",
    "sym_tet_tensor",
    "sym_tet_entries",
    "S_matrix",
    "T_matrix",
    "X_Z_Y",
    "phase_ratio",
    "verify_inverse",
    "verify_symmetry",
    "verify_charged_pentagon",
    "verify_unitarity",
    "verify_factorization",
    "rep_oracle",
    "moduli_roots",
    "roots_from_points",
    "five_points",
    "cross_ratio",
    "verify_basic_pentagon",
    "clebsch_gordan",
    "RepReport",
]

# slot order of the letter layout, as faces opposite these branch positions
SLOT_FACES = (3, 1, 2, 0)


class NonRegularParameters(ValueError):
    pass


@dataclass(frozen=True)
class QTensor:
    data: np.ndarray
    bar: bool = False

    @property
    def N(self) -> int:
        return self.data.shape[0]

    def lower_slots(self) -> tuple[int, int]:
        return (2, 3) if self.bar else (0, 1)

    def upper_slots(self) -> tuple[int, int]:
        return (0, 1) if self.bar else (2, 3)

    def matrix(self) -> np.ndarray:
        N = self.N
        order = self.lower_slots() + self.upper_slots()
        return np.transpose(self.data, order).reshape(N * N, N * N)

    @classmethod
    def from_matrix(cls, M: np.ndarray, bar: bool = False) -> "QTensor":
        N = int(round(M.shape[0] ** 0.5))
        arr = M.reshape(N, N, N, N)
        if bar:
            arr = np.transpose(arr, (2, 3, 0, 1))
        return cls(arr, bar)


@dataclass(frozen=True)
class PhaseReport:
    """Outcome of an "equal up to a root-of-unity factor" comparison."""

    ok: bool
    ratio: complex
    spread: float
    root_residual: float

    def __bool__(self) -> bool:
        return self.ok


def _index_grids(N: int):
    a = np.arange(N)
    return np.meshgrid(a, a, a, a, indexing="ij")


def R_tensor(ctx: RootContext, p0r: complex, p1r: complex, p2r: complex) -> QTensor:
    """R(x, y, z) with (x, y, z) = (p1', p0', -p2')."""
    x, y, z = p1r, p0r, -p2r
    if x == 0 or y == 0 or z == 0:
        raise ZeroArgument("roots of the p_i must be nonzero")
    N = ctx.N
    om = omega_table(ctx, x, y, z)
    A, B, G, D = _index_grids(N)
    vals = (
        h_func(ctx, z / x)
        * ctx.zpow(A * D)
        * ctx.zpow_half(A * A)
        * om[(G - A) % N]
    )
    mask = (G + D - B) % N == 0
    return QTensor(np.where(mask, vals, 0.0), bar=False)


def Rbar_tensor(ctx: RootContext, p0r: complex, p1r: complex, p2r: complex) -> QTensor:
    """The inverse tensor, entry Rbar_{gamma,delta}^{alpha,beta}."""
    x, y, z = p1r, p0r, -p2r
    if x == 0 or y == 0 or z == 0:
        raise ZeroArgument("roots of the p_i must be nonzero")
    N = ctx.N
    br = bracket(ctx, x / z)
    if abs(br) < 1e-14:
        raise PoleHit("degenerate bracket [x/z]")
    om = omega_table(ctx, x / ctx.zeta, y, z)
    if np.any(om == 0):
        raise PoleHit("omega vanishes")
    A, B, G, D = _index_grids(N)
    vals = (
        (br / h_func(ctx, z / x))
        * ctx.zpow(-A * D)
        * ctx.zpow_half(-A * A)
        / om[(G - A) % N]
    )
    mask = (G + D - B) % N == 0
    return QTensor(np.where(mask, vals, 0.0), bar=True)


def charged_tensor(ctx: RootContext, base: QTensor, a: int, c: int) -> QTensor:
    """Index-shifted tensor with shift ``a`` and phase twist ``c`` (both mod N).

    For R:    zeta^{c(gamma-alpha)} R_{alpha, beta-a}^{gamma-a, delta}
    For Rbar: zeta^{c(gamma-alpha)} Rbar_{gamma+a, delta}^{alpha, beta+a}
    """
    N = ctx.N
    a %= N
    c %= N
    s = -a if not base.bar else a
    shifted = np.roll(np.roll(base.data, -s, axis=1), -s, axis=2)
    # np.roll(x, -s)[i] == x[i + s]
    A, _, G, _ = _index_grids(N)
    return QTensor(ctx.zpow(c * (G - A)) * shifted, base.bar)


def moduli_roots(ctx: RootContext, w0: complex) -> tuple[complex, complex, complex]:
    """Root triple (p0', p1', p2') for p = (1 - w0, w0, -1), principal roots."""
    return common_nth_roots(ctx, 1.0 - w0, w0, -1.0)


def basic_tet_tensor(ctx: RootContext, sign: int, roots) -> QTensor:
    """R or Rbar depending on the branching sign, from a root triple."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return (R_tensor if sign == 1 else Rbar_tensor)(ctx, *roots)


def sym_prefactor(ctx: RootContext, roots, charges) -> complex:
    p0r, p1r, p2r = roots
    c0, c1 = charges[0], charges[1]
    w0r = -p1r / p2r
    w1r = -p2r / p0r
    return (w0r ** (-c1) * w1r ** c0) ** ctx.p


def sym_tet_tensor(ctx: RootContext, sign: int, roots, charges) -> QTensor:
    """Symmetrized tensor: prefactor times the charge-shifted R or Rbar.

    ``charges`` is (c0, c1, c2) with c0 + c1 + c2 = 1; the shifts use
    c' = (p + 1) c mod N.
    """
    c0, c1, c2 = charges
    if c0 + c1 + c2 != 1:
        raise ValueError("charges on a tetrahedron must sum to 1")
    base = basic_tet_tensor(ctx, sign, roots)
    h = ctx.half_exp
    shifted = charged_tensor(ctx, base, h * c0, h * c1)
    return QTensor(sym_prefactor(ctx, roots, charges) * shifted.data, base.bar)


def sym_tet_entries(ctx: RootContext, sign: int, roots, charges, A, B, G, D) -> np.ndarray:
    """Entries of sym_tet_tensor at index arrays, without the dense tensor.

    Used where N^4 storage is too large; agrees with sym_tet_tensor.
    """
    c0, c1, c2 = charges
    if c0 + c1 + c2 != 1:
        raise ValueError("charges on a tetrahedron must sum to 1")
    N = ctx.N
    x, y, z = roots[1], roots[0], -roots[2]
    if x == 0 or y == 0 or z == 0:
        raise ZeroArgument("roots of the p_i must be nonzero")
    a = (ctx.half_exp * c0) % N
    c = (ctx.half_exp * c1) % N
    A = np.asarray(A)
    D = np.asarray(D)
    s = -a if sign == 1 else a
    Bs = (np.asarray(B) + s) % N
    Gs = (np.asarray(G) + s) % N
    mask = (Gs + D - Bs) % N == 0
    if sign == 1:
        om = omega_table(ctx, x, y, z)
        vals = h_func(ctx, z / x) * ctx.zpow(A * D) * ctx.zpow_half(A * A) * om[(Gs - A) % N]
    else:
        br = bracket(ctx, x / z)
        if abs(br) < 1e-14:
            raise PoleHit("degenerate bracket [x/z]")
        om = omega_table(ctx, x / ctx.zeta, y, z)
        vals = (br / h_func(ctx, z / x)) * ctx.zpow(-A * D) * ctx.zpow_half(-A * A) / om[(Gs - A) % N]
    vals = sym_prefactor(ctx, roots, charges) * ctx.zpow(c * (G - A)) * vals
    return np.where(mask, vals, 0.0)


def S_matrix(ctx: RootContext) -> np.ndarray:
    m = np.arange(ctx.N)
    return ctx.zpow(np.outer(m, m)) / np.sqrt(ctx.N)


def T_matrix(ctx: RootContext) -> np.ndarray:
    N = ctx.N
    m = np.arange(N)
    T = np.zeros((N, N), dtype=complex)
    T[m, (-m) % N] = sqrt_n_phase(ctx) * ctx.zpow_half(m * m)
    return T


def X_Z_Y(ctx: RootContext):
    N = ctx.N
    X = np.roll(np.eye(N), 1, axis=0)  # X[i, j] = 1 iff i = j + 1
    Z = np.diag(ctx.powers).astype(complex)
    Y = ctx.zeta_half * X @ Z
    return X, Z, Y


# ----------------------------------------------------------------------------
# comparison helpers


def phase_ratio(lhs: np.ndarray, rhs: np.ndarray, order: int, tol: float = 1e-8) -> PhaseReport:
    """Check lhs = lambda * rhs with constant lambda and lambda^order = 1."""
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
    k = np.unravel_index(np.abs(rhs).argmax(), rhs.shape)
    if abs(rhs[k]) < 1e-300:
        return PhaseReport(False, complex("nan"), float("inf"), float("inf"))
    lam = complex(lhs[k] / rhs[k])
    spread = float(np.abs(lhs - lam * rhs).max() / scale)
    root_res = abs(lam ** order - 1.0)
    return PhaseReport(spread <= tol and root_res <= tol, lam, spread, root_res)


def verify_inverse(ctx: RootContext, roots) -> float:
    """max |R Rbar - id| for one root triple."""
    M = R_tensor(ctx, *roots).matrix() @ Rbar_tensor(ctx, *roots).matrix()
    return float(np.abs(M - np.eye(ctx.N ** 2)).max())


def _embed(N: int, M: np.ndarray, slots: tuple[int, int]) -> np.ndarray:
    """Place an N^2 x N^2 operator on two of three tensor factors."""
    T4 = M.reshape(N, N, N, N)
    i, j = slots
    k = ({0, 1, 2} - {i, j}).pop()
    out = np.zeros((N,) * 6, dtype=complex)
    eye = np.eye(N)
    # out[r0,r1,r2,s0,s1,s2] = T4[r_i, r_j, s_i, s_j] * delta(r_k, s_k)
    letters_r = "abc"
    letters_s = "def"
    subscripts = (
        f"{letters_r[i]}{letters_r[j]}{letters_s[i]}{letters_s[j]},"
        f"{letters_r[k]}{letters_s[k]}->abcdef"
    )
    out = np.einsum(subscripts, T4, eye)
    return out.reshape(N ** 3, N ** 3)


# ----------------------------------------------------------------------------
# roots from point configurations


def _edge_root(ctx: RootContext, points, a: int, b: int) -> complex:
    # N odd, so reversing an edge multiplies its root by -1 exactly
    if a < b:
        return nth_root(ctx, points[b] - points[a])
    return -nth_root(ctx, points[a] - points[b])


def roots_from_points(ctx: RootContext, points, order=(0, 1, 2, 3)):
    """Root triple (p0', p1', p2') of an ordered quadruple of points.

    The roots are products of per-edge roots of point differences, so
    tetrahedra sharing an edge use the same determination.
    """
    a, b, c, d = order

    def r(u, v):
        return _edge_root(ctx, points, u, v)

    return (r(a, b) * r(c, d), r(b, c) * r(a, d), -r(a, c) * r(b, d))


def five_points(x: complex, y: complex, shift: complex = -0.71 - 1.37j) -> list[complex]:
    """Five finite points whose ordered quadruples carry the 2-3 moduli.

    Before the final Moebius map the points are
    (inf, 0, y(1-x)/(x(1-y)), y/x, 1); the tetrahedra opposite vertices
    0..4 then have moduli x, y, y/x, y(1-x)/(x(1-y)), (1-x)/(1-y).
    """
    raw = [0.0, y * (1 - x) / (x * (1 - y)), y / x, 1.0]
    return [0.0] + [1.0 / (u - shift) for u in raw]


def cross_ratio(u0, u1, u2, u3):
    """Modulus w0 of the ordered quadruple (u0, u1, u2, u3)."""
    return (u2 - u1) * (u3 - u0) / ((u2 - u0) * (u3 - u1))


# ----------------------------------------------------------------------------
# identity checks


def _labelled(ctx, points, verts, a=0, c=0):
    base = R_tensor(ctx, *roots_from_points(ctx, points, verts))
    return ctx.zpow_half(-a * c) * charged_tensor(ctx, base, a, c).matrix()


def _pentagon_sides(ctx, x, y, charges=(0, 0, 0, 0, 0)):
    i, j, k, l, m = charges
    N = ctx.N
    P = five_points(x, y)
    lhs = (
        _embed(N, _labelled(ctx, P, (0, 1, 2, 3), i, m - k), (0, 1))
        @ _embed(N, _labelled(ctx, P, (0, 1, 3, 4), j, l + m), (0, 2))
        @ _embed(N, _labelled(ctx, P, (1, 2, 3, 4), k, l - i), (1, 2))
    )
    rhs = _embed(N, _labelled(ctx, P, (0, 2, 3, 4), j + k, l), (1, 2)) @ _embed(
        N, _labelled(ctx, P, (0, 1, 2, 4), i + j, m), (0, 1)
    )
    return lhs, rhs


def verify_basic_pentagon(ctx: RootContext, x: complex, y: complex) -> float:
    """Relative residual of the uncharged pentagon on the 2-3 configuration."""
    lhs, rhs = _pentagon_sides(ctx, x, y)
    return float(np.abs(lhs - rhs).max() / np.abs(rhs).max())


def verify_charged_pentagon(ctx: RootContext, x: complex, y: complex, charges) -> PhaseReport:
    """Charged pentagon with free charges (i, j, k, l, m), up to a 2N-th root."""
    lhs, rhs = _pentagon_sides(ctx, x, y, tuple(int(v) for v in charges))
    return phase_ratio(lhs, rhs, 2 * ctx.N)


def _perm_parity(order) -> int:
    order = list(order)
    parity = 0
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            if order[i] > order[j]:
                parity ^= 1
    return parity


def tetra_edge_charges(c0: int, c1: int, c2: int) -> dict:
    """Charges on the six edges of a tetrahedron labelled 0..3 in order."""
    return {
        frozenset((0, 1)): c0, frozenset((2, 3)): c0,
        frozenset((1, 2)): c1, frozenset((0, 3)): c1,
        frozenset((0, 2)): c2, frozenset((1, 3)): c2,
    }


# conjugating matrices per letter slot (alpha, beta, gamma, delta)
_SYMMETRY_PATTERN = {
    (0, 1): ("Tinv", None, "T", None),
    (1, 2): ("Sinv", None, None, "T"),
    (2, 3): (None, "Sinv", None, "S"),
}


def verify_symmetry(ctx: RootContext, points, charges, transposition) -> PhaseReport:
    """Branching change on one tetrahedron versus S/T conjugation.

    ``points`` are four vertex positions for a positively branched
    tetrahedron, ``charges`` its (c0, c1, c2) (they need not sum to 1 for
    negative tests) and ``transposition`` one of (0,1), (1,2), (2,3).
    """
    transposition = tuple(transposition)
    if transposition not in _SYMMETRY_PATTERN:
        raise ValueError("transposition must be (0,1), (1,2) or (2,3)")
    edge_charge = tetra_edge_charges(*charges)
    old = _ordered_sym_tensor_loose(ctx, points, (0, 1, 2, 3), edge_charge)
    order = [0, 1, 2, 3]
    i, j = transposition
    order[i], order[j] = order[j], order[i]
    new = _ordered_sym_tensor_loose(ctx, points, tuple(order), edge_charge)
    # faces opposite vertex v live at slot SLOT_POS[v] in the old layout
    slot_pos = {v: s for s, v in enumerate(SLOT_FACES)}
    perm = [slot_pos[order[k]] for k in SLOT_FACES]
    new_in_old = np.transpose(new, np.argsort(perm))
    S = S_matrix(ctx)
    T = T_matrix(ctx)
    named = {"S": S, "T": T, "Sinv": np.linalg.inv(S), "Tinv": np.linalg.inv(T), None: np.eye(ctx.N)}
    mats = [named[k] for k in _SYMMETRY_PATTERN[transposition]]
    conj = np.einsum("abgd,Aa,Bb,Gg,Dd->ABGD", old, *mats)
    return phase_ratio(new_in_old, conj, 2 * ctx.N)


def _ordered_sym_tensor_loose(ctx, points, order, edge_charge):
    # like sym_tet_tensor but tolerates charge triples not summing to one
    a, b, c, d = order
    sign = 1 if _perm_parity(order) == 0 else -1
    ch = (
        edge_charge[frozenset((a, b))],
        edge_charge[frozenset((b, c))],
        edge_charge[frozenset((a, c))],
    )
    roots = roots_from_points(ctx, points, order)
    base = basic_tet_tensor(ctx, sign, roots)
    h = ctx.half_exp
    shifted = charged_tensor(ctx, base, h * ch[0], h * ch[1])
    return sym_prefactor(ctx, roots, ch) * shifted.data


def verify_unitarity(ctx: RootContext, points, a: int, c: int) -> PhaseReport:
    """Rbar at conjugate parameters against the conjugated, negated R."""
    N = ctx.N
    base = R_tensor(ctx, *roots_from_points(ctx, points))
    lhs_r = ctx.zpow_half(-a * c) * charged_tensor(ctx, base, a, c).data
    conj_pts = [complex(v).conjugate() for v in points]
    bar = Rbar_tensor(ctx, *roots_from_points(ctx, conj_pts))
    rbar = ctx.zpow_half(a * c) * charged_tensor(ctx, bar, a, c).data
    neg = (-np.arange(N)) % N
    target = np.conj(lhs_r[np.ix_(neg, neg, neg, neg)])
    return phase_ratio(rbar, target, 2 * N, tol=1e-10)


def verify_factorization(ctx: RootContext, points, a: int, c: int, misplace: bool = False) -> PhaseReport:
    """Index-shift form of the charged tensors against the Y/Z form.

    Returns the worse of the R and Rbar reports.  ``misplace`` moves the
    second-factor Z from the right of R to its left, for negative tests.
    """
    N = ctx.N
    _, Z, Y = X_Z_Y(ctx)
    mp = np.linalg.matrix_power
    eye = np.eye(N)
    roots = roots_from_points(ctx, points)
    R = R_tensor(ctx, *roots)
    Rb = Rbar_tensor(ctx, *roots)
    left = np.kron(mp(Y, -a) @ mp(Z, -c), eye)
    right = np.kron(mp(Z, c), mp(Z, -a))
    if misplace:
        left = left @ np.kron(eye, mp(Z, -a))
        right = np.kron(mp(Z, c), eye)
    rep_r = phase_ratio(
        ctx.zpow_half(-a * c) * charged_tensor(ctx, R, a, c).matrix(),
        ctx.zpow_half(a * c) * left @ R.matrix() @ right,
        2 * N,
    )
    rep_b = phase_ratio(
        ctx.zpow_half(a * c) * charged_tensor(ctx, Rb, a, c).matrix(),
        ctx.zpow_half(-a * c)
        * np.kron(mp(Z, c), mp(Z, -a))
        @ Rb.matrix()
        @ np.kron(mp(Z, -c) @ mp(Y, -a), eye),
        2 * N,
    )
    return rep_r if rep_r.spread >= rep_b.spread else rep_b


@dataclass(frozen=True)
class RepReport:
    equivariance: float
    sixj: float
    phase: complex

    @property
    def ok(self) -> bool:
        return self.equivariance <= 1e-9 and self.sixj <= 1e-9


def _standard_rep(ctx, t, x):
    X, Z, _ = X_Z_Y(ctx)
    return t * t * Z, t * x * X


def _product_params(ctx, tr, xr, tm, xm):
    N = ctx.N
    xn = tr ** N * xm ** N + xr ** N / tm ** N
    if abs(xn) < 1e-12:
        raise NonRegularParameters("product representation is not cyclic")
    return tr * tm, nth_root(ctx, xn)


def clebsch_gordan(ctx: RootContext, alpha: int, tr, xr, tm, xm, xrm) -> np.ndarray:
    """Normalized Clebsch-Gordan matrix (N^2 x N): V_{rho mu} -> V_rho (x) V_mu."""
    N = ctx.N
    om = omega_table(ctx, tr * xm, xr / tm, xrm)
    K = np.zeros((N, N, N), dtype=complex)
    i, j = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    K[i, j, (i + j) % N] = ctx.zpow(alpha * j) * ctx.zpow_half(alpha * alpha) * om[(i - alpha) % N]
    return h_func(ctx, xrm / (tr * xm)) * K.reshape(N * N, N)


def rep_oracle(ctx: RootContext, t_params, x_params) -> RepReport:
    """Certify the R formula from representation theory of the Borel algebra.

    Three standard representations (t, x) are combined; the Clebsch-Gordan
    maps are checked for equivariance and the 6j change of basis is
    compared with ``R_tensor``.  The 6j residual is measured after removing
    one global N-th root of unity, which the branch of g leaves free.
    """
    N = ctx.N
    (tr, tm, tn), (xr, xm, xn) = t_params, x_params
    if min(abs(v) for v in (*t_params, *x_params)) < 1e-12:
        raise NonRegularParameters("parameters must be nonzero")
    trm, xrm = _product_params(ctx, tr, xr, tm, xm)
    tmn, xmn = _product_params(ctx, tm, xm, tn, xn)
    _, xrmn = _product_params(ctx, trm, xrm, tn, xn)
    eye = np.eye(N)

    Er, Dr = _standard_rep(ctx, tr, xr)
    Em, Dm = _standard_rep(ctx, tm, xm)
    Erm, Drm = _standard_rep(ctx, trm, xrm)
    equiv = 0.0
    for a in range(N):
        K = clebsch_gordan(ctx, a, tr, xr, tm, xm, xrm)
        scale = np.abs(K).max()
        equiv = max(
            equiv,
            np.abs(np.kron(Er, Em) @ K - K @ Erm).max() / scale,
            np.abs((np.kron(Er, Dm) + np.kron(Dr, eye)) @ K - K @ Drm).max() / scale,
        )

    R = R_tensor(ctx, xr * xn, xrmn * xm, -xrm * xmn).data
    left = np.empty((N, N, N ** 3, N), dtype=complex)
    right = np.empty((N, N, N ** 3, N), dtype=complex)
    for a in range(N):
        Ka = np.kron(clebsch_gordan(ctx, a, tr, xr, tm, xm, xrm), eye)
        Kd = np.kron(eye, clebsch_gordan(ctx, a, tm, xm, tn, xn, xmn))
        for b in range(N):
            left[a, b] = Ka @ clebsch_gordan(ctx, b, trm, xrm, tn, xn, xrmn)
            right[a, b] = Kd @ clebsch_gordan(ctx, b, tr, xr, tmn, xmn, xrmn)
    # right[d, g] = K_d(mu,nu) K_g(rho,mu nu); sum R[a,b,g,d] right[d,g]
    expanded = np.einsum("abgd,dgij->abij", R, right)
    k = np.unravel_index(np.abs(expanded).argmax(), expanded.shape)
    lam = complex(left[k] / expanded[k])
    lam_root = ctx.powers[int(round(np.angle(lam) * N / (2 * np.pi))) % N]
    sixj = float(np.abs(left - lam_root * expanded).max() / np.abs(left).max())
    return RepReport(float(equiv), sixj, lam_root)
