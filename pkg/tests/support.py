"""Helpers shared by the invariance tests."""

from qhi.cycloarith import make_context
from qhi.decor import idealize
from qhi.statesum import H_N
from qhi.triangulation import move_2_3
from qhi.workspace import Workspace

# a face of the simplex fixture carrying an H edge at local vertices 1 2
BUBBLE_SITE = dict(tet=0, face=0, vertices=(1, 2))


def closed_workspace(fx) -> Workspace:
    return Workspace(fx.tri, fx.orient, fx.branch, fx.H, fx.cocycle, fx.charge)


def K_of(ws: Workspace, N: int) -> complex:
    TI = idealize(ws.tri, ws.branch, ws.cocycle, ws.orient)
    return H_N(TI, ws.charge, make_context(N)) ** (2 * N)


def created_edge_2_3(ws: Workspace, tet: int = 0, face: int = 0) -> int:
    """Edge class created by move_2_3 at (tet, face)."""
    res = move_2_3(ws.tri, tet, face)
    kept = set(res.edge_map(ws.tri).values())
    (e,) = set(range(res.tri.n_edges)) - kept
    return e


def rel(a: complex, b: complex) -> float:
    return abs(a - b) / abs(b)
