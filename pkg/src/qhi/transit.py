"""Decorated moves: a triangulation move carrying every workspace section along."""

from __future__ import annotations

from typing import Sequence

from .charge import charge_transit, solve_charge
from .decor import cocycle_transit, transit_branchings, transit_orientation
from .moebius import PSL2C
from .triangulation import IllegalMove, bubble, move_0_2, move_2_3, move_3_2
from .workspace import Workspace, WorkspaceError

__all__ = ["MOVES", "apply_transit"]

MOVES = ("2-3", "3-2", "0-2", "bubble")


def apply_transit(
    ws: Workspace,
    move: str,
    *,
    lam: int = 0,
    tet: int = 0,
    face: int = 0,
    edge: int = 0,
    vertices: Sequence[int] | None = None,
    faces: Sequence[int] = (0, 1),
    branch_index: int = 0,
    free: PSL2C | None = None,
) -> Workspace:
    """Apply one move and carry orientation, branching, H, cocycle and charge.

    ``vertices`` is the local edge a b opened by 0-2 (default 0 2) or the H
    edge of the bubble face (default 0 1).  ``free`` is the cocycle value on
    the new edge of a bubble.  ``branch_index`` picks among the branchings
    that extend the old one.
    """
    if move not in MOVES:
        raise ValueError(f"unknown move {move!r}")
    if ws.orient is None or ws.branch is None:
        raise WorkspaceError("orientation and branching are required")
    old = ws.tri
    H = set(ws.H or ())
    charge = ws.charge if ws.charge is not None else solve_charge(old, H, cusped=ws.cusped)
    if vertices is None:
        vertices = (0, 2) if move == "0-2" else (0, 1)
    if move == "2-3":
        res = move_2_3(old, tet, face)
    elif move == "3-2":
        res = move_3_2(old, edge, H)
    elif move == "0-2":
        res = move_0_2(old, tet, vertices[0], vertices[1], faces[0], faces[1], H)
    else:
        res, H_new = bubble(old, tet, face, H, tuple(vertices))
    if move != "bubble":
        emap = res.edge_map(old)
        if any(e not in emap for e in H):
            raise IllegalMove("the move removes an edge of H")
        H_new = {emap[e] for e in H}
    orient = transit_orientation(ws.orient, res)
    branches = transit_branchings(old, ws.branch, res)
    if not branches:
        raise WorkspaceError("the branching does not extend across the move")
    branch = branches[branch_index % len(branches)]
    cocycle = cocycle_transit(old, ws.cocycle, res, free=free) if ws.cocycle is not None else None
    new_charge = charge_transit(old, charge, res, H_new, lam, orient, branch, cusped=ws.cusped)
    H_out = frozenset(H_new) if ws.H is not None else None
    return Workspace(res.tri, orient, branch, H_out, cocycle, new_charge)
