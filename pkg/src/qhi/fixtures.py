"""Small reference triangulations used by the CLI and the test suite."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

from .charge import ChargeAssignment, solve_charge
from .decor import Cocycle, ITriangulation, coboundary, idealize, moduli_from_w0, perturb_to_idealizable
from .moebius import IDENTITY
from .linkcomp import compile_distinguished, parse_pd
from .statesum import select_cusped_charge
from .triangulation import (
    Branching,
    Triangulation,
    b_sign,
    find_branching,
    orientation,
    total_order_branching,
)

__all__ = [
    "ClosedFixture",
    "CuspedFixture",
    "UNKNOT_2",
    "TREFOIL",
    "FIGURE_EIGHT_PD",
    "FIGURE_EIGHT_GLUINGS",
    "label_rank",
    "simplex_boundary",
    "five_cycle_H",
    "closed_fixture",
    "edge_star",
    "link_fixture",
    "figure_eight",
    "figure_eight_fixture",
]

UNKNOT_2 = "X(1,2,2,3) X(3,4,4,1)"
TREFOIL = "X(1,4,2,5) X(3,6,4,1) X(5,2,6,3)"
FIGURE_EIGHT_PD = "X(4,2,5,1) X(8,6,1,5) X(6,3,7,4) X(2,7,3,8)"

# Two tetrahedra glued into the figure-eight knot complement.
FIGURE_EIGHT_GLUINGS = (
    (0, 0, 1, 1, (1, 3, 0, 2)),
    (0, 1, 1, 0, (2, 0, 3, 1)),
    (0, 2, 1, 2, (0, 3, 2, 1)),
    (0, 3, 1, 3, (2, 1, 0, 3)),
)


@dataclass
class ClosedFixture:
    tri: Triangulation
    orient: tuple[int, ...]
    branch: Branching
    H: frozenset[int]
    cocycle: Cocycle
    TI: ITriangulation
    charge: ChargeAssignment


@dataclass
class CuspedFixture:
    tri: Triangulation
    orient: tuple[int, ...]
    branch: Branching
    TI: ITriangulation
    charge: ChargeAssignment


def label_rank(tri: Triangulation, labels: Sequence[Sequence]) -> list:
    """Vertex-class ranks reproducing the label order of from_labelled_tets."""
    rank = [None] * tri.n_vertices
    for t, row in enumerate(labels):
        for i, lab in enumerate(row):
            rank[tri.vertex_of[t][i]] = lab
    return rank


def simplex_boundary() -> tuple[Triangulation, list[tuple[int, ...]]]:
    """The boundary of the 4-simplex, tetrahedron i omitting label i."""
    labels = [tuple(v for v in range(5) if v != i) for i in range(5)]
    return Triangulation.from_labelled_tets(labels), labels


def five_cycle_H(tri: Triangulation, rank: Sequence[int]) -> frozenset[int]:
    """Edges joining cyclically adjacent labels 0-1-2-3-4-0."""
    H = set()
    for e, (u, v) in enumerate(tri.edge_endpoints):
        if (rank[u] - rank[v]) % 5 in (1, 4):
            H.add(e)
    return frozenset(H)


def closed_fixture(seed: int = 3) -> ClosedFixture:
    """4-simplex boundary, 5-cycle H, perturbed trivial cocycle."""
    tri, labels = simplex_boundary()
    rank = label_rank(tri, labels)
    orient = orientation(tri)
    branch = total_order_branching(tri, rank)
    H = five_cycle_H(tri, rank)
    z = perturb_to_idealizable(tri, branch, coboundary(tri, [IDENTITY] * tri.n_vertices), seed=seed)
    TI = idealize(tri, branch, z, orient)
    return ClosedFixture(tri, orient, branch, H, z, TI, solve_charge(tri, H))


def link_fixture(pd: str, seed: int = 0) -> ClosedFixture:
    """Distinguished triangulation of (S^3, L) from PD code with a perturbed trivial cocycle."""
    tri, H = compile_distinguished(parse_pd(pd))
    orient = orientation(tri)
    branch = total_order_branching(tri)
    z = perturb_to_idealizable(tri, branch, coboundary(tri, [IDENTITY] * tri.n_vertices), seed=seed)
    return ClosedFixture(tri, orient, branch, frozenset(H), z, idealize(tri, branch, z, orient), solve_charge(tri, H))


def edge_star() -> tuple[Triangulation, tuple[int, ...], Branching, int]:
    """Three tetrahedra of the 2-3 configuration around the edge 13."""
    labels = [(1, 2, 3, 4), (0, 1, 3, 4), (0, 1, 2, 3)]
    tri = Triangulation.from_labelled_tets(labels)
    branch = total_order_branching(tri, label_rank(tri, labels))
    return tri, orientation(tri), branch, tri.edge(0, 0, 2)


def figure_eight() -> Triangulation:
    return Triangulation.from_gluings(2, FIGURE_EIGHT_GLUINGS)


def figure_eight_fixture(probe_N: int = 11) -> CuspedFixture:
    """Complete hyperbolic structure: w0 = exp(i*pi/3) oriented by *_b."""
    tri = figure_eight()
    orient = orientation(tri)
    branch = find_branching(tri)
    moduli = []
    for t in range(tri.n_tets):
        s = b_sign(tri, orient, branch, t)
        moduli.append(moduli_from_w0(cmath.exp(1j * math.pi / 3 * s)))
    TI = ITriangulation(tri, branch, orient, moduli, None)
    return CuspedFixture(tri, orient, branch, TI, select_cusped_charge(TI, probe_N))
