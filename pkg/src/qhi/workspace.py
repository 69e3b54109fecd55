"""JSON workspace files: a triangulation plus its optional decorations.

Sections:
  triangulation  {"tetrahedra": n, "gluings": [[tet, face, tet, face, perm], ...]}
  orientation    +1/-1 per tetrahedron
  branching      vertex order (v0, v1, v2, v3) per tetrahedron
  hamiltonian    edge-class ids of H
  cocycle        {"values": 2x2 matrix per edge class, "gauge": 2x2 per vertex or null}
  charges        charge on the local edge pairs {01,23}, {12,03}, {02,13} per tetrahedron
  moduli         w0 per tetrahedron
Complex numbers are [re, im] pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .charge import ChargeAssignment, validate_charge
from .decor import Cocycle, ITriangulation, check_cocycle, check_edge_compat, moduli_from_w0
from .moebius import PSL2C
from .triangulation import (
    Branching,
    Triangulation,
    TriangulationError,
    check_orientation,
    is_hamiltonian,
    validate,
)

__all__ = ["WorkspaceError", "Workspace", "load", "save", "dumps", "loads"]

FORMAT = "qhi-workspace/1"


class WorkspaceError(ValueError):
    pass


@dataclass
class Workspace:
    tri: Triangulation
    orient: tuple[int, ...] | None = None
    branch: Branching | None = None
    H: frozenset[int] | None = None
    cocycle: Cocycle | None = None
    charge: ChargeAssignment | None = None
    moduli: list[complex] | None = None
    extra: dict = field(default_factory=dict)

    @property
    def cusped(self) -> bool:
        chi = self.tri.vertex_link_euler
        return bool(chi) and all(c == 0 for c in chi)

    def ideal(self) -> ITriangulation:
        """I-triangulation from stored moduli (cusped inputs)."""
        if self.moduli is None or self.branch is None or self.orient is None:
            raise WorkspaceError("moduli, branching and orientation are required")
        return ITriangulation(self.tri, self.branch, self.orient, [moduli_from_w0(w) for w in self.moduli], None)

    def problems(self) -> list[str]:
        """Every failed invariant, one message each."""
        out: list[str] = []
        tri = self.tri
        rep = validate(tri)
        out += [f"triangulation: {p}" for p in rep.problems]
        if self.orient is not None:
            try:
                check_orientation(tri, self.orient)
            except TriangulationError as exc:
                out.append(f"orientation: {exc}")
        if self.branch is not None and not self.branch.is_valid(tri):
            out.append("branching: orders disagree across a glued face")
        if self.H is not None:
            if any(not 0 <= e < tri.n_edges for e in self.H):
                out.append("hamiltonian: edge id out of range")
            elif not is_hamiltonian(tri, self.H):
                out.append("hamiltonian: H is not a disjoint union of cycles through every vertex")
        if self.cocycle is not None:
            if len(self.cocycle.values) != tri.n_edges:
                out.append("cocycle: one value per edge class is required")
            elif self.branch is not None:
                out += [f"cocycle: {p}" for p in check_cocycle(tri, self.branch, self.cocycle).problems]
        if self.charge is not None:
            if len(self.charge.local) != tri.n_tets:
                out.append("charges: one triple per tetrahedron is required")
            else:
                H = () if self.H is None else self.H
                out += [f"charges: {p}" for p in validate_charge(tri, H, self.charge, self.cusped)]
        if self.moduli is not None:
            if len(self.moduli) != tri.n_tets:
                out.append("moduli: one w0 per tetrahedron is required")
            elif self.branch is not None and self.orient is not None:
                try:
                    out += [f"moduli: {p}" for p in check_edge_compat(self.ideal()).problems]
                except ValueError as exc:
                    out.append(f"moduli: {exc}")
        return out


def _cx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _uncx(p) -> complex:
    re, im = p
    return complex(float(re), float(im))


def _mat(m: PSL2C) -> list:
    return [[_cx(m.a), _cx(m.b)], [_cx(m.c), _cx(m.d)]]


def _unmat(rows) -> PSL2C:
    (a, b), (c, d) = rows
    return PSL2C(_uncx(a), _uncx(b), _uncx(c), _uncx(d))


def to_dict(ws: Workspace) -> dict:
    doc: dict = {
        "format": FORMAT,
        "triangulation": {
            "tetrahedra": ws.tri.n_tets,
            "gluings": [[t, f, t2, f2, list(p)] for t, f, t2, f2, p in ws.tri.gluing_tuples()],
        },
    }
    if ws.orient is not None:
        doc["orientation"] = list(ws.orient)
    if ws.branch is not None:
        doc["branching"] = [list(o) for o in ws.branch.order]
    if ws.H is not None:
        doc["hamiltonian"] = sorted(ws.H)
    if ws.cocycle is not None:
        doc["cocycle"] = {
            "values": [_mat(m) for m in ws.cocycle.values],
            "gauge": None if ws.cocycle.gauge is None else [_mat(m) for m in ws.cocycle.gauge],
        }
    if ws.charge is not None:
        doc["charges"] = [list(c) for c in ws.charge.local]
    if ws.moduli is not None:
        doc["moduli"] = [_cx(w) for w in ws.moduli]
    doc.update(ws.extra)
    return doc


def from_dict(doc: dict) -> Workspace:
    try:
        tri_doc = doc["triangulation"]
        tri = Triangulation.from_gluings(int(tri_doc["tetrahedra"]), [tuple(g) for g in tri_doc["gluings"]])
        orient = tuple(int(s) for s in doc["orientation"]) if "orientation" in doc else None
        branch = Branching(tuple(tuple(int(v) for v in o) for o in doc["branching"])) if "branching" in doc else None
        H = frozenset(int(e) for e in doc["hamiltonian"]) if "hamiltonian" in doc else None
        cocycle = None
        if "cocycle" in doc:
            gauge = doc["cocycle"].get("gauge")
            cocycle = Cocycle(
                tuple(_unmat(m) for m in doc["cocycle"]["values"]),
                None if gauge is None else tuple(_unmat(m) for m in gauge),
            )
        charge = ChargeAssignment(tuple(tuple(int(v) for v in c) for c in doc["charges"])) if "charges" in doc else None
        moduli = [_uncx(w) for w in doc["moduli"]] if "moduli" in doc else None
    except (KeyError, TypeError, ValueError) as exc:
        raise WorkspaceError(f"malformed workspace: {exc}") from None
    known = {"format", "triangulation", "orientation", "branching", "hamiltonian", "cocycle", "charges", "moduli"}
    extra = {k: v for k, v in doc.items() if k not in known}
    return Workspace(tri, orient, branch, H, cocycle, charge, moduli, extra)


def dumps(ws: Workspace) -> str:
    return json.dumps(to_dict(ws), indent=1) + "\n"


def loads(text: str, check: bool = True) -> Workspace:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WorkspaceError(f"not JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise WorkspaceError("workspace must be a JSON object")
    ws = from_dict(doc)
    if check:
        probs = ws.problems()
        if probs:
            raise WorkspaceError("; ".join(probs))
    return ws


def save(ws: Workspace, path: str | Path) -> None:
    Path(path).write_text(dumps(ws))


def load(path: str | Path, check: bool = True) -> Workspace:
    return loads(Path(path).read_text(), check)
