"""Command-line front end.

Exit status: 0 on success, 1 when an invariant fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from typing import Sequence

import numpy as np

from . import fixtures
from .charge import solve_charge, validate_charge
from .classical import volume
from .cycloarith import CycloError, make_context
from .decor import (
    ITriangulation,
    random_psl,
    check_edge_compat,
    idealize,
)
from .linkcomp import compile_complement, parse_pd
from .qdilog import verify_basic_pentagon, verify_charged_pentagon
from .statesum import H_N, cusped_statesum, select_cusped_charge
from .triangulation import (
    NoBranching,
    find_branching,
    hamiltonian_components,
    homology_h1,
    orientation,
    total_order_branching,
    validate,
)
from .transit import MOVES, apply_transit
from .workspace import Workspace, WorkspaceError, load, save

__all__ = ["main", "build_parser"]

U64 = 1 << 64


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed {text!r} is not an integer") from None
    if not 0 <= v < U64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _odd_list(text: str) -> list[int]:
    try:
        out = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad N list {text!r}") from None
    if not out or any(n < 3 or n % 2 == 0 for n in out):
        raise argparse.ArgumentTypeError("N must be odd and at least 3")
    return out


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad complex number {text!r}") from None


def _fmt(z: complex) -> str:
    return f"{z.real:.12g}{z.imag:+.12g}i"


def _decorate(ws: Workspace) -> Workspace:
    """Fill in orientation and branching when absent."""
    if ws.orient is None:
        ws.orient = orientation(ws.tri)
        if ws.orient is None:
            raise WorkspaceError("triangulation is not orientable")
    if ws.branch is None:
        try:
            ws.branch = total_order_branching(ws.tri)
        except ValueError:
            ws.branch = find_branching(ws.tri)
    return ws


def _closed_ideal(ws: Workspace) -> ITriangulation:
    if ws.cocycle is None:
        raise WorkspaceError("closed mode needs a cocycle section")
    return idealize(ws.tri, ws.branch, ws.cocycle, ws.orient)


# ----------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    ws = load(args.file, check=False)
    rep = validate(ws.tri)
    print(f"tetrahedra {ws.tri.n_tets}, edges {ws.tri.n_edges}, vertices {ws.tri.n_vertices}")
    print(f"vertex link euler characteristics {list(rep.vertex_link_euler)}")
    if ws.H is not None:
        print(f"H components {hamiltonian_components(ws.tri, ws.H)}")
    probs = ws.problems()
    for p in probs:
        print(f"FAIL {p}")
    print("valid" if not probs else f"{len(probs)} problem(s)")
    return 0 if not probs else 1


def cmd_idealize(args) -> int:
    ws = _decorate(load(args.file))
    TI = _closed_ideal(ws) if ws.cocycle is not None else ws.ideal()
    for t, m in enumerate(TI.moduli):
        print(f"tet {t}: w0 = {_fmt(m.w0)}  *_w = {m.star:+d}  *_b = {TI.sign(t):+d}")
    rep = check_edge_compat(TI)
    for p in rep.problems:
        print(f"FAIL edge compatibility: {p}")
    try:
        print(f"volume {volume(TI):.12g}")
    except ValueError:
        pass
    if args.out:
        ws.moduli = [m.w0 for m in TI.moduli]
        save(ws, args.out)
    return 0 if rep.ok else 1


def cmd_charge(args) -> int:
    ws = _decorate(load(args.file))
    if ws.cusped:
        c = select_cusped_charge(ws.ideal()) if ws.moduli is not None else solve_charge(ws.tri, (), cusped=True)
    else:
        if ws.H is None:
            raise WorkspaceError("closed charges need a hamiltonian section")
        c = solve_charge(ws.tri, ws.H)
    probs = validate_charge(ws.tri, ws.H or (), c, ws.cusped)
    for t, tr in enumerate(c.branched(ws.branch)):
        print(f"tet {t}: (c0, c1, c2) = {tr}")
    for p in probs:
        print(f"FAIL {p}")
    if args.out:
        ws.charge = c
        save(ws, args.out)
    return 0 if not probs else 1


def cmd_compute(args) -> int:
    ws = _decorate(load(args.file))
    mode = args.mode or ("cusped" if ws.cusped else "closed")
    if mode == "closed":
        TI = _closed_ideal(ws)
        c = ws.charge if ws.charge is not None else solve_charge(ws.tri, ws.H or ())
        for N in args.N:
            h = H_N(TI, c, make_context(N), threads=args.threads)
            print(f"N={N}  H_{N} = {_fmt(h)}  K_{N} = {_fmt(h ** (2 * N))}  n_0={ws.tri.n_vertices}")
    else:
        TI = ws.ideal() if ws.moduli is not None else _closed_ideal(ws)
        c = ws.charge if ws.charge is not None else select_cusped_charge(TI)
        for N in args.N:
            v = cusped_statesum(TI, c, make_context(N))
            size = abs(v)
            a = 2 * math.pi / N * math.log(size) if size > 0 else float("-inf")
            print(f"N={N}  value = {_fmt(v)}  (2pi/N)log|value| = {a:.12g}")
    return 0


def cmd_transit(args) -> int:
    ws = _decorate(load(args.file))
    free = random_psl(np.random.default_rng(args.seed), 0.3) if args.move == "bubble" else None
    new = apply_transit(
        ws,
        args.move,
        lam=args.lam,
        tet=args.tet,
        face=args.face,
        edge=args.edge,
        vertices=args.vertices,
        faces=args.faces,
        branch_index=args.branch,
        free=free,
    )
    probs = new.problems()
    print(f"{args.move}: {ws.tri.n_tets} -> {new.tri.n_tets} tetrahedra, lambda = {args.lam}")
    for p in probs:
        print(f"FAIL {p}")
    if args.out:
        save(new, args.out)
    return 0 if not probs else 1


def cmd_pentagon(args) -> int:
    if len(args.charges) != 5:
        raise UsageError("--charges takes five integers i,j,k,l,m")
    ok = True
    for N in args.N:
        ctx = make_context(N)
        if not any(args.charges):
            r = verify_basic_pentagon(ctx, args.x, args.y)
            good = r <= 1e-9
            print(f"N={N}  basic pentagon relative residual {r:.3e}  {'ok' if good else 'FAIL'}")
            ok &= good
        rep = verify_charged_pentagon(ctx, args.x, args.y, args.charges)
        lam = rep.ratio
        root = abs(lam ** (2 * N) - 1) if lam != 0 else float("inf")
        good = rep.ok and root <= 1e-8
        print(f"N={N}  charged pentagon factor {_fmt(lam)}  |factor^2N - 1| = {root:.3e}  {'ok' if good else 'FAIL'}")
        ok &= good
    return 0 if ok else 1


def cmd_volscan(args) -> int:
    ws = _decorate(load(args.file))
    TI = ws.ideal() if ws.moduli is not None else _closed_ideal(ws)
    c = ws.charge if ws.charge is not None else select_cusped_charge(TI)
    rows = []
    for N in range(3, args.N_max + 1, 2):
        v = cusped_statesum(TI, c, make_context(N))
        lg = math.log(abs(v)) if v != 0 else float("-inf")
        rows.append((N, lg, 2 * math.pi / N * lg))
        print(f"N={N}  log|value| = {lg:.12g}  (2pi/N)log|value| = {rows[-1][2]:.12g}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "log|value|", "(2pi/N)log|value|"])
            for N, lg, a in rows:
                w.writerow([N, repr(lg), repr(a)])
    return 0


def cmd_compile_link(args) -> int:
    diagram = parse_pd(args.pd)
    print(f"crossings {len(diagram.crossings)}, components {len(diagram.components)}")
    if args.complement:
        tri = compile_complement(diagram)
        betti, torsion = homology_h1(tri)
        print(f"complement: tetrahedra {tri.n_tets}, cusps {tri.n_vertices}, H1 rank {betti}, torsion {list(torsion)}")
        ws = Workspace(tri, orientation(tri))
        try:
            ws.branch = find_branching(tri)
        except NoBranching:
            print("no branching found")
    else:
        f = fixtures.link_fixture(args.pd, seed=args.seed)
        tri, H = f.tri, f.H
        ws = Workspace(tri, f.orient, f.branch, H, f.cocycle, f.charge)
        betti, torsion = homology_h1(tri)
        print(
            f"distinguished: tetrahedra {tri.n_tets}, vertices {tri.n_vertices}, |H| {len(H)}, "
            f"H components {hamiltonian_components(tri, H)}, H1 rank {betti}, torsion {list(torsion)}"
        )
    probs = ws.problems()
    for p in probs:
        print(f"FAIL {p}")
    if args.out:
        save(ws, args.out)
    return 0 if not probs else 1


def cmd_fixture(args) -> int:
    if args.name == "simplex":
        f = fixtures.closed_fixture(seed=args.seed)
        ws = Workspace(f.tri, f.orient, f.branch, f.H, f.cocycle, f.charge)
    else:
        f = fixtures.figure_eight_fixture()
        ws = Workspace(f.tri, f.orient, f.branch, None, None, f.charge, [m.w0 for m in f.TI.moduli])
    save(ws, args.out)
    print(f"wrote {args.name} fixture to {args.out}")
    return 0


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qhi", description="Quantum hyperbolic state sums on decorated triangulations.")
    p.add_argument("--seed", type=_seed, default=0, help="64-bit unsigned seed for random gauges")
    p.add_argument("--threads", type=int, default=1, help="worker threads for contraction")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check every section of a workspace")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("idealize", help="moduli from the cocycle")
    s.add_argument("file")
    s.add_argument("--out")
    s.set_defaults(func=cmd_idealize)

    s = sub.add_parser("charge", help="solve for an integral charge")
    s.add_argument("file")
    s.add_argument("--out")
    s.set_defaults(func=cmd_charge)

    s = sub.add_parser("compute", help="state sums H_N and K_N")
    s.add_argument("file")
    s.add_argument("--N", type=_odd_list, default=[3])
    s.add_argument("--mode", choices=["closed", "cusped"])
    s.set_defaults(func=cmd_compute)

    s = sub.add_parser("transit", help="apply a decorated move")
    s.add_argument("file")
    s.add_argument("--move", choices=MOVES, required=True)
    s.add_argument("--lambda", dest="lam", type=int, default=0)
    s.add_argument("--tet", type=int, default=0)
    s.add_argument("--face", type=int, default=0)
    s.add_argument("--edge", type=int, default=0, help="edge class for 3-2")
    s.add_argument("--vertices", type=int, nargs=2, default=None, help="edge a b for 0-2, H-edge for bubble")
    s.add_argument("--faces", type=int, nargs=2, default=[0, 1], help="walk faces i j for 0-2")
    s.add_argument("--branch", type=int, default=0, help="index among the extending branchings")
    s.add_argument("--out")
    s.set_defaults(func=cmd_transit)

    s = sub.add_parser("pentagon", help="check the pentagon identity")
    s.add_argument("--N", type=_odd_list, default=[3])
    s.add_argument("--x", type=_complex, default=complex(0.3, 0.7))
    s.add_argument("--y", type=_complex, default=complex(-0.4, 0.2))
    s.add_argument("--charges", type=_int_list, default=[0, 0, 0, 0, 0])
    s.set_defaults(func=cmd_pentagon)

    s = sub.add_parser("volscan", help="(2pi/N)log|state sum| over odd N")
    s.add_argument("file")
    s.add_argument("--N-max", dest="N_max", type=int, default=51)
    s.add_argument("--out")
    s.set_defaults(func=cmd_volscan)

    s = sub.add_parser("compile-link", help="triangulate a link from PD code")
    s.add_argument("--pd", required=True)
    s.add_argument("--complement", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_compile_link)

    s = sub.add_parser("fixture", help="write a reference workspace")
    s.add_argument("name", choices=["simplex", "figure-eight"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fixture)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be positive")
    if args.command == "volscan" and args.N_max < 3:
        parser.error("--N-max must be at least 3")
    try:
        return args.func(args)
    except (UsageError, SyntaxError) as exc:
        parser.error(str(exc))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, CycloError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
