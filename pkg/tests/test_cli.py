import csv
import json
import re

import pytest

from qhi import workspace
from qhi.cli import main
from qhi.fixtures import TREFOIL, UNKNOT_2
from qhi.workspace import Workspace, WorkspaceError

from support import BUBBLE_SITE, closed_workspace


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def K_values(text):
    return [complex(m.replace("i", "j")) for m in re.findall(r"K_\d+ = (\S+)", text)]


@pytest.fixture
def simplex(tmp_path, capsys):
    path = tmp_path / "simplex.json"
    assert run(capsys, "fixture", "simplex", "--out", path)[0] == 0
    return path


@pytest.fixture
def fig8_file(tmp_path, capsys):
    path = tmp_path / "fig8.json"
    assert run(capsys, "fixture", "figure-eight", "--out", path)[0] == 0
    return path


def test_workspace_round_trip(closed, fig8):
    ws = closed_workspace(closed)
    ws.extra["note"] = "kept"
    back = workspace.loads(workspace.dumps(ws))
    assert back.tri.gluing_tuples() == ws.tri.gluing_tuples()
    assert (back.orient, back.branch, back.H, back.charge) == (ws.orient, ws.branch, ws.H, ws.charge)
    assert all(a.close(b, 1e-15) for a, b in zip(back.cocycle.values, ws.cocycle.values))
    assert back.extra == {"note": "kept"}
    assert not back.cusped
    ws8 = Workspace(fig8.tri, fig8.orient, fig8.branch, None, None, fig8.charge, [m.w0 for m in fig8.TI.moduli])
    back8 = workspace.loads(workspace.dumps(ws8))
    assert back8.cusped and back8.moduli == ws8.moduli


def test_workspace_rejects_bad_input(closed):
    with pytest.raises(WorkspaceError):
        workspace.loads("not json")
    with pytest.raises(WorkspaceError):
        workspace.loads("[1, 2]")
    with pytest.raises(WorkspaceError):
        workspace.loads('{"triangulation": {}}')
    doc = workspace.to_dict(closed_workspace(closed))
    doc["charges"][0] = [1, 1, 1]
    with pytest.raises(WorkspaceError, match="charges"):
        workspace.loads(json.dumps(doc))
    doc = workspace.to_dict(closed_workspace(closed))
    doc["hamiltonian"] = doc["hamiltonian"][:-1]
    with pytest.raises(WorkspaceError, match="hamiltonian"):
        workspace.loads(json.dumps(doc))


def test_validate(simplex, tmp_path, capsys):
    code, out = run(capsys, "validate", simplex)
    assert code == 0 and "valid" in out.out
    doc = json.loads(simplex.read_text())
    doc["orientation"][0] *= -1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out = run(capsys, "validate", bad)
    assert code == 1 and "FAIL orientation" in out.out


def test_idealize_and_charge(simplex, fig8_file, tmp_path, capsys):
    code, out = run(capsys, "idealize", simplex)
    assert code == 0 and out.out.count("w0 =") == 5
    code, out = run(capsys, "idealize", fig8_file)
    assert code == 0 and "volume 2.02988321" in out.out
    code, out = run(capsys, "charge", simplex, "--out", tmp_path / "c.json")
    assert code == 0 and out.out.count("(c0, c1, c2)") == 5
    assert workspace.load(tmp_path / "c.json").charge is not None


def test_compute_closed(simplex, capsys):
    code, out = run(capsys, "compute", simplex, "--N", "3,5")
    assert code == 0
    assert "N=3" in out.out and "N=5" in out.out and "n_0=5" in out.out
    k3, k5 = K_values(out.out)
    assert abs(k3 - (1 / 9) ** 6) < 1e-15


@pytest.mark.parametrize(
    "move_args",
    [
        ["--move", "2-3", "--lambda", "2"],
        ["--move", "0-2", "--tet", "1"],
        ["--move", "bubble", "--tet", BUBBLE_SITE["tet"], "--face", BUBBLE_SITE["face"], "--vertices", *BUBBLE_SITE["vertices"]],
    ],
)
def test_transit_keeps_K(simplex, tmp_path, capsys, move_args):
    out_path = tmp_path / "moved.json"
    code, _ = run(capsys, "transit", simplex, *move_args, "--out", out_path)
    assert code == 0
    before = K_values(run(capsys, "compute", simplex, "--N", "3,5")[1].out)
    after = K_values(run(capsys, "compute", out_path, "--N", "3,5")[1].out)
    for a, b in zip(before, after):
        assert abs(a - b) <= 1e-6 * abs(a)


def test_transit_3_2_guards_H(simplex, capsys):
    ws = workspace.load(simplex)
    e = min(ws.H)
    code, out = run(capsys, "transit", simplex, "--move", "3-2", "--edge", e)
    assert code == 1 and "IllegalMove" in out.err


def test_pentagon(capsys):
    code, out = run(capsys, "pentagon", "--N", "3,5")
    assert code == 0 and out.out.count("ok") == 4
    code, out = run(capsys, "pentagon", "--N", "3", "--charges", "1,0,2,-1,1")
    assert code == 0 and "charged pentagon" in out.out
    with pytest.raises(SystemExit) as exc:
        main(["pentagon", "--charges", "1,2"])
    assert exc.value.code == 2


def test_volscan_csv(fig8_file, tmp_path, capsys):
    path = tmp_path / "scan.csv"
    code, _ = run(capsys, "volscan", fig8_file, "--N-max", 15, "--out", path)
    assert code == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["N", "log|value|", "(2pi/N)log|value|"]
    assert [int(r[0]) for r in rows[1:]] == list(range(3, 16, 2))
    N, lg, a = rows[-1]
    assert abs(float(a) - 2 * 3.141592653589793 / int(N) * float(lg)) < 1e-12


def test_compile_link(tmp_path, capsys):
    path = tmp_path / "trefoil.json"
    code, out = run(capsys, "compile-link", "--pd", TREFOIL, "--out", path)
    assert code == 0 and "tetrahedra 16" in out.out and "H1 rank 0" in out.out
    code, out = run(capsys, "compute", path, "--N", "3")
    assert code == 0 and len(K_values(out.out)) == 1
    code, out = run(capsys, "compile-link", "--pd", UNKNOT_2, "--complement")
    assert code == 0 and "cusps 1, H1 rank 1" in out.out


@pytest.mark.parametrize(
    "argv",
    [
        ["compile-link", "--pd", "X(1,2"],
        ["compute", "missing.json"],
        ["--seed", "-1", "fixture", "simplex", "--out", "x.json"],
        ["compute", "x.json", "--N", "4"],
        ["--threads", "0", "pentagon"],
        ["volscan", "x.json", "--N-max", "1"],
    ],
)
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_malformed_workspace_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    code, out = run(capsys, "compute", bad)
    assert code == 1 and "WorkspaceError" in out.err
