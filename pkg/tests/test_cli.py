import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from hmtk.cli import eval_expression, main
from hmtk.errors import ParseError


@pytest.fixture
def space_file(tmp_path):
    p = tmp_path / "s.json"
    assert main(["generate", "--kind", "grid1d", "--n", "64", "--out", str(p)]) == 0
    return p


def test_generate_validate(space_file, tmp_path, capsys):
    assert space_file.exists()
    out = tmp_path / "v.json"
    assert main(["validate", "--space", str(space_file), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["a0"] == 1.0 and doc["n"] == 64


def test_cubes_wavelets_norm_pipeline(space_file, tmp_path, capsys):
    tree, basis, rep = tmp_path / "t.json", tmp_path / "b.json", tmp_path / "n.json"
    assert main(["cubes", "--space", str(space_file), "--out", str(tree), "--verify"]) == 0
    assert "axioms: ok" in capsys.readouterr().err
    assert main(["wavelets", "--tree", str(tree), "--out", str(basis), "--fit-decay"]) == 0
    assert main(["norm", "--basis", str(basis), "--theta", "0.3", "--fn", "x",
                 "--report", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    assert doc["lip"] == 3.8972212419214163
    assert main(["norm", "--basis", str(basis), "--theta", "0.3", "--probe", "bump_r1"]) == 0
    assert json.loads(capsys.readouterr().out)["function"] == "bump_r1"


def test_equiv_has_envelope(space_file, tmp_path):
    out = tmp_path / "e.json"
    assert main(["equiv", "--space", str(space_file), "--theta", "0.3", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["envelope_C"] > 0
    assert set(doc["params"]) >= {"theta", "delta", "c0", "C0"}
    assert set(doc["geometry"]) == {"lower", "upper", "ahlfors"}


def test_equiv_custom_probes(space_file, tmp_path):
    out = tmp_path / "e.json"
    assert main(["equiv", "--space", str(space_file), "--theta", "0.1", "--fn", "sin(x)",
                 "--fn", "0*x", "--no-geometry", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert [p["name"] for p in doc["probes"]] == ["sin(x)", "0*x"]
    assert doc["degenerate_probes"] == 1 and "geometry" not in doc


def test_geometry_and_report(space_file, tmp_path):
    g = tmp_path / "geo.json"
    assert main(["geometry", "--space", str(space_file), "--out", str(g)]) == 0
    r = tmp_path / "r.json"
    assert main(["report", str(g), "--out", str(r)]) == 0
    doc = json.loads(r.read_text())
    assert doc["all_pass"] is True
    assert doc["summary"] == {"geo.lower": True, "geo.upper": True, "geo.ahlfors": True}


def test_asymmetric_space_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"type": "space",
                               "points": [{"id": 0, "weight": 1}, {"id": 1, "weight": 1}],
                               "metric": {"kind": "matrix", "matrix": [0, 1, 2, 0]}}))
    assert main(["cubes", "--space", str(bad), "--out", str(tmp_path / "t.json")]) == 1
    assert "asymmetric" in capsys.readouterr().err


def test_parse_and_io_errors_exit_two(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["validate", "--space", str(p)]) == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["validate", "--space", str(tmp_path / "missing.json")]) == 2


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--kind", "grid1d", "--n", "64", "--bogus"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_bad_expression_exits_two(space_file, tmp_path):
    out = tmp_path / "e.json"
    assert main(["equiv", "--space", str(space_file), "--theta", "0.3",
                 "--fn", "__import__('os')", "--out", str(out)]) == 2


def test_eval_expression_whitelist(grid64):
    v = eval_expression("sin(x) + 2*d - i*w", grid64)
    x = grid64.coords[:, 0]
    assert np.allclose(v, np.sin(x) + 2 * grid64.dist[0] - np.arange(64) * grid64.weight)
    assert np.all(eval_expression("3", grid64) == 3.0)
    for bad in ("x.real", "open('f')", "[x]", "q + 1", "x if 1 else 2"):
        with pytest.raises(ParseError):
            eval_expression(bad, grid64)


def test_thread_count_does_not_change_bytes(space_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    base = ["equiv", "--space", str(space_file), "--theta", "0.3"]
    assert main(base + ["--threads", "1", "--out", str(a)]) == 0
    assert main(base + ["--threads", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point(space_file):
    res = subprocess.run([sys.executable, "-m", "hmtk.cli", "validate", "--space", str(space_file)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["n"] == 64


@pytest.mark.skipif(shutil.which("hmtk") is None, reason="console script not installed")
def test_console_script_help():
    res = subprocess.run(["hmtk", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "equiv" in res.stdout
