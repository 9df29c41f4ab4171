import io
import json
import subprocess
import sys

import pytest

from qsnm.cli import main
from qsnm.manifold import ManifoldSpec


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def test_verify_e1(e1_path):
    code, out, _ = run(["verify", "--manifold", str(e1_path)])
    assert code == 0
    assert "23/23 passed" in out


def test_compute_r1_on_e1(e1_path):
    code, out, _ = run(["compute", "--tensor", "R1", "--manifold", str(e1_path), "--point", "0,0"])
    assert code == 0
    assert "R1^1_122 = 0.25" in out.splitlines()
    assert len(out.splitlines()) == 16


def test_compute_labels(e1_path):
    _, out, _ = run(["compute", "--tensor", "g", "--manifold", str(e1_path), "--point", "0.5,0.5"])
    assert out.splitlines() == ["g_11 = 1", "g_12 = 0", "g_21 = 0", "g_22 = 1"]
    _, out, _ = run(["compute", "--tensor", "P", "--manifold", str(e1_path), "--point", "0,0"])
    assert out.splitlines() == ["P^1 = 1", "P^2 = 0"]


def test_verify_random_is_deterministic():
    argv = ["verify", "--random", "--dim", "3", "--seed", "42", "--points", "50", "--format", "json"]
    c1, o1, _ = run(argv)
    c2, o2, _ = run(argv)
    assert c1 == c2 == 0 and o1 == o2
    data = json.loads(o1)
    assert len(data) == 24 and all(e["pass"] for e in data[:-1])
    assert data[-1]["seed"] == 42 and data[-1]["dimension"] == 3 and data[-1]["elapsed_ms"] is None


def test_verify_timing_and_out(tmp_path, e1_path):
    path = tmp_path / "report.json"
    code, out, _ = run(["verify", "--manifold", str(e1_path), "--format", "json", "--out", str(path), "--timing"])
    assert code == 0 and out == ""
    footer = json.loads(path.read_text())[-1]
    assert footer["elapsed_ms"] > 0


def test_verify_family_flags(e1_path):
    code, out, _ = run(["verify", "--manifold", str(e1_path), "--a", "2", "--b", "0.5"])
    assert code == 0


def test_list():
    code, out, _ = run(["list"])
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 46
    assert "bianchi_R4_R5" in lines[38] and "first Bianchi identities" in lines[39]


def test_gen_round_trip(tmp_path):
    path = tmp_path / "m.json"
    code, _, _ = run(["gen", "--dim", "2", "--seed", "3", "--out", str(path)])
    assert code == 0
    first = path.read_text()
    run(["gen", "--dim", "2", "--seed", "3", "--out", str(path)])
    assert path.read_text() == first
    assert ManifoldSpec.from_json(first).dimension == 2
    code, _, _ = run(["verify", "--manifold", str(path)])
    assert code == 0


def test_check_failure_exit_code(e1_path):
    code, out, _ = run(["verify", "--random", "--dim", "2", "--seed", "1", "--tol", "1e-300"])
    assert code == 1 and "FAIL" in out


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["verify"],
    ["verify", "--random", "--manifold", "x.json"],
    ["verify", "--random", "--a", "1"],
    ["verify", "--random", "--dim", "7"],
    ["verify", "--random", "--points", "0"],
    ["verify", "--random", "--format", "xml"],
    ["compute", "--tensor", "Q", "--manifold", "x.json", "--point", "0,0"],
    ["gen", "--dim", "2"],
])
def test_usage_errors(argv):
    code, _, err = run(argv)
    assert code == 2 and err


def test_compute_point_validation(e1_path):
    assert run(["compute", "--tensor", "g", "--manifold", str(e1_path), "--point", "0,0,0"])[0] == 2
    assert run(["compute", "--tensor", "g", "--manifold", str(e1_path), "--point", "a,b"])[0] == 2


@pytest.mark.parametrize("content", [
    None,
    "{not json",
    '{"dimension": 2, "coordinates": ["x", "y"], "G": [["1", "0"], ["0", "1 +"]], "pi": ["0", "0"]}',
    '{"dimension": 2, "coordinates": ["x", "y"], "G": [["0", "1"], ["-1", "0"]], "pi": ["0", "0"]}',
    '{"dimension": 2, "coordinates": ["x", "y"], "G": [["1", "0", "0"]], "pi": ["0", "0"]}',
])
def test_io_and_parse_errors(tmp_path, content):
    path = tmp_path / "m.json"
    if content is not None:
        path.write_text(content)
    code, _, err = run(["verify", "--manifold", str(path)])
    assert code == 3 and err.startswith("qsnm: error:")


def test_compute_domain_error(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"dimension": 2, "coordinates": ["x", "y"],
                                "G": [["1", "0"], ["0", "1"]], "pi": ["ln(x)", "0"],
                                "box": [[0.5, 2], [-1, 1]]}))
    assert run(["compute", "--tensor", "pi", "--manifold", str(path), "--point", "-1,0"])[0] == 3


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qsnm", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and "torsion_matches" in res.stdout
