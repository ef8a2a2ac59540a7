import io
import json
import math
import subprocess
import sys

import pytest

from kprojective.acceptance import DETERMINISM_COMMANDS
from kprojective.cli import main

DIAG = "[[2,0,0],[0,1,0],[0,0,0.5]]"


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), stdout=buf)
    return code, buf.getvalue()


def run_json(*argv):
    code, out = run(*argv)
    assert code == 0, out
    return json.loads(out)


def test_dist_example():
    out = run_json("dist", "--field", "c", "--p", "[[1,0],[0,0],[0,0]]", "--q", "[[1,0],[0.5,0],[0,0]]")
    assert out["result"]["kind"] == "exact"
    assert out["result"]["value"] == pytest.approx(math.log(3.0), abs=1e-12)


def test_dist_real_plain_numbers():
    out = run_json("dist", "--field", "r", "--p", "[1,0,0]", "--q", "[1,0.5,0]")
    assert out["result"]["value"] == pytest.approx(math.log(3.0), abs=1e-12)


def test_dist_random_pair_is_seeded():
    a = run_json("dist", "--field", "h", "--seed", "9")
    b = run_json("dist", "--field", "h", "--seed", "9")
    assert a == b and a["result"]["value"] > 0


def test_classify():
    out = run_json("classify", "--field", "r", "--matrix", DIAG)
    assert out["variant"] == "BiProximal"
    assert out["gap_top"] == pytest.approx(2.0)


def test_iterate_csv():
    code, out = run("iterate", "--field", "r", "--matrix", DIAG, "--point", "[1,1,1]",
                    "--steps", "3", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x0_0,x1_0,x2_0" and len(lines) == 5
    assert float(lines[1].split(",")[0]) == pytest.approx(1 / math.sqrt(3))


def test_invalid_input_exit_2(capsys):
    assert run("classify", "--field", "r", "--matrix", "[[2,0]]")[0] == 2
    assert run("classify", "--field", "r", "--matrix", "not json")[0] == 2
    assert run("dist", "--field", "c", "--p", "[[1,0],[2,0],[0,0]]", "--q", "[[1,0],[0,0],[0,0]]")[0] == 2
    assert run("classify", "--field", "r", "--matrix", DIAG, "--format", "csv")[0] == 2
    assert run("nonsense")[0] == 2


def test_numerical_failure_exit_1(capsys):
    code, _ = run("moebius", "map-sphere", "--field", "h", "--random", "--seed", "4", "--tol", "1e-30")
    assert code == 1
    assert "numerical failure" in capsys.readouterr().err


def test_out_file(tmp_path):
    path = tmp_path / "o.json"
    code, out = run("classify", "--field", "r", "--matrix", DIAG, "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["variant"] == "BiProximal"


def test_matrix_from_file(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(DIAG)
    assert run_json("classify", "--field", "r", "--matrix", "@" + str(path))["variant"] == "BiProximal"


def test_moebius_apply_cayley():
    m = "[[[1,0],[-1,0]],[[1,0],[1,0]]]"
    assert run_json("moebius", "apply", "--field", "c", "--matrix", m, "--z", "[1,0]")["image"] == [0.0, 0.0]
    assert run_json("moebius", "apply", "--field", "c", "--matrix", m, "--z", "[-1,0]")["image"] == "inf"


def test_moebius_word_membership():
    out = run_json("moebius", "check-halfspace", "--field", "c", "--word", '[["U",[0,1]],["V",[0,-2]]]')
    assert out["report"]["member"] is True


def test_verify_show_config():
    cfg = run_json("verify", "--show-config")["config"]
    assert cfg["certify_tol"] == 1e-9


def test_limit_set_deterministic():
    argv = ["limit-set", "--domain", '{"kind": "ball", "field": "c", "dim": 2}',
            "--random-generators", "2", "--depth", "24", "--seed", "11", "--words", "64"]
    a, b = run(*argv), run(*argv)
    assert a == b and a[0] == 0
    assert len(json.loads(a[1])["clusters"]) >= 2


@pytest.mark.parametrize("argv", DETERMINISM_COMMANDS, ids=lambda a: a[0] + "-" + (a[1] if a[1][0] != "-" else ""))
def test_commands_emit_valid_json(argv):
    code, out = run(*argv)
    assert code == 0
    json.loads(out)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kprojective", "classify", "--field", "r",
                           "--matrix", DIAG], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["variant"] == "BiProximal"
