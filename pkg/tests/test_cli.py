import json

import pytest

from gasket_martin.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sequences(capsys):
    code, out, _ = run(capsys, "sequences", "--p", "1/3", "--n", "3")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "n,alpha,beta,gamma,a,b,c"
    assert lines[1] == "2,5/8,1/4,1/8,5/8,1/4,1/8"
    assert lines[2] == "3,25/49,16/49,8/49,40/49,5/49,4/49"


def test_bad_p(capsys):
    for p in ("0", "1/2", "0.7", "x"):
        code, _, err = run(capsys, "sequences", "--p", p)
        assert code == 2
        assert "p must lie in (0, 1/2)" in err


def test_usage_error(capsys):
    assert main(["nope"]) == 2
    assert main(["sequences", "--format", "xml"]) == 2


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--p", "1/3", "--tol", "1e-8")
    assert code == 0 and json.loads(out)["pass"]
    code, out, _ = run(capsys, "verify", "--p", "0.45", "--tol", "1e-8")
    rep = json.loads(out)
    assert code == 0 and rep["limits"]["envelope"] == "(3/5)^(n-2)" and rep["limits"]["envelope_ok"]
    code, _, err = run(capsys, "verify", "--p", "0.25", "--tol", "1e-30", "--float")
    assert code == 2 and "tolerance below float resolution" in err


def test_simulate(capsys):
    argv = ["simulate", "--p", "1/3", "--start", "12", "--level", "2", "--paths", "100000",
            "--seed", "3"]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    d = json.loads(out)
    assert {"estimates", "stderr", "paths", "seed", "config"} <= set(d)
    for e, s, ex in zip(d["estimates"], d["stderr"], (0.625, 0.25, 0.125)):
        assert abs(e - ex) <= 4 * s
    assert run(capsys, *argv)[1] == out
    code, out, _ = run(capsys, "simulate", "--p", "1/3", "--start", "1222", "--level", "4",
                       "--paths", "2000", "--kernel", "rotated")
    assert code == 0 and len(json.loads(out)["stderr"]) == 3


def test_kernel_and_metric(capsys):
    code, out, _ = run(capsys, "kernel", "e", "1(2)", "--p", "0.3")
    assert code == 0 and json.loads(out)["value"] == 1.0
    a = json.loads(run(capsys, "kernel", "12", "1(2)", "--p", "0.3")[1])
    b = json.loads(run(capsys, "kernel", "12", "2(1)", "--p", "0.3")[1])
    assert abs(a["value"] - b["value"]) < 1e-9 and a["value"] <= a["bound"]
    d = json.loads(run(capsys, "metric", "1(2)", "2(1)")[1])
    assert d["value"] <= d["error_bound"]
    d = json.loads(run(capsys, "metric", "(1)", "(2)", "--N", "6")[1])
    assert d["value"] > d["error_bound"]
    d = json.loads(run(capsys, "metric", "12", "12")[1])
    assert d["value"] == 0


def test_hitting_green_harmonic(capsys):
    assert json.loads(run(capsys, "hitting", "12", "22")[1])["value"] == "1/4"
    assert json.loads(run(capsys, "green", "e", "e")[1])["value"] == "1/1"
    h = json.loads(run(capsys, "harmonic", "1(2)", "--i", "1", "--p", "0.2")[1])
    assert abs(h["value"] - 1.2) < 1e-9


def test_gasket_and_graph(tmp_path, capsys):
    out = tmp_path / "g.svg"
    assert main(["gasket", "--depth", "2", "--out", str(out)]) == 0
    assert out.read_text().count("<polygon") == 9
    assert main(["gasket", "--depth", "9"]) == 2
    code, dot, _ = run(capsys, "graph-export", "--n", "2")
    assert code == 0 and dot.count("--") == 12


@pytest.mark.parametrize("argv", [
    ["sequences", "--p", "2/7", "--n", "8"],
    ["sequences", "--p", "0.3", "--n", "8", "--format", "json"],
    ["simulate", "--p", "1/4", "--start", "123", "--level", "4", "--paths", "5000",
     "--seed", "9", "--threads", "3"],
    ["gasket", "--depth", "3", "--p", "0.4", "--color-by", "2"],
])
def test_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
