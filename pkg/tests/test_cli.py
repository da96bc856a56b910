import json

import pytest

from problems import MOTZKIN_TEXT
from soncgp.cli import EXIT_INPUT, EXIT_OK, EXIT_VERIFY, main

TWO_PIECE_TEXT = ("6 + x1^2*x2^6 + 2*x1^4*x2^6 + x1^8*x2^2 - 1.2*x1^2*x2^3 - 0.85*x1^3*x2^5"
                  " - 0.9*x1^4*x2^3 - 0.73*x1^5*x2^2 - 1.14*x1^7*x2^2")


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv, "--json")
    return code, json.loads(out)


@pytest.fixture
def single_constraint(tmp_path):
    path = tmp_path / "problem.json"
    path.write_text(json.dumps({"f": "1 + x1^4*x2^2 + x1*x2", "constraints": ["1/2 + x1^2*x2^4 - x1^2*x2^6"], "n": 2}))
    return str(path)


def test_analyze(capsys):
    code, out = run(capsys, "analyze", MOTZKIN_TEXT)
    assert code == EXIT_OK
    assert "ST-polynomial, 1 tail term" in out
    assert "sum of monomial squares" in run(capsys, "analyze", "5", "--n", "2")[1]
    assert "not ST: vertex set is not a simplex" in run(capsys, "analyze", TWO_PIECE_TEXT)[1]


def test_analyze_json(capsys):
    code, report = run_json(capsys, "analyze", MOTZKIN_TEXT)
    assert report["tail_support"] == [[2, 2]]
    assert report["clubsuit"] is True


def test_minimize_motzkin(capsys):
    code, report = run_json(capsys, "minimize", MOTZKIN_TEXT, "--validate", "--samples", "512")
    assert code == EXIT_OK
    assert report["bound"] == pytest.approx(0.0, abs=1e-6)
    assert report["program_kind"] == "unconstrained-gp"
    assert report["validation"]["passed"]


def test_minimize_cover(capsys):
    _, equal = run_json(capsys, "minimize", TWO_PIECE_TEXT, "--weights", "equal")
    assert equal["program_kind"] == "cover"
    assert equal["bound"] == pytest.approx(3.269, abs=5e-3)
    assert not equal["heuristic"]
    _, better = run_json(capsys, "minimize", TWO_PIECE_TEXT, "--weights", "optimize:200")
    assert better["heuristic"]
    assert better["bound"] >= equal["bound"]


def test_minimize_unbounded(capsys):
    code, report = run_json(capsys, "minimize", "1 - x1^2 + x2^2")
    assert code == EXIT_OK
    assert report["bound"] == "-inf"


def test_minimize_constrained(capsys, single_constraint):
    code, report = run_json(capsys, "minimize-constrained", single_constraint)
    assert code == EXIT_OK
    assert report["bound"] == pytest.approx(0.4474, abs=1e-3)
    code, report = run_json(capsys, "minimize-constrained", "1 + x1^2*x3^2 + x2^2*x3^2 + x1^2*x2^2 - 8*x1*x2*x3",
                            "-g", "x1^2*x2*x3 + x1*x2^2*x3 + x1^2*x2^2 - 2 + x1*x2*x3")
    assert report["bound"] == pytest.approx(-15.0, abs=1e-5)
    code, report = run_json(capsys, "minimize-constrained", MOTZKIN_TEXT, "-g", "x1^3*x2^2")
    assert report["bound"] == pytest.approx(0.0, abs=1e-6)


def test_minimize_constrained_routes_to_cover(capsys):
    code, report = run_json(capsys, "minimize-constrained", "1 + x1^4 + x1^2*x2^4",
                            "-g", "1/2 + x1^2*x2 - x1^6*x2^4 - x1^3*x2^3", "--scale-exponents", "20")
    assert report["program_kind"] == "cover-constrained"
    assert report["bound"] == pytest.approx(1.0, abs=1e-6)


def test_verify(capsys, tmp_path, single_constraint):
    cert = tmp_path / "cert.json"
    assert run(capsys, "minimize", MOTZKIN_TEXT, "--save-certificate", str(cert))[0] == EXIT_OK
    assert run(capsys, "verify", str(cert), MOTZKIN_TEXT)[0] == EXIT_OK
    assert run(capsys, "verify", str(cert), "1 + x1^4*x2^2 + x1^2*x2^4 - 3.5*x1^2*x2^2")[0] == EXIT_VERIFY

    data = json.loads(cert.read_text())
    for t in data["certificate"]["circuits"][0]["terms"]:
        if t["exponent"] == [2, 2]:
            t["coefficient"] *= 1.5
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(data))
    assert run(capsys, "verify", str(tampered), MOTZKIN_TEXT)[0] == EXIT_VERIFY

    ccert = tmp_path / "ccert.json"
    run(capsys, "minimize-constrained", single_constraint, "--save-certificate", str(ccert))
    code, out = run(capsys, "verify", str(ccert), single_constraint)
    assert code == EXIT_OK and "verified" in out


@pytest.mark.parametrize("argv", [
    ["analyze", "1 + * x1"],
    ["analyze", "x3", "--n", "2"],
    ["minimize", "missing.json"],
    ["verify", "missing.json", "1"],
    ["minimize", "1 + x1^2", "--weights", "optimize:abc"],
])
def test_input_errors(capsys, argv):
    assert main(argv) == EXIT_INPUT


def test_identical_runs_give_identical_json(capsys, single_constraint):
    a = run(capsys, "minimize-constrained", single_constraint, "--json")[1]
    b = run(capsys, "minimize-constrained", single_constraint, "--json")[1]
    assert a == b
    a = run(capsys, "minimize", TWO_PIECE_TEXT, "--weights", "optimize:50", "--json")[1]
    b = run(capsys, "minimize", TWO_PIECE_TEXT, "--weights", "optimize:50", "--json")[1]
    assert a == b


def test_timing_flag(capsys):
    _, report = run_json(capsys, "minimize", MOTZKIN_TEXT, "--timing")
    assert report["wall_time"] >= 0
