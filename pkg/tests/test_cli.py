import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from confbound import __version__
from confbound.cli import main, run

MODELS = Path(__file__).resolve().parent.parent / "models"


def _json(argv):
    code, text = run(argv)
    return code, json.loads(text), text


def test_invariants_hemisphere():
    code, rec, _ = _json(["invariants", "--model", "hemisphere"])
    assert code == 0
    assert rec["model"] == "hemisphere" and rec["quadOrder"] == 24 and rec["version"] == __version__
    assert abs(rec["report"]["Einv"] - 2 * math.pi**2) < 1e-12
    assert abs(rec["report"]["betaB"]) < 1e-12
    assert rec["ok"] is True and rec["failed"] == []


def test_seventeen_digit_floats():
    _, text = run(["invariants", "--model", "hemisphere", "--quad-order", "8"])
    # floats are printed at 17 significant digits (%.17g)
    assert '"Einv": 19.7392088' in text
    val = text.split('"Einv": ')[1].split(",")[0]
    assert val == format(float(val), ".17g")
    assert '"tol": 9.9999999999999995e-07' in text


def test_cgb_flat_ball():
    code, rec, _ = _json(["cgb", "--model", "flat-ball"])
    assert code == 0
    assert rec["report"]["cgbResidualOver8pi2"] < 1e-5
    assert "cgbResidualOver8pi2" in rec["asserted"]


def test_double_never_asserts():
    code, rec, _ = _json(["double", "--model", "flat-ball", "--tol", "1e-300"])
    assert code == 0
    assert rec["report"]["jumps"]["jump1"] > 0.1
    assert rec["report"]["jumps"]["jump2"] == 0
    assert rec["asserted"] == {}


def test_exit_two_iff_asserted_residual_exceeds_tol():
    code, rec, _ = _json(["cgb", "--model", "flat-ball", "--quad-order", "4", "--tol", "1e-300"])
    assert code == 2 and rec["failed"] == ["cgbResidualOver8pi2"] and rec["ok"] is False
    code, rec, _ = _json(["cgb", "--model", "flat-ball", "--quad-order", "4", "--tol", "1"])
    assert code == 0


@pytest.mark.slow
def test_cce_check_exit_codes():
    code, rec, _ = _json(["cce-check", "--model", "hyperbolic-ball"])
    # volume-fit residuals sit near 2e-5: above the default 1e-6, below the documented 1e-3
    assert code == 2
    assert set(rec["failed"]) <= {"anderson", "EvsV"}
    assert rec["asserted"]["SvsG3"] < 1e-6
    assert rec["asserted"]["geodesicNormalization"] < 1e-6
    code, rec, _ = _json(["cce-check", "--model", "hyperbolic-ball", "--tol", "1e-3"])
    assert code == 0 and rec["ok"]


def test_expansion_and_geodesic_id():
    code, rec, _ = _json(["expansion", "--model", "hemisphere", "--quad-order", "8"])
    assert code == 0
    assert rec["report"]["coefficients"]["h4"]["traceRatioMin"] == pytest.approx(8, abs=1e-6)
    code, rec, _ = _json(["geodesic-id", "--model", "even-collar(2)"])
    assert code == 0
    assert rec["report"]["identities"]["totallyGeodesic"] is True


def test_conformal_check_with_expression():
    code, rec, _ = _json(["conformal-check", "--model", "hemisphere", "--quad-order", "16", "--w", "0.1*cos(r)*cos(x1)"])
    assert code == 0, rec["failed"]
    assert rec["asserted"]["WbRelative"] < 1e-6


def test_hypotheses_flags():
    code, rec, _ = _json(["hypotheses", "--model", "hemisphere", "--quad-order", "16", "--eps1", "0.1"])
    assert code == 0
    assert rec["report"]


def test_model_file_path():
    code, rec, _ = _json(["invariants", "--model", str(MODELS / "hemisphere.json"), "--quad-order", "8"])
    assert code == 0 and rec["model"] == "hemisphere-file"


def test_deterministic_bytes():
    argv = ["invariants", "--model", "bump(0.05,1)", "--quad-order", "8"]
    assert run(argv)[1] == run(argv)[1]


def test_csv_output():
    code, text = run(["invariants", "--model", "hemisphere", "--quad-order", "8", "--output", "csv"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["key", "value"]
    kv = dict(rows[1:])
    assert float(kv["report.Einv"]) == pytest.approx(2 * math.pi**2, rel=1e-10)
    assert kv["model"] == "hemisphere"


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus", "--model", "hemisphere"],
        ["invariants"],
        ["invariants", "--model", "nowhere"],
        ["invariants", "--model", "hemisphere", "--quad-order", "1"],
        ["invariants", "--model", "hemisphere", "--tol", "-1"],
        ["invariants", "--model", "hemisphere", "--output", "xml"],
        ["expansion", "--model", "s2xs2"],
        ["invariants", "--model", str(MODELS / "missing.json")],
        ["invariants", "--model", str(MODELS / "asymmetric.json")],
        ["conformal-check", "--model", "hemisphere", "--w", "cos("],
    ],
)
def test_usage_and_io_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    out = capsys.readouterr()
    assert out.out == ""
    assert "error" in out.err


def test_version(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "confbound", "cgb", "--model", "flat-ball", "--quad-order", "8"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["command"] == "cgb"
