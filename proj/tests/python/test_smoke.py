import json
import math
import os
import subprocess

import jsonschema
import numpy as np
import pytest

import gausscouple as gc

CLI = os.environ["GAUSSCOUPLE_CLI"]
DATA = os.environ["GAUSSCOUPLE_DATA"]
SCHEMA = json.load(open(os.environ["GAUSSCOUPLE_SCHEMA"]))


def data(name):
    return os.path.join(DATA, name)


def run(*args, env=None):
    proc = subprocess.run([CLI, *args], capture_output=True, text=True, env=env)
    report = json.loads(proc.stdout) if proc.stdout.strip() else None
    if report is not None:
        jsonschema.validate(report, SCHEMA)
    return proc.returncode, report, proc


def scalar_sum():
    return gc.Datum([1, 1], [0.5, 0.5], [1.0], [np.array([[1.0, 1.0]])])


def test_max_coupling_binding():
    r = gc.max_coupling(scalar_sum(), [np.eye(1), 4 * np.eye(1)])
    assert r["value"] == pytest.approx(math.log(9), abs=1e-8)
    assert r["converged"]
    nu = {(0, 1): 0.5 * math.log(2)}
    r = gc.max_coupling(scalar_sum(), [np.eye(1), 4 * np.eye(1)], nu=nu)
    assert r["value"] == pytest.approx(math.log(5 + 2 * math.sqrt(2)), abs=1e-8)
    assert r["active_constraints"] == [[0, 1]]
    assert r["multipliers"][(0, 1)] > 0


def test_certificate_binding():
    r = gc.certify(scalar_sum(), [np.eye(1), 4 * np.eye(1)])
    assert abs(r["gap"]) < 1e-6


def test_constant_bindings():
    assert gc.compute_Dg(scalar_sum(), nu={(0, 1): 0.0})["value"] == pytest.approx(-0.5 * math.log(2), abs=1e-7)
    assert gc.compute_Dg(scalar_sum())["value"] == pytest.approx(-math.log(2), abs=1e-7)
    proj = gc.Datum([1, 1], [0.5, 0.5], [1.0], [np.array([[1.0, 0.0]])])
    r = gc.compute_Dg(proj)
    assert r["status"] == "infinite" and math.isinf(r["value"])
    assert r["dimension"]["witness_kind"] == "coordinate"


def test_closed_forms_and_errors():
    n = gc.entropy_power(1, 0.5 * math.log(2 * math.pi * math.e))
    assert gc.dep_epi_bound(n, n, 0.0) == pytest.approx(4 * math.pi * math.e, rel=1e-14)
    assert gc.game_value_gaussian(1, 1.0, 1.0, 0.0) == pytest.approx(0.5 * math.log(2), abs=1e-12)
    with pytest.raises(gc.NonSurjectiveMap):
        bad = gc.Datum([1, 1], [1.0, 1.0], [1.0], [np.array([[1.0, 1.0], [2.0, 2.0]])])
        gc.max_coupling(bad, [np.eye(1), np.eye(1)])
    with pytest.raises(gc.NotPositiveDefinite):
        gc.log_det(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_cli_feasibility():
    code, report, _ = run("feasibility", data("epi.json"))
    assert code == 0
    assert report["result"]["scaling"] and report["result"]["dimension"] == "pass"
    code, report, _ = run("feasibility", data("projection.json"))
    assert code == 1
    assert report["result"]["witness"]["kind"] == "coordinate"


@pytest.mark.parametrize("name", ["malformed.json", "bad_field.json", "missing.json"])
def test_cli_bad_input(name):
    code, report, proc = run("feasibility", data(name))
    assert code == 2 and report is None
    assert name in proc.stderr


def test_cli_max_coupling():
    code, report, _ = run("max-coupling", data("epi.json"), data("marginals_1_4.json"), "--certify")
    assert code == 0
    assert report["result"]["value"] == pytest.approx(math.log(9), abs=1e-8)
    assert abs(report["result"]["dual_gap"]) < 1e-6
    code, report, _ = run("max-coupling", data("epi_nu.json"), data("marginals_1_4.json"))
    assert code == 0
    assert report["result"]["value"] == pytest.approx(math.log(5 + 2 * math.sqrt(2)), abs=1e-8)
    assert report["result"]["multipliers"][0]["subset"] == [1, 2]
    code, report, _ = run("max-coupling", data("nonsurjective.json"), data("marginals_1_4.json"))
    assert code == 3 and report["error"]["type"] == "NonSurjectiveMap"
    code, report, _ = run("max-coupling", data("epi.json"), data("marginals_1_4.json"), "--max-iters", "3")
    assert code == 4 and not report["diagnostics"]["converged"]


def test_cli_constant():
    code, report, _ = run("constant", data("epi_independent.json"), "--nu-from-datum")
    assert code == 0 and report["result"]["value"] == pytest.approx(-0.5 * math.log(2), abs=1e-7)
    code, report, _ = run("constant", data("epi_independent.json"))
    assert report["result"]["value"] == pytest.approx(-math.log(2), abs=1e-7)
    code, report, _ = run("constant", data("epi.json"), "--c", "0.3,0.7")
    assert report["result"]["c"] == [0.3, 0.7]
    code, report, _ = run("constant", data("projection.json"))
    assert report["result"]["status"] == "infinite" and report["result"]["value"] == "inf"
    assert report["result"]["dimension"]["witness"]["kind"] == "coordinate"
    code, report, _ = run("constant", data("zamir_feder.json"), "--best-c")
    assert code == 0 and abs(report["result"]["minimax_residual"]) < 1e-4
    assert sum(report["result"]["c_star"]) == pytest.approx(1.0)
    code, _, _ = run("constant", data("epi.json"), "--best-c", "--c", "0.5,0.5")
    assert code == 2


def test_cli_closed_forms():
    h = repr(0.5 * math.log(2 * math.pi * math.e))
    code, report, _ = run("depepi", "--n", "1", "--h1", h, "--h2", h, "--zeta", "0")
    assert code == 0 and report["result"]["bound"] == pytest.approx(4 * math.pi * math.e, rel=1e-14)
    code, report, _ = run("saddle", "--n", "1", "--P", "1", "--N", "1", "--zeta", "0", "--trials", "20")
    assert code == 0 and report["result"]["value"] == pytest.approx(0.34657, abs=1e-5)
    assert report["result"]["worst_violation"] <= 1e-6
    code, _, _ = run("depepi", "--n", "1", "--h1", "abc", "--h2", "0")
    assert code == 2
    code, _, _ = run("saddle", "--n", "1", "--P", "-1")
    assert code == 2
    code, _, _ = run("verify", "--profile", "nonsense")
    assert code == 2


@pytest.mark.parametrize("profile", ["epi", "bm", "depepi-grid", "saddle-grid"])
def test_cli_verify(profile):
    code, report, _ = run("verify", "--profile", profile, "--jobs", "2")
    assert code == 0
    assert report["diagnostics"]["failed"] == 0


def test_cli_verify_comparison():
    code, report, _ = run("verify", "--profile", "comparison-nongaussian", "--rho-grid", "1")
    assert code == 0
    assert report["diagnostics"]["inconclusive"] == 0
    assert all(row["margin"] >= -1e-3 for row in report["result"]["rows"])


def test_cli_determinism_and_digest(tmp_path):
    args = ("constant", data("epi_nu.json"), "--nu-from-datum", "--seed", "7")
    first = run(*args)[2].stdout
    assert run(*args)[2].stdout == first
    env = dict(os.environ, GAUSSCOUPLE_SEED="7")
    assert run("constant", data("epi_nu.json"), "--nu-from-datum", env=env)[2].stdout == first
    # Field order and whitespace do not change the digest.
    raw = json.load(open(data("epi_nu.json")))
    reordered = tmp_path / "reordered.json"
    reordered.write_text(json.dumps(dict(reversed(list(raw.items())))))
    again = json.loads(run("constant", str(reordered), "--nu-from-datum", "--seed", "7")[2].stdout)
    assert again["input_digest"] == json.loads(first)["input_digest"]
    assert again["result"] == json.loads(first)["result"]
