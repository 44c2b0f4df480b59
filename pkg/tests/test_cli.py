import json
import os
import subprocess
import sys

import numpy as np
import pytest

from scatterkern.cli import main

ROOT = os.path.join(os.path.dirname(__file__), os.pardir)
DEMOS = os.path.join(ROOT, "demos")


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_zero(capsys):
    code, out, _ = run(["validate", "--data", os.path.join(DEMOS, "zero.json")], capsys)
    assert code == 0
    rep = json.loads(out)["report"]
    assert rep["szego"] == 0.0


def test_missing_file_is_usage_error(capsys):
    code, _, err = run(["validate", "--data", "no-such-file.json"], capsys)
    assert code == 2
    assert json.loads(err)["kind"] == "usage"


def test_bad_complex_is_usage_error(capsys):
    code, _, _ = run(["kernel", "--data", "zero", "--mu", "1"], capsys)
    assert code == 2


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 2


def test_unknown_profile(capsys):
    assert main(["--profile", "nope", "golden"]) == 2


def test_lambda0_off_quadrant_is_usage_error(capsys):
    assert run(["sturm", "--q", "zero", "--lambda0", "1,0", "--check", "m9"], capsys)[0] == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    # |s| = 1 on an interval: the log-modulus of the outer factor is not finite
    t = np.linspace(-5, 5, 201)
    v = np.where(np.abs(t) < 1, 1.0, 0.5)
    path = tmp_path / "unimodular.json"
    path.write_text(json.dumps({"label": "unimodular", "s_plus": {
        "kind": "samples", "t": t.tolist(), "re": v.tolist(), "im": [0.0] * len(t)}}))
    code, _, err = run(["derive", "--data", str(path)], capsys)
    assert code == 1 and json.loads(err)["kind"] == "ConditionViolation"


def test_failed_expectation_exits_one(capsys):
    code, _, _ = run(["a2", "--data", "appendix1", "--expect", "infinite"], capsys)
    assert code == 1


def test_a2_negative_window(capsys):
    code, out, _ = run(["a2", "--data", "plateau", "--window", "-8:8", "--depth", "12",
                        "--expect", "infinite"], capsys)
    assert code == 0
    assert json.loads(out)["report"]["scalar"]["verdict"] == "infinite"


def test_manifest_and_outputs(tmp_path, capsys):
    code, _, _ = run(["--out", str(tmp_path), "asymptotics", "--data", "appendix1", "--theorem", "t2",
                      "--lambda0", "1,1", "--schedule", "1:10:4"], capsys)
    assert code == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["command"] == "asymptotics" and man["passed"]
    assert len(man["profile_digest"]) == 16
    header = (tmp_path / "trace.csv").read_text().splitlines()[0]
    assert header == "x,quantity,residual,epsilon_used,gram_cond"


def test_determinism(tmp_path, capsys):
    args = ["kernel", "--data", "appendix1", "--flavor", "h2hat", "--mu", "1,1", "--points", "0.5,0.5;2,1"]
    a = json.loads(run(["--out", str(tmp_path / "a")] + args, capsys)[1])
    b = json.loads(run(["--out", str(tmp_path / "b")] + args, capsys)[1])
    assert a["report"] == b["report"]
    assert a["manifest"]["profile_digest"] == b["manifest"]["profile_digest"]
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_canonical_emits_csv(tmp_path, capsys):
    code, _, _ = run(["--out", str(tmp_path), "canonical", "--data", "zero", "--x-grid", "0:0.5:2"], capsys)
    assert code == 0
    lines = (tmp_path / "coeffs.csv").read_text().splitlines()
    assert lines[0] == "t,alpha,re_beta,im_beta" and len(lines) == 3


@pytest.mark.parametrize("check", ["wronskian", "theta-iso", "kernel"])
def test_node_checks(check, capsys):
    assert run(["node", "--data", "appendix1", "--lambda0", "1,1", "--check", check], capsys)[0] == 0


@pytest.mark.parametrize("check", ["m9", "factorization", "wronskian"])
def test_sturm_checks(check, capsys):
    assert run(["sturm", "--q", "bump:height=1", "--check", check], capsys)[0] == 0


def test_sturm_bad_potential(capsys):
    assert run(["sturm", "--q", "nothing"], capsys)[0] == 2


def test_golden_and_derive(capsys):
    assert run(["golden"], capsys)[0] == 0
    assert run(["derive", "--data", "one-mass"], capsys)[0] == 0


def test_profile_environment_variable(tmp_path):
    env = dict(os.environ, SCATTERKERN_PROFILE="fast")
    out = subprocess.run([sys.executable, "-m", "scatterkern.cli", "validate", "--data", "zero"],
                         capture_output=True, text=True, env=env, check=True).stdout
    assert json.loads(out)["manifest"]["profile"] == "fast"


@pytest.mark.parametrize("theorem,lam0", [("t1i", "1,1"), ("c11", "1,1"), ("t1ii", "1,1"),
                                          ("c12", "0,1"), ("ratio", "1,1")])
def test_asymptotics_theorems(theorem, lam0, tmp_path, capsys):
    code, out, _ = run(["--out", str(tmp_path), "asymptotics", "--data", "one-mass", "--theorem", theorem,
                        "--lambda0", lam0, "--schedule", "-6:10:5"], capsys)
    assert code == 0
    runs = json.loads(out)["report"]["runs"]
    rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert rows[0].startswith("x,quantity") and len(rows) == 1 + sum(len(r["records"]) for r in runs)
    if theorem in ("t1i", "c11"):
        assert {r["quantity"] for r in runs} == {"identity_forward", "identity_backward"}


def test_c12_needs_a_mass_point(capsys):
    assert run(["asymptotics", "--data", "one-mass", "--theorem", "c12", "--lambda0", "1,1"], capsys)[0] == 2
