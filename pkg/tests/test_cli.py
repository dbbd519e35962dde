import json
import subprocess
import sys
from pathlib import Path

import pytest

from fyamabe.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_integrate_happy_path(capsys):
    code, out, _ = run(capsys, "integrate", "--n", "4", "--alpha", "-2", "--h", "zero",
                       "--rmax", "10")
    assert code == 0
    lines = out.split("\n")
    assert lines[0] == "r,u,uprime"
    assert lines[-2] == "# status=ReachedHorizon r=10"
    assert "\r" not in out


def test_integrate_blowup_and_events(capsys, tmp_path):
    ev = tmp_path / "ev.json"
    code, out, _ = run(capsys, "integrate", "--n", "4", "--alpha", "-0.01", "--h", "const:0.1",
                       "--r-max", "100", "--events", str(ev))
    assert code == 0
    assert out.splitlines()[-1].startswith("# status=BlowUp R_est=34.17539")
    kinds = [e["kind"] for e in json.loads(ev.read_text())]
    assert "CrossH1WithNonposSlope" in kinds


def test_integrate_json_and_file_output(capsys, tmp_path):
    path = tmp_path / "t.json"
    code, out, _ = run(capsys, "integrate", "--n", "5", "--alpha", "-1", "--h", "linexact",
                       "--rmax", "5", "--format", "json", "-o", str(path))
    assert code == 0 and out == ""
    doc = json.loads(path.read_text())
    assert doc["status"]["tag"] == "ReachedHorizon"
    assert doc["samples"][-1][1] == pytest.approx(-5.0, abs=1e-8)


def test_csv_is_byte_stable(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["integrate", "--n", "4", "--alpha", "3", "--h", "bounded",
                     "-o", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_spec_file_with_flag_override(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n": 4, "alpha": -2, "h": {"kind": "zero"}, "r_max": 3}))
    code, out, _ = run(capsys, "integrate", "--spec", str(spec), "--rmax", "2")
    assert code == 0 and out.splitlines()[-1] == "# status=ReachedHorizon r=2"


def test_table_potential(capsys, tmp_path):
    table = tmp_path / "h.csv"
    table.write_text("r,h\n0,0\n1,-0.5\n20,-1\n")
    code, out, _ = run(capsys, "integrate", "--n", "4", "--alpha", "-1",
                       "--h", f"table:{table}", "--rmax", "10")
    assert code == 0 and "ReachedHorizon" in out.splitlines()[-1]


@pytest.mark.parametrize("argv", [
    ["bogus"],
    [],
    ["integrate", "--n", "4"],
    ["integrate", "--n", "4", "--alpha", "1", "--h", "nonsense"],
    ["integrate", "--n", "4", "--alpha", "0"],
    ["integrate", "--n", "4", "--alpha", "1", "--h", "table:/does/not/exist"],
    ["sweep", "--n", "4", "--h", "linexact", "--alphas", "1,2"],
    ["figure", "--n", "2"],
])
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    assert err


def test_domain_error_exit(capsys):
    code, _, err = run(capsys, "integrate", "--n", "4", "--alpha", "1", "--h", "pow:1,-2")
    assert code == 3 and "domain error" in err


def test_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--n", "4", "--h", "zero", "--alpha-range=-1:1:0.5",
                       "--rmax", "10")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "alpha,status,R_est,u_rmax"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["-1", "-0.5", "0.5", "1"]
    assert lines[-1].startswith("1,BlowUp,1.41421")


def test_figure(capsys):
    code, out, _ = run(capsys, "figure", "--n", "3")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "r,phi,psi,h1,h2,ubar1" and len(lines) == 201
    code, out, _ = run(capsys, "figure", "--n", "8", "--h", "const:1")
    assert out.splitlines()[-1].startswith("# status=InIupper r=")


def test_regions_and_vform(capsys):
    code, out, _ = run(capsys, "regions", "--n", "4", "--alpha", "-1", "--h", "const:0.3",
                       "--rmax", "5")
    assert code == 0 and out.splitlines()[0] == "r,u,P,Q,phi,psi,region,in_gamma"
    code, out, _ = run(capsys, "vform", "--n", "4", "--alpha", "-1", "--h", "pow:-1,1",
                       "--rmax", "100", "--format", "json")
    doc = json.loads(out)
    for terms in doc["energy"].values():
        assert abs(terms["E"]) < 1e-6
    code, out, _ = run(capsys, "vform", "--n", "4", "--alpha", "-1", "--rmax", "2")
    assert out.splitlines()[0] == "r,v,vprime,E"


def test_estimates(capsys):
    code, out, _ = run(capsys, "estimates", "--n", "4", "--rho", "2")
    doc = json.loads(out)
    assert code == 0
    assert doc["lemma_mp"]["holds"] and doc["lemma_mp2"]["holds"]
    assert {"lhs", "rhs", "holds", "quadrature_error", "params"} <= set(doc["lemma_mp"])
    assert doc["rescaling"]["slope"] == pytest.approx(-3, abs=0.05)
    code, out, _ = run(capsys, "estimates", "--n", "4", "--profile", "trajectory",
                       "--alpha", "-2", "--rmax", "10")
    assert code == 0 and json.loads(out)["lemma_mp"]["holds"]


def test_verify(capsys, tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"name": "non", "expectation": "AllBlowUp", "n": [3, 4],
                                "alpha": [1, 2], "h": [{"kind": "zero"}]}))
    code, out, _ = run(capsys, "verify", "--scenario", str(good))
    assert code == 0 and json.loads(out)["passed"]

    failing = tmp_path / "bad.json"
    failing.write_text(json.dumps({"name": "ex", "expectation": "AllGlobalNegativeInBand",
                                   "n": 4, "alpha": -1, "h": {"kind": "zero"},
                                   "tolerances": {"energy_tol": 1e-30}}))
    code, out, err = run(capsys, "verify", "--scenario", str(failing))
    assert code == 1 and "FAIL" in err

    rejected = tmp_path / "rej.json"
    rejected.write_text(json.dumps({"name": "ex", "expectation": "AllGlobalNegativeInBand",
                                    "n": 4, "alpha": -1, "h": {"kind": "constant", "c": 1}}))
    code, _, err = run(capsys, "verify", "--scenario", str(rejected))
    assert code == 2 and "h <= 0" in err

    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps({"name": "x", "expectation": "AllBlowUp", "n": 4,
                                  "alpha": 1, "h": {"kind": "power", "c": 1}}))
    code, _, err = run(capsys, "verify", "--scenario", str(broken))
    assert code == 2 and "lacks" in err


@pytest.mark.slow
@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_scenarios_pass(capsys, path):
    code, out, _ = run(capsys, "verify", "--scenario", str(path))
    assert code == 0 and json.loads(out)["passed"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fyamabe", "figure", "--n", "4",
                           "--points", "3"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "r,phi,psi,h1,h2,ubar1"
