import json

import pytest

from slabsym import Scenario, canonical_scenario
from slabsym.cli import main

COARSE = ["--resolution", str(1 / 32)]


def _coarse_t1_file(tmp_path, **extra):
    s = canonical_scenario("T1")
    payload = s.to_payload()
    payload["resolution"] = 1 / 32
    payload.update(extra)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(payload))
    return path


def test_verify_builtin_passes(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["verify", "--scenario", "T1", "--out", str(out)] + COARSE)
    assert code == 0
    text = capsys.readouterr().out
    assert "verification PASSED" in text
    assert "PASS  sweeps_symmetric" in text
    report = json.loads(out.read_text())
    assert report["passed"] is True


def test_verify_perturbed_fails(tmp_path):
    path = _coarse_t1_file(
        tmp_path,
        perturbation={"amplitude": 0.05, "center": [0.4, 0.0, -1.0],
                      "width": 0.25})
    out = tmp_path / "report.json"
    code = main(["verify", "--scenario", str(path), "--out", str(out), "--quiet"])
    assert code == 1
    report = json.loads(out.read_text())
    assert report["passed"] is False
    assert report["symmetry"]["verdict"] == "asymmetric"


def test_verify_invalid_scenario_stage_error(tmp_path):
    t3 = canonical_scenario("T3").to_payload()
    t3["boundary"] = {"type": "contact_angle", "gamma1": 1.2, "gamma2": None}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(t3))
    out = tmp_path / "report.json"
    code = main(["verify", "--scenario", str(path), "--out", str(out), "--quiet"])
    assert code == 2
    report = json.loads(out.read_text())
    assert report["error"]["stage"] == "validate"


def test_unknown_scenario_spec_errors(tmp_path):
    code = main(["verify", "--scenario", "T9", "--quiet",
                 "--out", str(tmp_path / "r.json")])
    assert code == 2


def test_solve_writes_artifacts(tmp_path):
    outdir = tmp_path / "artifacts"
    code = main(["solve", "--scenario", "T1", "--out", str(outdir),
                 "--quiet"] + COARSE)
    assert code == 0
    assert (outdir / "report.json").exists()
    assert (outdir / "mesh.obj").exists()
    assert (outdir / "solution.csv").exists()
    # early stop: solve does not sweep
    assert not list(outdir.glob("sweep_*.csv"))


def test_sweep_reports_verdict(tmp_path, capsys):
    code = main(["sweep", "--scenario", "T1", "--directions", "4",
                 "--out", str(tmp_path / "sw")] + COARSE)
    assert code == 0
    text = capsys.readouterr().out
    assert "verdict: symmetric" in text
    assert (tmp_path / "sw" / "symmetry.json").exists()


def test_linearize_graph_scenario(tmp_path, capsys):
    code = main(["linearize", "--scenario", "T1",
                 "--out", str(tmp_path / "lin")] + COARSE)
    assert code == 0
    assert (tmp_path / "lin" / "linearization.json").exists()
    assert "ellipticity constant" in capsys.readouterr().out


def test_linearize_meridian_rejected(tmp_path):
    code = main(["linearize", "--scenario", "T2", "--quiet",
                 "--out", str(tmp_path / "lin")])
    assert code == 2


def test_touching_holds_on_graph(tmp_path, capsys):
    code = main(["touching", "--scenario", "T1",
                 "--out", str(tmp_path / "t")] + COARSE)
    assert code == 0
    assert "holds" in capsys.readouterr().out
    assert (tmp_path / "t" / "touching.json").exists()


def test_export_full_bundle(tmp_path):
    outdir = tmp_path / "bundle"
    code = main(["export", "--scenario", "T4", "--out", str(outdir),
                 "--quiet"] + COARSE)
    assert code == 0
    names = {p.name for p in outdir.iterdir()}
    assert "report.json" in names
    assert "mesh.obj" in names
    assert any(n.startswith("sweep_") for n in names)


def test_reports_identical_across_runs(tmp_path):
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(["verify", "--scenario", "T4", "--out", str(out1),
                 "--quiet"] + COARSE) == 0
    assert main(["verify", "--scenario", "T4", "--out", str(out2),
                 "--quiet"] + COARSE) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_file_and_builtin_agree(tmp_path):
    path = _coarse_t1_file(tmp_path)
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(["verify", "--scenario", str(path), "--out", str(out1),
                 "--quiet"]) == 0
    assert main(["verify", "--scenario", "T1", "--out", str(out2),
                 "--quiet"] + COARSE) == 0
    a = json.loads(out1.read_text())
    b = json.loads(out2.read_text())
    assert a["criteria"] == b["criteria"]
