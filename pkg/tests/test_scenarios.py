import json

import numpy as np
import pytest

from slabsym import (
    AffineMap,
    BoundaryCurve,
    ContactAngle,
    CurvatureFlux,
    DiskRegion,
    FixedBoundary,
    PrescribedH,
    RadialFlux,
    Scenario,
    ScenarioValidationError,
    Slab,
    TabulatedMap,
    canonical_scenario,
    export_artifacts,
    run_scenario,
    write_canonical_scenarios,
)

ALL_IDS = ("T1", "T2", "T3", "T4")


def test_canonical_scenarios_roundtrip_json():
    for sid in ALL_IDS:
        s = canonical_scenario(sid)
        back = Scenario.from_json(s.to_json())
        assert back.to_payload() == s.to_payload()
        assert back.config_hash() == s.config_hash()


def test_write_canonical_scenarios(tmp_path):
    paths = write_canonical_scenarios(tmp_path)
    assert set(paths) == set(ALL_IDS)
    for sid, p in paths.items():
        loaded = Scenario.load(p)
        assert loaded.id == sid
        loaded.validate()


def test_scenario_requires_matching_boundary_type():
    t1 = canonical_scenario("T1")
    bad = Scenario(**{**t1.__dict__, "boundary": RadialFlux(0.3, (0.0, 0.0))})
    with pytest.raises(ScenarioValidationError):
        bad.validate()


def test_t3_rejects_contact_angle():
    t3 = canonical_scenario("T3")
    bad = Scenario(**{**t3.__dict__, "boundary": ContactAngle(1.2)})
    with pytest.raises(ScenarioValidationError):
        bad.validate()


def test_t2_requires_symmetric_curves():
    t2 = canonical_scenario("T2")
    ragged = np.array([[0.7, 0.0], [0.1, 0.65], [-0.6, 0.1], [-0.2, -0.7],
                       [0.3, -0.55]])
    bad_boundary = FixedBoundary([BoundaryCurve(ragged, plate=1),
                                  t2.boundary.curve(2)])
    bad = Scenario(**{**t2.__dict__, "boundary": bad_boundary})
    with pytest.raises(ScenarioValidationError):
        bad.validate()


def test_affine_and_tabulated_maps():
    m = AffineMap(1.0, -0.5)
    assert m(2.0) == pytest.approx(0.0)
    t = TabulatedMap((0.0, 1.0, 2.0), (3.0, 2.0, 0.5))
    assert t(0.5) == pytest.approx(2.5)
    assert t(1.5) == pytest.approx(1.25)


def test_run_scenario_t1_coarse_passes():
    report = run_scenario(canonical_scenario("T1"), resolution=1 / 32)
    assert report.error is None
    assert report.passed
    names = {c.name for c in report.criteria}
    assert {"solver_converged", "sweeps_symmetric", "axis_found",
            "axis_residual", "axis_through_center", "touching_self_check",
            "uniformly_elliptic"} <= names


def test_run_scenario_report_deterministic():
    a = run_scenario(canonical_scenario("T4"), resolution=1 / 32)
    b = run_scenario(canonical_scenario("T4"), resolution=1 / 32)
    assert a.report_hash() == b.report_hash()
    assert a.to_json() == b.to_json()


def test_run_scenario_until_solve_skips_sweep():
    report = run_scenario(canonical_scenario("T1"), resolution=1 / 32,
                          until="solve")
    assert report.error is None
    assert report.symmetry is None
    assert "field" in report.attachments
    assert "mesh" not in report.attachments


def test_perturbed_scenario_fails_with_witness():
    t1 = canonical_scenario("T1")
    bad = Scenario(**{**t1.__dict__,
                      "perturbation": {"amplitude": 0.05,
                                       "center": [0.4, 0.0, -1.0],
                                       "width": 0.25}})
    report = run_scenario(bad, resolution=1 / 32)
    assert report.error is None
    assert not report.passed
    assert report.symmetry["verdict"] == "asymmetric"
    assert report.symmetry["max_deviation"] >= 0.02
    assert report.symmetry["witness_direction"] is not None


def test_stage_error_recorded_not_raised():
    t3 = canonical_scenario("T3")
    payload = t3.to_payload()
    payload["boundary"] = {"type": "contact_angle", "gamma1": 1.2, "gamma2": None}
    bad = Scenario.from_payload(payload)
    report = run_scenario(bad)
    assert report.error is not None
    assert report.error["stage"] == "validate"
    assert not report.passed


def test_export_artifacts_deterministic(tmp_path):
    report = run_scenario(canonical_scenario("T1"), resolution=1 / 32)
    d1, d2 = tmp_path / "a", tmp_path / "b"
    w1 = export_artifacts(report, d1)
    w2 = export_artifacts(report, d2)
    assert set(w1) == set(w2)
    for name in w1:
        assert w1[name].read_bytes() == w2[name].read_bytes()
    assert (d1 / "report.json").exists()
    assert (d1 / "mesh.obj").exists()
    assert (d1 / "solution.csv").exists()


def test_report_payload_carries_provenance():
    report = run_scenario(canonical_scenario("T4"), resolution=1 / 32)
    payload = json.loads(report.to_json())
    # provenance hashes the scenario as run (resolution override included)
    assert payload["provenance"]["config_hash"] == report.scenario.config_hash()
    assert payload["provenance"]["config_hash"] != \
        canonical_scenario("T4").config_hash()
    assert payload["provenance"]["resolution"] == pytest.approx(1 / 32)


def test_t4_axis_through_origin():
    report = run_scenario(canonical_scenario("T4"), resolution=1 / 32)
    assert report.passed
    c = report.criterion("axis_through_center")
    assert c is not None and c.passed


def test_scenario_ids_restricted():
    t1 = canonical_scenario("T1")
    with pytest.raises(ScenarioValidationError):
        Scenario(**{**t1.__dict__, "id": "T9"}).validate()
