import numpy as np
import pytest

from slabsym import (
    ContactAngle,
    DiskRegion,
    DomainGrid,
    Plane,
    PrescribedH,
    Slab,
    bump_mesh,
    mesh_from_graph,
    reflect_and_compare,
    revolve_profile,
    solve_axisymmetric_profile,
    solve_graph_flux,
    sphere_mesh,
    sweep_direction,
    sweep_directions_for,
    sweep_mesh,
)

SLAB = Slab((0.0, 0.0, 1.0), 0.0, 1.0)
AXIS_XY = np.array([0.25, -0.1])


@pytest.fixture(scope="module")
def cylinder_mesh():
    R = 0.3
    curve = solve_axisymmetric_profile(
        SLAB, PrescribedH.constant(1.0 / (2 * R)), np.pi / 2, np.pi / 2)
    step = max(1, len(curve.x) // 32)
    return revolve_profile(curve.x[::step], curve.z[::step], n_theta=64,
                           axis_xy=AXIS_XY)


@pytest.fixture(scope="module")
def sphere_mesh_fixture():
    center = np.array([0.1, 0.2, 0.3])
    return center, sphere_mesh(center, 0.9, n_theta=72, n_phi=36)


def test_cylinder_sweep_finds_exact_center(cylinder_mesh):
    mesh = cylinder_mesh
    res = sweep_direction(mesh, (1.0, 0.0, 0.0), slab=SLAB)
    # tangent plane sits at x = AXIS_XY[0] + R; center depth = R
    assert abs(res.t_star - 0.3) < 1e-6
    assert res.deviation < 1e-6
    # the critical plane passes through the revolution axis
    assert abs(res.symmetry_plane.offset - AXIS_XY[0]) < 1e-6


def test_sphere_sweep_any_direction(sphere_mesh_fixture):
    center, mesh = sphere_mesh_fixture
    d = np.array([0.0, 1.0, 0.0])
    res = sweep_direction(mesh, d, slab=SLAB)
    assert abs(res.t_star - 0.9) < 1e-6
    assert res.deviation < 1e-6
    assert abs(res.symmetry_plane.offset - center[1]) < 1e-6


def test_sweep_mesh_extracts_rotation_axis(cylinder_mesh):
    mesh = cylinder_mesh
    report = sweep_mesh(mesh, SLAB, directions=8)
    assert report.verdict == "symmetric"
    assert report.axis is not None
    assert np.allclose(report.axis.point[:2], AXIS_XY, atol=1e-6)
    assert np.allclose(np.abs(report.axis.direction @ np.array([0, 0, 1.0])), 1.0)
    assert report.axis_residual < 1e-6


def test_bumped_cylinder_detected_asymmetric(cylinder_mesh):
    mesh = cylinder_mesh
    apex = AXIS_XY[0] + 0.3, AXIS_XY[1], 0.5
    bumped = bump_mesh(mesh, np.array(apex), 0.05, 0.15)
    tol = 10.0 * bumped.mesh_h() ** 2
    report = sweep_mesh(bumped, SLAB, directions=8, symmetry_tol=tol)
    assert report.verdict == "asymmetric"
    assert report.max_deviation >= 0.02
    assert report.witness_direction is not None
    # the worst direction should look roughly along +-x (where the bump is)
    assert abs(report.witness_direction[0]) > 0.5


def test_reflect_and_compare_detects_mirror(sphere_mesh_fixture):
    center, mesh = sphere_mesh_fixture
    good = Plane(point=center, normal=(1.0, 0.0, 0.0))
    bad = Plane(point=center + np.array([0.2, 0, 0]), normal=(1.0, 0.0, 0.0))
    d_good = reflect_and_compare(mesh, good)
    d_bad = reflect_and_compare(mesh, bad)
    assert d_good < 1e-6
    assert d_bad > 0.05


def test_sweep_directions_are_unit_and_planar():
    dirs = sweep_directions_for(SLAB, 8)
    assert dirs.shape == (8, 3)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    assert np.allclose(dirs @ np.array([0, 0, 1.0]), 0.0, atol=1e-12)


def test_graph_cap_sweep_symmetric():
    grid = DomainGrid.from_region(DiskRegion((0, 0), 0.8), 1 / 32)
    u = solve_graph_flux(grid, PrescribedH.affine(0.5, 1.0), ContactAngle(1.2))
    mesh = mesh_from_graph(u, stride=2)
    report = sweep_mesh(mesh, SLAB, directions=4)
    assert report.verdict == "symmetric"
    assert report.axis is not None
    assert np.allclose(report.axis.point[:2], (0.0, 0.0), atol=1e-6)


def test_touch_class_reported(cylinder_mesh):
    mesh = cylinder_mesh
    res = sweep_direction(mesh, (1.0, 0.0, 0.0), slab=SLAB)
    from slabsym.moving_plane import TOUCH_CLASSES
    assert res.touch_class in TOUCH_CLASSES


def test_sweep_profile_monotone_depth(cylinder_mesh):
    mesh = cylinder_mesh
    res = sweep_direction(mesh, (0.0, 1.0, 0.0), slab=SLAB)
    assert len(res.profile) > 4
    t = res.profile[:, 0]
    assert np.all(np.diff(t) > 0)
    assert res.profile[-1, 0] <= res.extent + 1e-9
