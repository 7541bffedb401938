import numpy as np
import pytest

import oracles
from slabsym import (
    BracketError,
    ContactAngle,
    CurvatureFlux,
    DiskRegion,
    DomainGrid,
    IncompatibleFluxError,
    PrescribedH,
    ProfileCurve,
    RadialFlux,
    ScalarField,
    Slab,
    SolverSettings,
    mc_residual,
    solve_axisymmetric_fixed_radius,
    solve_axisymmetric_profile,
    solve_graph_dirichlet,
    solve_graph_flux,
)

SLAB = Slab((0.0, 0.0, 1.0), 0.0, 1.0)


# ---------------------------------------------------------------------------
# meridian (axisymmetric) solver
# ---------------------------------------------------------------------------


def test_cylinder_profile_recovered():
    R = 0.65
    curve = solve_axisymmetric_profile(
        SLAB, PrescribedH.constant(oracles.cylinder_H(R)), np.pi / 2, np.pi / 2)
    assert abs(curve.contact_radius(1) - R) < 1e-8 or \
        np.max(np.abs(curve.x - curve.x[0])) < 1e-8
    # every meridian sample sits at the same radius
    assert np.ptp(curve.x) < 1e-8


def test_meridian_delaunay_invariant():
    # with constant H the quantity x sin(phi) - H x^2 is a first integral of
    # the meridian system; the integrator must conserve it to high accuracy
    H = 0.4
    curve = solve_axisymmetric_profile(SLAB, PrescribedH.constant(H), 1.45, 1.5)
    inv = curve.x * np.sin(curve.phi) - H * curve.x ** 2
    assert np.ptp(inv) < 1e-9


def test_meridian_contact_angles_hit_targets():
    g1, g2 = 1.45, 1.5
    curve = solve_axisymmetric_profile(SLAB, PrescribedH.constant(0.3), g1, g2)
    assert abs(curve.contact_angle(1) - g1) < 1e-9
    assert abs(curve.contact_angle(2) - g2) < 1e-9


def test_fixed_radius_meridian_lands_on_both_circles():
    curve = solve_axisymmetric_fixed_radius(
        SLAB, PrescribedH.constant(0.3), 0.7, 0.6)
    assert abs(curve.contact_radius(1) - 0.7) < 1e-9
    assert abs(curve.contact_radius(2) - 0.6) < 1e-6


def test_fixed_radius_unreachable_raises():
    with pytest.raises(BracketError):
        solve_axisymmetric_fixed_radius(
            SLAB, PrescribedH.constant(0.3), 0.7, 0.05)


def test_profile_curve_roundtrip_csv(tmp_path):
    curve = solve_axisymmetric_profile(SLAB, PrescribedH.constant(0.55), 1.2, 1.2)
    path = tmp_path / "profile.csv"
    curve.save_csv(path)
    back = ProfileCurve.load_csv(path)
    assert np.allclose(back.x, curve.x, atol=1e-12)
    assert np.allclose(back.z, curve.z, atol=1e-12)


# ---------------------------------------------------------------------------
# graph solver: contact angle vs the radial shooting oracle
# ---------------------------------------------------------------------------


def test_contact_angle_solution_matches_radial_oracle():
    R, gamma = 0.8, 1.2
    h = 1 / 32
    grid = DomainGrid.from_region(DiskRegion((0, 0), R), h)
    u = solve_graph_flux(grid, PrescribedH.affine(0.5, 1.0), ContactAngle(gamma))
    uo, _, _ = oracles.radial_contact_angle(R, lambda z: 0.5 + z, gamma)
    r = np.linalg.norm(grid.points, axis=1)
    assert np.max(np.abs(u.values - uo(r))) <= 5 * h * h


def test_contact_angle_newton_converges_fast():
    grid = DomainGrid.from_region(DiskRegion((0, 0), 0.8), 1 / 32)
    u = solve_graph_flux(grid, PrescribedH.affine(0.5, 1.0), ContactAngle(1.2))
    hist = u.diagnostics["newton_history"]
    assert hist[-1] <= 1e-10
    assert len(hist) <= 12


def test_curvature_flux_matches_radial_oracle():
    R = 0.8
    h = 1 / 32
    grid = DomainGrid.from_region(DiskRegion((0, 0), R), h)
    hmap = lambda H0: 1.0 - 0.5 * H0
    bc = CurvatureFlux(hmap, curvature_range=(0.5, 2.0), boundary_curvature=1.25)
    u = solve_graph_flux(grid, PrescribedH.affine(0.5, 1.0), bc)
    uo, _, _ = oracles.radial_flux(R, lambda z: 0.5 + z, hmap(1.0 / R))
    r = np.linalg.norm(grid.points, axis=1)
    assert np.max(np.abs(u.values - uo(r))) <= 5 * h * h


def test_radial_flux_matches_radial_oracle():
    R, c = 0.8, 0.3
    h = 1 / 32
    grid = DomainGrid.from_region(DiskRegion((0, 0), R), h)
    u = solve_graph_flux(grid, PrescribedH.affine(0.5, 1.0), RadialFlux(c, (0.0, 0.0)))
    uo, _, _ = oracles.radial_flux(R, lambda z: 0.5 + z, -c * R)
    r = np.linalg.norm(grid.points, axis=1)
    assert np.max(np.abs(u.values - uo(r))) <= 5 * h * h


def test_flux_without_height_dependence_needs_normalization():
    grid = DomainGrid.from_region(DiskRegion((0, 0), 0.8), 1 / 24)
    with pytest.raises(IncompatibleFluxError):
        solve_graph_flux(grid, PrescribedH.constant(0.2), ContactAngle(1.3))


def test_flux_normalization_pins_mean_height():
    grid = DomainGrid.from_region(DiskRegion((0, 0), 0.8), 1 / 24)
    settings = SolverSettings(flux_normalization=0.25)
    u = solve_graph_flux(grid, PrescribedH.constant(0.2), ContactAngle(1.3),
                         settings=settings)
    assert abs(float(np.mean(u.values)) - 0.25) < 1e-9


# ---------------------------------------------------------------------------
# graph solver: Dirichlet data and manufactured solutions
# ---------------------------------------------------------------------------


def test_dirichlet_boundary_values_exact():
    grid = DomainGrid.from_region(DiskRegion((0, 0), 0.7), 1 / 24)
    g = lambda p: 0.1 * p[:, 0]
    u = solve_graph_dirichlet(grid, PrescribedH.constant(0.3), g)
    feet = grid.points[grid.boundary_index]
    assert np.allclose(u.values[grid.boundary_index], g(feet), atol=1e-12)


def _manufactured(h):
    import sympy as sp
    X, Y = oracles.SYM_X, oracles.SYM_Y
    expr = 0.25 * sp.sin(sp.pi * X) * sp.sin(sp.pi * Y) + 0.1 * X * Y
    div_fn, _, _, _ = oracles.symbolic_graph_operators(expr)
    u_fn = sp.lambdify((X, Y), expr, "numpy")
    grid = DomainGrid.from_region(DiskRegion((0.5, 0.5), 0.45), h)

    def H_spatial(x, u, grad):
        x = np.atleast_2d(x)
        return div_fn(x[:, 0], x[:, 1]) / 2.0

    profile = PrescribedH.general(H_spatial, du=lambda x, u, g: np.zeros_like(u))
    u = solve_graph_dirichlet(grid, profile,
                              lambda p: u_fn(p[:, 0], p[:, 1]))
    exact = u_fn(grid.points[:, 0], grid.points[:, 1])
    err = float(np.max(np.abs(u.values - exact)))
    res = float(np.max(np.abs(mc_residual(u, profile))))
    return err, res, u


def test_manufactured_solution_second_order():
    errs = []
    for h in (1 / 16, 1 / 32):
        err, res, _ = _manufactured(h)
        errs.append(err)
        assert res <= 1e-9
    assert errs[0] / errs[1] > 3.0


def test_solver_rejects_bad_angles():
    with pytest.raises(Exception):
        solve_axisymmetric_profile(SLAB, PrescribedH.constant(0.1), -0.5, 1.0)
