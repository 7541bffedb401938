import numpy as np
import pytest

from slabsym import (
    BoxRegion,
    DiskRegion,
    DomainGrid,
    PrescribedH,
    ScalarField,
    check_boundary_touching,
    check_interior_touching,
    frechet_operator,
    maximum_principle_probe,
    mesh_peclet,
    monotone_system,
    normal_derivative,
    solve_linear_dirichlet,
)
from slabsym.settings import DEFAULT_TOLERANCES
from slabsym.touching import INTERIOR


@pytest.fixture(scope="module")
def disk_operator():
    # y-independent base state: the coefficient matrix stays diagonal, so the
    # scheme is monotone (mixed-derivative stencils would break the M-matrix
    # sign pattern)
    grid = DomainGrid.from_region(DiskRegion((0, 0), 0.7), 1 / 32)
    u = ScalarField.from_function(
        grid, lambda x, y: 0.2 * np.sin(np.pi * x) + 0.0 * y)
    op = frechet_operator(u, PrescribedH.affine(0.1, 0.5))
    return grid, op


def test_zero_difference_holds(disk_operator):
    grid, op = disk_operator
    w = ScalarField(grid, np.zeros(grid.n_nodes))
    x0 = int(grid.interior_index[len(grid.interior_index) // 2])
    verdict = check_interior_touching(op, w, x0)
    assert verdict.conclusion_status == "holds"
    assert verdict.max_abs_w == 0.0
    assert all(h.ok for h in verdict.hypotheses)


def test_hypothesis_failure_is_not_applicable(disk_operator):
    grid, op = disk_operator
    # a positive interior bump breaks w <= 0
    w = ScalarField.from_function(
        grid, lambda x, y: 0.5 * np.exp(-10 * (x ** 2 + y ** 2)))
    x0 = int(grid.interior_index[0])
    w.values[x0] = 0.0
    verdict = check_interior_touching(op, w, x0)
    assert verdict.conclusion_status == "not_applicable"
    names = {h.name: h for h in verdict.hypotheses}
    assert any(not h.ok for h in verdict.hypotheses)


def test_violation_reported_when_hypotheses_waived(disk_operator):
    grid, op = disk_operator
    # with hypothesis tolerances waived sky-high, a genuinely nonzero w <= 0
    # must be reported as a violation of the forced conclusion
    w = ScalarField.from_function(grid, lambda x, y: -0.3 + 0.0 * x)
    x0 = int(grid.interior_index[7])
    w.values[x0] = 0.0
    loose = DEFAULT_TOLERANCES.with_overrides(touching_hypothesis=1e12)
    verdict = check_interior_touching(op, w, x0, tolerances=loose)
    assert verdict.conclusion_status == "violated"
    assert verdict.conclusion_witness is not None
    assert verdict.max_abs_w == pytest.approx(0.3)


def test_interior_check_rejects_boundary_node(disk_operator):
    grid, op = disk_operator
    w = ScalarField(grid, np.zeros(grid.n_nodes))
    with pytest.raises(ValueError):
        check_interior_touching(op, w, int(grid.boundary_index[0]))


def test_discrete_harmonic_maximum_principle(disk_operator):
    grid, op = disk_operator
    rng = np.random.default_rng(3)
    gvals = -rng.uniform(0.1, 1.0, size=grid.n_boundary)
    probe = maximum_principle_probe(op, gvals)
    assert probe["m_matrix"]
    assert probe["ok"]
    assert probe["interior_max"] <= probe["bound"] + 1e-12


def test_monotone_system_is_m_matrix(disk_operator):
    grid, op = disk_operator
    rows, info = monotone_system(op)
    assert info["m_matrix"]
    assert mesh_peclet(op) < 2.0


def test_mixed_coefficients_flagged_not_monotone():
    grid = DomainGrid.from_region(DiskRegion((0, 0), 0.7), 1 / 32)
    u = ScalarField.from_function(
        grid, lambda x, y: 0.2 * np.sin(np.pi * x) * np.cos(np.pi * y))
    op = frechet_operator(u, PrescribedH.affine(0.1, 0.5))
    _, info = monotone_system(op)
    assert not info["m_matrix"]


def test_hopf_normal_derivative_strictly_negative(disk_operator):
    grid, op = disk_operator
    # w < 0 inside, w(x0) = 0 on the boundary: solve L(w) = 0 with boundary
    # data zero at x0 and negative elsewhere
    x0 = int(grid.boundary_index[3])
    feet = grid.points[grid.boundary_index]
    p0 = grid.points[x0]
    d2 = np.einsum("ij,ij->i", feet - p0, feet - p0)
    gvals = -0.5 * d2 / (1e-12 + d2.max())
    w, info = solve_linear_dirichlet(op, gvals)
    verdict = check_boundary_touching(op, w, x0)
    assert verdict.hopf is not None
    assert verdict.hopf["applicable"]
    assert verdict.hopf["strictly_negative"]
    assert verdict.hopf["normal_derivative"] < 0


def test_normal_derivative_linear_field_exact():
    grid = DomainGrid.from_region(DiskRegion((0, 0), 0.7), 1 / 24)
    w = ScalarField.from_function(grid, lambda x, y: 0.4 * x - 0.2 * y)
    b = int(grid.boundary_index[5])
    eta = grid.boundary_normals[5]
    expected = 0.4 * eta[0] - 0.2 * eta[1]
    assert abs(normal_derivative(w, b) - expected) < 1e-10


def test_solve_linear_dirichlet_reproduces_boundary_data(disk_operator):
    grid, op = disk_operator
    gvals = np.linspace(-1.0, -0.2, grid.n_boundary)
    w, _ = solve_linear_dirichlet(op, gvals)
    assert np.allclose(w.values[grid.boundary_index], gvals, atol=1e-10)


def test_harmonic_extension_bounded_by_data():
    # pure Laplacian: flat base state, zero profile
    grid = DomainGrid.from_region(BoxRegion((0, 0), (1, 1)), 1 / 24)
    u0 = ScalarField(grid, np.zeros(grid.n_nodes))
    op = frechet_operator(u0, PrescribedH.constant(0.0))
    gvals = np.cos(np.linspace(0, 7 * np.pi, grid.n_boundary))
    w, info = solve_linear_dirichlet(op, gvals)
    assert info["m_matrix"]
    assert w.values.max() <= gvals.max() + 1e-10
    assert w.values.min() >= gvals.min() - 1e-10
