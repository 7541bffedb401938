import numpy as np
import pytest
import sympy as sp

import oracles
from slabsym import (
    BoxRegion,
    DomainGrid,
    GridMismatchError,
    PrescribedH,
    ScalarField,
    UnsupportedProfileError,
    aij_eigenvalues,
    assemble_difference_operator,
    ellipticity_constant,
    frechet_operator,
    mc_expanded,
    pointwise_aij,
    pointwise_bi,
    verify_ellipticity_bound,
)

RNG = np.random.default_rng(42)


def test_aij_matches_symbolic_derivative():
    for _ in range(50):
        g = RNG.normal(size=2) * RNG.uniform(0.1, 3.0)
        assert np.allclose(pointwise_aij(g), oracles.aij_exact(g), atol=1e-13)


def test_aij_eigenvalues_closed_form():
    g = RNG.normal(size=(200, 2)) * 2.0
    lo, hi = aij_eigenvalues(g)
    brute = np.linalg.eigvalsh(pointwise_aij(g))
    assert np.max(np.abs(brute[:, 0] - lo)) < 1e-12
    assert np.max(np.abs(brute[:, 1] - hi)) < 1e-12


def test_ellipticity_bound_never_violated():
    g = RNG.normal(size=(500, 2)) * 3.0
    xi = RNG.normal(size=(500, 2))
    assert verify_ellipticity_bound(g, xi) >= -1e-15


def test_bi_matches_symbolic_derivative():
    for _ in range(50):
        g = RNG.normal(size=2)
        h = RNG.normal(size=(2, 2))
        h = 0.5 * (h + h.T)
        assert np.allclose(pointwise_bi(g, h), oracles.bi_exact(g, h), atol=1e-12)


def _pair_of_fields(h=1 / 24):
    grid = DomainGrid.from_region(BoxRegion((0.05, 0.05), (0.95, 0.95)), h)
    u = ScalarField.from_function(
        grid, lambda x, y: 0.2 * np.sin(np.pi * x) * np.sin(np.pi * y))
    ub = ScalarField.from_function(
        grid, lambda x, y: 0.15 * np.sin(np.pi * x + 0.3) * np.sin(np.pi * y + 0.1))
    return grid, u, ub


def test_assembled_A_matches_quadrature_oracle():
    grid, u, ub = _pair_of_fields()
    profile = PrescribedH.affine(0.3, 0.7)
    op = assemble_difference_operator(u, ub, profile)
    from slabsym.grid import differentials
    du, db = differentials(u), differentials(ub)
    # spot-check a handful of interior rows against adaptive quadrature
    for row in (0, 7, len(grid.interior_index) // 2, len(grid.interior_index) - 1):
        A_ref = oracles.homotopy_A(du.gradient[row], db.gradient[row])
        assert np.allclose(op.second_order[row], A_ref, atol=5e-9)


def test_assembled_B_matches_quadrature_oracle():
    grid, u, ub = _pair_of_fields()
    profile = PrescribedH.constant(0.1)
    op = assemble_difference_operator(u, ub, profile)
    from slabsym.grid import differentials
    du, db = differentials(u), differentials(ub)
    for row in (0, 13, len(grid.interior_index) - 1):
        B_ref = oracles.homotopy_B(du.gradient[row], db.gradient[row],
                                   du.hessian[row], db.hessian[row])
        assert np.allclose(op.first_order[row], B_ref, atol=5e-9)


def test_zeroth_order_constant_for_affine_profile():
    grid, u, ub = _pair_of_fields()
    slope = 0.7
    op = assemble_difference_operator(u, ub, PrescribedH.affine(0.3, slope))
    # C = -n * dH/du = -2 * slope, exactly, independent of the states
    assert np.allclose(op.zeroth_order, -2.0 * slope, atol=1e-14)


def test_zeroth_order_zero_for_constant_profile():
    grid, u, ub = _pair_of_fields()
    op = assemble_difference_operator(u, ub, PrescribedH.constant(0.4))
    assert np.allclose(op.zeroth_order, 0.0)


def test_ellipticity_constant_is_certified_lower_bound():
    grid, u, ub = _pair_of_fields()
    op = assemble_difference_operator(u, ub, PrescribedH.constant(0.0))
    k = ellipticity_constant(u, ub)
    min_eig = np.min(np.linalg.eigvalsh(op.second_order)[:, 0])
    assert k > 0
    assert min_eig >= k * (1 - 1e-12)


def test_ellipticity_constant_closed_form():
    grid, u, ub = _pair_of_fields()
    from slabsym.grid import differentials
    Wmax = 1.0
    for f in (u, ub):
        gr = differentials(f).gradient
        W = np.sqrt(1.0 + np.einsum("ij,ij->i", gr, gr))
        Wmax = max(Wmax, float(np.max(W)))
    assert np.isclose(ellipticity_constant(u, ub), 1.0 / Wmax ** 3, rtol=1e-12)


def test_difference_identity_discrete():
    # L(w) reproduces mc(u) - mc(ubar) - n[H(u) - H(ubar)] up to quadrature
    # and stencil error
    grid, u, ub = _pair_of_fields(h=1 / 32)
    profile = PrescribedH.affine(0.3, 0.7)
    op = assemble_difference_operator(u, ub, profile, panels=32)
    w = ScalarField(grid, u.values - ub.values)
    Lw = op.apply(w)
    pts = grid.points
    Hdiff = 2.0 * (profile.evaluate(pts, u.values) - profile.evaluate(pts, ub.values))
    target = (mc_expanded(u) - mc_expanded(ub)
              - Hdiff[grid.interior_index])
    assert np.max(np.abs(Lw - target)) < 20 * grid.h ** 2


def test_frechet_operator_is_directional_derivative():
    grid, u, _ = _pair_of_fields(h=1 / 32)
    profile = PrescribedH.affine(0.2, 0.5)
    op = frechet_operator(u, profile)
    v = ScalarField.from_function(
        grid, lambda x, y: 0.1 * np.sin(2 * np.pi * x) * np.sin(np.pi * y))

    def residual(field):
        return mc_expanded(field) - 2.0 * profile.evaluate(
            grid.points, field.values)[grid.interior_index]

    eps = 1e-6
    up = ScalarField(grid, u.values + eps * v.values)
    um = ScalarField(grid, u.values - eps * v.values)
    fd = (residual(up) - residual(um)) / (2 * eps)
    assert np.max(np.abs(op.apply(v) - fd)) < 1e-7


def test_grid_mismatch_rejected():
    _, u, _ = _pair_of_fields(h=1 / 16)
    _, u2, _ = _pair_of_fields(h=1 / 24)
    with pytest.raises(GridMismatchError):
        assemble_difference_operator(u, u2, PrescribedH.constant(0.0))


def test_general_profile_without_du_rejected():
    grid, u, ub = _pair_of_fields()
    gen = PrescribedH.general(lambda x, uu, gg: uu)
    with pytest.raises(UnsupportedProfileError):
        assemble_difference_operator(u, ub, gen)


def test_operator_roundtrip_json(tmp_path):
    grid, u, ub = _pair_of_fields(h=1 / 16)
    op = assemble_difference_operator(u, ub, PrescribedH.affine(0.1, 0.4))
    path = tmp_path / "op.json"
    op.save_json(path)
    import json
    payload = json.loads(path.read_text())
    assert payload["ellipticity"] == pytest.approx(op.ellipticity)
    A = np.asarray([node["A"] for node in payload["nodes"]])
    assert A.shape == op.second_order.shape
    assert np.allclose(A, op.second_order)
