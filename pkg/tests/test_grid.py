import numpy as np
import pytest

from slabsym import (
    AnnulusRegion,
    BoxRegion,
    DiskRegion,
    DomainGrid,
    GridTopologyError,
    PolygonRegion,
    ScalarField,
)
from slabsym.grid import differentials


def disk_grid(h=1 / 32, R=0.7, center=(0.0, 0.0)):
    return DomainGrid.from_region(DiskRegion(center, R), h)


def test_from_region_partitions_nodes():
    g = disk_grid()
    assert g.n_interior + g.n_boundary == g.n_nodes
    assert g.n_interior > 0 and g.n_boundary > 0
    # compact indices are disjoint and cover all nodes
    both = np.concatenate([g.interior_index, g.boundary_index])
    assert len(np.unique(both)) == g.n_nodes


def test_all_nodes_inside_region():
    R = 0.7
    g = disk_grid(R=R)
    r = np.linalg.norm(g.points, axis=1)
    assert np.all(r <= R + 1e-12)


def test_boundary_normals_point_inward():
    g = disk_grid(center=(0.2, -0.1))
    feet = g.points[g.boundary_index]
    to_center = np.array([0.2, -0.1]) - feet
    dots = np.einsum("ij,ij->i", g.boundary_normals, to_center)
    assert np.all(dots > 0)
    assert np.allclose(np.linalg.norm(g.boundary_normals, axis=1), 1.0)


def test_boundary_offsets_below_one_cell():
    g = disk_grid()
    assert np.all(g.boundary_offsets >= 0)
    assert np.all(g.boundary_offsets <= g.h * np.sqrt(2) + 1e-12)


def test_box_annulus_polygon_regions():
    h = 1 / 24
    for region in (
        BoxRegion((0.0, 0.0), (1.0, 0.75)),
        AnnulusRegion((0.0, 0.0), 0.3, 0.8),
        PolygonRegion([(0, 0), (1, 0), (1.2, 0.8), (0.2, 1.0)]),
    ):
        g = DomainGrid.from_region(region, h)
        assert g.n_interior > 0
        inside = region.contains(g.points[g.interior_index])
        assert np.all(inside)


def test_derivative_matrices_second_order():
    fn = lambda x, y: np.sin(1.3 * x) * np.cos(0.7 * y)
    dfdx = lambda x, y: 1.3 * np.cos(1.3 * x) * np.cos(0.7 * y)
    errs = []
    for h in (1 / 16, 1 / 32):
        g = DomainGrid.from_region(BoxRegion((0, 0), (1, 1)), h)
        u = ScalarField.from_function(g, fn)
        approx = (g.d1(0) @ u.values)[g.interior_index]
        exact = dfdx(g.points[:, 0], g.points[:, 1])[g.interior_index]
        errs.append(np.max(np.abs(approx - exact)))
    assert errs[0] / errs[1] > 3.2  # ~4 for second order


def test_mixed_derivative_exact_on_bilinear():
    g = DomainGrid.from_region(BoxRegion((0, 0), (1, 1)), 1 / 16)
    u = ScalarField.from_function(g, lambda x, y: 2.0 + x * y)
    d = differentials(u)
    assert np.allclose(d.hessian[:, 0, 1], 1.0, atol=1e-10)
    assert np.allclose(d.hessian[:, 0, 0], 0.0, atol=1e-10)


def test_foot_gradient_exact_on_affine():
    g = disk_grid()
    u = ScalarField.from_function(g, lambda x, y: 0.3 + 1.7 * x - 0.4 * y)
    G = g.foot_gradient()
    gx = G[0] @ u.values
    gy = G[1] @ u.values
    assert np.allclose(gx, 1.7, atol=1e-9)
    assert np.allclose(gy, -0.4, atol=1e-9)


def test_lattice_roundtrip():
    g = disk_grid()
    u = ScalarField.from_function(g, lambda x, y: x ** 2 - y)
    lat = u.lattice()
    vals = lat[tuple(g.node_index.T)]
    assert np.allclose(vals, u.values, equal_nan=False)


def test_sample_multilinear():
    g = DomainGrid.from_region(BoxRegion((0, 0), (1, 1)), 1 / 16)
    u = ScalarField.from_function(g, lambda x, y: 1.0 + 2.0 * x + 3.0 * y)
    pts = np.array([[0.31, 0.47], [0.5, 0.5], [0.13, 0.83]])
    vals, ok = u.sample(pts)
    assert np.all(ok)
    assert np.allclose(vals, 1.0 + 2.0 * pts[:, 0] + 3.0 * pts[:, 1], atol=1e-12)


def test_same_as_detects_mismatch():
    a = disk_grid(h=1 / 16)
    b = disk_grid(h=1 / 16)
    c = disk_grid(h=1 / 24)
    assert a.same_as(b)
    assert not a.same_as(c)


def test_rejects_3d_mask():
    with pytest.raises(GridTopologyError):
        DomainGrid((0, 0, 0), 0.1, np.zeros((3, 3, 3), dtype=np.int8))


def test_too_coarse_region_raises():
    with pytest.raises(Exception):
        DomainGrid.from_region(DiskRegion((0, 0), 0.05), 0.2)
