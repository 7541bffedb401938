"""Masked Cartesian grids over bounded plate domains, and the
finite-difference stencils defined on them.

A domain is represented at node resolution: every lattice node is tagged
``interior`` (full centered stencil available), ``boundary`` (inside the
domain but missing some centered neighbour), or ``exterior``.  Fields store
values on the non-exterior nodes only.

Interior derivatives use centered second-order stencils.  Boundary nodes use
one-sided second-order stencils (with a recorded first-order fallback when a
mask is too tight).  Each boundary node also carries the inward unit normal
of the *true* domain boundary at its nearest boundary point, and the distance
to that point, so flux conditions can be imposed at the actual boundary
instead of at the staircase node.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np
import scipy.ndimage as ndi
import scipy.sparse as sp
import shapely

from .errors import (
    GridMismatchError,
    GridTopologyError,
    StencilUnavailableError,
)

INTERIOR, BOUNDARY, EXTERIOR = 0, 1, 2


# ---------------------------------------------------------------------------
# domain shapes
# ---------------------------------------------------------------------------


class Region(Protocol):
    """Bounded open domain in the plate plane."""

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Strict interior test, vectorized over rows of ``points``."""
        ...

    def nearest_boundary(self, points: np.ndarray):
        """For inside points: (foot on the true boundary, inward unit normal
        at the foot, distance to the foot)."""
        ...

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        ...


@dataclass(frozen=True)
class IntervalRegion:
    """1D domain (a, b); the n=1 testbed."""

    a: float
    b: float

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("interval requires b > a")

    def contains(self, points):
        x = np.asarray(points, dtype=float).reshape(-1)
        return (x > self.a) & (x < self.b)

    def nearest_boundary(self, points):
        x = np.asarray(points, dtype=float).reshape(-1)
        da, db = x - self.a, self.b - x
        near_a = da <= db
        foot = np.where(near_a, self.a, self.b)[:, None]
        normal = np.where(near_a, 1.0, -1.0)[:, None]
        dist = np.minimum(da, db)
        return foot, normal, dist

    def bounds(self):
        return np.array([self.a]), np.array([self.b])


@dataclass(frozen=True)
class DiskRegion:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")

    def contains(self, points):
        d = np.atleast_2d(points) - self.center
        return np.einsum("ij,ij->i", d, d) < self.radius**2

    def nearest_boundary(self, points):
        d = np.atleast_2d(points) - self.center
        r = np.linalg.norm(d, axis=1)
        safe = np.where(r > 1e-300, r, 1.0)
        radial = d / safe[:, None]
        foot = self.center + self.radius * radial
        return foot, -radial, self.radius - r

    def bounds(self):
        return self.center - self.radius, self.center + self.radius


@dataclass(frozen=True)
class AnnulusRegion:
    center: np.ndarray
    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not (0 < self.inner_radius < self.outer_radius):
            raise ValueError("annulus requires 0 < inner < outer radius")

    def contains(self, points):
        d = np.atleast_2d(points) - self.center
        r2 = np.einsum("ij,ij->i", d, d)
        return (r2 > self.inner_radius**2) & (r2 < self.outer_radius**2)

    def nearest_boundary(self, points):
        d = np.atleast_2d(points) - self.center
        r = np.linalg.norm(d, axis=1)
        radial = d / np.where(r > 1e-300, r, 1.0)[:, None]
        to_outer = self.outer_radius - r
        to_inner = r - self.inner_radius
        outer_closer = to_outer <= to_inner
        foot = np.where(
            outer_closer[:, None],
            self.center + self.outer_radius * radial,
            self.center + self.inner_radius * radial,
        )
        normal = np.where(outer_closer[:, None], -radial, radial)
        return foot, normal, np.minimum(to_outer, to_inner)

    def bounds(self):
        return self.center - self.outer_radius, self.center + self.outer_radius


@dataclass(frozen=True)
class BoxRegion:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if not np.all(self.hi > self.lo):
            raise ValueError("box requires hi > lo componentwise")

    def contains(self, points):
        p = np.atleast_2d(points)
        return np.all((p > self.lo) & (p < self.hi), axis=1)

    def nearest_boundary(self, points):
        p = np.atleast_2d(points)
        gaps = np.concatenate([p - self.lo, self.hi - p], axis=1)  # (N, 2n)
        n = p.shape[1]
        k = np.argmin(gaps, axis=1)
        dist = gaps[np.arange(len(p)), k]
        normal = np.zeros_like(p)
        foot = p.copy()
        for axis in range(n):
            lo_face = k == axis
            hi_face = k == axis + n
            normal[lo_face, axis] = 1.0
            normal[hi_face, axis] = -1.0
            foot[lo_face, axis] = self.lo[axis]
            foot[hi_face, axis] = self.hi[axis]
        return foot, normal, dist

    def bounds(self):
        return self.lo.copy(), self.hi.copy()


class PolygonRegion:
    """Region bounded by a closed polyline (no self-intersections).

    Containment and nearest-boundary queries are delegated to shapely; the
    inward normal at a node is the unit vector from the nearest boundary
    point to the node, which is exact for nodes strictly inside.
    """

    def __init__(self, vertices: np.ndarray):
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
            raise ValueError("polygon needs at least 3 planar vertices")
        self.vertices = vertices
        self._poly = shapely.Polygon(vertices)
        if not self._poly.is_valid:
            raise ValueError("polygon boundary is self-intersecting or degenerate")
        self._ring = self._poly.exterior

    def contains(self, points):
        p = np.atleast_2d(points)
        return shapely.contains_xy(self._poly, p[:, 0], p[:, 1])

    def nearest_boundary(self, points):
        p = np.atleast_2d(points)
        pts = shapely.points(p)
        dist = shapely.distance(self._ring, pts)
        feet = np.array(
            [
                self._ring.interpolate(self._ring.project(pt)).coords[0]
                for pt in pts
            ]
        )
        delta = p - feet
        nrm = np.linalg.norm(delta, axis=1)
        normal = np.zeros_like(p)
        ok = nrm > 1e-14
        normal[ok] = delta[ok] / nrm[ok, None]
        return feet, normal, dist

    def bounds(self):
        lo_x, lo_y, hi_x, hi_y = self._poly.bounds
        return np.array([lo_x, lo_y]), np.array([hi_x, hi_y])


# ---------------------------------------------------------------------------
# the grid
# ---------------------------------------------------------------------------


class DomainGrid:
    """Cartesian lattice with a node-resolution domain mask.

    Parameters
    ----------
    origin : anchor of the lattice (coordinates of node index 0)
    spacing : uniform lattice step h
    mask : integer lattice array with INTERIOR / BOUNDARY / EXTERIOR tags
    boundary_normals : (n_boundary, dim) inward unit normals of the true
        boundary, ordered like the boundary nodes in compact order
    boundary_offsets : (n_boundary,) distance from each boundary node to its
        nearest true-boundary point (0 when nodes lie exactly on it)
    """

    def __init__(self, origin, spacing, mask, boundary_normals=None,
                 boundary_offsets=None):
        self.origin = np.atleast_1d(np.asarray(origin, dtype=float))
        self.h = float(spacing)
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        self.mask = np.asarray(mask, dtype=np.int8)
        self.dim = self.mask.ndim
        if self.dim not in (1, 2):
            raise GridTopologyError("grids support 1 or 2 dimensions")
        if self.origin.shape[0] != self.dim:
            raise ValueError("origin dimension does not match mask")

        self._classify_and_index()

        nb = len(self.boundary_index)
        if boundary_normals is None:
            boundary_normals = np.zeros((nb, self.dim))
        self.boundary_normals = np.asarray(boundary_normals, dtype=float)
        if self.boundary_normals.shape != (nb, self.dim):
            raise ValueError("boundary_normals shape mismatch")
        if boundary_offsets is None:
            boundary_offsets = np.zeros(nb)
        self.boundary_offsets = np.asarray(boundary_offsets, dtype=float)
        if self.boundary_offsets.shape != (nb,):
            raise ValueError("boundary_offsets shape mismatch")

        self._op_cache: dict = {}

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_region(cls, region: Region, spacing: float, margin: int = 2) -> "DomainGrid":
        """Tag the lattice ``x = i*h`` against a region.

        The lattice is anchored at integer multiples of h, so congruent
        regions centered at lattice points produce congruent masks.
        """
        h = float(spacing)
        lo, hi = region.bounds()
        lo = np.atleast_1d(lo)
        hi = np.atleast_1d(hi)
        imin = np.floor(lo / h).astype(int) - margin
        imax = np.ceil(hi / h).astype(int) + margin
        shape = tuple(int(b - a + 1) for a, b in zip(imin, imax))
        origin = imin * h

        grids = np.indices(shape)
        points = np.stack(
            [origin[a] + grids[a] * h for a in range(len(shape))], axis=-1
        ).reshape(-1, len(shape))
        inside = region.contains(points).reshape(shape)

        if len(shape) == 1:
            footprint = np.ones(3, dtype=bool)
        else:
            footprint = np.ones((3, 3), dtype=bool)
        core = ndi.minimum_filter(inside, footprint=footprint, mode="constant",
                                  cval=False) & inside
        boundary = inside & ~core
        # prune boundary slivers with no interior node in reach: they cannot
        # participate in any stencil and would strand flux rows
        near_core = ndi.maximum_filter(core, footprint=footprint, mode="constant",
                                       cval=False)
        boundary &= near_core

        mask = np.full(shape, EXTERIOR, dtype=np.int8)
        mask[core] = INTERIOR
        mask[boundary] = BOUNDARY

        grid = cls(origin, h, mask)
        feet, normals, dist = region.nearest_boundary(grid.points[grid.boundary_index])
        grid.boundary_normals = np.asarray(normals, dtype=float)
        grid.boundary_offsets = np.asarray(dist, dtype=float)
        grid.region = region
        return grid

    def _classify_and_index(self):
        mask = self.mask
        nonext = mask != EXTERIOR
        if not np.any(mask == INTERIOR):
            raise GridTopologyError("grid has no interior nodes; refine the resolution")

        # structural invariants
        structure = np.ones((3,) * self.dim, dtype=bool)
        lbl, ncomp = ndi.label(mask == INTERIOR, structure=structure)
        if ncomp != 1:
            raise GridTopologyError(
                f"interior nodes form {ncomp} connected components (need exactly 1)"
            )
        # every centered-stencil neighbour of an interior node must carry values
        core_ok = ndi.minimum_filter(nonext, footprint=structure, mode="constant",
                                     cval=False)
        if np.any((mask == INTERIOR) & ~core_ok):
            raise GridTopologyError("an interior node touches an exterior node")

        self.index_map = np.full(mask.shape, -1, dtype=np.int64)
        flat_order = np.flatnonzero(nonext.reshape(-1))
        self.index_map.reshape(-1)[flat_order] = np.arange(len(flat_order))
        self.n_nodes = len(flat_order)

        idx = np.argwhere(nonext)          # (N, dim) lattice indices
        self.node_index = idx
        self.points = self.origin + idx * self.h
        flat_mask = mask[tuple(idx.T)]
        self.interior_index = np.flatnonzero(flat_mask == INTERIOR)
        self.boundary_index = np.flatnonzero(flat_mask == BOUNDARY)
        self.node_kind = flat_mask.copy()

    # -- basic queries --------------------------------------------------------

    @property
    def n_interior(self) -> int:
        return len(self.interior_index)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary_index)

    def compact_index(self, lattice_idx) -> int:
        i = self.index_map[tuple(np.asarray(lattice_idx))]
        if i < 0:
            raise KeyError(f"node {lattice_idx} is exterior")
        return int(i)

    def same_as(self, other: "DomainGrid") -> bool:
        return (
            self.mask.shape == other.mask.shape
            and self.h == other.h
            and np.array_equal(self.origin, other.origin)
            and np.array_equal(self.mask, other.mask)
        )

    # -- stencil operators ----------------------------------------------------

    def _neighbor_compact(self, idx, shift):
        """Compact indices of idx+shift, or -1 where the neighbour is not a
        value-carrying node."""
        moved = idx + np.asarray(shift)
        ok = np.all((moved >= 0) & (moved < np.array(self.mask.shape)), axis=1)
        out = np.full(len(idx), -1, dtype=np.int64)
        out[ok] = self.index_map[tuple(moved[ok].T)]
        return out

    def _build_first_derivative(self, axis: int):
        h = self.h
        rows, cols, vals = [], [], []
        order = np.full(self.n_nodes, 2, dtype=np.int8)

        shift = np.zeros(self.dim, dtype=int)
        shift[axis] = 1

        idx = self.node_index
        plus = self._neighbor_compact(idx, shift)
        minus = self._neighbor_compact(idx, -shift)
        plus2 = self._neighbor_compact(idx, 2 * shift)
        minus2 = self._neighbor_compact(idx, -2 * shift)

        me = np.arange(self.n_nodes)
        centered = (plus >= 0) & (minus >= 0)
        fwd = ~centered & (plus >= 0) & (plus2 >= 0)
        bwd = ~centered & ~fwd & (minus >= 0) & (minus2 >= 0)
        fwd1 = ~centered & ~fwd & ~bwd & (plus >= 0)
        bwd1 = ~centered & ~fwd & ~bwd & ~fwd1 & (minus >= 0)
        dead = ~(centered | fwd | bwd | fwd1 | bwd1)
        if np.any(dead & (self.node_kind == INTERIOR)):
            raise StencilUnavailableError("interior node lost a centered neighbour")

        def add(sel, pattern):
            for target, coeff in pattern:
                rows.append(me[sel])
                cols.append(target[sel])
                vals.append(np.full(sel.sum(), coeff / h))

        add(centered, [(plus, 0.5), (minus, -0.5)])
        add(fwd, [(me, -1.5), (plus, 2.0), (plus2, -0.5)])
        add(bwd, [(me, 1.5), (minus, -2.0), (minus2, 0.5)])
        add(fwd1, [(me, -1.0), (plus, 1.0)])
        add(bwd1, [(me, 1.0), (minus, -1.0)])
        order[fwd1 | bwd1] = 1
        order[dead] = 0

        mat = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_nodes, self.n_nodes),
        )
        return mat, order

    def _build_second_derivative(self, axis: int):
        h2 = self.h * self.h
        rows, cols, vals = [], [], []
        order = np.full(self.n_nodes, 2, dtype=np.int8)

        shift = np.zeros(self.dim, dtype=int)
        shift[axis] = 1
        idx = self.node_index
        p1 = self._neighbor_compact(idx, shift)
        m1 = self._neighbor_compact(idx, -shift)
        p2 = self._neighbor_compact(idx, 2 * shift)
        m2 = self._neighbor_compact(idx, -2 * shift)
        p3 = self._neighbor_compact(idx, 3 * shift)
        m3 = self._neighbor_compact(idx, -3 * shift)

        me = np.arange(self.n_nodes)
        centered = (p1 >= 0) & (m1 >= 0)
        fwd4 = ~centered & (p1 >= 0) & (p2 >= 0) & (p3 >= 0)
        bwd4 = ~centered & ~fwd4 & (m1 >= 0) & (m2 >= 0) & (m3 >= 0)
        fwd3 = ~centered & ~fwd4 & ~bwd4 & (p1 >= 0) & (p2 >= 0)
        bwd3 = ~centered & ~fwd4 & ~bwd4 & ~fwd3 & (m1 >= 0) & (m2 >= 0)
        dead = ~(centered | fwd4 | bwd4 | fwd3 | bwd3)
        if np.any(dead & (self.node_kind == INTERIOR)):
            raise StencilUnavailableError("interior node lost a centered neighbour")

        def add(sel, pattern):
            for target, coeff in pattern:
                rows.append(me[sel])
                cols.append(target[sel])
                vals.append(np.full(sel.sum(), coeff / h2))

        add(centered, [(p1, 1.0), (me, -2.0), (m1, 1.0)])
        add(fwd4, [(me, 2.0), (p1, -5.0), (p2, 4.0), (p3, -1.0)])
        add(bwd4, [(me, 2.0), (m1, -5.0), (m2, 4.0), (m3, -1.0)])
        add(fwd3, [(me, 1.0), (p1, -2.0), (p2, 1.0)])
        add(bwd3, [(me, 1.0), (m1, -2.0), (m2, 1.0)])
        order[fwd3 | bwd3] = 1
        order[dead] = 0

        mat = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_nodes, self.n_nodes),
        )
        return mat, order

    def _build_mixed_derivative(self):
        """d^2/dx dy: centered 4-point cross at interior nodes, first-
        derivative composition at boundary nodes."""
        if self.dim != 2:
            raise StencilUnavailableError("mixed derivative requires dim 2")
        h2 = 4.0 * self.h * self.h
        idx_int = self.node_index[self.interior_index]
        me = self.interior_index

        pp = self._neighbor_compact(idx_int, (1, 1))
        pm = self._neighbor_compact(idx_int, (1, -1))
        mp = self._neighbor_compact(idx_int, (-1, 1))
        mm = self._neighbor_compact(idx_int, (-1, -1))
        if np.any((pp < 0) | (pm < 0) | (mp < 0) | (mm < 0)):
            raise StencilUnavailableError("interior node misses a diagonal neighbour")

        rows = np.concatenate([me] * 4)
        cols = np.concatenate([pp, mm, pm, mp])
        vals = np.concatenate([
            np.full(len(me), 1.0 / h2),
            np.full(len(me), 1.0 / h2),
            np.full(len(me), -1.0 / h2),
            np.full(len(me), -1.0 / h2),
        ])
        interior_part = sp.csr_matrix(
            (vals, (rows, cols)), shape=(self.n_nodes, self.n_nodes)
        )

        dx = self.d1(0)
        dy = self.d1(1)
        composed = (dx @ dy).tocsr()
        keep = np.zeros(self.n_nodes, dtype=bool)
        keep[self.boundary_index] = True
        boundary_part = sp.diags(keep.astype(float)) @ composed
        return (interior_part + boundary_part).tocsr()

    def d1(self, axis: int) -> sp.csr_matrix:
        key = ("d1", axis)
        if key not in self._op_cache:
            mat, order = self._build_first_derivative(axis)
            self._op_cache[key] = mat
            self._op_cache[("d1_order", axis)] = order
        return self._op_cache[key]

    def d2(self, a: int, b: int) -> sp.csr_matrix:
        a, b = sorted((a, b))
        key = ("d2", a, b)
        if key not in self._op_cache:
            if a == b:
                mat, order = self._build_second_derivative(a)
                self._op_cache[("d2_order", a)] = order
            else:
                mat = self._build_mixed_derivative()
            self._op_cache[key] = mat
        return self._op_cache[key]

    def interpolation_matrix(self, points) -> tuple[sp.csr_matrix, np.ndarray]:
        """Sparse multilinear-interpolation rows for arbitrary points.

        Returns (matrix, valid): ``matrix @ field.values`` interpolates; rows
        whose surrounding cell touches an exterior or out-of-range node are
        zero and flagged invalid.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = (pts - self.origin) / self.h
        base = np.floor(rel).astype(int)
        frac = rel - base

        shape = np.array(self.mask.shape)
        n = len(pts)
        valid = np.ones(n, dtype=bool)
        cols = np.zeros((n, 2 ** self.dim), dtype=np.int64)
        weights = np.zeros((n, 2 ** self.dim))
        for k, corner in enumerate(np.ndindex(*(2,) * self.dim)):
            node = base + np.array(corner)
            inb = np.all((node >= 0) & (node < shape), axis=1)
            cid = np.full(n, -1, dtype=np.int64)
            cid[inb] = self.index_map[tuple(node[inb].T)]
            valid &= cid >= 0
            w = np.ones(n)
            for a in range(self.dim):
                w = w * (frac[:, a] if corner[a] else 1.0 - frac[:, a])
            cols[:, k] = np.maximum(cid, 0)
            weights[:, k] = w
        weights[~valid] = 0.0
        rows = np.repeat(np.arange(n), 2 ** self.dim)
        mat = sp.csr_matrix(
            (weights.reshape(-1), (rows, cols.reshape(-1))),
            shape=(n, self.n_nodes),
        )
        mat.eliminate_zeros()
        return mat, valid

    def foot_gradient(self) -> list[sp.csr_matrix]:
        """Per axis: sparse rows (n_boundary x n_nodes) evaluating the
        gradient *at the true boundary foot* of each boundary node by
        quadratic extrapolation along the inward normal ray through the node
        and two interpolated samples at node + h eta, node + 2h eta.

        All extrapolation weights stay O(1), so the rows scale like a plain
        first-derivative stencil and remain safe to use implicitly in Newton
        systems (one-sided second-derivative corrections do not: they
        destabilize fine-grid flux solves).  Where an inner sample's cell is
        not fully covered the row degrades gracefully to linear extrapolation
        or to the plain node gradient.
        """
        key = "foot_gradient"
        if key not in self._op_cache:
            bsel = sp.csr_matrix(
                (
                    np.ones(self.n_boundary),
                    (np.arange(self.n_boundary), self.boundary_index),
                ),
                shape=(self.n_boundary, self.n_nodes),
            )
            bpts = self.points[self.boundary_index]
            interp1, ok1 = self.interpolation_matrix(bpts + self.h * self.boundary_normals)

            d = self.boundary_offsets / self.h      # foot distance in cells
            # linear extrapolation to t=0 from samples at t = d, d+1 (cells);
            # quadratic extrapolation amplifies the stencil mismatch between
            # one-sided and centered first derivatives and tests worse
            w0 = np.where(ok1, 1.0 + d, 1.0)
            w1 = np.where(ok1, -d, 0.0)

            ops = []
            for a in range(self.dim):
                d1 = self.d1(a)
                row = sp.diags(w0) @ (bsel @ d1) + sp.diags(w1) @ (interp1 @ d1)
                ops.append(row.tocsr())
            self._op_cache[key] = ops
        return self._op_cache[key]

    def corrected_boundary_gradient(self) -> list[sp.csr_matrix]:
        """Per axis: sparse operators (n_boundary x n_nodes) evaluating the
        gradient *at the true boundary foot* of each boundary node, via the
        one-sided gradient at the node plus a Hessian offset correction:

            grad u(foot) ~= grad u(node) - delta * (Hess u(node)) eta

        where eta is the inward normal and delta the node-to-foot distance.
        """
        key = "corrected_boundary_gradient"
        if key not in self._op_cache:
            bsel = sp.csr_matrix(
                (
                    np.ones(self.n_boundary),
                    (np.arange(self.n_boundary), self.boundary_index),
                ),
                shape=(self.n_boundary, self.n_nodes),
            )
            delta = sp.diags(self.boundary_offsets)
            ops = []
            for a in range(self.dim):
                op = bsel @ self.d1(a)
                corr = None
                for c in range(self.dim):
                    eta_c = sp.diags(self.boundary_normals[:, c])
                    term = delta @ eta_c @ (bsel @ self.d2(a, c))
                    corr = term if corr is None else corr + term
                ops.append((op - corr).tocsr())
            self._op_cache[key] = ops
        return self._op_cache[key]


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass
class ScalarField:
    """Values on the non-exterior nodes of a grid, in compact order."""

    grid: DomainGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if len(self.values) != self.grid.n_nodes:
            raise GridMismatchError(
                f"field has {len(self.values)} values for a grid with "
                f"{self.grid.n_nodes} nodes"
            )

    @classmethod
    def from_function(cls, grid: DomainGrid, fn: Callable) -> "ScalarField":
        pts = grid.points
        if grid.dim == 1:
            vals = fn(pts[:, 0])
        else:
            vals = fn(pts[:, 0], pts[:, 1])
        return cls(grid, np.asarray(vals, dtype=float))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.interior_index]

    def boundary_values(self) -> np.ndarray:
        return self.values[self.grid.boundary_index]

    def lattice(self, fill=np.nan) -> np.ndarray:
        """Values scattered back onto the full lattice (exterior = fill)."""
        out = np.full(self.grid.mask.shape, fill, dtype=float)
        out[tuple(self.grid.node_index.T)] = self.values
        return out

    def sample(self, points):
        """Multilinear interpolation.  Returns (values, valid) where valid
        marks points whose surrounding cell is fully non-exterior."""
        g = self.grid
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = (pts - g.origin) / g.h
        base = np.floor(rel).astype(int)
        frac = rel - base

        shape = np.array(g.mask.shape)
        vals = np.zeros(len(pts))
        valid = np.ones(len(pts), dtype=bool)
        lat = self.lattice()
        for corner in np.ndindex(*(2,) * g.dim):
            node = base + np.array(corner)
            inb = np.all((node >= 0) & (node < shape), axis=1)
            valid &= inb
            cvals = np.full(len(pts), np.nan)
            cvals[inb] = lat[tuple(node[inb].T)]
            w = np.ones(len(pts))
            for a in range(g.dim):
                w = w * (frac[:, a] if corner[a] else 1.0 - frac[:, a])
            vals = vals + np.where(np.isnan(cvals), 0.0, cvals) * w
            valid &= ~np.isnan(cvals)
        return vals, valid


@dataclass(frozen=True)
class FieldDifferentials:
    """Centered derivatives at the interior nodes of a field's grid."""

    gradient: np.ndarray   # (n_interior, dim)
    slope_factor: np.ndarray  # (n_interior,)  W = sqrt(1 + |grad|^2)
    hessian: np.ndarray    # (n_interior, dim, dim)


def differentials(field: ScalarField) -> FieldDifferentials:
    """Gradient, area element W, and Hessian at every interior node."""
    g = field.grid
    u = field.values
    sel = g.interior_index
    grad = np.stack([(g.d1(a) @ u)[sel] for a in range(g.dim)], axis=1)
    hess = np.empty((len(sel), g.dim, g.dim))
    for a in range(g.dim):
        for b in range(a, g.dim):
            vals = (g.d2(a, b) @ u)[sel]
            hess[:, a, b] = vals
            hess[:, b, a] = vals
    W = np.sqrt(1.0 + np.einsum("ij,ij->i", grad, grad))
    return FieldDifferentials(gradient=grad, slope_factor=W, hessian=hess)


def differentials_at(field: ScalarField, lattice_idx) -> tuple[np.ndarray, float, np.ndarray]:
    """Centered derivatives at a single node; the node must be interior."""
    g = field.grid
    ci = g.compact_index(lattice_idx)
    if g.node_kind[ci] != INTERIOR:
        raise StencilUnavailableError(
            f"node {tuple(lattice_idx)} is not interior; centered stencils unavailable"
        )
    u = field.values
    grad = np.array([(g.d1(a) @ u)[ci] for a in range(g.dim)])
    hess = np.empty((g.dim, g.dim))
    for a in range(g.dim):
        for b in range(g.dim):
            hess[a, b] = (g.d2(a, b) @ u)[ci]
    W = float(np.sqrt(1.0 + grad @ grad))
    return grad, W, hess


def gradient_all(field: ScalarField) -> np.ndarray:
    """Gradient at every node: centered at interior, one-sided at boundary."""
    g = field.grid
    return np.stack([g.d1(a) @ field.values for a in range(g.dim)], axis=1)


def hessian_all(field: ScalarField) -> np.ndarray:
    g = field.grid
    out = np.empty((g.n_nodes, g.dim, g.dim))
    for a in range(g.dim):
        for b in range(a, g.dim):
            vals = g.d2(a, b) @ field.values
            out[:, a, b] = vals
            out[:, b, a] = vals
    return out


# ---------------------------------------------------------------------------
# plain-text export
# ---------------------------------------------------------------------------


def write_field_csv(field: ScalarField, path) -> None:
    """Columns x1..xn,u over the non-exterior nodes, in compact node order."""
    g = field.grid
    header = [f"x{a + 1}" for a in range(g.dim)] + ["u"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for p, v in zip(g.points, field.values):
            writer.writerow([repr(float(c)) for c in p] + [repr(float(v))])


def read_field_csv(grid: DomainGrid, path) -> ScalarField:
    """Inverse of write_field_csv for a matching grid."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    if data.shape[0] != grid.n_nodes or data.shape[1] != grid.dim + 1:
        raise GridMismatchError("CSV node count does not match the grid")
    if not np.allclose(data[:, : grid.dim], grid.points, atol=1e-12):
        raise GridMismatchError("CSV node coordinates do not match the grid")
    return ScalarField(grid, data[:, -1])
