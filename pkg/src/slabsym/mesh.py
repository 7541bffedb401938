"""Triangle meshes for surfaces spanning the slab, plus the geometric
queries the moving-plane machinery needs: point-to-triangle distance with a
spatial index, ray-parity inside/outside tests against closed surfaces, and
local Monge-patch fits.

Meshes are oriented (consistent winding; for closed or plate-capped bodies
the convention is normals pointing out of the enclosed body).  Boundary
loops are ordered vertex cycles, optionally tagged with the plate (1 or 2)
they lie on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import MeshInvariantError, RankDeficiencyError, TopologyChangeError
from .geometry import Slab

# ---------------------------------------------------------------------------
# core type
# ---------------------------------------------------------------------------


@dataclass
class BoundaryLoop:
    """Ordered cycle of vertex indices; ``plate`` tags which plate carries it
    (None for a free loop)."""

    vertices: np.ndarray
    plate: Optional[int] = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=int).reshape(-1)
        if len(self.vertices) < 3:
            raise MeshInvariantError("boundary loop needs at least 3 vertices")
        if self.plate is not None and self.plate not in (1, 2):
            raise MeshInvariantError("loop plate tag must be 1, 2 or None")


class SurfaceMesh:
    """Oriented triangle mesh with tagged boundary loops."""

    def __init__(self, vertices, faces, boundary_loops: Sequence[BoundaryLoop] | None = None,
                 detect_loops: bool = False):
        self.vertices = np.asarray(vertices, dtype=float)
        self.faces = np.asarray(faces, dtype=int)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshInvariantError("vertices must be (V, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshInvariantError("faces must be (F, 3)")
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise MeshInvariantError("face references a missing vertex")
        if boundary_loops is None:
            boundary_loops = self.detect_boundary_loops() if detect_loops else []
        self.boundary_loops = list(boundary_loops)
        self._cache: dict = {}

    # -- derived quantities ---------------------------------------------------

    def face_points(self):
        return (
            self.vertices[self.faces[:, 0]],
            self.vertices[self.faces[:, 1]],
            self.vertices[self.faces[:, 2]],
        )

    def face_normals(self, normalized: bool = True) -> np.ndarray:
        a, b, c = self.face_points()
        n = np.cross(b - a, c - a)
        if normalized:
            nrm = np.linalg.norm(n, axis=1)
            nrm = np.where(nrm > 0, nrm, 1.0)
            n = n / nrm[:, None]
        return n

    def face_areas(self) -> np.ndarray:
        a, b, c = self.face_points()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def face_centroids(self) -> np.ndarray:
        a, b, c = self.face_points()
        return (a + b + c) / 3.0

    def vertex_normals(self) -> np.ndarray:
        """Area-weighted average of incident face normals."""
        if "vertex_normals" not in self._cache:
            fn = self.face_normals(normalized=False)  # area-weighted already
            vn = np.zeros_like(self.vertices)
            for k in range(3):
                np.add.at(vn, self.faces[:, k], fn)
            nrm = np.linalg.norm(vn, axis=1)
            nrm = np.where(nrm > 0, nrm, 1.0)
            self._cache["vertex_normals"] = vn / nrm[:, None]
        return self._cache["vertex_normals"]

    def edge_lengths(self) -> np.ndarray:
        a, b, c = self.face_points()
        return np.concatenate([
            np.linalg.norm(b - a, axis=1),
            np.linalg.norm(c - b, axis=1),
            np.linalg.norm(a - c, axis=1),
        ])

    def mesh_h(self) -> float:
        """Characteristic resolution: median edge length."""
        return float(np.median(self.edge_lengths()))

    def diameter(self) -> float:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def transformed(self, rotation=None, translation=None) -> "SurfaceMesh":
        v = self.vertices
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=float).T
        if translation is not None:
            v = v + np.asarray(translation, dtype=float)
        return SurfaceMesh(v, self.faces.copy(),
                           [BoundaryLoop(l.vertices.copy(), l.plate) for l in self.boundary_loops])

    # -- topology -------------------------------------------------------------

    def directed_edges(self) -> np.ndarray:
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])

    def detect_boundary_loops(self) -> list[BoundaryLoop]:
        """Walk boundary edges (edges used by exactly one face) into cycles.
        Requires consistent orientation."""
        de = self.directed_edges()
        edge_set = {(int(a), int(b)) for a, b in de}
        boundary = [(a, b) for (a, b) in edge_set if (b, a) not in edge_set]
        succ = {}
        for a, b in boundary:
            if a in succ:
                raise MeshInvariantError(f"vertex {a} has two outgoing boundary edges")
            succ[a] = b
        loops = []
        remaining = dict(succ)
        while remaining:
            start = min(remaining)
            cycle = [start]
            node = remaining.pop(start)
            while node != start:
                cycle.append(node)
                node = remaining.pop(node)
            loops.append(BoundaryLoop(np.array(cycle)))
        loops.sort(key=lambda l: int(l.vertices.min()))
        return loops

    def validate(self, slab: Slab | None = None, plate_tol: float | None = None) -> None:
        """Raise MeshInvariantError on any structural violation.

        With a slab, also checks that tagged loops lie on their plates
        (within plate_tol, default 1e-9 x diameter).
        """
        f = self.faces
        if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])):
            raise MeshInvariantError("degenerate face (repeated vertex)")
        de = self.directed_edges()
        keys = de[:, 0].astype(np.int64) * len(self.vertices) + de[:, 1]
        uniq, counts = np.unique(keys, return_counts=True)
        if np.any(counts > 1):
            raise MeshInvariantError(
                "directed edge repeated: non-manifold or inconsistently oriented faces"
            )
        rev = de[:, 1].astype(np.int64) * len(self.vertices) + de[:, 0]
        has_partner = np.isin(keys, rev)

        detected = self.detect_boundary_loops()
        detected_sets = [frozenset(map(int, l.vertices)) for l in detected]
        declared_sets = [frozenset(map(int, l.vertices)) for l in self.boundary_loops]
        if sorted(declared_sets, key=sorted) != sorted(detected_sets, key=sorted):
            raise MeshInvariantError(
                f"declared boundary loops ({len(declared_sets)}) do not match the mesh "
                f"boundary ({len(detected_sets)} loops)"
            )
        if not len(detected) and not np.all(has_partner):
            raise MeshInvariantError("open edges without a boundary loop")

        if slab is not None:
            tol = plate_tol if plate_tol is not None else 1e-9 * max(self.diameter(), 1.0)
            for loop in self.boundary_loops:
                if loop.plate is None:
                    continue
                plane = slab.plate(loop.plate)
                d = plane.signed_distance(self.vertices[loop.vertices])
                worst = float(np.max(np.abs(d)))
                if worst > tol:
                    raise MeshInvariantError(
                        f"loop tagged plate {loop.plate} strays {worst:.3e} from the plate "
                        f"(tolerance {tol:.3e})"
                    )

    def is_closed(self) -> bool:
        return len(self.detect_boundary_loops()) == 0


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def mesh_from_graph(field, stride: int = 1, plate: Optional[int] = 1,
                    snap_height: Optional[float] = "auto") -> SurfaceMesh:
    """Triangulated height graph over a masked grid.

    ``stride`` subsamples the lattice (exact node values, no interpolation)
    so sweep meshes can be cheaper than the solve grid.  With
    ``snap_height="auto"`` the boundary-loop vertices are snapped to the mean
    boundary height, so the loop lies exactly in a plane and can be tagged as
    a plate; pass None to keep raw heights (loop left untagged unless planar).
    """
    from .grid import EXTERIOR  # local import to avoid cycle at module load

    grid = field.grid
    if grid.dim != 2:
        raise MeshInvariantError("graph meshes need a 2D base grid")
    if stride < 1:
        raise ValueError("stride must be >= 1")

    lat = field.lattice()
    nx, ny = grid.mask.shape
    ii = np.arange(0, nx, stride)
    jj = np.arange(0, ny, stride)
    keep = grid.mask[np.ix_(ii, jj)] != EXTERIOR
    vid = np.full((len(ii), len(jj)), -1, dtype=int)
    vid[keep] = np.arange(int(keep.sum()))

    X = grid.origin[0] + ii[:, None] * grid.h + 0.0 * jj[None, :]
    Y = grid.origin[1] + 0.0 * ii[:, None] + jj[None, :] * grid.h
    Z = lat[np.ix_(ii, jj)]
    verts = np.stack([X[keep], Y[keep], Z[keep]], axis=1)

    quad_ok = keep[:-1, :-1] & keep[1:, :-1] & keep[:-1, 1:] & keep[1:, 1:]
    qa = vid[:-1, :-1][quad_ok]
    qb = vid[1:, :-1][quad_ok]
    qc = vid[1:, 1:][quad_ok]
    qd = vid[:-1, 1:][quad_ok]
    # counterclockwise seen from above; upward graph normal
    faces = np.concatenate([
        np.stack([qa, qb, qc], axis=1),
        np.stack([qa, qc, qd], axis=1),
    ])

    mesh = SurfaceMesh(verts, faces, detect_loops=True)
    if snap_height is not None and mesh.boundary_loops:
        for loop in mesh.boundary_loops:
            z = mesh.vertices[loop.vertices, 2]
            target = float(np.mean(z)) if snap_height == "auto" else float(snap_height)
            mesh.vertices[loop.vertices, 2] = target
            loop.plate = plate
        mesh._cache.clear()
    return mesh


def revolve_profile(x_samples, z_samples, n_theta: int = 64, axis_xy=(0.0, 0.0),
                    plates: tuple[Optional[int], Optional[int]] = (1, 2)) -> SurfaceMesh:
    """Surface of revolution about the vertical line through ``axis_xy``.

    The meridian runs from the first sample (tagged plates[0]) to the last
    (plates[1]); radii must stay positive — a profile touching the axis would
    change topology and is rejected.
    """
    x = np.asarray(x_samples, dtype=float).reshape(-1)
    z = np.asarray(z_samples, dtype=float).reshape(-1)
    if x.shape != z.shape or len(x) < 2:
        raise ValueError("need matching sample arrays with >= 2 points")
    if np.any(x <= 0):
        raise TopologyChangeError("meridian touches the rotation axis")
    if n_theta < 8:
        raise ValueError("need at least 8 angular samples")

    cx, cy = float(axis_xy[0]), float(axis_xy[1])
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    cos, sin = np.cos(th), np.sin(th)
    K = len(x)
    verts = np.empty((K * n_theta, 3))
    for k in range(K):
        verts[k * n_theta:(k + 1) * n_theta, 0] = cx + x[k] * cos
        verts[k * n_theta:(k + 1) * n_theta, 1] = cy + x[k] * sin
        verts[k * n_theta:(k + 1) * n_theta, 2] = z[k]

    faces = []
    for k in range(K - 1):
        a = k * n_theta + np.arange(n_theta)
        b = k * n_theta + (np.arange(n_theta) + 1) % n_theta
        c = b + n_theta
        d = a + n_theta
        faces.append(np.stack([a, b, c], axis=1))
        faces.append(np.stack([a, c, d], axis=1))
    faces = np.concatenate(faces)

    loops = [
        BoundaryLoop(np.arange(n_theta), plates[0]),
        BoundaryLoop((K - 1) * n_theta + np.arange(n_theta)[::-1], plates[1]),
    ]
    return SurfaceMesh(verts, faces, loops)


def sphere_mesh(center, radius: float, n_theta: int = 48, n_phi: int = 24) -> SurfaceMesh:
    """Closed latitude/longitude sphere with outward orientation."""
    center = np.asarray(center, dtype=float)
    phis = np.pi * (np.arange(1, n_phi) / n_phi)
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    rings = []
    for phi in phis:
        ring = np.stack([
            radius * np.sin(phi) * np.cos(th),
            radius * np.sin(phi) * np.sin(th),
            np.full(n_theta, radius * np.cos(phi)),
        ], axis=1)
        rings.append(ring)
    verts = np.concatenate(rings + [np.array([[0, 0, radius], [0, 0, -radius]])]) + center
    top = len(verts) - 2
    bot = len(verts) - 1

    faces = []
    for k in range(len(phis) - 1):
        a = k * n_theta + np.arange(n_theta)
        b = k * n_theta + (np.arange(n_theta) + 1) % n_theta
        c = b + n_theta
        d = a + n_theta
        faces.append(np.stack([a, c, b], axis=1))
        faces.append(np.stack([a, d, c], axis=1))
    j = np.arange(n_theta)
    jp = (j + 1) % n_theta
    faces.append(np.stack([np.full(n_theta, top), j, jp], axis=1))
    last = (len(phis) - 1) * n_theta
    faces.append(np.stack([np.full(n_theta, bot), last + jp, last + j], axis=1))
    return SurfaceMesh(verts, np.concatenate(faces), [])


def ellipsoid_mesh(center, semi_axes, n_theta: int = 48, n_phi: int = 24) -> SurfaceMesh:
    m = sphere_mesh((0.0, 0.0, 0.0), 1.0, n_theta, n_phi)
    v = m.vertices * np.asarray(semi_axes, dtype=float)
    return SurfaceMesh(v + np.asarray(center, dtype=float), m.faces, [])


def close_boundary_loops(mesh: SurfaceMesh) -> SurfaceMesh:
    """Cap every boundary loop with a triangle fan about its centroid,
    producing the closed surface used for inside/outside parity queries.

    Fans follow the *detected* loop cycles (directed boundary edges), which
    keeps the capped mesh consistently oriented regardless of the order the
    declared loops happen to store their vertices in.
    """
    verts = [mesh.vertices]
    faces = [mesh.faces]
    nv = len(mesh.vertices)
    for loop in mesh.detect_boundary_loops():
        cyc = loop.vertices
        centroid = mesh.vertices[cyc].mean(axis=0)
        verts.append(centroid[None, :])
        cid = nv
        nv += 1
        a = cyc
        b = np.roll(cyc, -1)
        # (a, b) are boundary directed edges; the fan contributes (b, a)
        faces.append(np.stack([np.full(len(cyc), cid), b, a], axis=1))
    return SurfaceMesh(np.concatenate(verts), np.concatenate(faces), [])


def bump_mesh(mesh: SurfaceMesh, center, amplitude: float, width: float) -> SurfaceMesh:
    """Displace vertices along their normals by a Gaussian bump centered at
    the given point.  Boundary-loop vertices are pinned so plate contact is
    preserved."""
    center = np.asarray(center, dtype=float)
    d2 = np.einsum("ij,ij->i", mesh.vertices - center, mesh.vertices - center)
    w = amplitude * np.exp(-d2 / (2.0 * width * width))
    pinned = np.zeros(len(mesh.vertices), dtype=bool)
    for loop in mesh.boundary_loops:
        pinned[loop.vertices] = True
    w[pinned] = 0.0
    v = mesh.vertices + w[:, None] * mesh.vertex_normals()
    return SurfaceMesh(v, mesh.faces.copy(),
                       [BoundaryLoop(l.vertices.copy(), l.plate) for l in mesh.boundary_loops])


# ---------------------------------------------------------------------------
# OBJ + sidecar I/O
# ---------------------------------------------------------------------------


def save_obj(mesh: SurfaceMesh, path, sidecar_path=None) -> None:
    path = Path(path)
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
    sidecar = Path(sidecar_path) if sidecar_path else path.with_suffix(".loops.json")
    payload = {
        "boundary_loops": [
            {"plate": loop.plate, "vertices": [int(i) for i in loop.vertices]}
            for loop in mesh.boundary_loops
        ]
    }
    with open(sidecar, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_obj(path, sidecar_path=None) -> SurfaceMesh:
    path = Path(path)
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
                if len(idx) != 3:
                    raise MeshInvariantError("only triangle faces are supported")
                faces.append(idx)
    sidecar = Path(sidecar_path) if sidecar_path else path.with_suffix(".loops.json")
    loops = None
    if sidecar.exists():
        with open(sidecar) as fh:
            payload = json.load(fh)
        loops = [
            BoundaryLoop(np.array(entry["vertices"]), entry.get("plate"))
            for entry in payload.get("boundary_loops", [])
        ]
    mesh = SurfaceMesh(np.array(verts), np.array(faces, dtype=int),
                       boundary_loops=loops, detect_loops=loops is None)
    return mesh


# ---------------------------------------------------------------------------
# distance queries
# ---------------------------------------------------------------------------


def point_triangle_distance(points, a, b, c):
    """Closest points on triangles (a, b, c) to query points, vectorized over
    paired rows.  Returns (distance, foot)."""
    p = np.atleast_2d(points)
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    c = np.atleast_2d(c)

    ab = b - a
    ac = c - a
    n = np.cross(ab, ac)
    nn = np.einsum("ij,ij->i", n, n)
    nn_safe = np.where(nn > 0, nn, 1.0)

    ap = p - a
    # barycentric coordinates of the plane projection
    d1 = np.einsum("ij,ij->i", ab, ab)
    d2 = np.einsum("ij,ij->i", ab, ac)
    d3 = np.einsum("ij,ij->i", ac, ac)
    e1 = np.einsum("ij,ij->i", ap, ab)
    e2 = np.einsum("ij,ij->i", ap, ac)
    det = d1 * d3 - d2 * d2
    det_safe = np.where(np.abs(det) > 0, det, 1.0)
    v = (d3 * e1 - d2 * e2) / det_safe
    w = (d1 * e2 - d2 * e1) / det_safe
    inside = (v >= 0) & (w >= 0) & (v + w <= 1) & (np.abs(det) > 1e-300)
    foot_plane = a + v[:, None] * ab + w[:, None] * ac

    def seg_foot(p0, q0, q1):
        d = q1 - q0
        dd = np.einsum("ij,ij->i", d, d)
        t = np.einsum("ij,ij->i", p0 - q0, d) / np.where(dd > 0, dd, 1.0)
        t = np.clip(t, 0.0, 1.0)
        return q0 + t[:, None] * d

    f1 = seg_foot(p, a, b)
    f2 = seg_foot(p, b, c)
    f3 = seg_foot(p, a, c)

    feet = np.stack([foot_plane, f1, f2, f3], axis=1)  # (N, 4, 3)
    dists = np.linalg.norm(feet - p[:, None, :], axis=2)
    dists[:, 0] = np.where(inside, dists[:, 0], np.inf)
    pick = np.argmin(dists, axis=1)
    rows = np.arange(len(p))
    return dists[rows, pick], feet[rows, pick]


class MeshDistanceIndex:
    """KD-tree over face centroids for approximate-nearest-face queries,
    refined by exact point-to-triangle distance over the candidate set."""

    def __init__(self, mesh: SurfaceMesh, faces_subset=None):
        self.mesh = mesh
        self.face_ids = (
            np.arange(len(mesh.faces)) if faces_subset is None
            else np.asarray(faces_subset, dtype=int)
        )
        if len(self.face_ids) == 0:
            raise ValueError("distance index needs at least one face")
        tri = mesh.faces[self.face_ids]
        self.a = mesh.vertices[tri[:, 0]]
        self.b = mesh.vertices[tri[:, 1]]
        self.c = mesh.vertices[tri[:, 2]]
        self.tree = cKDTree((self.a + self.b + self.c) / 3.0)

    def query(self, points, k: int = 24):
        """(distance, foot, face id) of the nearest indexed face per point."""
        p = np.atleast_2d(points)
        k = min(k, len(self.face_ids))
        _, cand = self.tree.query(p, k=k)
        cand = np.atleast_2d(cand)
        if cand.shape[0] != len(p):
            cand = cand.reshape(len(p), -1)
        flat = cand.reshape(-1)
        rep = np.repeat(p, cand.shape[1], axis=0)
        d, foot = point_triangle_distance(rep, self.a[flat], self.b[flat], self.c[flat])
        d = d.reshape(len(p), -1)
        foot = foot.reshape(len(p), -1, 3)
        best = np.argmin(d, axis=1)
        rows = np.arange(len(p))
        return (
            d[rows, best],
            foot[rows, best],
            self.face_ids[cand[rows, best]],
        )


_PARITY_DIRECTIONS = np.array([
    [0.2317392, 0.1123981, 0.9661217],
    [0.8191723, 0.3721391, 0.4362194],
    [-0.4123718, 0.8791231, 0.2371841],
    [0.5812313, -0.7412311, 0.3351272],
    [-0.2931272, -0.3817232, -0.8763125],
])
_PARITY_DIRECTIONS /= np.linalg.norm(_PARITY_DIRECTIONS, axis=1)[:, None]


class _RayCastLayer:
    """Candidate pruning for one fixed parity direction: faces are indexed
    by the 2D axis-aligned boxes of their projections orthogonal to the ray.
    Typical (small) faces live in a KD-tree over box centers and are fetched
    by ball lookup; the few oversized faces (boundary-loop closing fans) are
    tested against every point."""

    def __init__(self, mesh: SurfaceMesh, direction: np.ndarray,
                 small_factor: float = 4.0):
        a, b, c = mesh.face_points()
        self.a = a
        self.e1 = b - a
        self.e2 = c - a
        d = np.asarray(direction, dtype=float)
        seed = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 \
            else np.array([0.0, 1.0, 0.0])
        u1 = np.cross(d, seed)
        u1 /= np.linalg.norm(u1)
        u2 = np.cross(d, u1)
        self.frame = np.stack([u1, u2], axis=1)          # (3, 2)
        pa, pb, pc = a @ self.frame, b @ self.frame, c @ self.frame
        lo = np.minimum(np.minimum(pa, pb), pc)
        hi = np.maximum(np.maximum(pa, pb), pc)
        radii = 0.5 * np.linalg.norm(hi - lo, axis=1)    # box half-diagonals
        cut = small_factor * float(np.median(radii))
        self.small = np.where(radii <= cut)[0]
        self.large = np.where(radii > cut)[0]
        self.ball = float(radii[self.small].max()) + 1e-12 if len(self.small) \
            else 0.0
        self.tree = cKDTree(0.5 * (lo + hi)[self.small]) if len(self.small) \
            else None

    def pairs(self, points: np.ndarray):
        """(point index, face index) pairs that need an exact ray test."""
        pid_parts, fid_parts = [], []
        if self.tree is not None:
            pts2 = points @ self.frame
            lists = self.tree.query_ball_point(pts2, self.ball)
            lens = np.array([len(l) for l in lists])
            if lens.sum():
                pid_parts.append(np.repeat(np.arange(len(points)), lens))
                fid_parts.append(self.small[np.concatenate(
                    [np.asarray(l, dtype=int) for l in lists if l])])
        if len(self.large):
            pid_parts.append(np.repeat(np.arange(len(points)), len(self.large)))
            fid_parts.append(np.tile(self.large, len(points)))
        if not pid_parts:
            return (np.empty(0, dtype=int),) * 2
        return np.concatenate(pid_parts), np.concatenate(fid_parts)


def _parity_layer(mesh: SurfaceMesh, dir_index: int) -> _RayCastLayer:
    key = ("parity_layer", dir_index)
    if key not in mesh._cache:
        mesh._cache[key] = _RayCastLayer(mesh, _PARITY_DIRECTIONS[dir_index])
    return mesh._cache[key]


def ray_parity_inside(points, mesh: SurfaceMesh, chunk: int = 4096) -> np.ndarray:
    """Inside/outside classification of points against a *closed* mesh by
    counting ray crossings.  Rays use fixed skew directions; points whose ray
    grazes an edge or vertex are retried along the next direction."""
    p = np.atleast_2d(np.asarray(points, dtype=float))

    inside = np.zeros(len(p), dtype=bool)
    undecided = np.arange(len(p))
    for di in range(len(_PARITY_DIRECTIONS)):
        if len(undecided) == 0:
            break
        ok, hit_counts = _parity_pass(p[undecided], di, mesh, chunk)
        decided = undecided[ok]
        inside[decided] = (hit_counts[ok] % 2) == 1
        undecided = undecided[~ok]
    if len(undecided):
        # give the stragglers the benefit of the last pass
        ok, hit_counts = _parity_pass(p[undecided], len(_PARITY_DIRECTIONS) - 1,
                                      mesh, chunk)
        inside[undecided] = (hit_counts % 2) == 1
    return inside


def _parity_pass(points, dir_index, mesh, chunk):
    eps_par = 1e-12
    eps_bary = 1e-9
    d = _PARITY_DIRECTIONS[dir_index]
    layer = _parity_layer(mesh, dir_index)
    n_pts = len(points)
    counts = np.zeros(n_pts, dtype=int)
    clean = np.ones(n_pts, dtype=bool)

    for lo in range(0, n_pts, chunk):
        pts = points[lo:lo + chunk]
        pid, fid = layer.pairs(pts)
        if not len(pid):
            continue
        A, E1, E2 = layer.a[fid], layer.e1[fid], layer.e2[fid]
        pvec = np.cross(np.broadcast_to(d, E2.shape), E2)
        det = np.einsum("ij,ij->i", E1, pvec)
        parallel = np.abs(det) < eps_par
        det_safe = np.where(parallel, 1.0, det)
        tvec = pts[pid] - A
        u = np.einsum("ij,ij->i", tvec, pvec) / det_safe
        qvec = np.cross(tvec, E1)
        v = (qvec @ d) / det_safe
        t = np.einsum("ij,ij->i", qvec, E2) / det_safe
        hit = (
            (~parallel)
            & (u >= -eps_bary) & (v >= -eps_bary) & (u + v <= 1 + eps_bary)
            & (t > eps_bary)
        )
        grazing = (
            hit
            & (
                (np.abs(u) < eps_bary)
                | (np.abs(v) < eps_bary)
                | (np.abs(1 - u - v) < eps_bary)
            )
        )
        counts[lo:lo + chunk] = np.bincount(pid[hit], minlength=len(pts))
        clean[lo:lo + chunk] = np.bincount(pid[grazing], minlength=len(pts)) == 0
    return clean, counts


# ---------------------------------------------------------------------------
# Monge patches
# ---------------------------------------------------------------------------


@dataclass
class MongePatch:
    """Least-squares quadratic height fit over the estimated tangent plane at
    a mesh vertex."""

    vertex: int
    origin: np.ndarray
    normal: np.ndarray
    tangent_frame: np.ndarray      # (2, 3)
    coefficients: np.ndarray       # (a, b, c, d, e, f) of a x^2+b xy+c y^2+d x+e y+f
    rms_residual: float
    n_samples: int
    mean_curvature: float
    principal_curvatures: tuple[float, float]


def monge_patch(mesh: SurfaceMesh, vertex: int, radius: float) -> MongePatch:
    """Fit a quadratic Monge patch to the vertices within ``radius`` of the
    given vertex.  The curvature tensor of the fit provides the second
    fundamental form with respect to the estimated vertex normal (so its sign
    follows the mesh orientation)."""
    v0 = mesh.vertices[vertex]
    tree = cKDTree(mesh.vertices)
    nbrs = tree.query_ball_point(v0, radius)
    nbrs = np.array(sorted(set(nbrs)), dtype=int)
    if len(nbrs) < 6:
        raise RankDeficiencyError(
            f"Monge fit needs >= 6 samples, found {len(nbrs)} within radius {radius}"
        )

    normal = mesh.vertex_normals()[vertex]
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(normal)))] = 1.0
    t1 = seed - (seed @ normal) * normal
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(normal, t1)

    rel = mesh.vertices[nbrs] - v0
    xi = rel @ t1
    eta = rel @ t2
    zeta = rel @ normal
    design = np.stack([xi * xi, xi * eta, eta * eta, xi, eta, np.ones_like(xi)], axis=1)
    coeffs, _, rank, _ = np.linalg.lstsq(design, zeta, rcond=None)
    if rank < 6:
        raise RankDeficiencyError("Monge fit design matrix is rank deficient")
    resid = design @ coeffs - zeta
    rms = float(np.sqrt(np.mean(resid**2)))

    a_, b_, c_, d_, e_, _ = coeffs
    grad = np.array([d_, e_])
    hess = np.array([[2 * a_, b_], [b_, 2 * c_]])
    W = np.sqrt(1.0 + grad @ grad)
    first = np.eye(2) + np.outer(grad, grad)
    second = hess / W
    # symmetric similarity transform of the shape operator
    evals, evecs = np.linalg.eigh(first)
    inv_sqrt = evecs @ np.diag(1.0 / np.sqrt(evals)) @ evecs.T
    shape_sym = inv_sqrt @ second @ inv_sqrt
    kappa = np.linalg.eigvalsh(shape_sym)
    return MongePatch(
        vertex=vertex,
        origin=v0.copy(),
        normal=normal.copy(),
        tangent_frame=np.stack([t1, t2]),
        coefficients=coeffs,
        rms_residual=rms,
        n_samples=len(nbrs),
        mean_curvature=float(kappa.mean()),
        principal_curvatures=(float(kappa[0]), float(kappa[1])),
    )
