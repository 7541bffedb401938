"""Reflection sweeps: move a plane through a surface, reflect the swept cap,
find the first touching configuration, and certify rotational symmetry.

The sweep works on triangulated surfaces between the plates.  A direction
parallel to the plates is fixed; the plane starts tangent to the surface on
the far side and moves inward by a depth ``t``.  The cap cut off by the plane
is reflected across it, and two quantities are tracked:

* the *signed clearance* — the distance from each reflected cap vertex to the
  lateral surface, positive inside the enclosed body and negative outside
  (inside/outside decided by ray parity against the closed surface obtained
  by capping the boundary loops with plate disks);
* the *deviation* — the unsigned distance from reflected cap vertices to the
  remaining (un-reflected) part of the surface, an asymmetry metric that
  vanishes only for exactly mirror-symmetric meshes.

The first depth at which the clearance drops to the contact tolerance is the
critical position.  Touches are classified as interior, boundary (on a
plate), or degenerate-simultaneous (the whole cap lands at once — the
signature of an exactly symmetric surface, in which case the plane position
is polished by minimizing the deviation).  Planes from several directions
are intersected into a symmetry axis orthogonal to the plates.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import shapely

from .errors import EmptyCapError, OrientationError
from .geometry import Line, Plane, Slab, plate_frame
from .mesh import MeshDistanceIndex, SurfaceMesh, close_boundary_loops, ray_parity_inside

TOUCH_CLASSES = ("interior", "boundary", "degenerate_simultaneous")


# ---------------------------------------------------------------------------
# result types
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    """Outcome of one reflection sweep.

    ``t_star`` is the depth of the critical plane measured from the tangent
    plane on the far side; ``profile`` holds (t, clearance, deviation) rows
    sampled during the march."""

    direction: np.ndarray
    t_star: float
    touch_class: str
    touch_points: np.ndarray
    symmetry_plane: Plane
    deviation: float
    extent: float
    profile: np.ndarray = dc_field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        self.direction = np.asarray(self.direction, dtype=float)
        self.touch_points = np.atleast_2d(np.asarray(self.touch_points, dtype=float))
        self.profile = np.asarray(self.profile, dtype=float).reshape(-1, 3)
        if self.touch_class not in TOUCH_CLASSES:
            raise ValueError(f"touch_class must be one of {TOUCH_CLASSES}")
        if not self.deviation >= 0.0:
            raise ValueError("deviation must be nonnegative")
        if not -1e-9 <= self.t_star <= self.extent + 1e-9:
            raise ValueError(
                f"critical depth {self.t_star} outside the surface extent "
                f"[0, {self.extent}]"
            )
        if abs(abs(float(self.symmetry_plane.normal @ self.direction)) - 1.0) > 1e-9:
            raise ValueError("symmetry plane normal must be parallel to the direction")

    def to_payload(self) -> dict:
        return {
            "direction": self.direction.tolist(),
            "t_star": self.t_star,
            "touch_class": self.touch_class,
            "touch_points": self.touch_points.tolist(),
            "symmetry_plane": {
                "point": self.symmetry_plane.point.tolist(),
                "normal": self.symmetry_plane.normal.tolist(),
            },
            "deviation": self.deviation,
            "extent": self.extent,
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_payload(), **kwargs)

    def save_profile_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "clearance", "deviation"])
            for row in self.profile:
                writer.writerow([repr(float(v)) for v in row])


@dataclass
class SymmetryReport:
    """Aggregation of sweeps into a verdict and (when possible) an axis."""

    sweeps: list
    axis: Optional[Line]
    axis_residual: float
    max_deviation: float
    verdict: str                      # symmetric | asymmetric | undetermined
    tolerance: float
    witness_direction: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.verdict not in ("symmetric", "asymmetric", "undetermined"):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.witness_direction is not None:
            self.witness_direction = np.asarray(self.witness_direction, dtype=float)
        if self.axis is not None:
            worst = max(
                _plane_line_distance(s.symmetry_plane, self.axis)
                for s in self.sweeps if s.deviation <= self.tolerance
            )
            if worst > max(10.0 * self.axis_residual, 1e-9) + self.axis_residual:
                raise ValueError(
                    "axis does not lie in the reported symmetry planes "
                    f"(distance {worst:.3e}, residual {self.axis_residual:.3e})"
                )

    def to_payload(self) -> dict:
        return {
            "sweeps": [s.to_payload() for s in self.sweeps],
            "axis": None if self.axis is None else {
                "point": self.axis.point.tolist(),
                "direction": self.axis.direction.tolist(),
            },
            "axis_residual": self.axis_residual,
            "max_deviation": self.max_deviation,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "witness_direction": None if self.witness_direction is None
            else self.witness_direction.tolist(),
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_payload(), **kwargs)


def _plane_line_distance(plane: Plane, line: Line) -> float:
    """Max distance from a (plate-orthogonal) line to a plane whose normal is
    parallel to the plates: the line is parallel to the plane, so this is the
    distance of any one line point."""
    return abs(float(plane.normal @ line.point) - plane.offset)


# ---------------------------------------------------------------------------
# reflection deviation
# ---------------------------------------------------------------------------


def _cap_and_remaining(mesh: SurfaceMesh, plane: Plane):
    """Cap vertices on the normal side and the faces they are compared
    against: every face not entirely inside the open cap half-space.  Faces
    straddling the plane must stay in — excluding them leaves reflected
    near-plane vertices without nearby comparison surface, which turns the
    deviation-vs-depth landscape into mesh_h-scale noise near the mirror
    plane."""
    proj = mesh.vertices @ plane.normal
    cap = np.where(proj > plane.offset)[0]
    face_min = proj[mesh.faces].min(axis=1)
    remaining = np.where(face_min <= plane.offset)[0]
    return cap, remaining


def reflect_and_compare(mesh: SurfaceMesh, plane: Plane,
                        slab: Optional[Slab] = None) -> float:
    """Asymmetry of the mesh about the plane: reflect the cap on the normal
    side and take the max distance from reflected vertices to the remaining
    surface (feet restricted to faces of the remaining side).

    Zero exactly iff the mesh is exactly mirror symmetric about the plane.
    Raises EmptyCapError when the plane cuts off nothing (or everything)."""
    if slab is not None:
        slab.check_sweep_plane(plane)
    cap, remaining = _cap_and_remaining(mesh, plane)
    if len(cap) == 0:
        raise EmptyCapError("the plane cuts off no cap on its normal side")
    if len(remaining) == 0:
        raise EmptyCapError("no remaining surface on the far side of the plane")
    reflected = plane.reflect(mesh.vertices[cap])
    index = MeshDistanceIndex(mesh, faces_subset=remaining)
    dist, _, _ = index.query(reflected)
    return float(np.max(dist))


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


class _SweepWorkspace:
    """Cached per-mesh state shared by every plane position of a sweep."""

    def __init__(self, mesh: SurfaceMesh):
        self.mesh = mesh
        self.closed = mesh if mesh.is_closed() else close_boundary_loops(mesh)
        self.lateral_index = MeshDistanceIndex(mesh)
        self.boundary_vertices = set()
        loops = mesh.boundary_loops or mesh.detect_boundary_loops()
        for loop in loops:
            self.boundary_vertices.update(int(v) for v in loop.vertices)
        self.is_boundary = np.zeros(len(mesh.vertices), dtype=bool)
        if self.boundary_vertices:
            self.is_boundary[sorted(self.boundary_vertices)] = True
        self.vertex_normals = mesh.vertex_normals()
        # plate disks spanned by the boundary loops: ray parity is ill-posed
        # for points lying in the disk planes (reflected loop vertices slide
        # inside them), so membership there is decided exactly in 2D
        self.plane_tol = 1e-9 * mesh.diameter()
        self.disks = []
        for loop in loops:
            pts = mesh.vertices[loop.vertices]
            center = pts.mean(axis=0)
            _, _, vt = np.linalg.svd(pts - center, full_matrices=False)
            poly = shapely.Polygon(
                np.stack([(pts - center) @ vt[0], (pts - center) @ vt[1]], axis=1)
            )
            self.disks.append((center, vt[2], vt[0], vt[1], poly))

    def signed_clearance(self, plane: Plane, cap: np.ndarray):
        """Per-vertex signed distance of the reflected cap to the lateral
        surface (positive inside the body), plus foot data for the normal
        agreement test."""
        reflected = plane.reflect(self.mesh.vertices[cap])
        dist, foot, fid = self.lateral_index.query(reflected)
        inside = np.zeros(len(reflected), dtype=bool)
        decided = np.zeros(len(reflected), dtype=bool)
        for center, normal, b1, b2, poly in self.disks:
            on = np.abs((reflected - center) @ normal) <= self.plane_tol
            if not np.any(on):
                continue
            rel = reflected[on] - center
            inside[np.where(on)[0]] = shapely.contains_xy(poly, rel @ b1, rel @ b2)
            decided |= on
        undecided = ~decided
        if np.any(undecided):
            inside[undecided] = ray_parity_inside(reflected[undecided], self.closed)
        sign = np.where(inside, 1.0, -1.0)
        return sign * dist, reflected, foot, fid

    def normal_agreement(self, plane: Plane, cap_subset: np.ndarray,
                         fid: np.ndarray) -> np.ndarray:
        """Dot product between the reflected vertex normals and the face
        normals at the feet; genuine touching needs the normals to point the
        same way (> 0.9), which excludes antipodal contact."""
        refl_normals = plane.reflect_vectors(self.vertex_normals[cap_subset])
        face_normals = self.mesh.face_normals()[fid]
        return np.einsum("ij,ij->i", refl_normals, face_normals)


def _deviation_at(workspace: _SweepWorkspace, plane: Plane) -> float:
    try:
        return reflect_and_compare(workspace.mesh, plane)
    except EmptyCapError:
        return np.nan


def first_touch(
    mesh: SurfaceMesh,
    direction,
    slab: Optional[Slab] = None,
    steps: int = 48,
    contact_tol: Optional[float] = None,
    seam_band: Optional[float] = None,
    record_profile: bool = True,
) -> SweepResult:
    """March the reflection plane inward until the reflected cap first
    touches the rest of the surface; bisect the critical depth to
    ``extent * 1e-8`` and classify the touch.

    Cap vertices within ``seam_band`` of the plane are excluded from the
    clearance test: their reflections stay near the seam where cap and
    remainder meet, so they sit at vanishing distance from the surface at
    every depth and would report contact immediately.  (A tangency *at* the
    plane is invisible on a mesh anyway; the band defaults to 1.5 mesh_h.)

    Exactly symmetric meshes make the whole cap touch at once
    (degenerate_simultaneous); the plane is then polished by minimizing the
    deviation, which localizes the mirror plane far more sharply than the
    clearance threshold does.
    """
    direction = np.asarray(direction, dtype=float)
    nrm = np.linalg.norm(direction)
    if nrm == 0:
        raise ValueError("sweep direction must be nonzero")
    direction = direction / nrm
    if slab is not None and abs(float(direction @ slab.axis)) > 1e-9:
        raise OrientationError("sweep direction must be parallel to the plates")

    proj = mesh.vertices @ direction
    t_hi = float(np.max(proj))
    t_lo = float(np.min(proj))
    extent = t_hi - t_lo
    if extent <= 0:
        raise EmptyCapError("surface has no extent along the sweep direction")
    if contact_tol is None:
        contact_tol = 2.0 * mesh.mesh_h() ** 2
    if seam_band is None:
        seam_band = 1.5 * mesh.mesh_h()

    workspace = _SweepWorkspace(mesh)

    def plane_at(t: float) -> Plane:
        return Plane(point=(t_hi - t) * direction, normal=direction)

    def clearance(t: float):
        plane = plane_at(t)
        cap = np.where(proj > plane.offset + seam_band)[0]
        if len(cap) == 0:
            return np.inf, plane, cap, None
        signed, _, _, fid = workspace.signed_clearance(plane, cap)
        # boundary-loop vertices never trigger the march: a jagged rim (the
        # staircase of a graph mesh) grazes its own reflection at scale far
        # below mesh_h at many depths, which is discretization noise, not a
        # touch.  They still enter the deviation and the final contact set.
        trigger = signed[~workspace.is_boundary[cap]]
        cmin = float(np.min(trigger)) if len(trigger) else np.inf
        return cmin, plane, cap, (signed, fid)

    # coarse march from the tangent plane inward
    profile_rows = []
    ts = np.linspace(0.0, extent, steps + 1)[1:]
    prev_t = 0.0
    hit_t = None
    for t in ts:
        c, plane, cap, _ = clearance(t)
        if record_profile:
            profile_rows.append((t, c, _deviation_at(workspace, plane)))
        if c <= contact_tol:
            hit_t = t
            break
        prev_t = t
    if hit_t is None:
        # the far tangent position always touches; use the last bracket
        hit_t = extent

    # bisection refinement of the clearance crossing
    a, b = prev_t, hit_t
    target = extent * 1e-8
    while b - a > target:
        mid = 0.5 * (a + b)
        c, _, _, _ = clearance(mid)
        if c <= contact_tol:
            b = mid
        else:
            a = mid
    t_star = 0.5 * (a + b)

    c_star, plane, cap, detail = clearance(b)
    if detail is None:
        raise EmptyCapError("critical plane cuts off no cap")
    signed, fid = detail
    candidates = np.where(signed <= contact_tol)[0]
    if len(candidates):
        agree = workspace.normal_agreement(plane, cap[candidates], fid[candidates])
        genuine = candidates[agree > 0.9]
        if len(genuine):
            candidates = genuine
    touch_points = workspace.mesh.vertices[cap[candidates]] if len(candidates) \
        else np.zeros((0, 3))

    touch_class = _classify_touch(
        cap[candidates], touch_points, workspace.boundary_vertices
    )

    if touch_class == "degenerate_simultaneous":
        # the plane, not the point, is the payload: polish by minimizing the
        # reflection deviation.  The clearance crossing precedes the true
        # mirror depth by O(mesh_h) (the seam band sees the opening angle
        # between surface and reflection), so expand the search window to the
        # right while the deviation still decreases before golden-sectioning.
        span = extent / steps
        lo = max(t_star - span, 0.0)
        dev_fn = lambda t: _deviation_at(workspace, plane_at(t))
        hi = t_star
        f_prev = dev_fn(hi)
        while hi < extent:
            t_next = min(hi + span, extent)
            f_next = dev_fn(t_next)
            if not (f_next < f_prev):
                hi = t_next
                break
            hi, f_prev = t_next, f_next
        t_star = _golden_min(dev_fn, lo, hi, target)
        plane = plane_at(t_star)

    deviation = _deviation_at(workspace, plane)
    if np.isnan(deviation):
        deviation = 0.0
    result = SweepResult(
        direction=direction,
        t_star=t_star,
        touch_class=touch_class,
        touch_points=touch_points,
        symmetry_plane=plane,
        deviation=deviation,
        extent=extent,
        profile=np.asarray(profile_rows, dtype=float).reshape(-1, 3),
    )
    return result


def _classify_touch(vertex_ids, points, boundary_vertices) -> str:
    if len(points) >= 3 and _non_collinear(points):
        return "degenerate_simultaneous"
    if any(int(v) in boundary_vertices for v in vertex_ids):
        return "boundary"
    return "interior"


def _non_collinear(points: np.ndarray) -> bool:
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return s[1] > max(1e-12, 1e-6 * s[0])


def _golden_min(fn, lo, hi, tol) -> float:
    """Golden-section minimization (unimodal near the mirror depth)."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if not np.isnan(fc) and (np.isnan(fd) or fc < fd):
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def sweep_direction(mesh: SurfaceMesh, direction, slab: Optional[Slab] = None,
                    **kwargs) -> SweepResult:
    """One full sweep: tangent-plane detection, first touch, critical plane,
    deviation, and the deviation-vs-depth profile."""
    kwargs.setdefault("record_profile", True)
    return first_touch(mesh, direction, slab=slab, **kwargs)


def sweep_directions_for(slab: Slab, count: int = 8) -> np.ndarray:
    """``count`` equally spaced unit directions parallel to the plates."""
    b1, b2 = plate_frame(slab.axis)
    angles = np.arange(count) * (2.0 * np.pi / count)
    return np.cos(angles)[:, None] * b1 + np.sin(angles)[:, None] * b2


def sweep_mesh(
    mesh: SurfaceMesh,
    slab: Slab,
    directions=8,
    symmetry_tol: Optional[float] = None,
    parallel: bool = True,
    **kwargs,
) -> SymmetryReport:
    """Sweep several directions (concurrently — the mesh is read-only) and
    intersect the symmetric planes into an axis orthogonal to the plates."""
    if np.isscalar(directions):
        directions = sweep_directions_for(slab, int(directions))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    if symmetry_tol is None:
        symmetry_tol = 10.0 * mesh.mesh_h() ** 2

    def run(d):
        return sweep_direction(mesh, d, slab=slab, **kwargs)

    if parallel and len(directions) > 1:
        with ThreadPoolExecutor(max_workers=min(8, len(directions))) as pool:
            results = list(pool.map(run, directions))
    else:
        results = [run(d) for d in directions]
    return extract_symmetry_axis(results, slab, symmetry_tol=symmetry_tol)


# ---------------------------------------------------------------------------
# axis extraction
# ---------------------------------------------------------------------------


def extract_symmetry_axis(
    results: Sequence[SweepResult],
    slab: Slab,
    symmetry_tol: float,
) -> SymmetryReport:
    """Least-squares intersection of the symmetric planes, constrained
    orthogonal to the plates.

    Planes whose sweep deviation exceeds ``symmetry_tol`` are excluded.  With
    fewer than two independent symmetric directions no axis is reported
    (verdict asymmetric when some direction failed, undetermined otherwise).
    """
    results = list(results)
    if not results:
        raise ValueError("need at least one sweep result")
    deviations = np.array([r.deviation for r in results])
    max_dev = float(np.max(deviations))
    good = [r for r in results if r.deviation <= symmetry_tol]
    witness = None
    if max_dev > symmetry_tol:
        witness = results[int(np.argmax(deviations))].direction

    b1, b2 = plate_frame(slab.axis)
    axis = None
    residual = np.inf
    if len(good) >= 2:
        A = np.array([
            [float(r.symmetry_plane.normal @ b1), float(r.symmetry_plane.normal @ b2)]
            for r in good
        ])
        rhs = np.array([r.symmetry_plane.offset for r in good])
        gram = A.T @ A
        sv = np.linalg.svd(gram, compute_uv=False)
        if sv[-1] > 1e-8 * sv[0]:
            coeffs, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            mid = 0.5 * (slab.lo + slab.hi)
            point = coeffs[0] * b1 + coeffs[1] * b2 + mid * slab.axis
            axis = Line(point=point, direction=slab.axis)
            residual = float(np.max(np.abs(A @ coeffs - rhs)))

    # symmetry is a statement about the sweeps; the axis is a bonus that
    # needs >= 2 independent symmetric directions (a single mirror plane is
    # still "symmetric")
    verdict = "asymmetric" if witness is not None else "symmetric"
    return SymmetryReport(
        sweeps=results,
        axis=axis,
        axis_residual=residual if axis is not None else np.inf,
        max_deviation=max_dev,
        verdict=verdict,
        tolerance=float(symmetry_tol),
        witness_direction=witness,
    )
