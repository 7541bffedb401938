"""Ambient geometry: the slab between two parallel plates, hyperplanes, and
reflections.

Conventions used throughout the library:

* the slab axis is the common unit normal of the two plates;
* plates are the affine hyperplanes ``axis . x = lo`` and ``axis . x = hi``;
* a ``Plane`` stores a point and a unit normal, and reflection across it is
  the usual isometric involution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OrientationError

_UNIT_TOL = 1e-12


def _as_unit(v, name: str = "vector") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] < 2:
        raise ValueError(f"{name} must be a 1-D vector, got shape {v.shape}")
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        raise ValueError(f"{name} must be nonzero")
    return v / nrm


@dataclass(frozen=True)
class Plane:
    """Affine hyperplane given by a point on it and a unit normal."""

    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "normal", _as_unit(self.normal, "plane normal"))
        if self.point.shape != self.normal.shape:
            raise ValueError("plane point and normal must have the same dimension")

    @property
    def offset(self) -> float:
        """Signed offset c in the implicit form normal . x = c."""
        return float(self.normal @ self.point)

    def signed_distance(self, points) -> np.ndarray:
        """Signed distance of points to the plane (positive on the normal side)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.normal - self.offset

    def reflect(self, points) -> np.ndarray:
        """Mirror image of points across the plane.  Isometric involution."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        d = pts @ self.normal - self.offset
        out = pts - 2.0 * np.outer(d, self.normal)
        return out[0] if single else out

    def reflect_vectors(self, vectors) -> np.ndarray:
        """Mirror image of free vectors (directions, normals)."""
        vecs = np.asarray(vectors, dtype=float)
        single = vecs.ndim == 1
        vecs = np.atleast_2d(vecs)
        out = vecs - 2.0 * np.outer(vecs @ self.normal, self.normal)
        return out[0] if single else out


def reflect_points(points, plane: Plane) -> np.ndarray:
    """Functional form of Plane.reflect."""
    return plane.reflect(points)


@dataclass(frozen=True)
class Slab:
    """Region between two parallel plates, ``lo <= axis . x <= hi``."""

    axis: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "axis", _as_unit(self.axis, "slab axis"))
        if not self.hi > self.lo:
            raise ValueError("slab requires hi > lo (positive plate separation)")

    @property
    def width(self) -> float:
        return float(self.hi - self.lo)

    @property
    def ambient_dim(self) -> int:
        return int(self.axis.shape[0])

    def plate(self, which: int) -> Plane:
        """Plate 1 is the lower plane (offset lo), plate 2 the upper (hi)."""
        if which not in (1, 2):
            raise ValueError("plate index must be 1 or 2")
        c = self.lo if which == 1 else self.hi
        return Plane(point=c * self.axis, normal=self.axis)

    def height(self, points) -> np.ndarray:
        """Coordinate along the axis (lo at plate 1, hi at plate 2)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.axis

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        t = self.height(points)
        return (t >= self.lo - tol) & (t <= self.hi + tol)

    def check_sweep_plane(self, plane: Plane, tol: float = 1e-9) -> None:
        """Sweep planes must be perpendicular to the plates, i.e. their
        normals must be orthogonal to the slab axis."""
        if abs(float(plane.normal @ self.axis)) > tol:
            raise OrientationError(
                "sweep plane must be perpendicular to the plates "
                f"(normal . axis = {float(plane.normal @ self.axis):.3e})"
            )


@dataclass(frozen=True)
class Line:
    """A line: point plus unit direction.  Used for symmetry axes."""

    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "direction", _as_unit(self.direction, "line direction"))

    def distance_to_point(self, p) -> float:
        p = np.asarray(p, dtype=float)
        d = p - self.point
        return float(np.linalg.norm(d - (d @ self.direction) * self.direction))


def plate_frame(axis) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors spanning the plate plane (orthogonal to the axis).

    Deterministic: picks the coordinate axis least aligned with the slab axis
    as the seed, then Gram-Schmidt.
    """
    a = _as_unit(axis, "axis")
    seed = np.zeros_like(a)
    seed[int(np.argmin(np.abs(a)))] = 1.0
    b1 = seed - (seed @ a) * a
    b1 = b1 / np.linalg.norm(b1)
    if a.shape[0] == 3:
        b2 = np.cross(a, b1)
    else:
        # general-dimension fallback: second Gram-Schmidt pass
        seed2 = np.zeros_like(a)
        order = np.argsort(np.abs(a))
        seed2[int(order[1])] = 1.0
        b2 = seed2 - (seed2 @ a) * a - (seed2 @ b1) * b1
        b2 = b2 / np.linalg.norm(b2)
    return b1, b2
