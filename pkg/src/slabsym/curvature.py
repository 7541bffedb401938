"""Prescribed-curvature profiles, the mean-curvature operator for graphs,
and curvature of plate boundary curves.

Sign convention for graphs: with the surface written as a height field u over
a plate domain and unit normal proportional to (-grad u, 1), the prescribed
curvature H is (1/n) of the divergence-form operator

    div( grad u / W ),    W = sqrt(1 + |grad u|^2).

Under this convention the upper hemisphere of radius R has H = -1/R.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ProfileRangeError, UnsupportedProfileError
from .grid import GridMismatchError, ScalarField, differentials, gradient_all

# ---------------------------------------------------------------------------
# height profiles H(x, u, grad u)
# ---------------------------------------------------------------------------


class PrescribedH:
    """Prescribed mean-curvature profile.

    Kinds:
      constant   -- H independent of everything
      affine     -- H(u) = intercept + slope * u
      tabulated  -- cubic-spline interpolation of (u, H) samples; evaluation
                    outside the sampled range is an error
      general    -- arbitrary callable H(x, u, grad); height and gradient
                    derivatives must be supplied explicitly if the profile is
                    to be linearized
    """

    def __init__(self, kind: str, *, value: float = 0.0, intercept: float = 0.0,
                 slope: float = 0.0, u_samples=None, h_samples=None,
                 fn: Callable = None, du: Callable = None, dgrad: Callable = None):
        if kind not in ("constant", "affine", "tabulated", "general"):
            raise ValueError(f"unknown profile kind {kind!r}")
        self.kind = kind
        self.value = float(value)
        self.intercept = float(intercept)
        self.slope = float(slope)
        self.fn = fn
        self.du_fn = du
        self.dgrad_fn = dgrad
        self._spline = None
        self._spline_range = None
        if kind == "tabulated":
            u_samples = np.asarray(u_samples, dtype=float)
            h_samples = np.asarray(h_samples, dtype=float)
            if u_samples.ndim != 1 or u_samples.shape != h_samples.shape:
                raise ValueError("tabulated profile needs matching 1D sample arrays")
            if len(u_samples) < 4:
                raise ValueError("tabulated profile needs at least 4 samples")
            if np.any(np.diff(u_samples) <= 0):
                raise ValueError("tabulated profile samples must be strictly increasing in u")
            self._spline = CubicSpline(u_samples, h_samples)
            self._spline_du = self._spline.derivative()
            self._spline_range = (float(u_samples[0]), float(u_samples[-1]))
        if kind == "general" and fn is None:
            raise ValueError("general profile needs a callable")

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, value: float) -> "PrescribedH":
        return cls("constant", value=value)

    @classmethod
    def affine(cls, intercept: float, slope: float) -> "PrescribedH":
        return cls("affine", intercept=intercept, slope=slope)

    @classmethod
    def tabulated(cls, u_samples, h_samples) -> "PrescribedH":
        return cls("tabulated", u_samples=u_samples, h_samples=h_samples)

    @classmethod
    def general(cls, fn: Callable, du: Callable = None, dgrad: Callable = None) -> "PrescribedH":
        return cls("general", fn=fn, du=du, dgrad=dgrad)

    # -- queries ---------------------------------------------------------------

    @property
    def depends_on_height(self) -> bool:
        if self.kind == "constant":
            return False
        if self.kind == "affine":
            return self.slope != 0.0
        return True

    @property
    def depends_on_gradient(self) -> bool:
        return self.kind == "general" and self.dgrad_fn is not None

    @property
    def has_height_derivative(self) -> bool:
        if self.kind in ("constant", "affine", "tabulated"):
            return True
        return self.du_fn is not None

    def evaluate(self, x, u, grad=None) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return np.full_like(u, self.value)
        if self.kind == "affine":
            return self.intercept + self.slope * u
        if self.kind == "tabulated":
            lo, hi = self._spline_range
            if np.any(u < lo) or np.any(u > hi):
                raise ProfileRangeError(
                    f"height {float(np.min(u)):.6g}..{float(np.max(u)):.6g} outside "
                    f"tabulated range [{lo:.6g}, {hi:.6g}]"
                )
            return np.asarray(self._spline(u), dtype=float)
        return np.asarray(self.fn(x, u, grad), dtype=float)

    def du(self, x, u, grad=None) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(u)
        if self.kind == "affine":
            return np.full_like(u, self.slope)
        if self.kind == "tabulated":
            lo, hi = self._spline_range
            if np.any(u < lo) or np.any(u > hi):
                raise ProfileRangeError("height outside tabulated range")
            return np.asarray(self._spline_du(u), dtype=float)
        if self.du_fn is None:
            raise UnsupportedProfileError(
                "general profile has no height derivative; supply du= to linearize"
            )
        return np.asarray(self.du_fn(x, u, grad), dtype=float)

    def dgrad(self, x, u, grad) -> np.ndarray:
        if not self.depends_on_gradient:
            raise UnsupportedProfileError("profile does not expose a gradient derivative")
        return np.asarray(self.dgrad_fn(x, u, grad), dtype=float)


def eval_H(profile: PrescribedH, x, u, grad=None) -> tuple[np.ndarray, np.ndarray]:
    """Profile value and height derivative in one call."""
    return profile.evaluate(x, u, grad), profile.du(x, u, grad)


# ---------------------------------------------------------------------------
# mean-curvature operator (two discretizations)
# ---------------------------------------------------------------------------


def mc_expanded(field: ScalarField, grad=None, hess=None) -> np.ndarray:
    """Expanded-form operator at interior nodes:

        (1/W) sum_i u_ii - (1/W^3) sum_ij u_i u_j u_ij

    Derivatives default to the centered stencils; exact arrays (matching the
    interior nodes) may be supplied instead.
    """
    if grad is None or hess is None:
        d = differentials(field)
        grad = d.gradient if grad is None else np.asarray(grad, dtype=float)
        hess = d.hessian if hess is None else np.asarray(hess, dtype=float)
    else:
        grad = np.asarray(grad, dtype=float)
        hess = np.asarray(hess, dtype=float)
    W2 = 1.0 + np.einsum("ij,ij->i", grad, grad)
    W = np.sqrt(W2)
    lap = np.einsum("ijj->i", hess)
    ghg = np.einsum("ij,ijk,ik->i", grad, hess, grad)
    return lap / W - ghg / (W2 * W)


def mc_divergence_form(field: ScalarField) -> np.ndarray:
    """Divergence-form operator div(grad u / W) at interior nodes, discretized
    conservatively: fluxes live on the half-edges between nodes, with the
    transverse gradient averaged from the two touching nodes.

    Agrees with mc_expanded to second order; the two are distinct
    discretizations of the same quantity.
    """
    g = field.grid
    u = field.values
    h = g.h
    idx = g.node_index[g.interior_index]
    out = np.zeros(g.n_interior)

    if g.dim == 1:
        me = g.interior_index
        plus = g._neighbor_compact(idx, (1,))
        minus = g._neighbor_compact(idx, (-1,))
        du_e = (u[plus] - u[me]) / h
        du_w = (u[me] - u[minus]) / h
        Fe = du_e / np.sqrt(1.0 + du_e**2)
        Fw = du_w / np.sqrt(1.0 + du_w**2)
        return (Fe - Fw) / h

    # transverse first derivatives at every node (centered at interior,
    # one-sided at boundary) for the half-edge averages
    grads = [g.d1(a) @ u for a in range(g.dim)]
    me = g.interior_index
    for a in range(g.dim):
        b = 1 - a
        shift = np.zeros(g.dim, dtype=int)
        shift[a] = 1
        plus = g._neighbor_compact(idx, shift)
        minus = g._neighbor_compact(idx, -shift)
        du_p = (u[plus] - u[me]) / h
        du_m = (u[me] - u[minus]) / h
        t_p = 0.5 * (grads[b][me] + grads[b][plus])
        t_m = 0.5 * (grads[b][me] + grads[b][minus])
        Fp = du_p / np.sqrt(1.0 + du_p**2 + t_p**2)
        Fm = du_m / np.sqrt(1.0 + du_m**2 + t_m**2)
        out += (Fp - Fm) / h
    return out


def mc_residual(field: ScalarField, profile: PrescribedH) -> np.ndarray:
    """Interior residual of the prescribed-curvature equation,
    mc_expanded(u) - n H(x, u)."""
    g = field.grid
    pts = g.points[g.interior_index]
    grad = None
    if profile.depends_on_gradient or profile.kind == "general":
        grad = differentials(field).gradient
    H = profile.evaluate(pts, field.values[g.interior_index], grad)
    return mc_expanded(field) - g.dim * H


# ---------------------------------------------------------------------------
# plate boundary curves
# ---------------------------------------------------------------------------


@dataclass
class BoundaryCurve:
    """Closed polyline in a plate plane, oriented counterclockwise (region on
    the left).  ``symmetry_axis`` is set by the mirror-symmetric constructor:
    a (point, direction) pair in plate coordinates."""

    vertices: np.ndarray
    plate: int = 1
    symmetry_axis: Optional[tuple] = None
    # exact construction parameters (center, radius) when built as a circle,
    # so serialization round-trips bit-for-bit instead of re-fitting
    circle_spec: Optional[tuple] = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("boundary curve needs at least 3 planar vertices")
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        area2 = _signed_area2(v)
        if abs(area2) < 1e-300:
            raise ValueError("boundary curve encloses no area")
        if area2 < 0:
            v = v[::-1].copy()
        self.vertices = v
        if self.plate not in (1, 2):
            raise ValueError("plate tag must be 1 or 2")

    @classmethod
    def circle(cls, center, radius, n_vertices: int = 128, plate: int = 1) -> "BoundaryCurve":
        if n_vertices < 8:
            raise ValueError("need at least 8 vertices for a circle")
        th = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
        center = np.asarray(center, dtype=float)
        pts = center + radius * np.stack([np.cos(th), np.sin(th)], axis=1)
        return cls(pts, plate=plate,
                   circle_spec=((float(center[0]), float(center[1])), float(radius)))

    @classmethod
    def from_symmetric_graph(cls, axis_point, axis_dir, s_samples, f_samples,
                             plate: int = 1) -> "BoundaryCurve":
        """Curve made of a graph f >= 0 over an axis line and its exact mirror
        image: {p + s d + f(s) m} union {p + s d - f(s) m}, where m is the
        in-plane unit normal of the axis.  f must vanish at the ends and be
        positive inside, so the polyline closes without degenerate edges and
        is exactly invariant under reflection across the axis."""
        p = np.asarray(axis_point, dtype=float)
        d = np.asarray(axis_dir, dtype=float)
        d = d / np.linalg.norm(d)
        m = np.array([-d[1], d[0]])
        s = np.asarray(s_samples, dtype=float)
        f = np.asarray(f_samples, dtype=float)
        if s.ndim != 1 or s.shape != f.shape or len(s) < 4:
            raise ValueError("need matching 1D sample arrays with >= 4 samples")
        if np.any(np.diff(s) <= 0):
            raise ValueError("s samples must be strictly increasing")
        if abs(f[0]) > 1e-14 or abs(f[-1]) > 1e-14:
            raise ValueError("graph must vanish at the axis endpoints")
        if np.any(f[1:-1] <= 0):
            raise ValueError("graph must be positive between the endpoints")
        upper = p + np.outer(s, d) + np.outer(f, m)
        lower = p + np.outer(s[::-1][1:-1], d) - np.outer(f[::-1][1:-1], m)
        return cls(np.vstack([upper, lower]), plate=plate,
                   symmetry_axis=(p.copy(), d.copy()))

    def edge_lengths(self) -> np.ndarray:
        v = self.vertices
        return np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)

    def mesh_h(self) -> float:
        return float(np.max(self.edge_lengths()))

    def is_mirror_symmetric(self, point, direction, tol: float = 1e-9) -> bool:
        """Does reflection across the given in-plane axis map the vertex set
        onto itself (as a set)?"""
        p = np.asarray(point, dtype=float)
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        m = np.array([-d[1], d[0]])
        rel = self.vertices - p
        mirrored = p + np.outer(rel @ d, d) - np.outer(rel @ m, m)
        # set comparison via nearest-vertex distance
        from scipy.spatial import cKDTree

        tree = cKDTree(self.vertices)
        dist, _ = tree.query(mirrored)
        return bool(np.max(dist) <= tol)


def _signed_area2(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def boundary_mean_curvature(curve: BoundaryCurve) -> np.ndarray:
    """Discrete curvature at each vertex with respect to the inward normal:
    the convex boundary of a convex region gets positive values.

    Uses the circumscribed circle through each vertex triple (exact on
    circles regardless of vertex spacing, second order on smooth curves).
    """
    v = curve.vertices
    a = np.roll(v, 1, axis=0)
    c = np.roll(v, -1, axis=0)
    ab = v - a
    bc = c - v
    ac = c - a
    cross = ab[:, 0] * bc[:, 1] - ab[:, 1] * bc[:, 0]
    denom = (
        np.linalg.norm(ab, axis=1)
        * np.linalg.norm(bc, axis=1)
        * np.linalg.norm(ac, axis=1)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(denom > 0, 2.0 * cross / denom, 0.0)
    return kappa
