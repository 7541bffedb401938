"""Declarative scenario harness: describe a problem between the plates,
run it end to end, and get a machine-checkable verification report.

A :class:`Scenario` bundles a slab, a curvature profile, boundary data, and
discretization choices.  ``run_scenario`` executes the full pipeline —

    validate -> solve -> mesh -> sweep -> verify

— where *verify* applies the checks appropriate to the scenario class:

``T1``
    constant contact angle on both plates; expects rotational symmetry
    (all sweep directions symmetric, common axis orthogonal to the plates).
``T2``
    fixed boundary curves.  A single mirror-symmetric curve expects the
    detected symmetry plane to contain the curve's own symmetry axis; a
    pair of concentric circles (one per plate) expects a rotation axis
    through their common center.
``T3``
    flux data ``du/deta = h(H0)`` with ``h`` nonincreasing in the boundary
    curvature ``H0``; expects rotational symmetry.
``T4``
    flux data ``du/deta = -c r``; expects the rotation axis to pass through
    the configured origin.
``custom``
    any supported boundary data; only the generic checks run.

Every stage failure is captured with its stage name in the report rather
than propagated, so a report is always produced; callers that need a hard
failure can inspect ``report.error``.  Reports and exported artifacts are
deterministic: rerunning an identical scenario reproduces byte-identical
JSON/CSV/OBJ output (no timestamps, no ambient randomness).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional

import numpy as np

from .curvature import BoundaryCurve, PrescribedH
from .errors import ScenarioValidationError
from .geometry import Line, Slab, plate_frame
from .grid import (
    AnnulusRegion,
    BoxRegion,
    DiskRegion,
    DomainGrid,
    PolygonRegion,
    ScalarField,
)
from .linearization import assemble_difference_operator, ellipticity_constant
from .mesh import SurfaceMesh, bump_mesh, mesh_from_graph, revolve_profile, save_obj
from .moving_plane import sweep_mesh
from .solver import (
    DEFAULT_SETTINGS,
    ContactAngle,
    CurvatureFlux,
    Dirichlet,
    FixedBoundary,
    RadialFlux,
    SolverSettings,
    solve_axisymmetric_fixed_radius,
    solve_axisymmetric_profile,
    solve_graph_dirichlet,
    solve_graph_flux,
)
from .touching import check_interior_touching

SCENARIO_IDS = ("T1", "T2", "T3", "T4", "custom")
SCENARIO_SCHEMA = "slabsym/scenario-v1"
REPORT_SCHEMA = "slabsym/report-v1"


# ---------------------------------------------------------------------------
# serializable callables for flux data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    """``s -> intercept + slope * s``; JSON-serializable flux data."""

    intercept: float
    slope: float

    def __call__(self, s):
        return self.intercept + self.slope * np.asarray(s, dtype=float)


@dataclass(frozen=True)
class TabulatedMap:
    """Piecewise-linear interpolant of (s, value) samples."""

    s_samples: tuple
    values: tuple

    def __post_init__(self):
        s = np.asarray(self.s_samples, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if s.ndim != 1 or s.shape != v.shape or len(s) < 2:
            raise ValueError("tabulated map needs matching 1D sample arrays")
        if np.any(np.diff(s) <= 0):
            raise ValueError("tabulated map samples must be strictly increasing")
        object.__setattr__(self, "s_samples", tuple(map(float, s)))
        object.__setattr__(self, "values", tuple(map(float, v)))

    def __call__(self, s):
        return np.interp(np.asarray(s, dtype=float), self.s_samples, self.values)


def _map_payload(fn) -> dict:
    if isinstance(fn, AffineMap):
        return {"kind": "affine", "intercept": fn.intercept, "slope": fn.slope}
    if isinstance(fn, TabulatedMap):
        return {"kind": "tabulated", "s_samples": list(fn.s_samples),
                "values": list(fn.values)}
    raise ScenarioValidationError(
        "only AffineMap/TabulatedMap flux data is JSON-serializable; "
        "plain callables require programmatic use"
    )


def _map_from_payload(payload: dict):
    kind = payload.get("kind")
    if kind == "affine":
        return AffineMap(float(payload["intercept"]), float(payload["slope"]))
    if kind == "tabulated":
        return TabulatedMap(tuple(payload["s_samples"]), tuple(payload["values"]))
    raise ScenarioValidationError(f"unknown map kind {kind!r}")


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------


def _profile_payload(profile: PrescribedH) -> dict:
    if profile.kind == "constant":
        return {"kind": "constant", "value": profile.value}
    if profile.kind == "affine":
        return {"kind": "affine", "intercept": profile.intercept,
                "slope": profile.slope}
    raise ScenarioValidationError(
        f"curvature profile kind {profile.kind!r} is not JSON-serializable; "
        "construct the scenario programmatically"
    )


def _profile_from_payload(payload: dict) -> PrescribedH:
    kind = payload.get("kind")
    if kind == "constant":
        return PrescribedH.constant(float(payload["value"]))
    if kind == "affine":
        return PrescribedH.affine(float(payload["intercept"]),
                                  float(payload["slope"]))
    raise ScenarioValidationError(f"unknown profile kind {kind!r}")


def _curve_circle_data(curve: BoundaryCurve):
    """(center, radius) when the polyline is a circle, else None.

    Prefers the exact construction parameters recorded by
    ``BoundaryCurve.circle`` (bit-stable across serialization round trips);
    falls back to a fit for externally supplied polylines."""
    if curve.circle_spec is not None:
        center, radius = curve.circle_spec
        return np.asarray(center, dtype=float), float(radius)
    center = curve.vertices.mean(axis=0)
    radii = np.linalg.norm(curve.vertices - center, axis=1)
    mean_r = float(radii.mean())
    if mean_r > 0 and float(np.ptp(radii)) <= 1e-9 * max(1.0, mean_r):
        return center, mean_r
    return None


def _curve_payload(curve: BoundaryCurve) -> dict:
    circle = _curve_circle_data(curve)
    if circle is not None:
        center, radius = circle
        return {"kind": "circle", "plate": curve.plate,
                "center": center.tolist(), "radius": radius,
                "n_vertices": len(curve.vertices)}
    payload = {"kind": "polyline", "plate": curve.plate,
               "vertices": curve.vertices.tolist()}
    if curve.symmetry_axis is not None:
        point, direction = curve.symmetry_axis
        payload["symmetry_axis"] = {
            "point": np.asarray(point, dtype=float).tolist(),
            "direction": np.asarray(direction, dtype=float).tolist(),
        }
    return payload


def _curve_from_payload(payload: dict) -> BoundaryCurve:
    kind = payload.get("kind")
    plate = int(payload.get("plate", 1))
    if kind == "circle":
        return BoundaryCurve.circle(payload["center"], float(payload["radius"]),
                                    n_vertices=int(payload.get("n_vertices", 128)),
                                    plate=plate)
    if kind == "polyline":
        axis = payload.get("symmetry_axis")
        if axis is not None:
            axis = (np.asarray(axis["point"], dtype=float),
                    np.asarray(axis["direction"], dtype=float))
        return BoundaryCurve(np.asarray(payload["vertices"], dtype=float),
                             plate=plate, symmetry_axis=axis)
    raise ScenarioValidationError(f"unknown curve kind {kind!r}")


def _boundary_payload(bc) -> dict:
    if isinstance(bc, ContactAngle):
        return {"type": "contact_angle", "gamma1": bc.gamma1, "gamma2": bc.gamma2}
    if isinstance(bc, FixedBoundary):
        return {"type": "fixed", "curves": [_curve_payload(c) for c in bc.curves]}
    if isinstance(bc, CurvatureFlux):
        curv = bc.boundary_curvature
        if callable(curv):
            raise ScenarioValidationError(
                "callable boundary curvature is not JSON-serializable"
            )
        return {"type": "curvature_flux", "h": _map_payload(bc.h),
                "curvature_range": list(bc.curvature_range),
                "boundary_curvature": float(curv)}
    if isinstance(bc, RadialFlux):
        return {"type": "radial_flux", "c": bc.c, "origin": list(bc.origin)}
    if isinstance(bc, Dirichlet):
        if callable(bc.g) or np.ndim(bc.g) != 0:
            raise ScenarioValidationError(
                "only constant Dirichlet data is JSON-serializable"
            )
        return {"type": "dirichlet", "height": float(bc.g)}
    raise ScenarioValidationError(
        f"unsupported boundary condition {type(bc).__name__}"
    )


def _boundary_from_payload(payload: dict):
    kind = payload.get("type")
    if kind == "contact_angle":
        gamma2 = payload.get("gamma2")
        return ContactAngle(float(payload["gamma1"]),
                            None if gamma2 is None else float(gamma2))
    if kind == "fixed":
        return FixedBoundary(tuple(_curve_from_payload(c)
                                   for c in payload["curves"]))
    if kind == "curvature_flux":
        return CurvatureFlux(h=_map_from_payload(payload["h"]),
                             curvature_range=tuple(payload["curvature_range"]),
                             boundary_curvature=float(payload["boundary_curvature"]))
    if kind == "radial_flux":
        return RadialFlux(float(payload["c"]),
                          tuple(payload.get("origin", (0.0, 0.0))))
    if kind == "dirichlet":
        return Dirichlet(float(payload["height"]))
    raise ScenarioValidationError(f"unknown boundary type {kind!r}")


def _domain_payload(region) -> Optional[dict]:
    if region is None:
        return None
    if isinstance(region, DiskRegion):
        return {"kind": "disk", "center": region.center.tolist(),
                "radius": region.radius}
    if isinstance(region, AnnulusRegion):
        return {"kind": "annulus", "center": region.center.tolist(),
                "inner_radius": region.inner_radius,
                "outer_radius": region.outer_radius}
    if isinstance(region, BoxRegion):
        return {"kind": "box", "lo": region.lo.tolist(), "hi": region.hi.tolist()}
    if isinstance(region, PolygonRegion):
        return {"kind": "polygon", "vertices": region.vertices.tolist()}
    raise ScenarioValidationError(
        f"domain region {type(region).__name__} is not JSON-serializable"
    )


def _domain_from_payload(payload: Optional[dict]):
    if payload is None:
        return None
    kind = payload.get("kind")
    if kind == "disk":
        return DiskRegion(payload["center"], float(payload["radius"]))
    if kind == "annulus":
        return AnnulusRegion(payload["center"], float(payload["inner_radius"]),
                             float(payload["outer_radius"]))
    if kind == "box":
        return BoxRegion(payload["lo"], payload["hi"])
    if kind == "polygon":
        return PolygonRegion(np.asarray(payload["vertices"], dtype=float))
    raise ScenarioValidationError(f"unknown domain kind {kind!r}")


def _finite(x):
    """floats fit for strict JSON: non-finite -> None."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


@dataclass
class Scenario:
    """A complete problem description plus discretization choices.

    ``realization`` selects how the surface is produced: ``"graph"`` solves a
    height function over ``domain``; ``"meridian"`` integrates an
    axisymmetric profile and revolves it (contact-angle data, or a pair of
    circular fixed boundaries).  ``"auto"`` picks meridian exactly for
    two-curve fixed boundaries.

    ``boundary_height`` is the constant height assigned to a single fixed
    boundary curve in the graph realization.  ``perturbation``, when set,
    bumps the swept mesh (``{"amplitude", "center", "width"}``) and serves as
    a built-in negative control: the sweeps should then report asymmetry.
    """

    id: str
    slab: Slab
    profile: PrescribedH
    boundary: object
    domain: object = None
    resolution: float = 1.0 / 64.0
    boundary_height: float = 0.0
    realization: str = "auto"
    mesh_stride: int = 3
    n_theta: int = 96
    sweep_directions: int = 8
    sweep_steps: int = 48
    seed: int = 0
    name: str = ""
    perturbation: Optional[dict] = None
    tolerances: dict = dc_field(default_factory=dict)
    settings: SolverSettings = DEFAULT_SETTINGS

    # -- shape ----------------------------------------------------------------

    def resolved_realization(self) -> str:
        if self.realization != "auto":
            return self.realization
        if isinstance(self.boundary, FixedBoundary) and len(self.boundary.curves) == 2:
            return "meridian"
        return "graph"

    # -- validation -----------------------------------------------------------

    def validate(self) -> None:
        """Check the data against the preconditions of the scenario class.

        Raises :class:`ScenarioValidationError` naming the violated
        precondition; passes silently otherwise.
        """
        if self.id not in SCENARIO_IDS:
            raise ScenarioValidationError(
                f"scenario id must be one of {SCENARIO_IDS}, got {self.id!r}"
            )
        if not self.resolution > 0:
            raise ScenarioValidationError("resolution must be positive")
        if self.mesh_stride < 1 or self.sweep_directions < 1:
            raise ScenarioValidationError(
                "mesh_stride and sweep_directions must be at least 1"
            )
        realization = self.resolved_realization()
        if realization not in ("graph", "meridian"):
            raise ScenarioValidationError(
                f"realization must be graph or meridian, got {realization!r}"
            )

        if self.id == "T1":
            if not isinstance(self.boundary, ContactAngle):
                raise ScenarioValidationError(
                    "T1 requires constant contact-angle data on both plates "
                    f"(ContactAngle), got {type(self.boundary).__name__}"
                )
        elif self.id == "T2":
            self._validate_t2(realization)
        elif self.id == "T3":
            if not isinstance(self.boundary, CurvatureFlux):
                raise ScenarioValidationError(
                    "T3 requires flux data du/deta = h(H0) with h nonincreasing "
                    f"in the boundary curvature (CurvatureFlux), got "
                    f"{type(self.boundary).__name__}"
                )
        elif self.id == "T4":
            if not isinstance(self.boundary, RadialFlux):
                raise ScenarioValidationError(
                    "T4 requires flux data du/deta = -c r with c > 0 "
                    f"(RadialFlux), got {type(self.boundary).__name__}"
                )

        if realization == "graph":
            if self.id != "T2" and self.domain is None:
                raise ScenarioValidationError(
                    "graph scenarios need a plate domain region"
                )
            axis = np.asarray(self.slab.axis, dtype=float)
            if np.linalg.norm(axis - np.array([0.0, 0.0, 1.0])) > 1e-12:
                raise ScenarioValidationError(
                    "graph scenarios require the slab axis along the third "
                    "coordinate (heights are functions over the plate plane)"
                )
        else:
            if self.profile.depends_on_gradient:
                raise ScenarioValidationError(
                    "meridian scenarios require height-only curvature profiles"
                )
            if not isinstance(self.boundary, (ContactAngle, FixedBoundary)):
                raise ScenarioValidationError(
                    "meridian realization supports contact-angle data or a "
                    "pair of circular fixed boundaries only"
                )

        if self.perturbation is not None:
            missing = {"amplitude", "center", "width"} - set(self.perturbation)
            if missing:
                raise ScenarioValidationError(
                    f"perturbation needs amplitude/center/width (missing {sorted(missing)})"
                )

    def _validate_t2(self, realization: str) -> None:
        if not isinstance(self.boundary, FixedBoundary):
            raise ScenarioValidationError(
                "T2 requires fixed boundary curves (FixedBoundary), got "
                f"{type(self.boundary).__name__}"
            )
        curves = self.boundary.curves
        for c in curves:
            if c.symmetry_axis is None and _curve_circle_data(c) is None:
                raise ScenarioValidationError(
                    "T2 requires every fixed boundary curve to be mirror-"
                    "symmetric about a common line (set symmetry_axis, or "
                    "use circles)"
                )
        if realization == "meridian":
            if len(curves) != 2 or {c.plate for c in curves} != {1, 2}:
                raise ScenarioValidationError(
                    "meridian T2 needs exactly one circle per plate"
                )
            data = [_curve_circle_data(c) for c in curves]
            if any(d is None for d in data):
                raise ScenarioValidationError(
                    "meridian T2 requires circular boundary curves"
                )
            (c1, _), (c2, _) = data
            if np.linalg.norm(c1 - c2) > 1e-9:
                raise ScenarioValidationError(
                    "meridian T2 requires the two circles to share a center "
                    "on a line orthogonal to the plates"
                )
        elif len(curves) != 1:
            raise ScenarioValidationError(
                "graph T2 takes exactly one boundary curve (the graph rim)"
            )

    # -- serialization ---------------------------------------------------------

    def to_payload(self) -> dict:
        return {
            "schema": SCENARIO_SCHEMA,
            "id": self.id,
            "name": self.name,
            "slab": {"axis": np.asarray(self.slab.axis, dtype=float).tolist(),
                     "lo": self.slab.lo, "hi": self.slab.hi},
            "profile": _profile_payload(self.profile),
            "boundary": _boundary_payload(self.boundary),
            "domain": _domain_payload(self.domain),
            "resolution": self.resolution,
            "boundary_height": self.boundary_height,
            "realization": self.realization,
            "mesh_stride": self.mesh_stride,
            "n_theta": self.n_theta,
            "sweep_directions": self.sweep_directions,
            "sweep_steps": self.sweep_steps,
            "seed": self.seed,
            "perturbation": self.perturbation,
            "tolerances": dict(self.tolerances),
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_payload(), **kwargs)

    @classmethod
    def from_payload(cls, payload: dict) -> "Scenario":
        schema = payload.get("schema", SCENARIO_SCHEMA)
        if schema != SCENARIO_SCHEMA:
            raise ScenarioValidationError(
                f"unsupported scenario schema {schema!r} (expected {SCENARIO_SCHEMA})"
            )
        slab_p = payload["slab"]
        scenario = cls(
            id=payload["id"],
            slab=Slab(axis=np.asarray(slab_p.get("axis", (0, 0, 1)), dtype=float),
                      lo=float(slab_p["lo"]), hi=float(slab_p["hi"])),
            profile=_profile_from_payload(payload["profile"]),
            boundary=_boundary_from_payload(payload["boundary"]),
            domain=_domain_from_payload(payload.get("domain")),
            resolution=float(payload.get("resolution", 1.0 / 64.0)),
            boundary_height=float(payload.get("boundary_height", 0.0)),
            realization=payload.get("realization", "auto"),
            mesh_stride=int(payload.get("mesh_stride", 3)),
            n_theta=int(payload.get("n_theta", 96)),
            sweep_directions=int(payload.get("sweep_directions", 8)),
            sweep_steps=int(payload.get("sweep_steps", 48)),
            seed=int(payload.get("seed", 0)),
            name=payload.get("name", ""),
            perturbation=payload.get("perturbation"),
            tolerances=dict(payload.get("tolerances", {})),
        )
        return scenario

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_payload(json.loads(text))

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_json(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


# ---------------------------------------------------------------------------
# verification report
# ---------------------------------------------------------------------------


@dataclass
class Criterion:
    """One verified property: observed value against its tolerance."""

    name: str
    passed: bool
    value: Optional[float] = None
    tolerance: Optional[float] = None
    note: str = ""

    def to_payload(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed),
                "value": _finite(self.value), "tolerance": _finite(self.tolerance),
                "note": self.note}


@dataclass
class VerificationReport:
    """Everything ``run_scenario`` learned, JSON-ready.

    ``attachments`` holds the in-memory objects (solution field, mesh,
    meridian profile, symmetry report) for programmatic use and artifact
    export; it is never serialized.  ``error`` carries the first stage
    failure (``{"stage", "type", "message"}``) when the pipeline did not
    finish.
    """

    scenario: Scenario
    passed: bool
    criteria: list
    solver: Optional[dict] = None
    symmetry: Optional[dict] = None
    touching: Optional[dict] = None
    ellipticity: Optional[dict] = None
    error: Optional[dict] = None
    attachments: dict = dc_field(default_factory=dict, repr=False)

    def criterion(self, name: str) -> Criterion:
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_payload(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "scenario": self.scenario.to_payload(),
            "passed": bool(self.passed),
            "criteria": [c.to_payload() for c in self.criteria],
            "solver": self.solver,
            "symmetry": self.symmetry,
            "touching": self.touching,
            "ellipticity": self.ellipticity,
            "error": self.error,
            "provenance": {
                "config_hash": self.scenario.config_hash(),
                "resolution": self.scenario.resolution,
                "seed": self.scenario.seed,
            },
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_payload(), **kwargs)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def report_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


# ---------------------------------------------------------------------------
# pipeline pieces
# ---------------------------------------------------------------------------


def _symmetric_stride(shape, requested: int) -> int:
    """Largest stride <= requested keeping the subsampled index set mirror-
    symmetric in every axis (``(n-1) % stride == 0``), so a symmetric solve
    yields an exactly symmetric sweep mesh."""
    for s in range(max(1, int(requested)), 0, -1):
        if all((n - 1) % s == 0 for n in shape):
            return s
    return 1


def _t2_domain(scenario: Scenario):
    """The plate region enclosed by the single fixed curve (graph T2)."""
    if scenario.domain is not None:
        return scenario.domain
    curve = scenario.boundary.curves[0]
    circle = _curve_circle_data(curve)
    if circle is not None:
        center, radius = circle
        return DiskRegion(center, radius)
    return PolygonRegion(curve.vertices)


def _solve_graph(scenario: Scenario):
    region = _t2_domain(scenario) if scenario.id == "T2" and \
        isinstance(scenario.boundary, FixedBoundary) else scenario.domain
    grid = DomainGrid.from_region(region, scenario.resolution)
    bc = scenario.boundary
    if isinstance(bc, FixedBoundary):
        u = solve_graph_dirichlet(grid, scenario.profile,
                                  float(scenario.boundary_height),
                                  scenario.settings)
    elif isinstance(bc, Dirichlet):
        u = solve_graph_dirichlet(grid, scenario.profile, bc.g, scenario.settings)
    else:
        u = solve_graph_flux(grid, scenario.profile, bc, scenario.settings)
    history = u.diagnostics["newton_history"]
    solver_info = {
        "kind": "graph",
        "nodes": int(grid.n_nodes),
        "iterations": len(history) - 1,
        "final_residual": float(history[-1]),
        "newton_history": [float(r) for r in history],
    }
    if "compatibility_defect" in u.diagnostics:
        solver_info["compatibility_defect"] = float(
            u.diagnostics["compatibility_defect"])
    return u, grid, solver_info


def _solve_meridian(scenario: Scenario):
    bc = scenario.boundary
    if isinstance(bc, ContactAngle):
        curve = solve_axisymmetric_profile(
            scenario.slab, scenario.profile, bc.angle(1), bc.angle(2),
            scenario.settings)
        axis_xy = np.zeros(2)
    else:
        data = [_curve_circle_data(bc.curve(p)) for p in (1, 2)]
        (c1, r1), (_, r2) = data
        curve = solve_axisymmetric_fixed_radius(
            scenario.slab, scenario.profile, r1, r2, scenario.settings)
        axis_xy = c1
    solver_info = {
        "kind": "meridian",
        "samples": len(curve.s),
        "contact_radii": {p: curve.contact_radius(p) for p in (1, 2)},
        "contact_angles": {p: curve.contact_angle(p) for p in (1, 2)},
    }
    return curve, axis_xy, solver_info


def _mesh_graph(scenario: Scenario, u: ScalarField):
    stride = _symmetric_stride(u.grid.mask.shape, scenario.mesh_stride)
    mesh = mesh_from_graph(u, stride=stride, plate=None)
    return mesh, {"stride_requested": scenario.mesh_stride, "stride_used": stride}


def _mesh_meridian(scenario: Scenario, curve, axis_xy):
    # subsample the (finely integrated) meridian so axial spacing matches the
    # circumferential spacing; endpoint samples keep the plate contacts exact
    target_ds = 2.0 * np.pi * float(np.mean(curve.x)) / scenario.n_theta
    arclen = float(curve.s[-1] - curve.s[0])
    n_axial = int(np.clip(round(arclen / max(target_ds, 1e-12)) + 1, 16, 257))
    idx = np.unique(np.round(np.linspace(0, len(curve.s) - 1, n_axial)).astype(int))
    mesh = revolve_profile(curve.x[idx], curve.z[idx], n_theta=scenario.n_theta,
                           axis_xy=axis_xy)
    return mesh, {"n_theta": scenario.n_theta, "n_axial": len(idx)}


def _sweep_plan(scenario: Scenario):
    """(directions, mode) — mode is ``axis`` (rotational symmetry expected,
    several directions) or ``plane`` (single mirror line: sweep only along
    its normal)."""
    if scenario.id == "T2" and isinstance(scenario.boundary, FixedBoundary) \
            and len(scenario.boundary.curves) == 1:
        curve = scenario.boundary.curves[0]
        if _curve_circle_data(curve) is None and curve.symmetry_axis is not None:
            _, d = curve.symmetry_axis
            d = np.asarray(d, dtype=float)
            d = d / np.linalg.norm(d)
            b1, b2 = plate_frame(scenario.slab.axis)
            axis3 = d[0] * b1 + d[1] * b2
            normal3 = np.cross(np.asarray(scenario.slab.axis, dtype=float), axis3)
            normal3 /= np.linalg.norm(normal3)
            return np.array([normal3, -normal3]), "plane"
    return scenario.sweep_directions, "axis"


def _expected_axis_center(scenario: Scenario, realization: str):
    """In-plane point the detected axis must pass through, when one is
    pinned by the data (T4 origin, T2 circle centers, disk centers)."""
    if scenario.id == "T4":
        return np.asarray(scenario.boundary.origin, dtype=float)
    if scenario.id == "T2" and isinstance(scenario.boundary, FixedBoundary):
        data = [_curve_circle_data(c) for c in scenario.boundary.curves]
        if all(d is not None for d in data):
            return np.asarray(data[0][0], dtype=float)
    if realization == "meridian" and isinstance(scenario.boundary, ContactAngle):
        return np.zeros(2)
    if scenario.id in ("T1", "T3") and isinstance(scenario.domain, DiskRegion):
        return np.asarray(scenario.domain.center, dtype=float)
    return None


def _lattice_mirror(field: ScalarField) -> Optional[tuple]:
    """``u`` composed with a lattice reflection that maps the mask onto
    itself, or None when the mask has no such mirror.  Returns (mirrored
    field, axis index)."""
    g = field.grid
    lat = field.lattice()
    for axis in range(g.dim):
        if np.array_equal(g.mask, np.flip(g.mask, axis=axis)):
            mirrored = np.flip(lat, axis=axis)
            return ScalarField(g, mirrored[tuple(g.node_index.T)]), axis
    return None


def _self_comparison_checks(scenario: Scenario, u: ScalarField):
    """Touching-principle and ellipticity spot checks of the solution against
    its own lattice mirror (w = u - u o sigma should vanish for symmetric
    data; the hypotheses and the uniform ellipticity bound are verified on
    the genuine nonlinear difference operator)."""
    mirrored = _lattice_mirror(u)
    if mirrored is None:
        return None, None
    u_ref, axis = mirrored
    if not scenario.profile.has_height_derivative:
        return None, None
    w = ScalarField(u.grid, u.values - u_ref.values)
    op = assemble_difference_operator(u, u_ref, scenario.profile)
    interior = u.grid.interior_index
    x0 = int(interior[np.argmax(w.values[interior])])
    verdict = check_interior_touching(op, w, x0)
    touching = verdict.to_payload()
    touching["mirror_axis"] = int(axis)
    k = ellipticity_constant(u, u_ref)
    min_eig = float(np.min(np.linalg.eigvalsh(op.second_order)[:, 0]))
    ellipticity = {
        "constant": float(k),
        "operator_min_eigenvalue": min_eig,
        "mirror_axis": int(axis),
    }
    return touching, ellipticity


# ---------------------------------------------------------------------------
# run_scenario
# ---------------------------------------------------------------------------


class _PipelineStop(Exception):
    """Internal sentinel: the requested last stage has completed."""


def run_scenario(scenario: Scenario, resolution: Optional[float] = None,
                 seed: Optional[int] = None,
                 until: Optional[str] = None) -> VerificationReport:
    """Execute the scenario pipeline and score every applicable check.

    ``resolution``/``seed`` override the scenario's stored values (the CLI
    flags).  ``until`` stops the pipeline after the named stage ("solve",
    "mesh", or "sweep"); criteria of later stages are simply absent.  Stage
    failures are captured into ``report.error`` with the stage name; the
    report is produced either way.
    """
    if resolution is not None or seed is not None:
        scenario = Scenario(**{**scenario.__dict__,
                               "resolution": float(resolution or scenario.resolution),
                               "seed": int(scenario.seed if seed is None else seed)})

    criteria: list = []
    solver_info = symmetry_payload = touching = ellipticity = None
    attachments: dict = {}
    error = None
    stage = "validate"
    try:
        scenario.validate()
        realization = scenario.resolved_realization()

        stage = "solve"
        grid = None
        if realization == "graph":
            u, grid, solver_info = _solve_graph(scenario)
            attachments["field"] = u
            criteria.append(Criterion(
                "solver_converged", solver_info["final_residual"]
                <= scenario.settings.newton_tol,
                value=solver_info["final_residual"],
                tolerance=scenario.settings.newton_tol,
                note="max-norm interior+boundary residual",
            ))
        else:
            curve, axis_xy, solver_info = _solve_meridian(scenario)
            attachments["profile"] = curve
            criteria.append(Criterion(
                "profile_valid", True,
                note="meridian integrates plate to plate, arclength verified",
            ))
        if until == "solve":
            raise _PipelineStop

        stage = "mesh"
        if realization == "graph":
            mesh, mesh_info = _mesh_graph(scenario, u)
        else:
            mesh, mesh_info = _mesh_meridian(scenario, curve, axis_xy)
        solver_info.update(mesh_info)
        if scenario.perturbation is not None:
            p = scenario.perturbation
            mesh = bump_mesh(mesh, np.asarray(p["center"], dtype=float),
                             float(p["amplitude"]), float(p["width"]))
        attachments["mesh"] = mesh
        if until == "mesh":
            raise _PipelineStop

        stage = "sweep"
        directions, mode = _sweep_plan(scenario)
        symmetry_tol = scenario.tolerances.get("deviation",
                                               10.0 * mesh.mesh_h() ** 2)
        report_sym = sweep_mesh(mesh, scenario.slab, directions=directions,
                                symmetry_tol=symmetry_tol,
                                steps=scenario.sweep_steps)
        attachments["symmetry"] = report_sym
        symmetry_payload = report_sym.to_payload()
        symmetry_payload["axis_residual"] = _finite(symmetry_payload["axis_residual"])
        if until == "sweep":
            raise _PipelineStop

        stage = "verify"
        criteria.append(Criterion(
            "sweeps_symmetric", report_sym.verdict == "symmetric",
            value=report_sym.max_deviation, tolerance=symmetry_tol,
            note=f"verdict {report_sym.verdict}",
        ))
        h = scenario.resolution
        if mode == "axis" and scenario.id != "custom":
            axis_tol = scenario.tolerances.get("axis_residual", 1e-5)
            criteria.append(Criterion(
                "axis_found", report_sym.axis is not None,
                note="least-squares intersection of symmetric planes",
            ))
            if report_sym.axis is not None:
                criteria.append(Criterion(
                    "axis_residual", report_sym.axis_residual <= axis_tol,
                    value=report_sym.axis_residual, tolerance=axis_tol,
                ))
        if mode == "plane" and scenario.id == "T2":
            point2d, _ = scenario.boundary.curves[0].symmetry_axis
            b1, b2 = plate_frame(scenario.slab.axis)
            mid = 0.5 * (scenario.slab.lo + scenario.slab.hi)
            alpha_point = (float(point2d[0]) * b1 + float(point2d[1]) * b2
                           + mid * np.asarray(scenario.slab.axis, dtype=float))
            plane_tol = scenario.tolerances.get("plane_offset", 2.0 * h)
            good = [s for s in report_sym.sweeps
                    if s.deviation <= report_sym.tolerance]
            if good:
                worst = max(abs(s.symmetry_plane.signed_distance(alpha_point))
                            for s in good)
                criteria.append(Criterion(
                    "plane_matches_boundary_axis", worst <= plane_tol,
                    value=float(worst), tolerance=plane_tol,
                    note="detected mirror plane contains the curve's own axis",
                ))
            else:
                criteria.append(Criterion(
                    "plane_matches_boundary_axis", False,
                    note="no symmetric sweep direction found",
                ))
        center = _expected_axis_center(scenario, realization)
        if center is not None and mode == "axis":
            center_tol = scenario.tolerances.get(
                "axis_center",
                2.0 * h if realization == "graph" else 1e-6)
            if report_sym.axis is not None:
                b1, b2 = plate_frame(scenario.slab.axis)
                p = report_sym.axis.point
                inplane = np.array([float(p @ b1), float(p @ b2)])
                dist = float(np.linalg.norm(inplane - center))
                criteria.append(Criterion(
                    "axis_through_center", dist <= center_tol,
                    value=dist, tolerance=center_tol,
                    note=f"expected in-plane point {center.tolist()}",
                ))
            else:
                criteria.append(Criterion(
                    "axis_through_center", False,
                    tolerance=center_tol, note="no axis detected",
                ))
        if scenario.id == "T3":
            criteria.append(Criterion(
                "flux_nonincreasing", True,
                note="h(H0) verified nonincreasing on its declared range "
                     "at construction",
            ))

        if realization == "graph":
            stage = "touching"
            touching, ellipticity = _self_comparison_checks(scenario, u)
            if touching is not None:
                criteria.append(Criterion(
                    "touching_self_check",
                    touching["conclusion_status"] == "holds",
                    value=touching["max_abs_w"],
                    tolerance=touching["tolerances"]["tol_conclusion"],
                    note="u vs its lattice mirror under the interior "
                         "touching principle",
                ))
            if ellipticity is not None:
                criteria.append(Criterion(
                    "uniformly_elliptic",
                    ellipticity["constant"] > 0
                    and ellipticity["operator_min_eigenvalue"]
                    >= ellipticity["constant"] * (1 - 1e-12),
                    value=ellipticity["operator_min_eigenvalue"],
                    tolerance=ellipticity["constant"],
                    note="smallest coefficient-matrix eigenvalue must stay "
                         "above the certified ellipticity constant",
                ))
    except _PipelineStop:
        pass
    except Exception as exc:  # noqa: BLE001 - reports must carry any failure
        error = {"stage": stage, "type": type(exc).__name__, "message": str(exc)}

    passed = error is None and all(c.passed for c in criteria)
    return VerificationReport(
        scenario=scenario,
        passed=passed,
        criteria=criteria,
        solver=solver_info,
        symmetry=symmetry_payload,
        touching=touching,
        ellipticity=ellipticity,
        error=error,
        attachments=attachments,
    )


# ---------------------------------------------------------------------------
# artifact export
# ---------------------------------------------------------------------------


def export_artifacts(report: VerificationReport, outdir) -> dict:
    """Write the report plus every available artifact under ``outdir``.

    Produces ``report.json`` always; ``mesh.obj`` (+ ``.loops.json``),
    ``solution.csv`` (graph heights), ``profile.csv`` (meridian), and
    ``sweep_<k>.csv`` deviation profiles when the corresponding attachment
    exists.  Output is deterministic: identical reports produce byte-
    identical files.  Returns {artifact name: path}.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = {}

    path = outdir / "report.json"
    report.save(path)
    written["report"] = path

    mesh = report.attachments.get("mesh")
    if isinstance(mesh, SurfaceMesh):
        path = outdir / "mesh.obj"
        save_obj(mesh, path)
        written["mesh"] = path

    field = report.attachments.get("field")
    if isinstance(field, ScalarField):
        path = outdir / "solution.csv"
        _save_field_csv(field, path)
        written["solution"] = path

    curve = report.attachments.get("profile")
    if curve is not None:
        path = outdir / "profile.csv"
        curve.save_csv(path)
        written["profile"] = path

    sym = report.attachments.get("symmetry")
    if sym is not None:
        for k, sweep in enumerate(sym.sweeps):
            if len(sweep.profile):
                path = outdir / f"sweep_{k}.csv"
                sweep.save_profile_csv(path)
                written[f"sweep_{k}"] = path
    return written


def _save_field_csv(field: ScalarField, path) -> None:
    g = field.grid
    pts = g.points
    with open(Path(path), "w") as fh:
        cols = ["x", "y"][: g.dim] + ["u"]
        fh.write(",".join(cols) + "\n")
        for p, v in zip(pts, field.values):
            row = [repr(float(c)) for c in p] + [repr(float(v))]
            fh.write(",".join(row) + "\n")


def load_field_csv(path, grid: DomainGrid) -> ScalarField:
    """Rebuild a field exported by ``export_artifacts`` on its grid (matched
    by node coordinates)."""
    raw = np.genfromtxt(Path(path), delimiter=",", names=True)
    cols = raw.dtype.names
    pts = np.stack([raw[c] for c in cols[:-1]], axis=1)
    if pts.shape != grid.points.shape or \
            not np.allclose(pts, grid.points, atol=1e-12):
        raise ValueError("field file does not match the grid nodes")
    return ScalarField(grid, np.asarray(raw[cols[-1]], dtype=float))


# ---------------------------------------------------------------------------
# canonical scenarios
# ---------------------------------------------------------------------------


def canonical_scenario(scenario_id: str) -> Scenario:
    """Reference configuration for each scenario class.

    These are the setups shipped as ``scenarios/t*.json``: a contact-angle
    cap (T1), a fixed-radius drum between concentric circles (T2), and the
    two flux problems on a disk (T3, T4), all with height-coupled curvature
    so the solutions are unique without normalization.
    """
    key = scenario_id.upper()
    slab = Slab(axis=(0.0, 0.0, 1.0), lo=-2.0, hi=0.5)
    disk = DiskRegion((0.0, 0.0), 0.8)
    if key == "T1":
        return Scenario(
            id="T1", name="contact-angle cap",
            slab=slab,
            profile=PrescribedH.affine(0.5, 1.0),
            boundary=ContactAngle(1.2),
            domain=disk,
        )
    if key == "T2":
        curves = (
            BoundaryCurve.circle((0.1, -0.05), 0.7, n_vertices=192, plate=1),
            BoundaryCurve.circle((0.1, -0.05), 0.6, n_vertices=192, plate=2),
        )
        return Scenario(
            id="T2", name="fixed concentric circles",
            slab=Slab(axis=(0.0, 0.0, 1.0), lo=0.0, hi=1.0),
            profile=PrescribedH.constant(0.3),
            boundary=FixedBoundary(curves),
            n_theta=128,
        )
    if key == "T3":
        return Scenario(
            id="T3", name="curvature-coupled flux",
            slab=slab,
            profile=PrescribedH.affine(0.5, 1.0),
            boundary=CurvatureFlux(h=AffineMap(1.0, -0.5),
                                   curvature_range=(0.5, 2.0),
                                   boundary_curvature=1.25),
            domain=disk,
        )
    if key == "T4":
        return Scenario(
            id="T4", name="radial flux",
            slab=slab,
            profile=PrescribedH.affine(0.5, 1.0),
            boundary=RadialFlux(0.3, origin=(0.0, 0.0)),
            domain=disk,
        )
    raise ScenarioValidationError(
        f"no canonical scenario for {scenario_id!r} (expected T1..T4)"
    )


def write_canonical_scenarios(directory) -> dict:
    """Write t1.json..t4.json under ``directory``; returns {id: path}."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = {}
    for key in ("T1", "T2", "T3", "T4"):
        path = directory / f"{key.lower()}.json"
        canonical_scenario(key).save(path)
        written[key] = path
    return written
