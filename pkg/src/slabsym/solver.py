"""Discrete solvers for the prescribed-mean-curvature equation in the slab.

Two families:

* Newton solvers for nonparametric graphs u over a plate domain, under
  Dirichlet data or flux data (contact angle, curvature-dependent flux,
  radial flux).  The Newton step reuses the linearization module's operator
  assembled at (u_k, u_k) — the Frechet derivative — so every Newton system
  is uniformly elliptic with a certified constant.
* A shooting solver for axisymmetric profiles spanning the slab: the
  meridian system x' = cos(phi), z' = sin(phi),
  phi' = n H(z) - (n-1) sin(phi)/x, integrated with an adaptive high-order
  Runge-Kutta scheme, with bracketed root-finding on the lower contact
  radius (or on the launch angle, for fixed-radius boundaries).

Contact-angle convention (recorded here, used consistently everywhere): the
angle is measured inside the enclosed body, between the surface and the
plate.  For the meridian this means gamma_lower = phi(0) and
gamma_upper = pi - phi(end); a cylinder has gamma = pi/2 at both plates.
For graphs the capillary form grad u . eta / W = cos(gamma) is imposed,
with eta the inward domain normal.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .curvature import BoundaryCurve, PrescribedH, mc_residual
from .errors import (
    BracketError,
    IncompatibleFluxError,
    NonconvergenceError,
    ProfileRangeError,
    TopologyChangeError,
    UnsupportedProfileError,
)
from .geometry import Slab
from .grid import DomainGrid, ScalarField, differentials
from .linearization import EllipticOperatorField, frechet_operator
from .touching import solve_linear_dirichlet

# ---------------------------------------------------------------------------
# boundary-condition specifications
# ---------------------------------------------------------------------------


def _check_angle(gamma: float, name: str) -> float:
    gamma = float(gamma)
    if not (0.0 < gamma < np.pi):
        raise ValueError(f"{name} must lie strictly between 0 and pi, got {gamma}")
    return gamma


@dataclass(frozen=True)
class ContactAngle:
    """Constant contact angle against each plate, measured inside the body."""

    gamma1: float
    gamma2: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "gamma1", _check_angle(self.gamma1, "gamma1"))
        if self.gamma2 is not None:
            object.__setattr__(self, "gamma2", _check_angle(self.gamma2, "gamma2"))

    def angle(self, plate: int) -> float:
        if plate == 1 or self.gamma2 is None:
            return self.gamma1
        return self.gamma2


@dataclass(frozen=True)
class FixedBoundary:
    """Prescribed boundary curves (one per plate for parametric bodies, one
    for a single graph)."""

    curves: tuple

    def __post_init__(self):
        curves = tuple(self.curves)
        if not curves or not all(isinstance(c, BoundaryCurve) for c in curves):
            raise ValueError("FixedBoundary needs at least one BoundaryCurve")
        object.__setattr__(self, "curves", curves)

    def curve(self, plate: int) -> BoundaryCurve:
        for c in self.curves:
            if c.plate == plate:
                return c
        raise KeyError(f"no boundary curve declared for plate {plate}")


@dataclass(frozen=True)
class CurvatureFlux:
    """Flux data du/deta = h(H0), h nonincreasing, H0 the curvature of the
    plate domain's boundary.  ``boundary_curvature`` supplies H0 (a constant
    or a callable of boundary foot points); ``curvature_range`` declares the
    interval on which h is used and checked."""

    h: Callable[[np.ndarray], np.ndarray]
    curvature_range: tuple
    boundary_curvature: Union[float, Callable]

    def __post_init__(self):
        lo, hi = map(float, self.curvature_range)
        if not hi > lo:
            raise ValueError("curvature_range must be a nonempty interval")
        object.__setattr__(self, "curvature_range", (lo, hi))
        s = np.linspace(lo, hi, 257)
        vals = np.asarray(self.h(s), dtype=float)
        if vals.shape != s.shape:
            raise ValueError("h must map samples to samples")
        if np.any(np.diff(vals) > 1e-12 * max(1.0, float(np.max(np.abs(vals))))):
            raise ValueError("h must be nonincreasing on its declared range")

    def data(self, feet: np.ndarray) -> np.ndarray:
        if callable(self.boundary_curvature):
            H0 = np.asarray(self.boundary_curvature(feet), dtype=float)
        else:
            H0 = np.full(len(feet), float(self.boundary_curvature))
        lo, hi = self.curvature_range
        if np.any(H0 < lo) or np.any(H0 > hi):
            raise ProfileRangeError(
                f"boundary curvature {H0.min():.6g}..{H0.max():.6g} outside the "
                f"declared range [{lo:.6g}, {hi:.6g}]"
            )
        return np.asarray(self.h(H0), dtype=float)


@dataclass(frozen=True)
class RadialFlux:
    """Flux data du/deta = -c r, r the distance to ``origin`` in the plate."""

    c: float
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("RadialFlux constant c must be positive")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))

    def data(self, feet: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(feet - np.asarray(self.origin), axis=1)
        return -self.c * r


@dataclass(frozen=True)
class Dirichlet:
    """Plain boundary heights, for manufactured problems."""

    g: Union[Callable, np.ndarray, float]

    def values(self, points: np.ndarray) -> np.ndarray:
        if callable(self.g):
            return np.asarray(self.g(points), dtype=float)
        g = np.asarray(self.g, dtype=float)
        if g.ndim == 0:
            return np.full(len(points), float(g))
        return g


BoundaryConditionSpec = Union[ContactAngle, FixedBoundary, CurvatureFlux,
                              RadialFlux, Dirichlet]


@dataclass(frozen=True)
class SolverSettings:
    newton_tol: float = 1e-10
    max_iterations: int = 40
    backtracks: int = 8                 # damping: halve the step this many times
    continuation_steps: int = 1         # >1 ramps the curvature amplitude
    flux_normalization: Optional[float] = None   # mean height for pure-flux problems
    shooting_bracket: Optional[tuple] = None
    shooting_scan: int = 64
    shooting_tol: float = 1e-12
    profile_samples: int = 513
    ivp_rtol: float = 1e-11
    ivp_atol: float = 1e-12

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


DEFAULT_SETTINGS = SolverSettings()


# ---------------------------------------------------------------------------
# graph solvers
# ---------------------------------------------------------------------------


def _scaled_profile(profile: PrescribedH, s: float) -> PrescribedH:
    if s == 1.0:
        return profile
    if profile.kind == "constant":
        return PrescribedH.constant(s * profile.value)
    if profile.kind == "affine":
        return PrescribedH.affine(s * profile.intercept, s * profile.slope)
    du = (lambda x, u, grad=None: s * profile.du(x, u, grad)) \
        if profile.has_height_derivative else None
    dgrad = (lambda x, u, grad: s * profile.dgrad(x, u, grad)) \
        if profile.depends_on_gradient else None
    return PrescribedH.general(
        fn=lambda x, u, grad=None: s * profile.evaluate(x, u, grad),
        du=du, dgrad=dgrad,
    )


def _boundary_values(grid: DomainGrid, g) -> np.ndarray:
    pts = grid.points[grid.boundary_index]
    if callable(g):
        vals = np.asarray(g(pts), dtype=float)
    else:
        vals = np.asarray(g, dtype=float)
        if vals.ndim == 0:
            vals = np.full(grid.n_boundary, float(vals))
    if vals.shape != (grid.n_boundary,):
        raise ValueError(
            f"boundary data has shape {vals.shape}, expected ({grid.n_boundary},)"
        )
    if not np.all(np.isfinite(vals)):
        raise ValueError("boundary data must be finite")
    return vals


def _armijo_step(u, delta, residual_fn, merit, settings):
    """Backtracking line search on the l2 merit ||F||_2 (the natural descent
    measure for the Newton direction; the max-norm is not).  Returns the
    accepted iterate or None if no damped step reduces the merit."""
    step = 1.0
    for _ in range(settings.backtracks + 1):
        trial = ScalarField(u.grid, u.values + step * delta)
        try:
            trial_merit, trial_inf = residual_fn(trial)
        except ProfileRangeError:
            step *= 0.5
            continue
        if trial_merit <= (1.0 - 1e-4 * step) * merit \
                or trial_inf <= settings.newton_tol:
            return trial
        step *= 0.5
    return None


def _newton_dirichlet(grid, profile, gvals, settings) -> tuple[ScalarField, list]:
    lap = EllipticOperatorField.laplacian(grid)
    u, _ = solve_linear_dirichlet(lap, gvals)
    u.values[grid.boundary_index] = gvals

    bsel = sp.csr_matrix(
        (np.ones(grid.n_boundary), (np.arange(grid.n_boundary), grid.boundary_index)),
        shape=(grid.n_boundary, grid.n_nodes),
    )

    def measure(field):
        F = mc_residual(field, profile)
        return float(np.linalg.norm(F)), float(np.max(np.abs(F)))

    history = []
    for _ in range(settings.max_iterations):
        F = mc_residual(u, profile)
        rnorm = float(np.max(np.abs(F)))
        history.append(rnorm)
        if rnorm <= settings.newton_tol:
            return u, history
        op = frechet_operator(u, profile)
        J = sp.vstack([op.matrix(), bsel]).tocsc()
        rhs = np.concatenate([-F, np.zeros(grid.n_boundary)])
        delta = spla.spsolve(J, rhs)
        trial = _armijo_step(u, delta, measure, float(np.linalg.norm(F)), settings)
        if trial is None:
            raise NonconvergenceError(
                f"Newton line search failed at residual {rnorm:.3e}",
                history=history,
            )
        u = trial
    F = mc_residual(u, profile)
    history.append(float(np.max(np.abs(F))))
    if history[-1] > settings.newton_tol:
        raise NonconvergenceError(
            f"Newton stalled at residual {history[-1]:.3e} after "
            f"{settings.max_iterations} iterations", history=history,
        )
    return u, history


def solve_graph_dirichlet(
    grid: DomainGrid,
    profile: PrescribedH,
    g,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> ScalarField:
    """Newton solve of mc(u) = n H(x, u) with u = g on the boundary nodes.

    The initial iterate is the discrete harmonic extension of g; with
    ``settings.continuation_steps > 1`` the curvature amplitude is ramped
    up in that many stages, warm-starting each from the previous solution.
    Returns the solution field with a ``diagnostics`` attribute carrying the
    Newton residual history.
    """
    gvals = _boundary_values(grid, g)
    steps = max(1, int(settings.continuation_steps))
    history_all = []
    u = None
    for j in range(1, steps + 1):
        stage = _scaled_profile(profile, j / steps)
        if u is None:
            u, hist = _newton_dirichlet(grid, stage, gvals, settings)
        else:
            u, hist = _newton_warm(grid, stage, gvals, settings, u)
        history_all.extend(hist)
    u.diagnostics = {"newton_history": history_all}
    return u


def _newton_warm(grid, profile, gvals, settings, u0) -> tuple[ScalarField, list]:
    """Newton iteration starting from a supplied iterate (Dirichlet rows)."""
    u = ScalarField(grid, u0.values.copy())
    u.values[grid.boundary_index] = gvals
    bsel = sp.csr_matrix(
        (np.ones(grid.n_boundary), (np.arange(grid.n_boundary), grid.boundary_index)),
        shape=(grid.n_boundary, grid.n_nodes),
    )
    def measure(field):
        F = mc_residual(field, profile)
        return float(np.linalg.norm(F)), float(np.max(np.abs(F)))

    history = []
    for _ in range(settings.max_iterations):
        F = mc_residual(u, profile)
        rnorm = float(np.max(np.abs(F)))
        history.append(rnorm)
        if rnorm <= settings.newton_tol:
            return u, history
        op = frechet_operator(u, profile)
        J = sp.vstack([op.matrix(), bsel]).tocsc()
        delta = spla.spsolve(J, np.concatenate([-F, np.zeros(grid.n_boundary)]))
        trial = _armijo_step(u, delta, measure, float(np.linalg.norm(F)), settings)
        if trial is None:
            raise NonconvergenceError(
                f"warm-started Newton line search failed at {rnorm:.3e}",
                history=history,
            )
        u = trial
    history.append(float(np.max(np.abs(mc_residual(u, profile)))))
    if history[-1] > settings.newton_tol:
        raise NonconvergenceError(
            f"warm-started Newton stalled at {history[-1]:.3e}", history=history
        )
    return u, history


def _flux_feet(grid: DomainGrid) -> np.ndarray:
    """True-boundary foot points of the boundary nodes."""
    nodes = grid.points[grid.boundary_index]
    return nodes - grid.boundary_offsets[:, None] * grid.boundary_normals


def _flux_rows_linear(grid: DomainGrid, G) -> sp.csr_matrix:
    """Rows evaluating grad u . eta at the boundary feet (second order)."""
    rows = None
    for a in range(grid.dim):
        term = sp.diags(grid.boundary_normals[:, a]) @ G[a]
        rows = term if rows is None else rows + term
    return rows.tocsr()


def _estimate_flux_start(grid, profile, total_flux, bracket=(-20.0, 20.0)):
    """Constant initial iterate from the divergence-theorem compatibility
    relation n H(u0) |D| = -(total inward flux)."""
    area = grid.h ** 2 * (grid.n_interior + 0.5 * grid.n_boundary)
    target = -total_flux

    def balance(u0):
        return grid.dim * float(profile.evaluate(np.zeros((1, grid.dim)), [u0])[0]) \
            * area - target

    lo, hi = bracket
    try:
        if balance(lo) * balance(hi) < 0:
            return brentq(balance, lo, hi, xtol=1e-10)
    except (ValueError, ProfileRangeError):
        pass
    return 0.0


def solve_graph_flux(
    grid: DomainGrid,
    profile: PrescribedH,
    bc: BoundaryConditionSpec,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> ScalarField:
    """Newton solve of mc(u) = n H(x, u) under flux boundary data.

    Supported data, all with eta the inward domain normal and evaluated at
    the true-boundary feet of the boundary nodes:

    * ContactAngle:   grad u . eta / W = cos(gamma)
    * CurvatureFlux:  grad u . eta = h(H0)
    * RadialFlux:     grad u . eta = -c r

    The discrete flux rows evaluate grad u at the boundary feet by linear
    extrapolation along the inward normal ray (``DomainGrid.foot_gradient``);
    node-local gradients alone lose an order on the staircase boundary, and
    one-sided second-derivative corrections destabilize Newton on fine grids.

    Pure-flux problems with height-independent H are only solvable up to the
    compatibility relation; either supply a height-dependent profile (the
    physical gravity setting, dH/du > 0 pins the height) or set
    ``settings.flux_normalization`` to the desired mean height, in which case
    an augmented system with a floating compatibility defect is solved.
    """
    if not isinstance(bc, (ContactAngle, CurvatureFlux, RadialFlux)):
        raise TypeError(f"unsupported flux boundary condition {type(bc).__name__}")
    normalize = settings.flux_normalization
    if not profile.depends_on_height and normalize is None:
        raise IncompatibleFluxError(
            "flux data with height-independent curvature fixes the solution only "
            "up to the compatibility relation; use a height-dependent profile or "
            "set settings.flux_normalization"
        )

    feet = _flux_feet(grid)
    eta = grid.boundary_normals
    G = grid.foot_gradient()
    lin_rows = _flux_rows_linear(grid, G)

    if isinstance(bc, ContactAngle):
        data = np.full(grid.n_boundary, np.cos(bc.angle(1)))
    else:
        data = bc.data(feet)
    total = float(np.sum(data)) * grid.h  # crude arc-length weight, start guess only

    u0 = _estimate_flux_start(grid, profile, total) if profile.depends_on_height \
        else (normalize or 0.0)
    u = ScalarField(grid, np.full(grid.n_nodes, u0))

    def boundary_residual(field):
        gmat = np.stack([G[a] @ field.values for a in range(grid.dim)], axis=1)
        q = np.einsum("ij,ij->i", eta, gmat)
        if isinstance(bc, ContactAngle):
            W = np.sqrt(1.0 + np.einsum("ij,ij->i", gmat, gmat))
            return q / W - data, gmat, W
        return q - data, gmat, None

    def boundary_jacobian(gmat, W):
        if not isinstance(bc, ContactAngle):
            return lin_rows
        q = np.einsum("ij,ij->i", eta, gmat)
        rows = None
        for a in range(grid.dim):
            coeff = eta[:, a] / W - q * gmat[:, a] / W ** 3
            term = sp.diags(coeff) @ G[a]
            rows = term if rows is None else rows + term
        return rows.tocsr()

    def measure(field):
        Fi = mc_residual(field, profile)
        Fb, _, _ = boundary_residual(field)
        merit = float(np.hypot(np.linalg.norm(Fi), np.linalg.norm(Fb)))
        return merit, float(max(np.max(np.abs(Fi)), np.max(np.abs(Fb))))

    if normalize is not None and not profile.depends_on_height:
        return _newton_flux_normalized(
            grid, profile, boundary_residual, boundary_jacobian, u, normalize,
            settings,
        )

    history = []
    for _ in range(settings.max_iterations):
        Fi = mc_residual(u, profile)
        Fb, gmat, W = boundary_residual(u)
        rnorm = float(max(np.max(np.abs(Fi)), np.max(np.abs(Fb))))
        history.append(rnorm)
        if rnorm <= settings.newton_tol:
            break
        op = frechet_operator(u, profile)
        J = sp.vstack([op.matrix(), boundary_jacobian(gmat, W)]).tocsc()
        delta = spla.spsolve(J, np.concatenate([-Fi, -Fb]))

        merit = float(np.hypot(np.linalg.norm(Fi), np.linalg.norm(Fb)))
        trial = _armijo_step(u, delta, measure, merit, settings)
        if trial is None:
            raise NonconvergenceError(
                f"flux Newton line search failed at residual {rnorm:.3e}",
                history=history,
            )
        u = trial
    else:
        _, rinf = measure(u)
        history.append(rinf)
        if rinf > settings.newton_tol:
            raise NonconvergenceError(
                f"flux Newton stalled at residual {rinf:.3e}",
                history=history,
            )
    u.diagnostics = {"newton_history": history}
    return u


def _newton_flux_normalized(grid, profile, boundary_residual, boundary_jacobian,
                            u, normalize, settings) -> ScalarField:
    """Pure-flux Newton with the compatibility defect as a joint unknown.

    The interior equations are augmented with a floating constant lam (the
    amount by which the prescribed curvature must be shifted for the flux
    data to be compatible) and the mean height is pinned to ``normalize``.
    Newton acts on (u, lam) together so the line search sees a residual that
    can actually reach zero.
    """
    n = grid.n_nodes
    lam = 0.0

    def full_residual(field, lam_val):
        Fi = mc_residual(field, profile) + lam_val
        Fb, gmat, W = boundary_residual(field)
        defect = float(np.mean(field.values)) - normalize
        merit = float(np.sqrt(
            np.linalg.norm(Fi) ** 2 + np.linalg.norm(Fb) ** 2 + defect ** 2
        ))
        rinf = float(max(np.max(np.abs(Fi)), np.max(np.abs(Fb)), abs(defect)))
        return Fi, Fb, gmat, W, defect, merit, rinf

    history = []
    for _ in range(settings.max_iterations):
        Fi, Fb, gmat, W, defect, merit, rinf = full_residual(u, lam)
        history.append(rinf)
        if rinf <= settings.newton_tol:
            break
        Ji = frechet_operator(u, profile).matrix()
        ones = sp.csr_matrix(np.ones((grid.n_interior, 1)))
        zb = sp.csr_matrix((grid.n_boundary, 1))
        mean_row = sp.hstack([
            sp.csr_matrix(np.full((1, n), 1.0 / n)), sp.csr_matrix((1, 1))
        ])
        J = sp.vstack([
            sp.hstack([Ji, ones]),
            sp.hstack([boundary_jacobian(gmat, W), zb]),
            mean_row,
        ]).tocsc()
        delta = spla.spsolve(J, np.concatenate([-Fi, -Fb, [-defect]]))

        step, accepted = 1.0, None
        for _ in range(settings.backtracks + 1):
            trial = ScalarField(grid, u.values + step * delta[:n])
            lam_t = lam + step * delta[n]
            try:
                _, _, _, _, _, tmerit, tinf = full_residual(trial, lam_t)
            except ProfileRangeError:
                step *= 0.5
                continue
            if tmerit <= (1.0 - 1e-4 * step) * merit or tinf <= settings.newton_tol:
                accepted = (trial, lam_t)
                break
            step *= 0.5
        if accepted is None:
            raise NonconvergenceError(
                f"normalized flux Newton line search failed at {rinf:.3e}",
                history=history,
            )
        u, lam = accepted
    else:
        *_, rinf = full_residual(u, lam)
        history.append(rinf)
        if rinf > settings.newton_tol:
            raise NonconvergenceError(
                f"normalized flux Newton stalled at residual {rinf:.3e}",
                history=history,
            )
    u.diagnostics = {"newton_history": history, "compatibility_defect": lam}
    return u


# ---------------------------------------------------------------------------
# axisymmetric profiles
# ---------------------------------------------------------------------------


@dataclass
class ProfileCurve:
    """Meridian of an axisymmetric surface between the plates, sampled
    uniformly in arclength.  ``contacts`` maps plate -> (radius, angle)."""

    s: np.ndarray
    x: np.ndarray
    z: np.ndarray
    phi: np.ndarray
    contacts: dict

    def __post_init__(self):
        for name in ("s", "x", "z", "phi"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        n = len(self.s)
        if not (len(self.x) == len(self.z) == len(self.phi) == n) or n < 5:
            raise ValueError("profile needs >= 5 aligned samples")

    def validate(self, tol: float = 1e-8) -> None:
        if np.any(self.x <= 0):
            raise TopologyChangeError("profile radius must stay positive")
        dz = np.diff(self.z)
        if not (np.all(dz >= -1e-12) or np.all(dz <= 1e-12)):
            raise ValueError("profile height must be monotone along the meridian")
        # arclength parametrization: |(x', z')| = 1, checked with a 5-point
        # stencil on the uniform samples
        ds = self.s[1] - self.s[0]
        if not np.allclose(np.diff(self.s), ds, rtol=1e-9, atol=1e-12):
            raise ValueError("samples must be uniform in arclength")

        def d5(f):
            return (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * ds)

        speed = np.hypot(d5(self.x), d5(self.z))
        worst = float(np.max(np.abs(speed - 1.0)))
        if worst > tol:
            raise ValueError(
                f"parametrization is not arclength (|(x',z')| off by {worst:.3e})"
            )

    def contact_radius(self, plate: int) -> float:
        return float(self.contacts[plate][0])

    def contact_angle(self, plate: int) -> float:
        return float(self.contacts[plate][1])

    def save_csv(self, path) -> None:
        with open(Path(path), "w") as fh:
            fh.write("s,x,z,phi\n")
            for row in zip(self.s, self.x, self.z, self.phi):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load_csv(cls, path) -> "ProfileCurve":
        raw = np.genfromtxt(Path(path), delimiter=",", names=True)
        s, x, z, phi = raw["s"], raw["x"], raw["z"], raw["phi"]
        contacts = {
            1: (float(x[0]), float(phi[0])),
            2: (float(x[-1]), float(np.pi - phi[-1])),
        }
        return cls(s, x, z, phi, contacts)


def _meridian_rhs(profile: PrescribedH, n: int):
    def rhs(s, y):
        x, z, phi = y
        H = float(profile.evaluate(np.zeros((1, 1)), [z])[0])
        return [np.cos(phi), np.sin(phi), n * H - (n - 1) * np.sin(phi) / x]
    return rhs


def _integrate_meridian(profile, n, slab: Slab, x0, phi0, settings):
    """Integrate the meridian from plate 1 until plate 2 (or failure).

    Returns (solution, status) with status in {"top", "axis", "turned",
    "ran_out"}.
    """
    def hit_top(s, y):
        return y[1] - slab.hi
    hit_top.terminal = True
    hit_top.direction = 1

    def hit_axis(s, y):
        return y[0] - 1e-9
    hit_axis.terminal = True
    hit_axis.direction = -1

    def turned(s, y):
        return np.sin(y[2]) - 1e-12
    turned.terminal = True
    turned.direction = -1

    s_max = 40.0 * slab.width + 40.0 * x0
    sol = solve_ivp(
        _meridian_rhs(profile, n), (0.0, s_max), [x0, slab.lo, phi0],
        events=(hit_top, hit_axis, turned), dense_output=True,
        rtol=settings.ivp_rtol, atol=settings.ivp_atol, method="DOP853",
    )
    if sol.status == 1:
        if len(sol.t_events[0]):
            return sol, "top"
        if len(sol.t_events[1]):
            return sol, "axis"
        return sol, "turned"
    return sol, "ran_out"


def _profile_from_solution(sol, s_end, settings, gamma1) -> ProfileCurve:
    s = np.linspace(0.0, s_end, settings.profile_samples)
    states = sol.sol(s)
    x, z, phi = states
    contacts = {
        1: (float(x[0]), float(gamma1)),
        2: (float(x[-1]), float(np.pi - phi[-1])),
    }
    return ProfileCurve(s, x, z, phi, contacts)


def solve_axisymmetric_profile(
    slab: Slab,
    profile: PrescribedH,
    gamma1: float,
    gamma2: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
    n: int = 2,
) -> ProfileCurve:
    """Shoot on the lower contact radius so the meridian leaves plate 1 at
    angle gamma1 and meets plate 2 at angle gamma2.

    The profile must depend on position only through the height.  A sign
    change of the upper-angle mismatch is located by scanning the bracket
    (``settings.shooting_bracket``, default (0.05 w, 40 w) with w the plate
    separation) and then polished by bracketed root-finding.
    """
    gamma1 = _check_angle(gamma1, "gamma1")
    gamma2 = _check_angle(gamma2, "gamma2")
    if profile.depends_on_gradient:
        raise UnsupportedProfileError(
            "axisymmetric meridians require height-only curvature profiles"
        )
    phi0 = gamma1

    statuses = {}

    def mismatch(r0):
        sol, status = _integrate_meridian(profile, n, slab, r0, phi0, settings)
        statuses[r0] = status
        if status != "top":
            return None
        return float(np.pi - sol.y_events[0][0][2]) - gamma2

    lo, hi = settings.shooting_bracket or (0.05 * slab.width, 40.0 * slab.width)
    radii = np.geomspace(lo, hi, settings.shooting_scan)
    vals = [mismatch(r) for r in radii]
    bracket = None
    for (ra, va), (rb, vb) in zip(zip(radii, vals), zip(radii[1:], vals[1:])):
        if va is not None and vb is not None and va * vb <= 0.0:
            bracket = (ra, rb)
            break
    if bracket is None:
        reached = [v for v in vals if v is not None]
        if not reached:
            kinds = set(statuses.values())
            if kinds == {"axis"}:
                raise TopologyChangeError(
                    "every trial meridian collapsed onto the rotation axis"
                )
            raise BracketError(
                f"no trial meridian reached the upper plate (statuses: {sorted(kinds)})"
            )
        raise BracketError(
            f"upper-angle mismatch does not change sign on [{lo:.4g}, {hi:.4g}] "
            f"(range {min(reached):.4g}..{max(reached):.4g})"
        )

    r_star = brentq(lambda r: mismatch(r), *bracket, xtol=settings.shooting_tol)
    sol, status = _integrate_meridian(profile, n, slab, r_star, phi0, settings)
    if status != "top":
        raise TopologyChangeError(f"polished meridian failed with status {status!r}")
    s_end = float(sol.t_events[0][0])
    curve = _profile_from_solution(sol, s_end, settings, gamma1)
    curve.validate()
    return curve


def solve_axisymmetric_fixed_radius(
    slab: Slab,
    profile: PrescribedH,
    r1: float,
    r2: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
    n: int = 2,
) -> ProfileCurve:
    """Shoot on the launch angle so the meridian starts at radius r1 on
    plate 1 and lands at radius r2 on plate 2 (fixed circular boundaries)."""
    if r1 <= 0 or r2 <= 0:
        raise ValueError("contact radii must be positive")
    if profile.depends_on_gradient:
        raise UnsupportedProfileError(
            "axisymmetric meridians require height-only curvature profiles"
        )

    def mismatch(phi0):
        sol, status = _integrate_meridian(profile, n, slab, r1, phi0, settings)
        if status != "top":
            return None
        return float(sol.y_events[0][0][0]) - r2

    eps = 1e-6
    angles = np.linspace(eps, np.pi - eps, settings.shooting_scan)
    vals = [mismatch(a) for a in angles]
    bracket = None
    for (aa, va), (ab, vb) in zip(zip(angles, vals), zip(angles[1:], vals[1:])):
        if va is not None and vb is not None and va * vb <= 0.0:
            bracket = (aa, ab)
            break
    if bracket is None:
        raise BracketError(
            "landing-radius mismatch does not change sign over launch angles"
        )
    phi_star = brentq(lambda a: mismatch(a), *bracket, xtol=settings.shooting_tol)
    sol, status = _integrate_meridian(profile, n, slab, r1, phi_star, settings)
    if status != "top":
        raise TopologyChangeError(f"polished meridian failed with status {status!r}")
    s_end = float(sol.t_events[0][0])
    curve = _profile_from_solution(sol, s_end, settings, phi_star)
    curve.validate()
    return curve
