"""Linearized elliptic operator for differences of prescribed-curvature
graphs.

For two height fields u and ubar on the same grid, the difference
w = u - ubar satisfies a linear second-order equation

    L(w) = sum_ij A^ij w_ij + sum_i B^i w_i + C w
         = [mc(u) - n H(u)] - [mc(ubar) - n H(ubar)],

whose coefficients are integrals over the convex homotopy
u^t = ubar + t w, t in [0, 1]:

    A^ij = int_0^1 a_ij(grad u^t) dt,
    B^i  = int_0^1 b_i(grad u^t, Hess u^t) dt  (- gradient terms of H if any),
    C    = -n int_0^1 dH/du(x, u^t) dt,

with a_ij the coefficient matrix of the expanded operator and b_i the
first-order remainder of its homotopy derivative.  In particular L(w)
vanishes (within twice the solve residual plus quadrature error) whenever
both fields solve the same equation — the input the touching checks need.

The zeroth-order coefficient carries the minus sign so that L is the honest
difference operator; profiles nondecreasing in height therefore give C <= 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .curvature import PrescribedH
from .errors import GridMismatchError, UnsupportedProfileError
from .grid import DomainGrid, ScalarField, differentials

# ---------------------------------------------------------------------------
# pointwise coefficients
# ---------------------------------------------------------------------------


def pointwise_aij(grad) -> np.ndarray:
    """Coefficient matrix of the expanded operator at gradient(s) g:

        a_ij = delta_ij / W - g_i g_j / W^3,   W = sqrt(1 + |g|^2).

    Symmetric positive definite with eigenvalues 1/W^3 (eigenvector along g)
    and 1/W (multiplicity dim-1), hence smallest eigenvalue 1/W^3.
    """
    g = np.asarray(grad, dtype=float)
    single = g.ndim == 1
    g = np.atleast_2d(g)
    W2 = 1.0 + np.einsum("ij,ij->i", g, g)
    W = np.sqrt(W2)
    n = g.shape[1]
    out = np.eye(n)[None, :, :] / W[:, None, None]
    out = out - np.einsum("i,ij,ik->ijk", 1.0 / (W2 * W), g, g)
    return out[0] if single else out


def aij_eigenvalues(grad) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigenvalues of pointwise_aij: (1/W^3, 1/W)."""
    g = np.atleast_2d(np.asarray(grad, dtype=float))
    W2 = 1.0 + np.einsum("ij,ij->i", g, g)
    W = np.sqrt(W2)
    return 1.0 / (W2 * W), 1.0 / W


def pointwise_bi(grad, hess) -> np.ndarray:
    """First-order coefficient of the homotopy derivative of the expanded
    operator at a single field state (gradient g, Hessian D2):

        b_k = -2 (D2 g)_k / W^3 - tr(D2) g_k / W^3 + 3 (g.D2 g) g_k / W^5.
    """
    g = np.asarray(grad, dtype=float)
    single = g.ndim == 1
    g = np.atleast_2d(g)
    H = np.asarray(hess, dtype=float)
    H = H.reshape((-1,) + H.shape[-2:])
    W2 = 1.0 + np.einsum("ij,ij->i", g, g)
    W3 = W2 * np.sqrt(W2)
    W5 = W3 * W2
    Hg = np.einsum("ijk,ik->ij", H, g)
    trH = np.einsum("ijj->i", H)
    gHg = np.einsum("ij,ij->i", g, Hg)
    out = (-2.0 * Hg - trH[:, None] * g) / W3[:, None] + 3.0 * (gHg / W5)[:, None] * g
    return out[0] if single else out


def verify_ellipticity_bound(grad_samples, xi_samples) -> float:
    """Worst slack in the lower bound  xi^T a(g) xi >= |xi|^2 / W(g)^3
    over paired samples; nonnegative (up to rounding) always.

    Returns min over samples of (form - bound); callers assert >= -tol.
    """
    g = np.atleast_2d(np.asarray(grad_samples, dtype=float))
    xi = np.atleast_2d(np.asarray(xi_samples, dtype=float))
    if g.shape != xi.shape:
        raise ValueError("gradient and direction samples must pair up")
    a = pointwise_aij(g)
    form = np.einsum("ij,ijk,ik->i", xi, a, xi)
    W2 = 1.0 + np.einsum("ij,ij->i", g, g)
    bound = np.einsum("ij,ij->i", xi, xi) / (W2 * np.sqrt(W2))
    return float(np.min(form - bound))


# ---------------------------------------------------------------------------
# assembled operator fields
# ---------------------------------------------------------------------------


@dataclass
class EllipticOperatorField:
    """Coefficients of L at the interior nodes of a grid, plus the certified
    ellipticity constant k with  xi^T A xi >= k |xi|^2  at every node."""

    grid: DomainGrid
    second_order: np.ndarray   # (n_interior, dim, dim)
    first_order: np.ndarray    # (n_interior, dim)
    zeroth_order: np.ndarray   # (n_interior,)
    ellipticity: float

    def __post_init__(self):
        ni, d = self.grid.n_interior, self.grid.dim
        self.second_order = np.asarray(self.second_order, dtype=float).reshape(ni, d, d)
        self.first_order = np.asarray(self.first_order, dtype=float).reshape(ni, d)
        self.zeroth_order = np.asarray(self.zeroth_order, dtype=float).reshape(ni)
        if not self.ellipticity > 0:
            raise ValueError("ellipticity constant must be positive")

    @classmethod
    def laplacian(cls, grid: DomainGrid) -> "EllipticOperatorField":
        """The plain Laplacian as an operator field (A = I, B = 0, C = 0)."""
        ni, d = grid.n_interior, grid.dim
        A = np.tile(np.eye(d), (ni, 1, 1))
        return cls(grid, A, np.zeros((ni, d)), np.zeros(ni), 1.0)

    def apply(self, w: ScalarField) -> np.ndarray:
        """L(w) at the interior nodes, via centered stencils."""
        if not self.grid.same_as(w.grid):
            raise GridMismatchError("operator and field live on different grids")
        d = differentials(w)
        out = np.einsum("ijk,ijk->i", self.second_order, d.hessian)
        out += np.einsum("ij,ij->i", self.first_order, d.gradient)
        out += self.zeroth_order * w.values[self.grid.interior_index]
        return out

    def matrix(self) -> sp.csr_matrix:
        """Sparse (n_interior x n_nodes) matrix of L using the grid stencils.
        Boundary closure rows are the caller's business."""
        g = self.grid
        sel = sp.csr_matrix(
            (np.ones(g.n_interior), (np.arange(g.n_interior), g.interior_index)),
            shape=(g.n_interior, g.n_nodes),
        )
        mat = sp.csr_matrix((g.n_interior, g.n_nodes))
        for a in range(g.dim):
            for b in range(a, g.dim):
                coeff = self.second_order[:, a, b]
                if b != a:
                    coeff = 2.0 * coeff
                mat = mat + sp.diags(coeff) @ (sel @ g.d2(a, b))
        for a in range(g.dim):
            mat = mat + sp.diags(self.first_order[:, a]) @ (sel @ g.d1(a))
        mat = mat + sp.diags(self.zeroth_order) @ sel
        return mat.tocsr()

    def to_payload(self) -> dict:
        g = self.grid
        pts = g.points[g.interior_index]
        return {
            "dim": g.dim,
            "spacing": g.h,
            "ellipticity": self.ellipticity,
            "nodes": [
                {
                    "x": [float(c) for c in pts[i]],
                    "A": [[float(v) for v in row] for row in self.second_order[i]],
                    "B": [float(v) for v in self.first_order[i]],
                    "C": float(self.zeroth_order[i]),
                }
                for i in range(g.n_interior)
            ],
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_payload(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def ellipticity_constant(u: ScalarField, ubar: ScalarField) -> float:
    """k = 1 / max over interior nodes of max(W_u^3, W_ubar^3): a uniform
    lower bound for the smallest eigenvalue of the homotopy-averaged A."""
    if not u.grid.same_as(ubar.grid):
        raise GridMismatchError("fields live on different grids")
    Wu = differentials(u).slope_factor
    Wb = differentials(ubar).slope_factor
    wmax = max(float(np.max(Wu)), float(np.max(Wb)))
    return 1.0 / wmax**3


def assemble_difference_operator(
    u: ScalarField,
    ubar: ScalarField,
    profile: PrescribedH,
    panels: int = 32,
) -> EllipticOperatorField:
    """Coefficients of the difference operator for the pair (u, ubar) by
    composite Simpson quadrature over the homotopy parameter (``panels``
    Simpson panels, i.e. 2*panels+1 integrand samples)."""
    if not u.grid.same_as(ubar.grid):
        raise GridMismatchError("fields live on different grids")
    if panels < 1:
        raise ValueError("need at least one quadrature panel")
    if profile.depends_on_height and not profile.has_height_derivative:
        raise UnsupportedProfileError(
            "profile depends on height but exposes no height derivative"
        )

    g = u.grid
    n = g.dim
    du = differentials(u)
    db = differentials(ubar)
    gw = du.gradient - db.gradient
    hw = du.hessian - db.hessian
    uw = (u.values - ubar.values)[g.interior_index]
    ub_int = ubar.values[g.interior_index]
    pts = g.points[g.interior_index]

    m = 2 * panels
    ts = np.linspace(0.0, 1.0, m + 1)
    weights = np.ones(m + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    weights *= (1.0 / m) / 3.0

    A = np.zeros((g.n_interior, n, n))
    B = np.zeros((g.n_interior, n))
    C = np.zeros(g.n_interior)
    for t, wgt in zip(ts, weights):
        gt = db.gradient + t * gw
        ht = db.hessian + t * hw
        A += wgt * pointwise_aij(gt)
        B += wgt * pointwise_bi(gt, ht)
        ut = ub_int + t * uw
        if profile.depends_on_height:
            C -= wgt * n * profile.du(pts, ut, gt)
        if profile.depends_on_gradient:
            B -= wgt * n * profile.dgrad(pts, ut, gt)

    k = ellipticity_constant(u, ubar)
    return EllipticOperatorField(g, A, B, C, k)


def frechet_operator(u: ScalarField, profile: PrescribedH) -> EllipticOperatorField:
    """Linearization at a single state (the homotopy integral collapsed to a
    point evaluation): the Newton Jacobian coefficients."""
    g = u.grid
    d = differentials(u)
    A = pointwise_aij(d.gradient)
    B = pointwise_bi(d.gradient, d.hessian)
    C = np.zeros(g.n_interior)
    pts = g.points[g.interior_index]
    ui = u.values[g.interior_index]
    if profile.depends_on_height:
        C = -g.dim * profile.du(pts, ui, d.gradient)
    if profile.depends_on_gradient:
        B = B - g.dim * profile.dgrad(pts, ui, d.gradient)
    k = 1.0 / float(np.max(d.slope_factor)) ** 3
    return EllipticOperatorField(g, A, B, C, k)
