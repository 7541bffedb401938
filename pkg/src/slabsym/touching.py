"""Discrete touching-principle verifiers.

Two ordered solutions of the same elliptic problem that touch at a point
must coincide; the machinery here checks that statement's hypotheses on a
*discrete* candidate w (typically a difference of two solutions, or a
solution minus its reflection) and then tests the forced conclusion
``w == 0`` within tolerance.

Two verifiers are provided:

* :func:`check_interior_touching` — touch point in the interior; hypotheses
  are L(w) >= 0, w <= 0, w(x0) = 0 (all within tolerance).
* :func:`check_boundary_touching` — touch point on the boundary; adds the
  vanishing inward-normal derivative dw/deta(x0) = 0 and emits a Hopf
  diagnostic (for nontrivial w the one-sided normal derivative at a boundary
  maximum must be strictly negative, never merely small).

A discretization can only confirm these statements up to stencil error, so
every verdict also records the tolerances it used.  Verdicts are plain data
and serialize to JSON for the run reports.

The module also carries the monotone-scheme utilities the property tests
are built on: an M-matrix assembly of -L (upwinding first-order terms when
the mesh Peclet number |B| h / (2k) exceeds 1) and a sparse linear Dirichlet
solver used to manufacture discrete-harmonic probe instances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GridMismatchError, StencilUnavailableError
from .grid import BOUNDARY, INTERIOR, DomainGrid, ScalarField, gradient_all
from .linearization import EllipticOperatorField
from .settings import DEFAULT_TOLERANCES, Tolerances

# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


@dataclass
class Hypothesis:
    """One checked hypothesis: ``ok`` plus, when violated, the smallest
    offending node index and the value observed there."""

    name: str
    ok: bool
    tol: float
    witness: Optional[int] = None
    value: Optional[float] = None

    def to_payload(self) -> dict:
        return {
            "name": self.name,
            "ok": bool(self.ok),
            "tol": float(self.tol),
            "witness": None if self.witness is None else int(self.witness),
            "value": None if self.value is None else float(self.value),
        }


@dataclass
class TouchingVerdict:
    """Outcome of a touching-principle check.

    ``conclusion_status`` is ``"not_applicable"`` exactly when some
    hypothesis failed; otherwise it is ``"holds"`` (max |w| within the
    conclusion tolerance) or ``"violated"`` (with a witness node).
    """

    kind: str                          # "interior" | "boundary"
    touch_node: int
    hypotheses: list
    conclusion_status: str             # "holds" | "violated" | "not_applicable"
    max_abs_w: float
    tolerances: dict
    conclusion_witness: Optional[int] = None
    hopf: Optional[dict] = None

    def __post_init__(self):
        all_ok = all(h.ok for h in self.hypotheses)
        if all_ok == (self.conclusion_status == "not_applicable"):
            raise ValueError(
                "conclusion_status must be not_applicable exactly when a "
                "hypothesis fails"
            )

    @property
    def hypotheses_hold(self) -> bool:
        return all(h.ok for h in self.hypotheses)

    def hypothesis(self, name: str) -> Hypothesis:
        for h in self.hypotheses:
            if h.name == name:
                return h
        raise KeyError(name)

    def to_payload(self) -> dict:
        return {
            "kind": self.kind,
            "touch_node": int(self.touch_node),
            "hypotheses": [h.to_payload() for h in self.hypotheses],
            "conclusion_status": self.conclusion_status,
            "conclusion_witness": (
                None if self.conclusion_witness is None else int(self.conclusion_witness)
            ),
            "max_abs_w": float(self.max_abs_w),
            "hopf": self.hopf,
            "tolerances": {k: float(v) for k, v in self.tolerances.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_payload(), indent=1, sort_keys=True)


def _first_violation(violated: np.ndarray, node_ids: np.ndarray, values: np.ndarray):
    """Smallest violating node index and the value there (deterministic)."""
    hits = np.flatnonzero(violated)
    if len(hits) == 0:
        return None, None
    order = np.argmin(node_ids[hits])
    j = hits[order]
    return int(node_ids[j]), float(values[j])


def _check_common_hypotheses(op, w, x0, tol_L, tol_w):
    """The three hypotheses shared by both verifiers."""
    if not op.grid.same_as(w.grid):
        raise GridMismatchError("operator and candidate live on different grids")
    g = op.grid

    Lw = op.apply(w)
    viol = Lw < -tol_L
    witness, value = _first_violation(viol, g.interior_index, Lw)
    h1 = Hypothesis("operator_sign", witness is None, tol_L, witness, value)

    viol = w.values > tol_w
    witness, value = _first_violation(viol, np.arange(g.n_nodes), w.values)
    h2 = Hypothesis("ordering", witness is None, tol_w, witness, value)

    w0 = float(w.values[x0])
    h3 = Hypothesis("touch", abs(w0) <= tol_w, tol_w,
                    None if abs(w0) <= tol_w else int(x0), w0)
    return [h1, h2, h3]


def _conclude(hypotheses, w, tol_conclusion):
    max_abs = float(np.max(np.abs(w.values)))
    if not all(h.ok for h in hypotheses):
        return "not_applicable", None, max_abs
    if max_abs <= tol_conclusion:
        return "holds", None, max_abs
    witness, _ = _first_violation(
        np.abs(w.values) > tol_conclusion, np.arange(len(w.values)), w.values
    )
    return "violated", witness, max_abs


def check_interior_touching(
    op: EllipticOperatorField,
    w: ScalarField,
    x0: int,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> TouchingVerdict:
    """Verify the interior touching principle on a discrete candidate.

    Hypotheses (each within tolerance): L(w) >= 0 at interior nodes,
    w <= 0 everywhere, w(x0) = 0 with x0 interior.  If all hold, the
    conclusion reports whether max |w| <= tol_conclusion.
    """
    g = op.grid
    if g.node_kind[x0] != INTERIOR:
        raise ValueError(f"touch node {x0} is not interior")
    h = g.h
    tol_L = tolerances.scaled("touching_hypothesis", h)
    tol_w = tolerances.scaled("touching_hypothesis", h)
    tol_c = tolerances.scaled("touching_conclusion", h)

    hyps = _check_common_hypotheses(op, w, x0, tol_L, tol_w)
    status, witness, max_abs = _conclude(hyps, w, tol_c)
    return TouchingVerdict(
        kind="interior",
        touch_node=int(x0),
        hypotheses=hyps,
        conclusion_status=status,
        conclusion_witness=witness,
        max_abs_w=max_abs,
        tolerances={"tol_L": tol_L, "tol_w": tol_w, "tol_conclusion": tol_c},
    )


def normal_derivative(w: ScalarField, boundary_node: int) -> float:
    """dw/deta at a boundary node (eta = inward unit normal), by one-sided
    second-order differencing along the inward ray.

    Samples w at x0 + h eta and x0 + 2h eta by multilinear interpolation and
    applies (-3 w0 + 4 w1 - w2) / (2h).  Where the ray leaves the sampled
    region (very thin domains), falls back to the lattice one-sided gradient
    projected onto eta, which is also second order.
    """
    g = w.grid
    b = np.flatnonzero(g.boundary_index == boundary_node)
    if len(b) == 0:
        raise ValueError(f"node {boundary_node} is not a boundary node")
    eta = g.boundary_normals[b[0]]
    if not np.any(eta):
        raise ValueError(f"boundary node {boundary_node} carries no normal")
    x0 = g.points[boundary_node]
    h = g.h
    samples, valid = w.sample(np.stack([x0 + h * eta, x0 + 2.0 * h * eta]))
    if np.all(valid):
        w0 = w.values[boundary_node]
        return float((-3.0 * w0 + 4.0 * samples[0] - samples[1]) / (2.0 * h))
    grad = gradient_all(w)[boundary_node]
    return float(grad @ eta)


def check_boundary_touching(
    op: EllipticOperatorField,
    w: ScalarField,
    x0: int,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> TouchingVerdict:
    """Verify the boundary touching principle on a discrete candidate.

    On top of the interior hypotheses (with the touch point now on the
    boundary), requires the inward-normal derivative dw/deta(x0) to vanish
    within tolerance.

    Hopf diagnostic: whenever w <= 0, L(w) >= 0 and w(x0) = 0 hold but w is
    *not* identically zero, the observed dw/deta(x0) is reported and flagged
    ``strictly_negative``; a value near zero there would contradict the
    boundary-point lemma and indicates a broken candidate or stencil.
    """
    g = op.grid
    if g.node_kind[x0] != BOUNDARY:
        raise ValueError(f"touch node {x0} is not a boundary node")
    if op.ellipticity <= 0.0:
        raise ValueError("boundary check requires a recorded ellipticity k > 0")
    h = g.h
    tol_L = tolerances.scaled("touching_hypothesis", h)
    tol_w = tolerances.scaled("touching_hypothesis", h)
    tol_c = tolerances.scaled("touching_conclusion", h)

    hyps = _check_common_hypotheses(op, w, x0, tol_L, tol_w)
    dwdeta = normal_derivative(w, x0)
    hyps.append(Hypothesis(
        "normal_derivative", abs(dwdeta) <= tol_L, tol_L,
        None if abs(dwdeta) <= tol_L else int(x0), dwdeta,
    ))

    status, witness, max_abs = _conclude(hyps, w, tol_c)

    hopf = None
    ordered_and_touching = hyps[0].ok and hyps[1].ok and hyps[2].ok
    nontrivial = max_abs > tol_c
    if ordered_and_touching and nontrivial:
        hopf = {
            "applicable": True,
            "normal_derivative": dwdeta,
            "strictly_negative": bool(dwdeta < -tol_L),
        }

    return TouchingVerdict(
        kind="boundary",
        touch_node=int(x0),
        hypotheses=hyps,
        conclusion_status=status,
        conclusion_witness=witness,
        max_abs_w=max_abs,
        hopf=hopf,
        tolerances={"tol_L": tol_L, "tol_w": tol_w, "tol_conclusion": tol_c},
    )


# ---------------------------------------------------------------------------
# monotone schemes and linear solves
# ---------------------------------------------------------------------------


def _axis_shift_matrices(grid: DomainGrid, axis: int):
    """(forward, backward) one-sided first-difference matrices restricted to
    interior rows: (w(+e_a) - w)/h and (w - w(-e_a))/h."""
    shift = np.zeros(grid.dim, dtype=int)
    shift[axis] = 1
    idx = grid.node_index[grid.interior_index]
    me = grid.interior_index
    plus = grid._neighbor_compact(idx, shift)
    minus = grid._neighbor_compact(idx, -shift)
    if np.any(plus < 0) or np.any(minus < 0):
        raise StencilUnavailableError("interior node lost an axis neighbour")
    n = grid.n_nodes
    rows = np.arange(grid.n_interior)
    h = grid.h
    fwd = sp.csr_matrix(
        (np.concatenate([np.full(len(rows), 1.0 / h), np.full(len(rows), -1.0 / h)]),
         (np.concatenate([rows, rows]), np.concatenate([plus, me]))),
        shape=(grid.n_interior, n),
    )
    bwd = sp.csr_matrix(
        (np.concatenate([np.full(len(rows), 1.0 / h), np.full(len(rows), -1.0 / h)]),
         (np.concatenate([rows, rows]), np.concatenate([me, minus]))),
        shape=(grid.n_interior, n),
    )
    return fwd, bwd


def mesh_peclet(op: EllipticOperatorField) -> float:
    """max |B| h / (2k): above 1, centered first-order stencils can break
    the discrete maximum principle and upwinding is required."""
    if op.grid.n_interior == 0:
        return 0.0
    bmax = float(np.max(np.abs(op.first_order))) if op.first_order.size else 0.0
    k = max(op.ellipticity, 1e-300)
    return bmax * op.grid.h / (2.0 * k)


def monotone_system(op: EllipticOperatorField, upwind: Optional[bool] = None):
    """Assemble L as (interior x nodes) rows, upwinding the first-order
    terms when requested (default: automatically when the mesh Peclet
    number exceeds 1).

    Returns ``(matrix, info)`` where ``info`` records whether upwinding was
    used and whether -L passes the M-matrix sign checks (positive diagonal,
    nonpositive off-diagonals, weak diagonal dominance) — the regime in
    which the discrete maximum principle is guaranteed.
    """
    g = op.grid
    if upwind is None:
        upwind = mesh_peclet(op) > 1.0

    sel = sp.csr_matrix(
        (np.ones(g.n_interior), (np.arange(g.n_interior), g.interior_index)),
        shape=(g.n_interior, g.n_nodes),
    )
    mat = sp.csr_matrix((g.n_interior, g.n_nodes))
    for a in range(g.dim):
        for b in range(a, g.dim):
            coeff = op.second_order[:, a, b]
            if b != a:
                coeff = 2.0 * coeff
            mat = mat + sp.diags(coeff) @ (sel @ g.d2(a, b))
    if upwind:
        for a in range(g.dim):
            fwd, bwd = _axis_shift_matrices(g, a)
            bpos = np.maximum(op.first_order[:, a], 0.0)
            bneg = np.minimum(op.first_order[:, a], 0.0)
            mat = mat + sp.diags(bpos) @ fwd + sp.diags(bneg) @ bwd
    else:
        for a in range(g.dim):
            mat = mat + sp.diags(op.first_order[:, a]) @ (sel @ g.d1(a))
    mat = (mat + sp.diags(op.zeroth_order) @ sel).tocsr()

    neg = (-mat).tocsr()
    diag = neg[np.arange(g.n_interior), g.interior_index]
    diag = np.asarray(diag).reshape(-1)
    off = neg.copy()
    off[np.arange(g.n_interior), g.interior_index] = 0.0
    off.eliminate_zeros()
    off_max = float(off.max()) if off.nnz else 0.0
    off_rowsum = np.asarray(np.abs(off).sum(axis=1)).reshape(-1)
    scale = float(np.max(np.abs(diag))) if len(diag) else 1.0
    m_ok = (
        bool(np.all(diag > 0))
        and off_max <= 1e-12 * max(scale, 1.0)
        and bool(np.all(off_rowsum <= diag + 1e-9 * max(scale, 1.0)))
    )
    info = {"upwind": bool(upwind), "m_matrix": m_ok, "peclet": mesh_peclet(op)}
    return mat, info


def solve_linear_dirichlet(
    op: EllipticOperatorField,
    boundary_values,
    rhs=None,
    upwind: Optional[bool] = None,
):
    """Solve L(w) = rhs at interior nodes with w = boundary_values on the
    boundary nodes.  Returns (ScalarField, info from the monotone assembly).

    ``boundary_values`` is either an (n_boundary,) array ordered like
    ``grid.boundary_index`` or a callable of the boundary points.
    """
    g = op.grid
    if callable(boundary_values):
        gvals = np.asarray(boundary_values(g.points[g.boundary_index]), dtype=float)
    else:
        gvals = np.asarray(boundary_values, dtype=float).reshape(-1)
    if gvals.shape != (g.n_boundary,):
        raise GridMismatchError(
            f"boundary data has shape {gvals.shape}, expected ({g.n_boundary},)"
        )
    f = np.zeros(g.n_interior) if rhs is None else np.asarray(rhs, dtype=float)

    interior_rows, info = monotone_system(op, upwind=upwind)
    bsel = sp.csr_matrix(
        (np.ones(g.n_boundary), (np.arange(g.n_boundary), g.boundary_index)),
        shape=(g.n_boundary, g.n_nodes),
    )
    A = sp.vstack([interior_rows, bsel]).tocsc()
    b = np.concatenate([f, gvals])
    w = spla.spsolve(A, b)
    return ScalarField(g, w), info


def maximum_principle_probe(
    op: EllipticOperatorField,
    boundary_values,
    tol: Optional[float] = None,
    upwind: Optional[bool] = None,
) -> dict:
    """Solve L(w) = 0 with the given Dirichlet data on a monotone scheme and
    report whether the discrete maximum principle held: with C <= 0 the
    interior values may not exceed max(0, max boundary value) (+ tol)."""
    g = op.grid
    if tol is None:
        tol = DEFAULT_TOLERANCES.scaled("touching_hypothesis", g.h)
    w, info = solve_linear_dirichlet(op, boundary_values, upwind=upwind)
    bound = max(0.0, float(np.max(w.values[g.boundary_index])))
    interior_max = float(np.max(w.values[g.interior_index]))
    return {
        "field": w,
        "m_matrix": info["m_matrix"],
        "upwind": info["upwind"],
        "interior_max": interior_max,
        "bound": bound,
        "ok": info["m_matrix"] and interior_max <= bound + tol,
    }
