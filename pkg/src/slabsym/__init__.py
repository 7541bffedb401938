"""Numerical laboratory for symmetry of prescribed-mean-curvature surfaces
between two parallel plates.

The package has three layers:

* solvers — graph and axisymmetric-meridian solutions of ``div(grad u / W) =
  n H(x, u)`` under contact-angle, fixed-boundary, and flux boundary data
  (:mod:`slabsym.solver`, :mod:`slabsym.curvature`, :mod:`slabsym.grid`);
* analysis — linearization of the curvature operator between two solutions,
  ellipticity certificates, and discrete touching-principle checks
  (:mod:`slabsym.linearization`, :mod:`slabsym.touching`);
* symmetry detection — reflection sweeps over triangulated surfaces with
  first-touch classification and axis extraction (:mod:`slabsym.mesh`,
  :mod:`slabsym.moving_plane`), wrapped into declarative end-to-end
  verification scenarios (:mod:`slabsym.scenarios`, CLI ``slab-symmetry``).
"""

from .curvature import (
    BoundaryCurve,
    PrescribedH,
    boundary_mean_curvature,
    eval_H,
    mc_divergence_form,
    mc_expanded,
    mc_residual,
)
from .errors import (
    BracketError,
    EmptyCapError,
    GridMismatchError,
    GridTopologyError,
    IncompatibleFluxError,
    MeshInvariantError,
    NonconvergenceError,
    OrientationError,
    ProfileRangeError,
    RankDeficiencyError,
    ScenarioValidationError,
    SlabSymError,
    StencilUnavailableError,
    TopologyChangeError,
    UnsupportedProfileError,
)
from .geometry import Line, Plane, Slab, plate_frame, reflect_points
from .grid import (
    AnnulusRegion,
    BoxRegion,
    DiskRegion,
    DomainGrid,
    IntervalRegion,
    PolygonRegion,
    ScalarField,
)
from .linearization import (
    EllipticOperatorField,
    aij_eigenvalues,
    assemble_difference_operator,
    ellipticity_constant,
    frechet_operator,
    pointwise_aij,
    pointwise_bi,
    verify_ellipticity_bound,
)
from .mesh import (
    MeshDistanceIndex,
    SurfaceMesh,
    bump_mesh,
    close_boundary_loops,
    ellipsoid_mesh,
    load_obj,
    mesh_from_graph,
    monge_patch,
    point_triangle_distance,
    ray_parity_inside,
    revolve_profile,
    save_obj,
    sphere_mesh,
)
from .moving_plane import (
    SweepResult,
    SymmetryReport,
    extract_symmetry_axis,
    first_touch,
    reflect_and_compare,
    sweep_direction,
    sweep_directions_for,
    sweep_mesh,
)
from .scenarios import (
    AffineMap,
    Criterion,
    Scenario,
    TabulatedMap,
    VerificationReport,
    canonical_scenario,
    export_artifacts,
    run_scenario,
    write_canonical_scenarios,
)
from .solver import (
    DEFAULT_SETTINGS,
    ContactAngle,
    CurvatureFlux,
    Dirichlet,
    FixedBoundary,
    ProfileCurve,
    RadialFlux,
    SolverSettings,
    solve_axisymmetric_fixed_radius,
    solve_axisymmetric_profile,
    solve_graph_dirichlet,
    solve_graph_flux,
)
from .touching import (
    Hypothesis,
    TouchingVerdict,
    check_boundary_touching,
    check_interior_touching,
    maximum_principle_probe,
    mesh_peclet,
    monotone_system,
    normal_derivative,
    solve_linear_dirichlet,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
