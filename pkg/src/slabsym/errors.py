"""Exception types shared across the library.

Every failure mode that callers are expected to catch gets its own class so
that tests (and the command line driver) can distinguish "the input violates a
precondition" from "the computation gave up".
"""

from __future__ import annotations


class SlabSymError(Exception):
    """Base class for all library-specific errors."""


class GridTopologyError(SlabSymError):
    """A masked grid violates a structural invariant (connectivity, stencil
    closure, empty interior, ...)."""


class GridMismatchError(SlabSymError):
    """Two fields that must share a grid do not."""


class StencilUnavailableError(SlabSymError):
    """A finite-difference stencil was requested at a node where it cannot be
    formed (non-interior node for centered stencils, or not enough in-domain
    neighbours for one-sided ones)."""


class RankDeficiencyError(SlabSymError):
    """A least-squares fit has too few or too degenerate samples."""


class MeshInvariantError(SlabSymError):
    """A triangle mesh violates a structural invariant (non-manifold edge,
    inconsistent orientation, boundary loops that do not match their
    declaration, loop vertices off their tagged plate)."""


class OrientationError(SlabSymError):
    """A plane or mesh has the wrong orientation for the requested operation
    (e.g. a sweep plane that is not perpendicular to the plates)."""


class EmptyCapError(SlabSymError):
    """A reflection plane cuts off no cap (or leaves no remaining surface),
    so the reflection-asymmetry deviation is undefined."""


class TopologyChangeError(SlabSymError):
    """A profile or mesh operation would change surface topology
    (meridian hitting the rotation axis, degenerate loops, ...)."""


class ProfileRangeError(SlabSymError):
    """A tabulated height profile was evaluated outside its sampled range."""


class UnsupportedProfileError(SlabSymError):
    """The prescribed-curvature profile lacks data required by the operation
    (e.g. no height derivative when assembling the linearized operator)."""


class NonconvergenceError(SlabSymError):
    """An iterative solve failed to reach its tolerance.

    Carries the residual history so callers can report it.
    """

    def __init__(self, message: str, history: list[float] | None = None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class BracketError(SlabSymError):
    """Root bracketing failed (no sign change over the scanned interval)."""


class IncompatibleFluxError(SlabSymError):
    """A pure-flux boundary value problem has no solution: the prescribed
    curvature is height-independent and no normalization was supplied."""


class ScenarioValidationError(SlabSymError):
    """A scenario description violates the preconditions of the boundary
    condition family it names."""
