"""Central tolerance record.

All defaults live here so that every module draws from one place.  Tolerances
come in two families: absolute algebraic tolerances (exact identities checked
in floating point) and resolution-scaled tolerances (discretization claims,
expressed as ``factor * h**2`` for a grid spacing or mesh edge length h).
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Defaults used across the library.

    algebraic            -- for identities exact up to rounding
    discretization       -- factor f in f*h^2 for single-field stencil claims
    agreement            -- factor for comparing two discretizations of the
                            same quantity (twice the single-field factor)
    identity_residual    -- factor for the linearization difference identity
    touching_hypothesis  -- factor for operator-sign / field-sign hypotheses
                            in the touching checks (f*h^2)
    touching_conclusion  -- factor for the "vanishes identically" conclusion
    contact              -- factor c in c*mesh_h^2 for sweep contact detection
    symmetry_deviation   -- factor for declaring a reflection symmetric
    plane_refine         -- relative precision (fraction of directional
                            extent) for locating the critical plane offset
    """

    algebraic: float = 1e-10
    discretization: float = 5.0
    agreement: float = 10.0
    identity_residual: float = 20.0
    touching_hypothesis: float = 10.0
    touching_conclusion: float = 50.0
    contact: float = 2.0
    symmetry_deviation: float = 10.0
    plane_refine: float = 1e-8

    def scaled(self, factor_name: str, h: float) -> float:
        """Resolution-scaled tolerance: ``factor * h**2``."""
        return float(getattr(self, factor_name)) * h * h

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_TOLERANCES = Tolerances()
