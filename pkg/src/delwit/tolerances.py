"""Central numeric tolerances.

Every module pulls its thresholds from one frozen record so that a single
place documents what "on the surface", "equidistant" or "decisively
nonzero" mean numerically.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # residual spread allowed in circumcenter distances, relative to radius
    geometric_residual: float = 1e-9
    # |field| for a point claimed to lie on an implicit surface
    on_surface: float = 1e-8
    # |field| target for Newton projection / certificate refinement
    field_zero: float = 1e-10
    # slack when comparing nearest-landmark distances
    tie: float = 1e-9
    # orthonormality defect allowed in affine-flat direction frames
    flat_orthonormal: float = 1e-12
    # closest-approach band around zero flagged as ambiguous rather than decided
    ambiguity_band: float = 1e-7
    # a decisive claim must clear its tolerance by this factor
    decisive_factor: float = 10.0


DEFAULT = Tolerances()
