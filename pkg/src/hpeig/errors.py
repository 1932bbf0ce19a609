"""Exception hierarchy shared across the package."""


class HpeigError(Exception):
    """Base class for all package-specific failures."""


class ConfigurationError(HpeigError):
    """Invalid user-supplied configuration (bad domain spec, ranges, files)."""


class GeometryError(HpeigError):
    """Degenerate or inconsistent geometry (nonpositive Jacobian, collapse)."""


class SolverError(HpeigError):
    """Eigenvalue solver failed to converge."""


class MatrixError(HpeigError):
    """A factorization failed (matrix singular or not positive definite)."""


class PoleError(HpeigError):
    """A shift collides with an excluded spectrum point."""


class InvariantViolation(HpeigError):
    """A mathematical invariant that should always hold was violated (bug)."""


class DetectionError(HpeigError):
    """Mode detection could not identify a dominant component."""


class NumericalError(HpeigError):
    """A numerical procedure (bracketing, root refinement) broke down."""


class CapabilityError(HpeigError):
    """Request past the verified range of the implementation."""
