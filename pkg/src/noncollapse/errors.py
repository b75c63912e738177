"""Exception types shared across the package."""


class NoncollapseError(Exception):
    """Base class for all package-specific errors."""


class ConeViolation(NoncollapseError):
    """Principal curvatures fell outside the admissible cone of the speed."""


class SpeedParseError(NoncollapseError):
    """A speed selection string could not be parsed."""


class DegenerateSpacing(NoncollapseError):
    """Adjacent polyline nodes are too close relative to the diameter."""


class AxisViolation(NoncollapseError):
    """An axisymmetric profile dipped below the axis or touched it off-endpoint."""


class CoincidentPoints(NoncollapseError):
    """Two-point quantity requested for (numerically) identical points."""


class NonPositiveSpeed(NoncollapseError):
    """A ratio series requires F > 0 everywhere on every snapshot."""


class NonConvexInput(NoncollapseError):
    """Operation requires a convex body (all principal curvatures positive)."""


class InitialContact(NoncollapseError):
    """Containment run started with touching or overlapping bodies."""


class ResampleBoundary(NoncollapseError):
    """A material time derivative window straddled a resampling event."""


class Instability(NoncollapseError):
    """Time stepping produced non-finite coordinates."""


class ConfigParseError(NoncollapseError):
    """Configuration input is not syntactically valid."""


class ConfigValidationError(NoncollapseError):
    """Configuration is syntactically valid but semantically wrong."""
