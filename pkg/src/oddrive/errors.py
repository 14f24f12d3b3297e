"""Exception types shared across the package."""


class OddriveError(Exception):
    """Base class for all package-specific errors."""


class NonPositiveSpacing(OddriveError):
    """Wheel-group spacing d is zero or below the admissible minimum."""


class SpacingOutOfRange(OddriveError):
    """Spacing d lies outside the geometry's [d_min, d_max] interval."""


class SingularGeometry(OddriveError):
    """The wheel-to-body map is singular (sigma1 vanishes) for this geometry."""

    def __init__(self, message, sigma1=None):
        super().__init__(message)
        self.sigma1 = sigma1


class NonPositiveDt(OddriveError):
    """A controller or integrator step was called with dt <= 0."""


class SetpointOutOfRange(OddriveError):
    """A controller setpoint violates its configured bounds."""


class UnsupportedSegment(OddriveError):
    """A scenario segment cannot be integrated in closed form."""


class EmptyLog(OddriveError):
    """Trajectory metrics requested on an empty log."""


class NoResults(OddriveError):
    """Experiment report requested with no scenario results."""


class ScenarioParseError(OddriveError):
    """A scenario or config file failed to parse."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
