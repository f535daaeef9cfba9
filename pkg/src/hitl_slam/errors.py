"""Exception types shared across the package."""


class HitlError(Exception):
    """Base class for workbench errors."""


class DegenerateFit(HitlError):
    """Segment fit attempted on fewer than two effective points or zero scatter."""


class DegenerateSegment(HitlError):
    """A segment with (near-)zero length where a direction is required."""


class UnknownPose(HitlError, IndexError):
    """Pose index outside the graph."""


class InsufficientSelection(HitlError):
    """A stroke selected no poses after the per-pose point threshold."""


class NonConvergence(HitlError):
    """Optimizer hit its iteration budget; carries the best iterate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ParseError(HitlError):
    """Malformed graph/script/truth file; message names line and offset."""


class VersionMismatch(ParseError):
    """File carries an unsupported format version."""


class ResolutionMismatch(HitlError):
    """Occupancy rasters with different cell sizes cannot be compared."""


class FeatureNotFound(HitlError):
    """A ground-truth feature selector matched too few map points."""
