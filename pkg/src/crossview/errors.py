"""Exception hierarchy shared by all crossview modules."""

from __future__ import annotations


class CrossviewError(ValueError):
    """Base class for data errors raised by this package."""


class DegeneratePointError(CrossviewError):
    """A point maps onto the line at infinity under a homography."""


class SingularMatrixError(CrossviewError):
    """A homography (or plane-to-image map) is not invertible."""


class InsufficientPairsError(CrossviewError):
    """Fewer than four correspondences were supplied."""


class DegenerateConfigurationError(CrossviewError):
    """Correspondences are collinear or coincident."""


class BehindCameraError(CrossviewError):
    """A world point lies at or behind the camera plane."""


class ParseError(CrossviewError):
    """Malformed input record; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CalibrationError(CrossviewError):
    """Calibration input cannot produce a threshold or mapping."""


class ConfigError(CrossviewError):
    """Invalid simulator or run configuration."""
