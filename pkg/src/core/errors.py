from __future__ import annotations

from typing import Optional


class CalibrationError(ValueError):
    """Base class for every failure raised by the calibration toolkit."""


# =============================================
# Camera geometry
# =============================================
class NonPositiveDepth(CalibrationError):
    """A world point lies on or behind the camera plane."""


class SingularIntrinsics(CalibrationError):
    """The camera matrix cannot be inverted."""


# =============================================
# Distortion functions and their inverses
# =============================================
class PoleAtRadius(CalibrationError):
    """A rational distortion function has a vanishing denominator."""

    def __init__(self, radius: float):
        super().__init__(f"Distortion function has a pole at r = {radius:.6g}")
        self.radius = radius


class NoRealRoot(CalibrationError):
    """The undistortion quadratic has no admissible real root."""


class DegenerateQuadratic(CalibrationError):
    """Both the quadratic and the linear coefficient vanish."""


class NoConvergence(CalibrationError):
    """An iterative inversion ran out of iterations."""

    def __init__(self, message: str, last_residual: float):
        super().__init__(f"{message} (last residual {last_residual:.3e})")
        self.last_residual = last_residual


class InvalidKnot(CalibrationError):
    """Piecewise knot values or breakpoints are not admissible."""


# =============================================
# Datasets and calibration
# =============================================
class EmptyDataset(CalibrationError):
    """No feature points are available."""


class DegenerateConfiguration(CalibrationError):
    """Correspondences do not determine a homography."""


class InsufficientViews(CalibrationError):
    """Too few views for the requested intrinsic parameters."""


class IllConditioned(CalibrationError):
    """The image of the absolute conic is not positive definite."""


class PointOutOfFrame(CalibrationError):
    """A simulated point falls outside the image bounds."""

    def __init__(self, view: int, point: int, reason: str = 'outside the image'):
        super().__init__(f"View {view}, point {point} is {reason}")
        self.view = view
        self.point = point


class DatasetFormatError(CalibrationError):
    """A dataset, report or configuration file failed to parse or validate."""

    def __init__(self, message: str, fields: Optional[list[str]] = None):
        self.fields = fields or []
        if self.fields:
            message = f"{message}: {', '.join(self.fields)}"
        super().__init__(message)
