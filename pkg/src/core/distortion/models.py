from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .functions import DistortionFn, FunctionKind, poly_even_form, evaluate
from .solvers import solve_radius, RadialProfile
from ..camera import Intrinsics, to_pixels, to_normalized
from ..errors import PoleAtRadius
from ..utils import NormalizedPoint, PixelPoint, radius

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    """Whether both axes share one coefficient vector."""
    RADIAL = 'radial'
    GEOMETRIC = 'geometric'


class Formulation(Enum):
    """Direction and domain of the distortion map."""
    UD = 'ud'
    UD_PIXEL = 'ud-pixel'
    DU = 'du'

    def __init__(self, code: str):
        self.code = code

    @classmethod
    def get_by_code(cls, code: str) -> Formulation:
        """Retrieve a Formulation by its code."""
        for formulation in cls:
            if formulation.code == code:
                return formulation
        raise ValueError(f"Invalid formulation: {code}")


class RadiusUnits(str, Enum):
    """Units of the radius entering the decentering terms."""
    NORMALIZED = 'normalized'
    PIXEL = 'pixel'


# =============================================
# Vectorized kernels
# =============================================
def scale_axes(x, y, fx: RadialProfile, fy: RadialProfile) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """x f(r, k1), y f(r, k2) together with the pole mask."""
    r = radius(x, y)
    f1, pole1 = fx.values(r)
    f2, pole2 = fy.values(r)
    return x * f1, y * f2, pole1 | pole2


def scale_axes_pixel_coupled(x, y, fx: RadialProfile, fy: RadialProfile,
                             intr: Intrinsics) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalized counterpart of scaling the pixel offsets per axis."""
    r = radius(x, y)
    f1, pole1 = fx.values(r)
    f2, pole2 = fy.values(r)
    return x * f1 + (intr.gamma / intr.alpha) * y * (f1 - f2), y * f2, pole1 | pole2


def invert_scaling(x, y, fx: RadialProfile, fy: RadialProfile) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Find (x_d, y_d) with x = x_d f(r_d, k1) and y = y_d f(r_d, k2)."""
    zero = np.zeros_like(np.asarray(x, dtype=float))
    return solve_radius(x, zero, zero, y, fx, fy, strict=False)


def decentering_offsets(du, dv, r, coefficients) -> tuple[np.ndarray, np.ndarray]:
    """Distorted pixel offsets from the principal point for the six-parameter decentering model."""
    k1, k2, k3, p1, p2, p3 = coefficients
    radial, _ = evaluate(poly_even_form(3), (k1, k2, k3), r)
    r2 = r * r
    scale = 1.0 + p3 * r2
    tangential_u = (2.0 * p1 * du * dv + p2 * (r2 + 2.0 * du * du)) * scale
    tangential_v = (p1 * (r2 + 2.0 * dv * dv) + 2.0 * p2 * du * dv) * scale
    return du * radial + tangential_u, dv * radial + tangential_v


def _raise_on_pole(pole, r) -> None:
    pole = np.asarray(pole)
    if pole.any():
        raise PoleAtRadius(float(np.asarray(r)[pole].flat[0]) if np.ndim(r) else float(r))


# =============================================
# Model hierarchy
# =============================================
class DistortionModel(ABC):
    """Forward distortion applied between the undistorted normalized point and the observed pixel."""
    kind: FunctionKind
    mode: Mode
    formulation: Formulation
    uses_r_max = False

    @property
    @abstractmethod
    def coefficients(self) -> np.ndarray:
        """Free distortion parameters in optimizer order."""

    @abstractmethod
    def with_coefficients(self, values) -> DistortionModel:
        """Copy of the model carrying new distortion parameters."""

    @abstractmethod
    def initial(self) -> DistortionModel:
        """Copy of the model at its undistorted starting point."""

    @abstractmethod
    def distort_points(self, x, y, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Observed pixels for undistorted normalized points, with a mask of points that failed."""

    @abstractmethod
    def to_record(self) -> dict:
        """Serializable description of the model."""

    @property
    def num_coefficients(self) -> int:
        return len(self.coefficients)

    @property
    def label(self) -> str:
        return f"{self.mode.value}/{self.kind.code}"

    def refresh(self, r_max: float) -> DistortionModel:
        """Model with its working radius set to r_max; only piecewise models depend on it."""
        return self

    def axis_profiles(self) -> tuple[RadialProfile, RadialProfile]:
        raise ValueError(f"Model '{self.label}' has no per-axis distortion function")


@dataclass(frozen=True)
class RadialModel(DistortionModel):
    """Both axes scaled by the same f(r, k)."""
    fn: DistortionFn
    formulation: Formulation = Formulation.UD

    mode = Mode.RADIAL

    @property
    def kind(self) -> FunctionKind:
        return self.fn.kind

    @property
    def coefficients(self) -> np.ndarray:
        return np.array(self.fn.coefficients, dtype=float)

    def with_coefficients(self, values) -> RadialModel:
        return RadialModel(self.fn.with_coefficients(values), self.formulation)

    def initial(self) -> RadialModel:
        return RadialModel(DistortionFn.zeros(self.fn.kind, self.fn.order), self.formulation)

    def axis_profiles(self) -> tuple[RadialProfile, RadialProfile]:
        return self.fn, self.fn

    def distort_points(self, x, y, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.formulation == Formulation.DU:
            x_d, y_d, bad = invert_scaling(x, y, self.fn, self.fn)
        else:
            x_d, y_d, bad = scale_axes(x, y, self.fn, self.fn)
        u, v = to_pixels(x_d, y_d, intr)
        return u, v, bad | ~np.isfinite(u) | ~np.isfinite(v)

    def to_record(self) -> dict:
        return {'kind': self.fn.kind.code, 'mode': self.mode.value, 'formulation': self.formulation.code,
                'order': self.fn.order, 'k1': list(self.fn.coefficients), 'k2': list(self.fn.coefficients)}


@dataclass(frozen=True)
class GeometricModel(DistortionModel):
    """Independent coefficient vectors on x and y applied through the same function form."""
    fn_x: DistortionFn
    fn_y: DistortionFn
    formulation: Formulation = Formulation.UD

    mode = Mode.GEOMETRIC

    def __post_init__(self):
        if self.fn_x.kind != self.fn_y.kind or self.fn_x.order != self.fn_y.order:
            raise ValueError("Both axes of a geometric model must use the same function form")

    @classmethod
    def create(cls, kind: FunctionKind, k1, k2, formulation: Formulation = Formulation.UD,
               order: int = 0) -> GeometricModel:
        k1, k2 = tuple(k1), tuple(k2)
        if len(k1) != len(k2):
            raise ValueError(f"Coefficient vectors differ in length: {len(k1)} and {len(k2)}")
        return cls(DistortionFn(kind, k1, order), DistortionFn(kind, k2, order), formulation)

    @property
    def kind(self) -> FunctionKind:
        return self.fn_x.kind

    @property
    def k1(self) -> tuple[float, ...]:
        return self.fn_x.coefficients

    @property
    def k2(self) -> tuple[float, ...]:
        return self.fn_y.coefficients

    @property
    def coefficients(self) -> np.ndarray:
        return np.array(self.k1 + self.k2, dtype=float)

    def with_coefficients(self, values) -> GeometricModel:
        values = [float(v) for v in values]
        half = len(values) // 2
        return GeometricModel(self.fn_x.with_coefficients(values[:half]),
                              self.fn_y.with_coefficients(values[half:]), self.formulation)

    def initial(self) -> GeometricModel:
        zeros = DistortionFn.zeros(self.kind, self.fn_x.order)
        return GeometricModel(zeros, zeros, self.formulation)

    def axis_profiles(self) -> tuple[RadialProfile, RadialProfile]:
        return self.fn_x, self.fn_y

    def distort_points(self, x, y, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        match self.formulation:
            case Formulation.UD:
                x_d, y_d, bad = scale_axes(x, y, self.fn_x, self.fn_y)
            case Formulation.UD_PIXEL:
                x_d, y_d, bad = scale_axes_pixel_coupled(x, y, self.fn_x, self.fn_y, intr)
            case _:
                x_d, y_d, bad = invert_scaling(x, y, self.fn_x, self.fn_y)
        u, v = to_pixels(x_d, y_d, intr)
        return u, v, bad | ~np.isfinite(u) | ~np.isfinite(v)

    def to_record(self) -> dict:
        return {'kind': self.kind.code, 'mode': self.mode.value, 'formulation': self.formulation.code,
                'order': self.fn_x.order, 'k1': list(self.k1), 'k2': list(self.k2)}


@dataclass(frozen=True)
class DecenteringModel(DistortionModel):
    """Three radial terms plus decentering terms acting on pixel offsets."""
    values: tuple[float, ...] = (0.0,) * 6
    radius_units: RadiusUnits = RadiusUnits.NORMALIZED

    kind = FunctionKind.DECENTERING
    mode = Mode.GEOMETRIC
    formulation = Formulation.UD

    def __post_init__(self):
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
        if len(self.values) != 6:
            raise ValueError(f"The decentering model takes 6 coefficients, got {len(self.values)}")

    @property
    def coefficients(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def with_coefficients(self, values) -> DecenteringModel:
        return DecenteringModel(tuple(values), self.radius_units)

    def initial(self) -> DecenteringModel:
        return DecenteringModel((0.0,) * 6, self.radius_units)

    def _radius(self, du, dv, x, y):
        return radius(du, dv) if self.radius_units == RadiusUnits.PIXEL else radius(x, y)

    def radial_factor(self, du, dv, x, y) -> np.ndarray:
        """1 + k1 r^2 + k2 r^4 + k3 r^6."""
        values, _ = evaluate(poly_even_form(3), self.values[:3], self._radius(du, dv, x, y))
        return values

    def offsets(self, du, dv, x, y) -> tuple[np.ndarray, np.ndarray]:
        return decentering_offsets(du, dv, self._radius(du, dv, x, y), self.values)

    def distort_points(self, x, y, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        u, v = to_pixels(x, y, intr)
        du, dv = self.offsets(u - intr.u0, v - intr.v0, x, y)
        u_d, v_d = intr.u0 + du, intr.v0 + dv
        return u_d, v_d, ~np.isfinite(u_d) | ~np.isfinite(v_d)

    def to_record(self) -> dict:
        return {'kind': self.kind.code, 'mode': self.mode.value, 'coefficients': list(self.values),
                'radius_units': self.radius_units.value}


# =============================================
# Point operations
# =============================================
def distort_radial(p: NormalizedPoint, fn: DistortionFn) -> NormalizedPoint:
    x_d, y_d, pole = scale_axes(p.x, p.y, fn, fn)
    _raise_on_pole(pole, p.radius)
    return NormalizedPoint(float(x_d), float(y_d))


def distort_geometric(p: NormalizedPoint, model: GeometricModel, intr: Intrinsics) -> NormalizedPoint:
    """Undistorted to distorted normalized coordinates for either U-D formulation."""
    if model.formulation == Formulation.UD_PIXEL:
        x_d, y_d, pole = scale_axes_pixel_coupled(p.x, p.y, model.fn_x, model.fn_y, intr)
    elif model.formulation == Formulation.UD:
        x_d, y_d, pole = scale_axes(p.x, p.y, model.fn_x, model.fn_y)
    else:
        raise ValueError("D-U models map distorted points to undistorted ones; use distort_du")
    _raise_on_pole(pole, p.radius)
    return NormalizedPoint(float(x_d), float(y_d))


def distort_geometric_pixel(p: PixelPoint, model: GeometricModel, intr: Intrinsics) -> PixelPoint:
    """Pixel-domain form of distort_geometric, including the skew coupling of the formulation."""
    x, y = to_normalized(p.u, p.v, intr)
    r = radius(x, y)
    f1, pole1 = model.fn_x.values(r)
    f2, pole2 = model.fn_y.values(r)
    _raise_on_pole(pole1 | pole2, r)
    du, dv = p.u - intr.u0, p.v - intr.v0
    match model.formulation:
        case Formulation.UD:
            u_d = intr.u0 + du * f1 + (intr.gamma / intr.beta) * dv * (f2 - f1)
        case Formulation.UD_PIXEL:
            u_d = intr.u0 + du * f1
        case _:
            raise ValueError("D-U models map distorted points to undistorted ones; use distort_du")
    return PixelPoint(float(u_d), float(intr.v0 + dv * f2))


def distort_du(p_d: NormalizedPoint, model: DistortionModel) -> NormalizedPoint:
    """x = x_d f(r_d, k1), y = y_d f(r_d, k2): the D-U map applied in its own direction."""
    fx, fy = model.axis_profiles()
    x, y, pole = scale_axes(p_d.x, p_d.y, fx, fy)
    _raise_on_pole(pole, p_d.radius)
    return NormalizedPoint(float(x), float(y))


def distort_decentering(p: PixelPoint, coefficients, intr: Intrinsics,
                        radius_units: RadiusUnits = RadiusUnits.NORMALIZED) -> PixelPoint:
    model = DecenteringModel(tuple(coefficients), radius_units)
    x, y = to_normalized(p.u, p.v, intr)
    du, dv = model.offsets(p.u - intr.u0, p.v - intr.v0, x, y)
    return PixelPoint(float(intr.u0 + du), float(intr.v0 + dv))
