from __future__ import annotations

import logging
from enum import Enum

import numpy as np

from .functions import DistortionFn
from .models import (DistortionModel, GeometricModel, RadialModel, DecenteringModel, Formulation,
                     scale_axes)
from .piecewise import PiecewiseModel
from .solvers import solve_radius, invert_segments
from ..camera import Intrinsics, to_normalized
from ..errors import NoConvergence, PoleAtRadius
from ..utils import NormalizedPoint
from ...config import FIXED_POINT_TOLERANCE, FIXED_POINT_MAX_ITERATIONS

logger = logging.getLogger(__name__)


class Method(str, Enum):
    """Ways to recover undistorted coordinates."""
    ANALYTIC = 'analytic'
    ITERATIVE = 'iterative'
    APPROX = 'approx'


def default_method(model: DistortionModel) -> Method:
    return Method.ANALYTIC if supports_analytic(model) else Method.ITERATIVE


def supports_analytic(model: DistortionModel) -> bool:
    if isinstance(model, PiecewiseModel):
        return True
    if model.formulation == Formulation.DU:
        return True
    return (isinstance(model, (RadialModel, GeometricModel)) and model.formulation == Formulation.UD
            and model.kind.analytic)


# =============================================
# Vectorized inverses in normalized coordinates
# =============================================
def analytic_inverse(model: DistortionModel, x_d, y_d) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form inverse through the quadratic in r (or r^2); no iteration."""
    if model.formulation == Formulation.DU:
        return _apply_du(model, x_d, y_d)
    if isinstance(model, PiecewiseModel):
        x, y, _ = model.invert(x_d, y_d)
        return x, y
    if not supports_analytic(model):
        raise ValueError(f"Model '{model.label}' ({model.formulation.code}) has no closed-form inverse")
    fx, fy = model.axis_profiles()
    k1, k2 = fx.coefficients[0], fy.coefficients[0]
    segment = (1.0, k1, 1.0, k2, -np.inf, np.inf)
    x, y, _ = invert_segments(model.kind.code, x_d, y_d, [segment])
    return x, y


def iterative_inverse(model: DistortionModel, x_d, y_d, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray]:
    """Safeguarded Newton on the scalar radius equation; raises NoConvergence."""
    if model.formulation == Formulation.DU:
        return _apply_du(model, x_d, y_d)
    fx, fy = model.axis_profiles()
    x_d = np.asarray(x_d, dtype=float)
    y_d = np.asarray(y_d, dtype=float)
    zero = np.zeros_like(x_d)
    if model.formulation == Formulation.UD_PIXEL:
        c = intr.gamma / intr.alpha
        x, y, _ = solve_radius(x_d + c * y_d, -c * y_d, zero, y_d, fx, fy)
    else:
        x, y, _ = solve_radius(x_d, zero, zero, y_d, fx, fy)
    return x, y


def approx_inverse(model: DistortionModel, x_d, y_d) -> tuple[np.ndarray, np.ndarray]:
    """x = x_d f(r_d, -k1), y = y_d f(r_d, -k2): one evaluation, no accuracy guarantee."""
    if model.formulation == Formulation.DU:
        return _apply_du(model, x_d, y_d)
    if isinstance(model, PiecewiseModel):
        raise ValueError("Approximate undistortion needs a coefficient vector; piecewise models have knots")
    fx, fy = model.axis_profiles()
    x, y, pole = scale_axes(np.asarray(x_d, dtype=float), np.asarray(y_d, dtype=float),
                            fx.negated(), fy.negated())
    if np.any(pole):
        raise PoleAtRadius(float(np.max(np.sqrt(np.asarray(x_d) ** 2 + np.asarray(y_d) ** 2))))
    return x, y


def _apply_du(model: DistortionModel, x_d, y_d) -> tuple[np.ndarray, np.ndarray]:
    fx, fy = model.axis_profiles()
    x, y, pole = scale_axes(np.asarray(x_d, dtype=float), np.asarray(y_d, dtype=float), fx, fy)
    if np.any(pole):
        raise PoleAtRadius(float(np.max(np.sqrt(np.asarray(x_d) ** 2 + np.asarray(y_d) ** 2))))
    return x, y


# =============================================
# Decentering inverse in pixels
# =============================================
def decentering_inverse(model: DecenteringModel, u_d, v_d, intr: Intrinsics,
                        method: Method = Method.ITERATIVE) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-point inversion of the decentering map on pixel offsets."""
    du_d = np.asarray(u_d, dtype=float) - intr.u0
    dv_d = np.asarray(v_d, dtype=float) - intr.v0
    if method == Method.ANALYTIC:
        raise ValueError("The decentering model has no closed-form inverse")
    if method == Method.APPROX:
        negated = model.with_coefficients(-model.coefficients)
        x_d, y_d = to_normalized(u_d, v_d, intr)
        du, dv = negated.offsets(du_d, dv_d, x_d, y_d)
        return to_normalized(intr.u0 + du, intr.v0 + dv, intr)

    du, dv = du_d.copy(), dv_d.copy()
    change = np.full(du.shape, np.inf)
    for _ in range(FIXED_POINT_MAX_ITERATIONS):
        x, y = to_normalized(intr.u0 + du, intr.v0 + dv, intr)
        fu, fv = model.offsets(du, dv, x, y)
        radial = model.radial_factor(du, dv, x, y)
        # hold the tangential part at the current estimate and divide out the radial factor
        new_du = (du_d - fu + du * radial) / radial
        new_dv = (dv_d - fv + dv * radial) / radial
        change = np.maximum(np.abs(new_du - du), np.abs(new_dv - dv))
        du, dv = new_du, new_dv
        if np.all(change <= FIXED_POINT_TOLERANCE * (1.0 + np.abs(du) + np.abs(dv))):
            return to_normalized(intr.u0 + du, intr.v0 + dv, intr)
    raise NoConvergence("Decentering fixed-point iteration did not settle", float(np.max(change)))


# =============================================
# Dispatcher and point operations
# =============================================
def undistort_points(model: DistortionModel, u_d, v_d, intr: Intrinsics,
                     method: Method) -> tuple[np.ndarray, np.ndarray]:
    """Undistorted normalized coordinates of observed pixels."""
    logger.debug("Undistorting with %s (%s)", model.label, method.value)
    if isinstance(model, DecenteringModel):
        return decentering_inverse(model, u_d, v_d, intr, method)
    x_d, y_d = to_normalized(np.asarray(u_d, dtype=float), np.asarray(v_d, dtype=float), intr)
    match method:
        case Method.ANALYTIC:
            return analytic_inverse(model, x_d, y_d)
        case Method.ITERATIVE:
            return iterative_inverse(model, x_d, y_d, intr)
        case _:
            return approx_inverse(model, x_d, y_d)


def _point(x, y) -> NormalizedPoint:
    return NormalizedPoint(float(np.asarray(x).flat[0]), float(np.asarray(y).flat[0]))


def undistort_analytic(p_d: NormalizedPoint, model: DistortionModel) -> NormalizedPoint:
    return _point(*analytic_inverse(model, p_d.x, p_d.y))


def undistort_iterative(p_d: NormalizedPoint, model: DistortionModel,
                        intr: Intrinsics = Intrinsics(1.0, 1.0)) -> NormalizedPoint:
    """The intrinsics matter only for the pixel-coupled formulation."""
    return _point(*iterative_inverse(model, p_d.x, p_d.y, intr))


def undistort_approx(p_d: NormalizedPoint, model: DistortionModel) -> NormalizedPoint:
    return _point(*approx_inverse(model, p_d.x, p_d.y))


def radial_inverse(fn: DistortionFn, r_d) -> np.ndarray:
    """Undistorted radius r with r f(r) = r_d, for monotone-consistency checks."""
    r_d = np.asarray(r_d, dtype=float)
    x, _, _ = solve_radius(r_d, np.zeros_like(r_d), np.zeros_like(r_d), np.zeros_like(r_d), fn, fn)
    return x
