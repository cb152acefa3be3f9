from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .closed_form import initialize
from .dataset import CalibrationDataset
from .objective import ParameterVector, residuals, project_dataset, undistorted_radii
from ..camera import Intrinsics, Extrinsics
from ..distortion import DistortionModel
from ..distortion.piecewise import update_r_max
from ...config import (MAX_ITERATIONS, TOLERANCE_X, TOLERANCE_FUN, JACOBIAN_STEP, INITIAL_DAMPING, DAMPING_UP,
                       DAMPING_DOWN, DAMPING_MIN, MAX_DAMPING_TRIALS, GRADIENT_EPSILON)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RefinementOptions:
    """Stopping rules of the damped least-squares refinement."""
    max_iter: int = MAX_ITERATIONS
    tol_x: float = TOLERANCE_X
    tol_fun: float = TOLERANCE_FUN
    fix_skew: bool = False


@dataclass(frozen=True)
class CalibrationReport:
    intrinsics: Intrinsics
    extrinsics: tuple[Extrinsics, ...]
    model: DistortionModel
    j_final: float
    j_initial: float
    per_point_residuals: tuple[float, ...]
    rms: float
    rms_per_axis: float
    iterations: int
    converged: bool
    r_max: float
    r_max_history: tuple[float, ...] = ()
    fix_skew: bool = False
    num_views: int = 0
    num_points: int = 0

    def summary(self) -> str:
        status = "converged" if self.converged else "not converged"
        return (f"{self.model.label}: J = {self.j_final:.6g}, rms = {self.rms:.6g} px, "
                f"{self.iterations} iteration(s), {status}")


@dataclass
class _State:
    """Best point seen so far; J is always evaluated at the r_max it is stored with."""
    params: ParameterVector
    model: DistortionModel
    j: float
    residual: np.ndarray = field(repr=False)


def _evaluate(params: ParameterVector, dataset: CalibrationDataset, model: DistortionModel) -> tuple[float, np.ndarray]:
    residual = residuals(params, dataset, model)
    return float(residual @ residual), residual


def _jacobian(params: ParameterVector, dataset: CalibrationDataset, model: DistortionModel,
              residual: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Forward differences with step JACOBIAN_STEP (1 + |theta_j|) on the active parameters."""
    theta = params.values
    columns = np.flatnonzero(active)
    jac = np.zeros((residual.size, columns.size))
    for c, j in enumerate(columns):
        step = JACOBIAN_STEP * (1.0 + abs(theta[j]))
        shifted = theta.copy()
        shifted[j] += step
        jac[:, c] = (residuals(params.with_values(shifted), dataset, model) - residual) / step
    return jac


def _refreshed(params: ParameterVector, dataset: CalibrationDataset, model: DistortionModel) -> DistortionModel:
    if not model.uses_r_max:
        return model
    return model.refresh(update_r_max(undistorted_radii(dataset, params.extrinsics)))


def refine(dataset: CalibrationDataset, model: DistortionModel, init: ParameterVector,
           options: RefinementOptions = RefinementOptions()) -> CalibrationReport:
    """Levenberg-Marquardt minimization of J over intrinsics, poses and distortion coefficients."""
    active = init.active_mask(options.fix_skew)
    history: list[float] = []

    model = _refreshed(init, dataset, model)
    if model.uses_r_max:
        history.append(model.r_max)
    j, residual = _evaluate(init, dataset, model)
    j_initial = j
    best = _State(init, model, j, residual)
    current = best
    damping = INITIAL_DAMPING
    converged = False
    iterations = 0
    logger.debug("Refining %s: J0 = %.6g", model.label, j_initial)

    while iterations < options.max_iter:
        iterations += 1
        if model.uses_r_max and iterations > 1:
            model = _refreshed(current.params, dataset, model)
            history.append(model.r_max)
            j, residual = _evaluate(current.params, dataset, model)
            current = _State(current.params, model, j, residual)
            if j < best.j:
                best = current

        if current.j == 0.0:
            converged = True
            break
        jac = _jacobian(current.params, dataset, model, current.residual, active)
        gradient = jac.T @ current.residual
        if np.max(np.abs(gradient)) < GRADIENT_EPSILON:
            converged = True
            break
        hessian = jac.T @ jac
        scale = np.maximum(np.diag(hessian), DAMPING_MIN)

        accepted: Optional[_State] = None
        small_step = False
        first_trial = True
        for trial_index in range(MAX_DAMPING_TRIALS):
            first_trial = trial_index == 0
            system = hessian + damping * np.diag(scale)
            try:
                delta = scipy.linalg.solve(system, -gradient, assume_a='pos')
            except (scipy.linalg.LinAlgError, ValueError):
                delta = scipy.linalg.lstsq(system, -gradient)[0]
            small_step = float(np.linalg.norm(delta)) < options.tol_x
            theta = current.params.values.copy()
            theta[active] += delta
            trial = current.params.with_values(theta)
            j_trial, r_trial = _evaluate(trial, dataset, model)
            if j_trial < current.j:
                accepted = _State(trial, model, j_trial, r_trial)
                damping = max(damping * DAMPING_DOWN, DAMPING_MIN)
                break
            damping *= DAMPING_UP
            if small_step:
                break

        if accepted is None:
            converged = small_step
            logger.debug("Iteration %d: no decrease (damping %.3g)", iterations, damping)
            break

        decrease = (current.j - accepted.j) / current.j
        current = accepted
        if current.j < best.j:
            best = current
        logger.debug("Iteration %d: J = %.10g, damping %.3g", iterations, current.j, damping)
        # the function tolerance counts only for steps taken at the incoming damping
        if small_step or (first_trial and decrease < options.tol_fun):
            converged = True
            break

    return _report(dataset, best, j_initial, iterations, converged, history, options.fix_skew)


def _report(dataset: CalibrationDataset, best: _State, j_initial: float, iterations: int, converged: bool,
            history: list[float], fix_skew: bool) -> CalibrationReport:
    intr, extrinsics, model = best.params.unpack(best.model)
    projection = project_dataset(dataset, intr, extrinsics, model)
    diff = dataset.observations() - projection.pixels
    distances = np.sqrt(np.sum(diff * diff, axis=1))
    count = dataset.num_points
    if model.uses_r_max:
        # knots are placed against the model's own r_max
        r_max = model.r_max
    else:
        r_max = float(np.max(projection.radii)) if projection.radii.size else 0.0
    report = CalibrationReport(
        intrinsics=intr,
        extrinsics=tuple(extrinsics),
        model=model,
        j_final=best.j,
        j_initial=j_initial,
        per_point_residuals=tuple(float(d) for d in distances),
        rms=float(np.sqrt(best.j / count)),
        rms_per_axis=float(np.sqrt(best.j / (2 * count))),
        iterations=iterations,
        converged=converged,
        r_max=r_max,
        r_max_history=tuple(history),
        fix_skew=fix_skew,
        num_views=dataset.num_views,
        num_points=count)
    logger.info("%s", report.summary())
    return report


def calibrate(dataset: CalibrationDataset, model: DistortionModel,
              options: RefinementOptions = RefinementOptions()) -> CalibrationReport:
    """Closed-form initialization followed by refinement from zero distortion."""
    intr, extrinsics = initialize(dataset, options.fix_skew)
    model = model.initial()
    return refine(dataset, model, ParameterVector.pack(intr, extrinsics, model), options)
