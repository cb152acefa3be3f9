from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dataset import CalibrationDataset
from ..camera import Intrinsics, Extrinsics, project_points
from ..distortion import DistortionModel
from ..errors import NonPositiveDepth, PoleAtRadius
from ..utils import radius
from ...config import POLE_PENALTY

logger = logging.getLogger(__name__)

NUM_INTRINSICS = 5
NUM_POSE = 6
SKEW_INDEX = 1


@dataclass(frozen=True, eq=False)
class ParameterVector:
    """[alpha, gamma, beta, u0, v0 | per view (rotation vector, translation) | distortion coefficients]."""
    values: np.ndarray
    num_views: int
    num_coefficients: int

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        expected = NUM_INTRINSICS + NUM_POSE * self.num_views + self.num_coefficients
        if values.shape != (expected,):
            raise ValueError(f"Parameter vector has length {values.size}, expected {expected}")
        object.__setattr__(self, 'values', values)

    @classmethod
    def pack(cls, intr: Intrinsics, extrinsics: list[Extrinsics], model: DistortionModel) -> ParameterVector:
        parts = [intr.as_vector()] + [e.as_vector() for e in extrinsics] + [model.coefficients]
        return cls(np.concatenate(parts), len(extrinsics), model.num_coefficients)

    def with_values(self, values) -> ParameterVector:
        return ParameterVector(values, self.num_views, self.num_coefficients)

    @property
    def intrinsics(self) -> Intrinsics:
        return Intrinsics.from_vector(self.values[:NUM_INTRINSICS])

    @property
    def extrinsics(self) -> list[Extrinsics]:
        start = NUM_INTRINSICS
        return [Extrinsics.from_vector(self.values[start + NUM_POSE * i:start + NUM_POSE * (i + 1)])
                for i in range(self.num_views)]

    @property
    def coefficients(self) -> np.ndarray:
        return self.values[NUM_INTRINSICS + NUM_POSE * self.num_views:]

    def unpack(self, model: DistortionModel) -> tuple[Intrinsics, list[Extrinsics], DistortionModel]:
        return self.intrinsics, self.extrinsics, model.with_coefficients(self.coefficients)

    def active_mask(self, fix_skew: bool = False) -> np.ndarray:
        """Parameters the optimizer may move; skew stays put when fixed."""
        mask = np.ones(self.values.size, dtype=bool)
        if fix_skew:
            mask[SKEW_INDEX] = False
        return mask


@dataclass(frozen=True, eq=False)
class Projection:
    """Predicted pixels for every point of a dataset."""
    pixels: np.ndarray
    radii: np.ndarray
    failed: np.ndarray
    behind: np.ndarray


def undistorted_radii(dataset: CalibrationDataset, extrinsics: list[Extrinsics]) -> np.ndarray:
    """Normalized radius of every feature point under the given poses."""
    radii = []
    for view, extr in zip(dataset.views, extrinsics):
        x, y, _ = project_points(view.world_points, extr)
        radii.append(radius(x, y))
    return np.concatenate(radii) if radii else np.zeros(0)


def project_dataset(dataset: CalibrationDataset, intr: Intrinsics, extrinsics: list[Extrinsics],
                    model: DistortionModel) -> Projection:
    pixels, radii, failed, behind = [], [], [], []
    for view, extr in zip(dataset.views, extrinsics):
        x, y, depth = project_points(view.world_points, extr)
        u, v, bad = model.distort_points(x, y, intr)
        pixels.append(np.column_stack([u, v]))
        radii.append(radius(x, y))
        behind.append(~(depth > 0.0))
        failed.append(np.asarray(bad, dtype=bool) | ~(depth > 0.0))
    return Projection(np.concatenate(pixels), np.concatenate(radii), np.concatenate(failed),
                      np.concatenate(behind))


def residuals(params: ParameterVector, dataset: CalibrationDataset, model: DistortionModel,
              strict: bool = False) -> np.ndarray:
    """Observed minus predicted pixels as a flat vector of length 2 N n, interleaved (u, v) per point.

    Points behind the camera or where the model is undefined get POLE_PENALTY per coordinate,
    unless strict is set, in which case they raise.
    """
    intr, extrinsics, model = params.unpack(model)
    projection = project_dataset(dataset, intr, extrinsics, model)
    if strict and projection.behind.any():
        raise NonPositiveDepth(f"{int(projection.behind.sum())} point(s) lie behind the camera")
    if strict and projection.failed.any():
        raise PoleAtRadius(float(projection.radii[projection.failed][0]))

    diff = dataset.observations() - projection.pixels
    diff[projection.failed] = POLE_PENALTY
    return diff.ravel()


def compute_J(params: ParameterVector, dataset: CalibrationDataset, model: DistortionModel,
              strict: bool = True) -> tuple[float, np.ndarray]:
    """Sum of squared pixel reprojection errors and the residual vector it is built from."""
    residual = residuals(params, dataset, model, strict)
    return float(residual @ residual), residual
