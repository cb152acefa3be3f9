"""Ground-truth planar scenes: a square grid seen from several poses through a known camera."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .calibration.dataset import CalibrationDataset, View
from .camera import Intrinsics, Extrinsics, project_points, to_pixels, rotation_from_vector
from .distortion import DistortionModel, model_from_record
from .distortion.piecewise import update_r_max
from .errors import DatasetFormatError, PointOutOfFrame, PoleAtRadius
from .utils import radius
from ..config import SIMULATION_FILE

logger = logging.getLogger(__name__)

NO_MODEL = 'none'


@dataclass(frozen=True)
class GridSpec:
    rows: int = 8
    cols: int = 8
    square_size: float = 1.0

    @property
    def center(self) -> np.ndarray:
        return np.array([(self.cols - 1) / 2 * self.square_size, (self.rows - 1) / 2 * self.square_size, 0.0])

    def points(self) -> np.ndarray:
        """(rows * cols, 2) world points, row by row; the id of a point is its index."""
        row, col = np.mgrid[0:self.rows, 0:self.cols]
        return np.column_stack([col.ravel() * self.square_size, row.ravel() * self.square_size])


@dataclass(frozen=True)
class PoseSpec:
    """Axis-angle rotation and either an explicit translation or a distance to the grid center."""
    rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    translation: Optional[tuple[float, float, float]] = None
    distance: Optional[float] = None

    def extrinsics(self, grid: GridSpec) -> Extrinsics:
        if self.translation is not None:
            return Extrinsics(tuple(self.rotation), tuple(self.translation))
        # keep the rotated grid center on the optical axis
        t = np.array([0.0, 0.0, self.distance]) - rotation_from_vector(self.rotation) @ grid.center
        return Extrinsics(tuple(self.rotation), tuple(float(v) for v in t))


@dataclass(frozen=True)
class RandomPoses:
    """Poses drawn per view from (seed, view index)."""
    count: int = 5
    max_tilt: float = 0.6
    max_roll: float = 0.2
    distance: tuple[float, float] = (10.0, 12.0)

    def draw(self, rng: np.random.Generator) -> PoseSpec:
        tilt = rng.uniform(-self.max_tilt, self.max_tilt, size=2)
        roll = rng.uniform(-self.max_roll, self.max_roll)
        return PoseSpec((float(tilt[0]), float(tilt[1]), float(roll)), distance=float(rng.uniform(*self.distance)))


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec = GridSpec()
    image_size: tuple[int, int] = (640, 480)
    margin: float = 5.0
    intrinsics: Intrinsics = Intrinsics(500.0, 500.0, 0.0, 320.0, 240.0)
    poses: tuple[PoseSpec, ...] = ()
    random_poses: Optional[RandomPoses] = None
    model: Optional[dict] = None
    noise_sigma: float = 0.0
    seed: int = 0

    @property
    def num_views(self) -> int:
        return self.random_poses.count if self.random_poses is not None else len(self.poses)

    def with_seed(self, seed: int) -> SimConfig:
        return replace(self, seed=seed)

    def with_model(self, model: Optional[DistortionModel]) -> SimConfig:
        return replace(self, model=None if model is None else model.to_record())

    def truth_model(self) -> Optional[DistortionModel]:
        if self.model is None or self.model.get('kind') == NO_MODEL:
            return None
        record = dict(self.model)
        if record['kind'] == 'piecewise':
            record.setdefault('r_max', 0.0)
        return model_from_record(record)


@dataclass(frozen=True)
class SimulationTruth:
    """Everything the simulated observations were generated from."""
    intrinsics: Intrinsics
    extrinsics: tuple[Extrinsics, ...]
    model: Optional[DistortionModel]
    noise_sigma: float
    seed: int
    image_size: tuple[int, int]


# =============================================
# Configuration loading
# =============================================
def _merge(defaults: dict, overrides: dict) -> dict:
    merged = dict(defaults)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict) and key != 'model':
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _field(data: dict, key: str, convert, bad: list[str], check=lambda _: True, name: Optional[str] = None):
    name = name or key
    try:
        value = convert(data[key])
    except (KeyError, TypeError, ValueError):
        bad.append(name)
        return None
    if not check(value):
        bad.append(name)
        return None
    return value


def _triple(values) -> tuple[float, float, float]:
    values = tuple(float(v) for v in values)
    if len(values) != 3:
        raise ValueError(f"Expected 3 components, got {len(values)}")
    return values


def _pose(entry: dict, index: int, bad: list[str]) -> Optional[PoseSpec]:
    prefix = f"poses[{index}]"
    rotation = _field(entry, 'rotation', _triple, bad, name=f"{prefix}.rotation")
    if 'translation' in entry:
        translation = _field(entry, 'translation', _triple, bad, lambda t: t[2] > 0.0, f"{prefix}.translation")
        return PoseSpec(rotation, translation=translation) if rotation and translation else None
    distance = _field(entry, 'distance', float, bad, lambda d: d > 0.0, f"{prefix}.distance")
    return PoseSpec(rotation, distance=distance) if rotation and distance else None


def config_from_dict(data: dict) -> SimConfig:
    """Validate a merged configuration; every offending field is reported at once."""
    bad: list[str] = []
    grid_data = data.get('grid') or {}
    rows = _field(grid_data, 'rows', int, bad, lambda v: v >= 2, 'grid.rows')
    cols = _field(grid_data, 'cols', int, bad, lambda v: v >= 2, 'grid.cols')
    square = _field(grid_data, 'square_size', float, bad, lambda v: v > 0.0, 'grid.square_size')
    image_size = _field(data, 'image_size', lambda v: tuple(int(s) for s in v), bad,
                        lambda v: len(v) == 2 and min(v) > 0)
    margin = _field(data, 'margin', float, bad, lambda v: v >= 0.0)
    noise = _field(data, 'noise_sigma', float, bad, lambda v: v >= 0.0)
    seed = _field(data, 'seed', int, bad)

    intr_data = data.get('intrinsics') or {}
    intr_values = [_field(intr_data, key, float, bad, name=f"intrinsics.{key}")
                   for key in ('alpha', 'beta', 'gamma', 'u0', 'v0')]
    intrinsics = None
    if None not in intr_values:
        intrinsics = Intrinsics(*intr_values)
        if not intrinsics.is_valid():
            bad.append('intrinsics')

    random_poses = None
    poses: list[PoseSpec] = []
    if data.get('random_poses') is not None:
        rp = data['random_poses']
        count = _field(rp, 'count', int, bad, lambda v: v >= 1, 'random_poses.count')
        tilt = _field(rp, 'max_tilt', float, bad, lambda v: v >= 0.0, 'random_poses.max_tilt')
        roll = _field(rp, 'max_roll', float, bad, lambda v: v >= 0.0, 'random_poses.max_roll')
        distance = _field(rp, 'distance', lambda v: tuple(float(d) for d in v), bad,
                          lambda v: len(v) == 2 and 0.0 < v[0] <= v[1], 'random_poses.distance')
        random_poses = RandomPoses(count, tilt, roll, distance)
    else:
        entries = data.get('poses') or []
        if not entries:
            bad.append('poses')
        for index, entry in enumerate(entries):
            poses.append(_pose(entry, index, bad))

    model = data.get('model')
    if model is not None and not isinstance(model, dict):
        bad.append('model')
        model = None

    if bad:
        raise DatasetFormatError("Invalid simulation config", bad)
    config = SimConfig(GridSpec(rows, cols, square), image_size, margin, intrinsics, tuple(poses), random_poses,
                       model, noise, seed)
    try:
        config.truth_model()
    except (ValueError, KeyError) as e:
        raise DatasetFormatError(f"Invalid truth model ({e})", ['model']) from e
    return config


def load_config(path: Optional[Path] = None) -> SimConfig:
    """Defaults from the bundled simulation file, overridden key by key by the user file."""
    with open(SIMULATION_FILE, 'r', encoding='utf-8') as file:
        data = json.load(file)
    if path is not None:
        try:
            with open(path, 'r', encoding='utf-8') as file:
                overrides = json.load(file)
        except json.JSONDecodeError as e:
            raise DatasetFormatError(f"Simulation config is not valid JSON ({e.msg} at line {e.lineno})") from e
        if not isinstance(overrides, dict):
            raise DatasetFormatError("Simulation config must be a JSON object")
        data = _merge(data, overrides)
    return config_from_dict(data)


# =============================================
# Simulation
# =============================================
def _view_poses(config: SimConfig) -> list[PoseSpec]:
    if config.random_poses is None:
        return list(config.poses)
    return [config.random_poses.draw(np.random.default_rng([config.seed, view, 1]))
            for view in range(config.random_poses.count)]


def _distort(model: Optional[DistortionModel], x, y, intr: Intrinsics):
    if model is None:
        u, v = to_pixels(x, y, intr)
        return u, v, ~np.isfinite(u) | ~np.isfinite(v)
    return model.distort_points(x, y, intr)


def simulate(config: SimConfig) -> tuple[CalibrationDataset, SimulationTruth]:
    """Project the grid through every pose, distort with the truth model and add pixel noise."""
    grid_points = config.grid.points()
    world = np.column_stack([grid_points, np.zeros(len(grid_points))])
    intr = config.intrinsics
    extrinsics = [pose.extrinsics(config.grid) for pose in _view_poses(config)]

    projected = []
    for view, extr in enumerate(extrinsics):
        x, y, depth = project_points(world, extr)
        behind = np.flatnonzero(~(depth > 0.0))
        if behind.size:
            raise PointOutOfFrame(view, int(behind[0]), 'behind the camera')
        projected.append((x, y))

    model = config.truth_model()
    if model is not None and model.uses_r_max and model.r_max <= 0.0:
        model = model.refresh(update_r_max(np.concatenate([radius(x, y) for x, y in projected])))

    width, height = config.image_size
    views = []
    for view, (x, y) in enumerate(projected):
        u, v, bad = _distort(model, x, y, intr)
        if np.any(bad):
            point = int(np.flatnonzero(bad)[0])
            raise PoleAtRadius(float(radius(x[point], y[point])))
        outside = ((u < config.margin) | (u > width - config.margin)
                   | (v < config.margin) | (v > height - config.margin))
        if np.any(outside):
            point = int(np.flatnonzero(outside)[0])
            raise PointOutOfFrame(view, point, f"outside the image at ({u[point]:.1f}, {v[point]:.1f})")

        rng = np.random.default_rng([config.seed, view])
        image = np.column_stack([u, v])
        if config.noise_sigma > 0.0:
            image = image + rng.normal(0.0, config.noise_sigma, size=image.shape)
        views.append(View(grid_points, image))

    logger.info("Simulated %d view(s) of %d points", len(views), len(grid_points))
    truth = SimulationTruth(intr, tuple(extrinsics), model, config.noise_sigma, config.seed, config.image_size)
    return CalibrationDataset(views, config.image_size), truth
