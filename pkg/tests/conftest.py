from dataclasses import replace

import numpy as np
import pytest

from src.core import repository
from src.core.calibration.dataset import CalibrationDataset, View
from src.core.camera import Intrinsics, Extrinsics
from src.core.simulation import load_config, simulate

TRUTH_INTRINSICS = Intrinsics(alpha=500.0, beta=500.0, gamma=0.0, u0=320.0, v0=240.0)


def pytest_configure(config):
    # parametrized tests read the catalog during collection
    if not repository.is_initialized():
        repository.initialize()


@pytest.fixture(scope='session')
def function_repository():
    return repository.get()


def make_dataset(model=None, noise_sigma=0.0, seed=0, **overrides):
    """Default five-view 8x8 scene, optionally distorted and noisy."""
    config = replace(load_config().with_model(model), noise_sigma=noise_sigma, seed=seed, **overrides)
    return simulate(config)


@pytest.fixture
def simulated():
    return make_dataset


@pytest.fixture
def intrinsics() -> Intrinsics:
    return TRUTH_INTRINSICS


@pytest.fixture
def frontal_pose() -> Extrinsics:
    return Extrinsics((0.0, 0.0, 0.0), (-3.5, -3.5, 10.0))


@pytest.fixture
def tiny_dataset() -> CalibrationDataset:
    """Three views of a unit square seen head-on; enough for format and validation checks."""
    world = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    views = [View(world, world * 100.0 + offset) for offset in (0.0, 10.0, 20.0)]
    return CalibrationDataset(views, (640, 480))
