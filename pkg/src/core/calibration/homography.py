"""Plane-to-image homographies by the normalized direct linear transform."""
from __future__ import annotations

import logging

import numpy as np

from ..errors import DegenerateConfiguration
from ...config import RANK_EPSILON, HOMOGRAPHY_SCALE_EPSILON

logger = logging.getLogger(__name__)


def normalize_points(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Move the centroid to the origin and scale to mean distance sqrt(2); returns points and T."""
    points = np.asarray(points, dtype=float)
    mean = points.mean(axis=0)
    mean_dist = np.mean(np.sqrt(np.sum((points - mean) ** 2, axis=1)))
    s = 1.0 if mean_dist < HOMOGRAPHY_SCALE_EPSILON else np.sqrt(2.0) / mean_dist
    transform = np.array([[s, 0.0, -s * mean[0]],
                          [0.0, s, -s * mean[1]],
                          [0.0, 0.0, 1.0]], dtype=float)
    return (points - mean) * s, transform


def estimate_homography(world: np.ndarray, image: np.ndarray) -> np.ndarray:
    """H with [u, v, 1]^T ~ H [X, Y, 1]^T, minimizing algebraic error on normalized points."""
    world = np.asarray(world, dtype=float).reshape(-1, 2)
    image = np.asarray(image, dtype=float).reshape(-1, 2)
    n = len(world)
    if n < 4 or len(image) != n:
        raise DegenerateConfiguration(f"A homography needs at least 4 correspondences, got {n}")

    wn, tw = normalize_points(world)
    im, ti = normalize_points(image)
    design = np.zeros((2 * n, 9), dtype=float)
    X, Y = wn[:, 0], wn[:, 1]
    u, v = im[:, 0], im[:, 1]
    ones, zeros = np.ones(n), np.zeros(n)
    design[0::2] = np.column_stack([-X, -Y, -ones, zeros, zeros, zeros, u * X, u * Y, u])
    design[1::2] = np.column_stack([zeros, zeros, zeros, -X, -Y, -ones, v * X, v * Y, v])

    _, s, vt = np.linalg.svd(design)
    if len(s) < 8 or s[0] == 0.0 or s[7] / s[0] < RANK_EPSILON:
        raise DegenerateConfiguration("Correspondences do not determine a homography (rank-deficient design)")

    h = vt[-1].reshape(3, 3)
    homography = np.linalg.solve(ti, h @ tw)
    if abs(homography[2, 2]) > HOMOGRAPHY_SCALE_EPSILON:
        homography = homography / homography[2, 2]
    return homography


def apply_homography(homography: np.ndarray, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    mapped = np.column_stack([points, np.ones(len(points))]) @ homography.T
    return mapped[:, :2] / mapped[:, 2:3]
