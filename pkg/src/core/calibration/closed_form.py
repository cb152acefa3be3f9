"""Closed-form intrinsics and extrinsics from plane homographies."""
from __future__ import annotations

import logging

import numpy as np

from .dataset import CalibrationDataset
from .homography import estimate_homography
from ..camera import Intrinsics, Extrinsics
from ..errors import InsufficientViews, IllConditioned

logger = logging.getLogger(__name__)


def _constraint(h: np.ndarray, i: int, j: int) -> np.ndarray:
    """Row v_ij with h_i^T B h_j = v_ij . (B11, B12, B22, B13, B23, B33)."""
    return np.array([h[0, i] * h[0, j],
                     h[0, i] * h[1, j] + h[1, i] * h[0, j],
                     h[1, i] * h[1, j],
                     h[2, i] * h[0, j] + h[0, i] * h[2, j],
                     h[2, i] * h[1, j] + h[1, i] * h[2, j],
                     h[2, i] * h[2, j]], dtype=float)


def intrinsics_from_homographies(homographies: list[np.ndarray], fix_skew: bool = False) -> Intrinsics:
    """Solve V b = 0 for the image of the absolute conic and read off the camera matrix."""
    n = len(homographies)
    if n < 2 or (n < 3 and not fix_skew):
        raise InsufficientViews(f"{n} homograph{'y' if n == 1 else 'ies'} cannot determine the intrinsics"
                                + ("" if fix_skew else " with skew estimated"))

    rows = []
    for h in homographies:
        h = np.asarray(h, dtype=float)
        h = h / np.linalg.norm(h)
        rows.append(_constraint(h, 0, 1))
        rows.append(_constraint(h, 0, 0) - _constraint(h, 1, 1))
    v = np.array(rows)
    if fix_skew:
        v = np.delete(v, 1, axis=1)

    _, _, vt = np.linalg.svd(v)
    b = vt[-1]
    if fix_skew:
        b = np.insert(b, 1, 0.0)
    if b[0] < 0.0:
        b = -b
    b11, b12, b22, b13, b23, b33 = b

    det = b11 * b22 - b12 * b12
    if b11 <= 0.0 or det <= 0.0:
        raise IllConditioned("The estimated absolute conic is not positive definite")
    v0 = (b12 * b13 - b11 * b23) / det
    lam = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11
    if lam / b11 <= 0.0:
        raise IllConditioned("The estimated absolute conic is not positive definite")
    alpha = np.sqrt(lam / b11)
    beta = np.sqrt(lam * b11 / det)
    gamma = 0.0 if fix_skew else -b12 * alpha * alpha * beta / lam
    u0 = gamma * v0 / beta - b13 * alpha * alpha / lam
    intr = Intrinsics(alpha=float(alpha), beta=float(beta), gamma=float(gamma), u0=float(u0), v0=float(v0))
    logger.debug("Closed-form intrinsics: %s", intr)
    return intr


def extrinsics_from_homography(homography: np.ndarray, intr: Intrinsics) -> Extrinsics:
    """Pose of the target plane; the rotation is projected onto SO(3) and the depth made positive."""
    a_inv = intr.inverse_matrix
    h = np.asarray(homography, dtype=float)
    m1, m2, m3 = a_inv @ h[:, 0], a_inv @ h[:, 1], a_inv @ h[:, 2]
    lam = 1.0 / np.linalg.norm(m1)
    r1, r2, t = lam * m1, lam * m2, lam * m3
    if t[2] < 0.0:
        r1, r2, t = -r1, -r2, -t

    rotation = np.column_stack([r1, r2, np.cross(r1, r2)])
    u, _, vt = np.linalg.svd(rotation)
    rotation = u @ vt
    if np.linalg.det(rotation) < 0.0:
        u[:, 2] *= -1.0
        rotation = u @ vt
    return Extrinsics.from_rotation(rotation, t)


def initialize(dataset: CalibrationDataset, fix_skew: bool = False) -> tuple[Intrinsics, list[Extrinsics]]:
    """Closed-form starting point for refinement."""
    dataset.validate(fix_skew)
    homographies = [estimate_homography(view.world, view.image) for view in dataset.views]
    intr = intrinsics_from_homographies(homographies, fix_skew)
    return intr, [extrinsics_from_homography(h, intr) for h in homographies]
