"""Pinhole camera algebra: intrinsics, extrinsics, projection and pixel/normalized conversion."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import NonPositiveDepth, SingularIntrinsics
from .utils import PixelPoint, NormalizedPoint, WorldPoint, as_array


# =============================================
# Intrinsics
# =============================================
@dataclass(frozen=True)
class Intrinsics:
    """The five parameters of the upper-triangular camera matrix A."""
    alpha: float
    beta: float
    gamma: float = 0.0
    u0: float = 0.0
    v0: float = 0.0

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.alpha, self.gamma, self.u0],
                         [0.0, self.beta, self.v0],
                         [0.0, 0.0, 1.0]], dtype=float)

    @property
    def inverse_matrix(self) -> np.ndarray:
        """A^-1 in closed form from the upper-triangular structure."""
        self.check_invertible()
        a, b, g, u0, v0 = self.alpha, self.beta, self.gamma, self.u0, self.v0
        return np.array([[1.0 / a, -g / (a * b), (g * v0 - b * u0) / (a * b)],
                         [0.0, 1.0 / b, -v0 / b],
                         [0.0, 0.0, 1.0]], dtype=float)

    def check_invertible(self) -> None:
        if self.alpha == 0.0 or self.beta == 0.0:
            raise SingularIntrinsics(f"Camera matrix is singular (alpha={self.alpha}, beta={self.beta})")

    def is_valid(self) -> bool:
        return self.alpha > 0.0 and self.beta > 0.0

    def as_vector(self) -> np.ndarray:
        """Optimizer order (alpha, gamma, beta, u0, v0)."""
        return np.array([self.alpha, self.gamma, self.beta, self.u0, self.v0], dtype=float)

    @classmethod
    def from_vector(cls, values) -> Intrinsics:
        alpha, gamma, beta, u0, v0 = (float(v) for v in values)
        return cls(alpha=alpha, beta=beta, gamma=gamma, u0=u0, v0=v0)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> Intrinsics:
        m = np.asarray(matrix, dtype=float) / matrix[2, 2]
        return cls(alpha=float(m[0, 0]), beta=float(m[1, 1]), gamma=float(m[0, 1]),
                   u0=float(m[0, 2]), v0=float(m[1, 2]))


# =============================================
# Extrinsics
# =============================================
@dataclass(frozen=True)
class Extrinsics:
    """World-to-camera rigid transform stored as axis-angle plus translation."""
    rotation_vec: tuple[float, float, float] = (0.0, 0.0, 0.0)
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @cached_property
    def rotation(self) -> np.ndarray:
        matrix = rotation_from_vector(self.rotation_vec)
        matrix.setflags(write=False)
        return matrix

    @property
    def translation_array(self) -> np.ndarray:
        return as_array(self.translation)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([as_array(self.rotation_vec), as_array(self.translation)])

    @classmethod
    def from_vector(cls, values) -> Extrinsics:
        values = [float(v) for v in values]
        return cls(tuple(values[:3]), tuple(values[3:6]))

    @classmethod
    def from_rotation(cls, rotation: np.ndarray, translation) -> Extrinsics:
        vec = vector_from_rotation(rotation)
        return cls(tuple(float(v) for v in vec), tuple(float(v) for v in as_array(translation)))


# =============================================
# Rotation parameterization
# =============================================
def rotation_from_vector(vec) -> np.ndarray:
    """Rodrigues map from an axis-angle vector (radians) to a rotation matrix."""
    vec = as_array(vec).reshape(3)
    if not np.any(vec):
        return np.eye(3)
    return Rotation.from_rotvec(vec).as_matrix()


def vector_from_rotation(matrix: np.ndarray) -> np.ndarray:
    """Inverse Rodrigues map; the result has norm in [0, pi]."""
    return Rotation.from_matrix(np.asarray(matrix, dtype=float)).as_rotvec()


def rotation_roundtrip(vec) -> tuple[np.ndarray, np.ndarray]:
    """Map an axis-angle vector to its matrix and back."""
    matrix = rotation_from_vector(vec)
    return matrix, vector_from_rotation(matrix)


# =============================================
# Projection
# =============================================
def camera_frame(points: np.ndarray, extr: Extrinsics) -> np.ndarray:
    """P^c = R P^w + t for an (n, 3) array of world points."""
    return as_array(points) @ extr.rotation.T + extr.translation_array


def project_points(points: np.ndarray, extr: Extrinsics) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalized undistorted coordinates (x, y) and depths of world points.

    Points with non-positive depth yield nan coordinates; callers decide whether that is an error.
    """
    pc = camera_frame(np.atleast_2d(points), extr)
    depth = pc[:, 2]
    with np.errstate(divide='ignore', invalid='ignore'):
        safe = np.where(depth > 0.0, depth, np.nan)
        x = pc[:, 0] / safe
        y = pc[:, 1] / safe
    return x, y, depth


def project(point: WorldPoint, intr: Intrinsics, extr: Extrinsics) -> PixelPoint:
    """Distortion-free pixel projection; the homogeneous scale is the camera-frame depth."""
    pc = camera_frame(point.array()[None, :], extr)[0]
    if pc[2] <= 0.0:
        raise NonPositiveDepth(f"Point {point} has camera depth {pc[2]:.6g}")
    return normalized_to_pixel(NormalizedPoint(float(pc[0] / pc[2]), float(pc[1] / pc[2])), intr)


# =============================================
# Pixel <-> normalized conversion
# =============================================
def to_pixels(x, y, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray]:
    """u = alpha x + gamma y + u0, v = beta y + v0."""
    return intr.alpha * x + intr.gamma * y + intr.u0, intr.beta * y + intr.v0


def to_normalized(u, v, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form inverse of to_pixels."""
    intr.check_invertible()
    y = (v - intr.v0) / intr.beta
    x = (u - intr.u0 - intr.gamma * y) / intr.alpha
    return x, y


def normalized_to_pixel(p: NormalizedPoint, intr: Intrinsics) -> PixelPoint:
    u, v = to_pixels(p.x, p.y, intr)
    return PixelPoint(float(u), float(v))


def pixel_to_normalized(p: PixelPoint, intr: Intrinsics) -> NormalizedPoint:
    x, y = to_normalized(p.u, p.v, intr)
    return NormalizedPoint(float(x), float(y))
