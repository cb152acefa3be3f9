from __future__ import annotations

import math
from dataclasses import dataclass, astuple
from typing import TypeVar

import numpy as np

P = TypeVar('P', bound='_PlanarPoint')


# =============================================
# Utility Class: planar points
# =============================================
class _PlanarPoint:
    """Shared vector operations of the two-component point types."""

    def __add__(self: P, other: P) -> P:
        """Add two points component-wise."""
        a, b = astuple(self), astuple(other)
        return type(self)(a[0] + b[0], a[1] + b[1])

    def __sub__(self: P, other: P) -> P:
        """Subtract two points component-wise."""
        a, b = astuple(self), astuple(other)
        return type(self)(a[0] - b[0], a[1] - b[1])

    def __mul__(self: P, other: float) -> P:
        """Scale the point by a scalar value."""
        a = astuple(self)
        return type(self)(a[0] * other, a[1] * other)

    def __neg__(self: P) -> P:
        return self * -1.0

    def distance(self) -> float:
        """Calculate the Euclidean distance from the origin."""
        a = astuple(self)
        return math.sqrt(a[0] ** 2 + a[1] ** 2)

    def direction(self) -> float:
        """Calculate the angle (radians) of the point relative to the first axis."""
        a = astuple(self)
        return math.atan2(a[1], a[0])

    def tuple(self) -> tuple[float, float]:
        """Convert the point to a tuple."""
        return astuple(self)

    def is_finite(self) -> bool:
        return all(math.isfinite(c) for c in astuple(self))


@dataclass(frozen=True)
class NormalizedPoint(_PlanarPoint):
    """Image point after removing the camera matrix, [x, y, 1]^T = A^-1 [u, v, 1]^T."""
    x: float = 0.0
    y: float = 0.0

    @property
    def radius(self) -> float:
        return float(radius(self.x, self.y))


@dataclass(frozen=True)
class PixelPoint(_PlanarPoint):
    """Image point in pixels."""
    u: float = 0.0
    v: float = 0.0


@dataclass(frozen=True)
class WorldPoint:
    """Point in the world frame; planar targets use Z = 0."""
    X: float = 0.0
    Y: float = 0.0
    Z: float = 0.0

    def array(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.Z], dtype=float)


# =============================================
# Utility Functions
# =============================================
def radius(x, y):
    """Radial distance from the origin; one formula for every caller so results stay bitwise-consistent."""
    return np.sqrt(x * x + y * y)


def as_array(values) -> np.ndarray:
    """Convert scalars or sequences to a float64 array."""
    return np.asarray(values, dtype=float)
