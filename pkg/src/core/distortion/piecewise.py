"""Piecewise distortion profiles assembled from 1/(a + k r) or 1/(a + k r^2) segments."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .functions import FunctionKind
from .models import DistortionModel, Formulation, Mode, scale_axes
from .solvers import RadialProfile, Segment, invert_segments
from ..camera import Intrinsics, to_pixels
from ..errors import InvalidKnot, EmptyDataset, PoleAtRadius
from ...config import POLE_EPSILON

logger = logging.getLogger(__name__)

BASE_KINDS = (FunctionKind.T5, FunctionKind.T6)
MAX_SEGMENTS = 3


@dataclass(frozen=True)
class SegmentCoefficients:
    """Per-segment constants a_i and slopes k_i; a_1 is always 1."""
    a: tuple[float, ...]
    k: tuple[float, ...]


def _rho(base_kind: FunctionKind, r):
    """Segment variable: r itself for the first base kind, r squared for the second."""
    return r if base_kind == FunctionKind.T5 else r ** 2


def knot_breakpoints(r_max: float, segments: int) -> np.ndarray:
    """Uniform breakpoints r_i = i r_max / s for i = 1..s."""
    return np.array([i * r_max / segments for i in range(1, segments + 1)], dtype=float)


def coeffs_from_knots(knot_values, breakpoints, base_kind: FunctionKind) -> SegmentCoefficients:
    """Recover the segment coefficients that pass through g_i at every breakpoint r_i.

    k_i = (1/g_i - 1/g_(i-1)) / (rho_i - rho_(i-1)) and a_i = 1/g_(i-1) - k_i rho_(i-1),
    with g_0 = 1 and rho_0 = 0, solved left to right.
    """
    g = [float(v) for v in knot_values]
    r = [float(v) for v in breakpoints]
    if len(g) != len(r) or not g:
        raise InvalidKnot(f"Expected one knot value per breakpoint, got {len(g)} and {len(r)}")
    if any(not np.isfinite(v) or v <= 0.0 for v in g):
        raise InvalidKnot(f"Knot values must be positive: {g}")
    if r[0] <= 0.0 or any(b <= a for a, b in zip(r, r[1:])):
        raise InvalidKnot(f"Breakpoints must be positive and strictly increasing: {r}")

    a, k = [], []
    previous_g, previous_rho = 1.0, 0.0
    for g_i, r_i in zip(g, r):
        rho_i = _rho(base_kind, r_i)
        slope = (1.0 / g_i - 1.0 / previous_g) / (rho_i - previous_rho)
        a.append(1.0 / previous_g - slope * previous_rho)
        k.append(slope)
        previous_g, previous_rho = g_i, rho_i
    return SegmentCoefficients(tuple(a), tuple(k))


# =============================================
# Profile
# =============================================
@dataclass(frozen=True)
class PiecewiseProfile:
    """Distortion function made of continuous segments joined at uniform breakpoints."""
    base_kind: FunctionKind
    knot_values: tuple[float, ...]
    r_max: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'knot_values', tuple(float(v) for v in self.knot_values))
        if self.base_kind not in BASE_KINDS:
            raise ValueError(f"Piecewise profiles are built from functions 5 or 6, got '{self.base_kind.code}'")
        if not 1 <= len(self.knot_values) <= MAX_SEGMENTS:
            raise ValueError(f"Piecewise profiles have 1 to {MAX_SEGMENTS} segments, got {len(self.knot_values)}")

    @classmethod
    def identity(cls, base_kind: FunctionKind, segments: int, r_max: float = 0.0) -> PiecewiseProfile:
        return cls(base_kind, (1.0,) * segments, r_max)

    @property
    def segments(self) -> int:
        return len(self.knot_values)

    @cached_property
    def breakpoints(self) -> np.ndarray:
        return knot_breakpoints(self.r_max, self.segments)

    @cached_property
    def coefficients(self) -> SegmentCoefficients:
        return coeffs_from_knots(self.knot_values, self.breakpoints, self.base_kind)

    def with_knots(self, knot_values) -> PiecewiseProfile:
        return PiecewiseProfile(self.base_kind, tuple(knot_values), self.r_max)

    def with_r_max(self, r_max: float) -> PiecewiseProfile:
        return PiecewiseProfile(self.base_kind, self.knot_values, float(r_max))

    def segment_index(self, r) -> np.ndarray:
        """Segment of each radius; radii past r_max fall in the last segment."""
        index = np.searchsorted(self.breakpoints, np.asarray(r, dtype=float), side='left')
        return np.clip(index, 0, self.segments - 1)

    def values(self, r) -> tuple[np.ndarray, np.ndarray]:
        r = np.asarray(r, dtype=float)
        index = self.segment_index(r)
        a = np.asarray(self.coefficients.a)[index]
        k = np.asarray(self.coefficients.k)[index]
        denominator = a + k * _rho(self.base_kind, r)
        pole = np.abs(denominator) < POLE_EPSILON
        with np.errstate(divide='ignore'):
            return 1.0 / denominator, pole

    def derivative(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        index = self.segment_index(r)
        a = np.asarray(self.coefficients.a)[index]
        k = np.asarray(self.coefficients.k)[index]
        denominator = a + k * _rho(self.base_kind, r)
        d_rho = np.ones_like(r) if self.base_kind == FunctionKind.T5 else 2.0 * r
        with np.errstate(divide='ignore', invalid='ignore'):
            return -k * d_rho / (denominator * denominator)

    def segment_table(self) -> list[tuple[float, float, float, float]]:
        """(a_i, k_i, r_lo, r_hi) per segment; the last segment extends past r_max."""
        edges = [0.0] + [float(b) for b in self.breakpoints]
        rows = []
        for i, (a, k) in enumerate(zip(self.coefficients.a, self.coefficients.k)):
            hi = np.inf if i == self.segments - 1 else edges[i + 1]
            rows.append((a, k, edges[i], hi))
        return rows


def eval_profile(profile: PiecewiseProfile, r: float) -> float:
    value, pole = profile.values(r)
    if pole:
        raise PoleAtRadius(r)
    return float(value)


def update_r_max(radii) -> float:
    """Largest normalized radius among the current feature points."""
    radii = np.asarray(radii, dtype=float).ravel()
    if radii.size == 0:
        raise EmptyDataset("No feature radii to take r_max from")
    return float(np.max(radii))


# =============================================
# Model
# =============================================
@dataclass(frozen=True)
class PiecewiseModel(DistortionModel):
    """Radial (one profile) or geometric (one profile per axis) piecewise distortion."""
    profile_x: PiecewiseProfile
    profile_y: Optional[PiecewiseProfile] = None

    formulation = Formulation.UD
    uses_r_max = True

    def __post_init__(self):
        y = self.profile_y
        if y is not None and (y.base_kind != self.profile_x.base_kind or y.segments != self.profile_x.segments
                              or y.r_max != self.profile_x.r_max):
            raise ValueError("Both axis profiles must share base function, segment count and r_max")

    @classmethod
    def create(cls, base_kind: FunctionKind, segments: int, mode: Mode = Mode.GEOMETRIC,
               r_max: float = 0.0) -> PiecewiseModel:
        profile = PiecewiseProfile.identity(base_kind, segments, r_max)
        return cls(profile, profile if mode == Mode.GEOMETRIC else None)

    @property
    def kind(self) -> FunctionKind:
        return self.profile_x.base_kind

    @property
    def mode(self) -> Mode:
        return Mode.RADIAL if self.profile_y is None else Mode.GEOMETRIC

    @property
    def segments(self) -> int:
        return self.profile_x.segments

    @property
    def r_max(self) -> float:
        return self.profile_x.r_max

    @property
    def label(self) -> str:
        return f"{self.mode.value}/{self.kind.code}x{self.segments}"

    @property
    def coefficients(self) -> np.ndarray:
        values = self.profile_x.knot_values
        if self.profile_y is not None:
            values = values + self.profile_y.knot_values
        return np.array(values, dtype=float)

    def with_coefficients(self, values) -> PiecewiseModel:
        values = [float(v) for v in values]
        s = self.segments
        if self.profile_y is None:
            return PiecewiseModel(self.profile_x.with_knots(values[:s]))
        return PiecewiseModel(self.profile_x.with_knots(values[:s]), self.profile_y.with_knots(values[s:]))

    def initial(self) -> PiecewiseModel:
        return PiecewiseModel.create(self.kind, self.segments, self.mode, self.r_max)

    def refresh(self, r_max: float) -> PiecewiseModel:
        y = None if self.profile_y is None else self.profile_y.with_r_max(r_max)
        return PiecewiseModel(self.profile_x.with_r_max(r_max), y)

    def axis_profiles(self) -> tuple[RadialProfile, RadialProfile]:
        return self.profile_x, self.profile_y or self.profile_x

    def distort_points(self, x, y, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        fx, fy = self.axis_profiles()
        try:
            x_d, y_d, bad = scale_axes(x, y, fx, fy)
        except InvalidKnot as e:
            logger.debug("Piecewise profile rejected: %s", e)
            nan = np.full(np.shape(x), np.nan)
            return nan, nan.copy(), np.ones(np.shape(x), dtype=bool)
        u, v = to_pixels(x_d, y_d, intr)
        return u, v, bad | ~np.isfinite(u) | ~np.isfinite(v)

    def invert(self, x_d, y_d) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Closed-form undistortion; the recovered radius lies in the segment it was solved on."""
        fx, fy = self.axis_profiles()
        segments: list[Segment] = [(a_x, k_x, a_y, k_y, lo, hi) for (a_x, k_x, lo, hi), (a_y, k_y, _, _)
                                   in zip(fx.segment_table(), fy.segment_table())]
        return invert_segments(self.kind.code, x_d, y_d, segments)

    def to_record(self) -> dict:
        record = {'kind': 'piecewise', 'base_kind': self.kind.code, 'mode': self.mode.value,
                  'formulation': self.formulation.code, 'segments': self.segments,
                  'g1': list(self.profile_x.knot_values), 'r_max': self.r_max}
        if self.profile_y is not None:
            record['g2'] = list(self.profile_y.knot_values)
        return record
