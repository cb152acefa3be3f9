from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ...config import PLOT_WIDTH, PLOT_HEIGHT, PLOT_MARGIN, PLOT_BG, AXIS_COLOR, CURVE_COLORS, LINE_WIDTH

logger = logging.getLogger(__name__)


def create_empty_image(width: int = PLOT_WIDTH, height: int = PLOT_HEIGHT) -> tuple[Image.Image, ImageDraw.ImageDraw]:
    """Create a blank canvas and its drawing context."""
    image = Image.new('RGB', (width, height), PLOT_BG)
    return image, ImageDraw.Draw(image)


class _Frame:
    """Affine map from data coordinates to the plotting area; y grows upwards."""

    def __init__(self, x_range: tuple[float, float], y_range: tuple[float, float],
                 width: int = PLOT_WIDTH, height: int = PLOT_HEIGHT, equal: bool = False):
        x0, x1 = x_range
        y0, y1 = y_range
        if x1 - x0 <= 0.0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 - y0 <= 0.0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        self.sx = (width - 2 * PLOT_MARGIN) / (x1 - x0)
        self.sy = (height - 2 * PLOT_MARGIN) / (y1 - y0)
        if equal:
            self.sx = self.sy = min(self.sx, self.sy)
        self.x0, self.y0 = x0, y0
        self.height = height

    def __call__(self, x, y) -> list[tuple[float, float]]:
        px = PLOT_MARGIN + (np.asarray(x) - self.x0) * self.sx
        py = self.height - PLOT_MARGIN - (np.asarray(y) - self.y0) * self.sy
        return list(zip(px.tolist(), py.tolist()))


def _draw_axes(draw: ImageDraw.ImageDraw, frame: _Frame, x_range, y_range) -> None:
    (left, bottom), (right, top) = frame([x_range[0], x_range[1]], [y_range[0], y_range[1]])
    draw.line(xy=[(left, bottom), (right, bottom)], fill=AXIS_COLOR, width=1)
    draw.line(xy=[(left, bottom), (left, top)], fill=AXIS_COLOR, width=1)
    draw.text((left, bottom + 6), f"{x_range[0]:.3g}", fill=AXIS_COLOR)
    draw.text((right - 24, bottom + 6), f"{x_range[1]:.3g}", fill=AXIS_COLOR)
    draw.text((4, bottom - 12), f"{y_range[0]:.4g}", fill=AXIS_COLOR)
    draw.text((4, top), f"{y_range[1]:.4g}", fill=AXIS_COLOR)


def _finite_range(*arrays) -> tuple[float, float]:
    values = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays])
    values = values[np.isfinite(values)]
    if values.size == 0:
        return 0.0, 1.0
    return float(values.min()), float(values.max())


def plot_curves(r: np.ndarray, curves: dict[str, np.ndarray], path: Path) -> None:
    """f(r) curves over a shared radius axis, one color per curve with a legend."""
    image, draw = create_empty_image()
    x_range = _finite_range(r)
    y_range = _finite_range(*curves.values())
    frame = _Frame(x_range, y_range)
    _draw_axes(draw, frame, x_range, y_range)

    for index, (name, values) in enumerate(curves.items()):
        color = CURVE_COLORS[index % len(CURVE_COLORS)]
        finite = np.isfinite(values)
        draw.line(xy=frame(r[finite], values[finite]), fill=color, width=LINE_WIDTH)
        draw.text((PLOT_WIDTH - PLOT_MARGIN - 80, PLOT_MARGIN + 14 * index), name, fill=color)
    image.save(path)
    logger.info("Saved curve plot to %s", path)


def plot_trace(x, y, x_d, y_d, path: Path) -> None:
    """A circle of undistorted points and its image under the distortion, at equal axis scales."""
    image, draw = create_empty_image()
    x_range = _finite_range(x, x_d)
    y_range = _finite_range(y, y_d)
    frame = _Frame(x_range, y_range, equal=True)
    _draw_axes(draw, frame, x_range, y_range)

    for index, (px, py) in enumerate(((x, y), (x_d, y_d))):
        px, py = np.asarray(px), np.asarray(py)
        finite = np.isfinite(px) & np.isfinite(py)
        points = frame(px[finite], py[finite])
        if not points:
            continue
        draw.line(xy=points + points[:1], fill=CURVE_COLORS[index], width=LINE_WIDTH)
    image.save(path)
    logger.info("Saved trace plot to %s", path)
