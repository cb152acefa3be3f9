"""Every catalog function fitted radially and geometrically on one dataset."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import CalibrationDataset
from .refinement import CalibrationReport, RefinementOptions, calibrate
from .. import repository
from ..distortion import FunctionKind, Mode, create_model, DistortionModel, RadiusUnits
from ..errors import CalibrationError
from ...config import BASELINE_COEFFICIENTS, DEFAULT_CURVE_SAMPLES, ENVELOPE_TOLERANCE

logger = logging.getLogger(__name__)

BASELINE_ROW = f"poly{BASELINE_COEFFICIENTS}"
DECENTERING_ROW = FunctionKind.DECENTERING.code


@dataclass(frozen=True)
class Cell:
    """One calibration run of the table."""
    row: str
    mode: Mode
    kind: FunctionKind
    order: int = 0


@dataclass(frozen=True)
class CellResult:
    cell: Cell
    report: Optional[CalibrationReport] = None
    error: Optional[str] = None

    @property
    def j(self) -> Optional[float]:
        return None if self.report is None else self.report.j_final


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    radial: Optional[CellResult]
    geometric: Optional[CellResult]
    radial_between: Optional[bool] = None
    envelope_fraction: Optional[float] = None


def comparison_cells() -> list[Cell]:
    cells = []
    for kind in FunctionKind.catalog():
        cells.append(Cell(kind.code, Mode.RADIAL, kind))
        cells.append(Cell(kind.code, Mode.GEOMETRIC, kind))
    cells.append(Cell(BASELINE_ROW, Mode.RADIAL, FunctionKind.POLY_EVEN, BASELINE_COEFFICIENTS))
    cells.append(Cell(BASELINE_ROW, Mode.GEOMETRIC, FunctionKind.POLY_EVEN, BASELINE_COEFFICIENTS // 2))
    cells.append(Cell(DECENTERING_ROW, Mode.GEOMETRIC, FunctionKind.DECENTERING))
    return cells


def _ensure_repository() -> None:
    """Worker initializer; forked workers inherit an initialized repository."""
    if not repository.is_initialized():
        repository.initialize()


def run_cell(dataset: CalibrationDataset, cell: Cell, options: RefinementOptions,
             radius_units: RadiusUnits = RadiusUnits.NORMALIZED) -> CellResult:
    try:
        model = create_model(cell.mode, cell.kind, order=cell.order, radius_units=radius_units)
        return CellResult(cell, calibrate(dataset, model, options))
    except (CalibrationError, ValueError, np.linalg.LinAlgError) as e:
        logger.warning("Comparison cell %s/%s failed: %s", cell.row, cell.mode.value, e)
        return CellResult(cell, error=str(e))


# =============================================
# Compromise diagnostics
# =============================================
def radial_between(radial: DistortionModel, geometric: DistortionModel) -> bool:
    """Whether each radial coefficient lies between the matching k1 and k2 coefficients."""
    k = radial.coefficients
    k1, k2 = np.split(geometric.coefficients, 2)
    return bool(np.all((np.minimum(k1, k2) <= k) & (k <= np.maximum(k1, k2))))


def envelope_fraction(radial: DistortionModel, geometric: DistortionModel, r_max: float,
                      samples: int = DEFAULT_CURVE_SAMPLES) -> float:
    """Share of sampled radii where f(r, k) stays inside the envelope of f(r, k1) and f(r, k2)."""
    r = np.linspace(0.0, r_max, samples)
    f, _ = radial.axis_profiles()[0].values(r)
    fx, fy = geometric.axis_profiles()
    f1, _ = fx.values(r)
    f2, _ = fy.values(r)
    lo, hi = np.minimum(f1, f2), np.maximum(f1, f2)
    slack = np.maximum(ENVELOPE_TOLERANCE * (hi - lo), 1e-12)
    inside = (f >= lo - slack) & (f <= hi + slack)
    return float(np.mean(inside))


def _row(name: str, radial: Optional[CellResult], geometric: Optional[CellResult]) -> ComparisonRow:
    if radial is None or geometric is None or radial.report is None or geometric.report is None:
        return ComparisonRow(name, radial, geometric)
    r_model, g_model = radial.report.model, geometric.report.model
    between = None
    if r_model.num_coefficients * 2 == g_model.num_coefficients:
        between = radial_between(r_model, g_model)
    fraction = envelope_fraction(r_model, g_model, geometric.report.r_max)
    return ComparisonRow(name, radial, geometric, between, fraction)


def run_comparison(dataset: CalibrationDataset, options: RefinementOptions = RefinementOptions(),
                   jobs: int = 1, radius_units: RadiusUnits = RadiusUnits.NORMALIZED) -> list[ComparisonRow]:
    """Ten catalog rows sorted by geometric J (largest first), then the baseline and decentering rows."""
    cells = comparison_cells()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_ensure_repository) as executor:
            futures = [executor.submit(run_cell, dataset, cell, options, radius_units) for cell in cells]
            results = [future.result() for future in futures]
    else:
        results = [run_cell(dataset, cell, options, radius_units) for cell in cells]

    by_cell = {(r.cell.row, r.cell.mode): r for r in results}
    catalog = [_row(kind.code, by_cell[(kind.code, Mode.RADIAL)], by_cell[(kind.code, Mode.GEOMETRIC)])
               for kind in FunctionKind.catalog()]
    catalog.sort(key=lambda row: -row.geometric.j if row.geometric.j is not None else np.inf)
    return catalog + [
        _row(BASELINE_ROW, by_cell[(BASELINE_ROW, Mode.RADIAL)], by_cell[(BASELINE_ROW, Mode.GEOMETRIC)]),
        ComparisonRow(DECENTERING_ROW, None, by_cell[(DECENTERING_ROW, Mode.GEOMETRIC)]),
    ]
