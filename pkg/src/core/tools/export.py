"""Dataset, report and truth files plus the columnar outputs of the command line."""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..calibration.comparison import ComparisonRow, CellResult
from ..calibration.dataset import CalibrationDataset, View
from ..calibration.refinement import CalibrationReport
from ..camera import Intrinsics, Extrinsics
from ..distortion import model_from_record
from ..errors import DatasetFormatError
from ..simulation import SimulationTruth
from ...config import DATASET_FORMAT, REPORT_FORMAT, TRUTH_FORMAT, CSV_COLUMNS, ERROR_MARKER

logger = logging.getLogger(__name__)


# =============================================
# JSON helpers
# =============================================
def _read_json(path: Path) -> dict:
    try:
        with open(path, 'r', encoding='utf-8') as file:
            data = json.load(file)
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"{path} is not valid JSON ({e.msg} at line {e.lineno})") from e
    if not isinstance(data, dict):
        raise DatasetFormatError(f"{path} must contain a JSON object")
    return data


def _write_json(data: dict, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(data, file, indent=2)
        file.write('\n')
    logger.debug("Wrote %s", path)


def _check_format(data: dict, expected: str, path: Path) -> None:
    found = data.get('format', expected)
    if found != expected:
        raise DatasetFormatError(f"{path} has format '{found}', expected '{expected}'", ['format'])


def intrinsics_to_dict(intr: Intrinsics) -> dict:
    return {'alpha': intr.alpha, 'gamma': intr.gamma, 'beta': intr.beta, 'u0': intr.u0, 'v0': intr.v0}


def intrinsics_from_dict(data: dict) -> Intrinsics:
    return Intrinsics(alpha=float(data['alpha']), beta=float(data['beta']), gamma=float(data.get('gamma', 0.0)),
                      u0=float(data['u0']), v0=float(data['v0']))


def extrinsics_to_dict(extr: Extrinsics) -> dict:
    return {'rotation': list(extr.rotation_vec), 'translation': list(extr.translation)}


def extrinsics_from_dict(data: dict) -> Extrinsics:
    return Extrinsics(tuple(float(v) for v in data['rotation']), tuple(float(v) for v in data['translation']))


# =============================================
# Datasets
# =============================================
def dataset_to_dict(dataset: CalibrationDataset) -> dict:
    views = []
    for view in dataset.views:
        entry = {'points': [{'id': point_id, 'world': [float(w[0]), float(w[1])], 'image': [float(m[0]), float(m[1])]}
                            for point_id, w, m in zip(view.ids, view.world, view.image)]}
        if view.pose_hint is not None:
            entry['pose_hint'] = extrinsics_to_dict(view.pose_hint)
        views.append(entry)
    return {'format': DATASET_FORMAT, 'image_size': list(dataset.image_size), 'views': views}


def dataset_from_dict(data: dict) -> CalibrationDataset:
    views = []
    bad = []
    for index, entry in enumerate(data.get('views', [])):
        try:
            points = entry['points']
            hint = extrinsics_from_dict(entry['pose_hint']) if entry.get('pose_hint') else None
            views.append(View([p['world'][:2] for p in points], [p['image'][:2] for p in points],
                              tuple(p.get('id', i) for i, p in enumerate(points)), hint))
        except (KeyError, TypeError, ValueError, IndexError):
            bad.append(f"views[{index}]")
    if 'views' not in data:
        bad.append('views')
    try:
        image_size = tuple(int(v) for v in data.get('image_size', (0, 0)))
    except (TypeError, ValueError):
        bad.append('image_size')
        image_size = (0, 0)
    if bad:
        raise DatasetFormatError("Malformed dataset", bad)
    return CalibrationDataset(views, image_size)


def save_dataset(dataset: CalibrationDataset, path: Path) -> None:
    _write_json(dataset_to_dict(dataset), path)


def load_dataset(path: Path) -> CalibrationDataset:
    data = _read_json(path)
    _check_format(data, DATASET_FORMAT, path)
    return dataset_from_dict(data)


def import_csv(paths: Sequence[Path], image_size: tuple[int, int] = (0, 0)) -> CalibrationDataset:
    """One CSV file per view with header id,X,Y,u,v."""
    views = []
    for path in paths:
        with open(path, 'r', encoding='utf-8', newline='') as file:
            reader = csv.DictReader(file)
            missing = [column for column in CSV_COLUMNS if column not in (reader.fieldnames or [])]
            if missing:
                raise DatasetFormatError(f"{path} lacks columns", missing)
            try:
                rows = [(row['id'], float(row['X']), float(row['Y']), float(row['u']), float(row['v']))
                        for row in reader]
            except (TypeError, ValueError) as e:
                raise DatasetFormatError(f"{path} has a non-numeric value ({e})") from e
        ids = tuple(int(r[0]) if r[0].lstrip('-').isdigit() else r[0] for r in rows)
        views.append(View([r[1:3] for r in rows], [r[3:5] for r in rows], ids))
        logger.debug("Imported %d points from %s", len(rows), path)
    return CalibrationDataset(views, image_size)


# =============================================
# Reports
# =============================================
def report_to_dict(report: CalibrationReport) -> dict:
    return {
        'format': REPORT_FORMAT,
        'intrinsics': intrinsics_to_dict(report.intrinsics),
        'extrinsics': [extrinsics_to_dict(e) for e in report.extrinsics],
        'model': report.model.to_record(),
        'J_final': report.j_final,
        'J_initial': report.j_initial,
        'rms': report.rms,
        'rms_per_axis': report.rms_per_axis,
        'iterations': report.iterations,
        'converged': report.converged,
        'r_max': report.r_max,
        'r_max_history': list(report.r_max_history),
        'fix_skew': report.fix_skew,
        'num_views': report.num_views,
        'num_points': report.num_points,
        'per_point_residuals': list(report.per_point_residuals),
    }


def report_from_dict(data: dict) -> CalibrationReport:
    try:
        return CalibrationReport(
            intrinsics=intrinsics_from_dict(data['intrinsics']),
            extrinsics=tuple(extrinsics_from_dict(e) for e in data['extrinsics']),
            model=model_from_record(data['model']),
            j_final=float(data['J_final']),
            j_initial=float(data['J_initial']),
            per_point_residuals=tuple(float(d) for d in data.get('per_point_residuals', [])),
            rms=float(data['rms']),
            rms_per_axis=float(data['rms_per_axis']),
            iterations=int(data['iterations']),
            converged=bool(data['converged']),
            r_max=float(data['r_max']),
            r_max_history=tuple(float(r) for r in data.get('r_max_history', [])),
            fix_skew=bool(data.get('fix_skew', False)),
            num_views=int(data.get('num_views', len(data['extrinsics']))),
            num_points=int(data.get('num_points', len(data.get('per_point_residuals', [])))))
    except KeyError as e:
        raise DatasetFormatError("Malformed report", [str(e.args[0])]) from e
    except (TypeError, ValueError) as e:
        raise DatasetFormatError(f"Malformed report ({e})") from e


def save_report(report: CalibrationReport, path: Path) -> None:
    _write_json(report_to_dict(report), path)


def load_report(path: Path) -> CalibrationReport:
    data = _read_json(path)
    _check_format(data, REPORT_FORMAT, path)
    return report_from_dict(data)


# =============================================
# Simulation truth
# =============================================
def truth_to_dict(truth: SimulationTruth) -> dict:
    return {
        'format': TRUTH_FORMAT,
        'image_size': list(truth.image_size),
        'intrinsics': intrinsics_to_dict(truth.intrinsics),
        'extrinsics': [extrinsics_to_dict(e) for e in truth.extrinsics],
        'model': None if truth.model is None else truth.model.to_record(),
        'noise_sigma': truth.noise_sigma,
        'seed': truth.seed,
    }


def truth_from_dict(data: dict) -> SimulationTruth:
    try:
        model = data.get('model')
        return SimulationTruth(intrinsics_from_dict(data['intrinsics']),
                               tuple(extrinsics_from_dict(e) for e in data['extrinsics']),
                               None if model is None else model_from_record(model),
                               float(data.get('noise_sigma', 0.0)), int(data.get('seed', 0)),
                               tuple(int(v) for v in data.get('image_size', (0, 0))))
    except KeyError as e:
        raise DatasetFormatError("Malformed truth record", [str(e.args[0])]) from e


def save_truth(truth: SimulationTruth, path: Path) -> None:
    _write_json(truth_to_dict(truth), path)


def load_truth(path: Path) -> SimulationTruth:
    data = _read_json(path)
    _check_format(data, TRUTH_FORMAT, path)
    return truth_from_dict(data)


# =============================================
# Columnar outputs
# =============================================
def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, 'w', encoding='utf-8', newline='') as file:
        writer = csv.writer(file)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
            count += 1
    logger.debug("Wrote %d row(s) to %s", count, path)
    return count


def _cell_value(result: Optional[CellResult]):
    if result is None:
        return ''
    return ERROR_MARKER if result.report is None else result.report.j_final


def _optional(value):
    return '' if value is None else value


def write_table(rows: Sequence[ComparisonRow], path: Path) -> int:
    header = ('function', 'J_radial', 'J_geometric', 'radial_between', 'envelope_fraction')
    return _write_rows(path, header, ((row.name, _cell_value(row.radial), _cell_value(row.geometric),
                                       _optional(row.radial_between), _optional(row.envelope_fraction))
                                      for row in rows))


def write_curves(path: Path, r: np.ndarray, curves: dict[str, np.ndarray]) -> int:
    """Columns r followed by one column per named curve."""
    header = ('r', *curves.keys())
    return _write_rows(path, header, zip(r, *curves.values()))


def write_trace(path: Path, x, y, x_d, y_d) -> int:
    return _write_rows(path, ('x', 'y', 'x_d', 'y_d'), zip(x, y, x_d, y_d))


def read_points(path: Path) -> tuple[list, np.ndarray, np.ndarray]:
    """Observed pixels from a CSV with columns u,v and an optional id column."""
    with open(path, 'r', encoding='utf-8', newline='') as file:
        reader = csv.DictReader(file)
        missing = [column for column in ('u', 'v') if column not in (reader.fieldnames or [])]
        if missing:
            raise DatasetFormatError(f"{path} lacks columns", missing)
        try:
            rows = [(row.get('id', index), float(row['u']), float(row['v'])) for index, row in enumerate(reader)]
        except (TypeError, ValueError) as e:
            raise DatasetFormatError(f"{path} has a non-numeric value ({e})") from e
    ids = [r[0] for r in rows]
    return ids, np.array([r[1] for r in rows], dtype=float), np.array([r[2] for r in rows], dtype=float)


def write_points(path: Path, ids: Sequence, u_d, v_d, x, y, u, v, error) -> int:
    header = ('id', 'u_d', 'v_d', 'x', 'y', 'u', 'v', 'redistortion_error')
    return _write_rows(path, header, zip(ids, u_d, v_d, x, y, u, v, error))
