import csv
import json

import numpy as np
import pytest

from src.config import DATASET_FORMAT, ERROR_MARKER
from src.core.calibration.comparison import Cell, CellResult, ComparisonRow
from src.core.calibration.dataset import CalibrationDataset, View
from src.core.calibration.refinement import RefinementOptions, calibrate
from src.core.camera import Extrinsics
from src.core.distortion import FunctionKind, GeometricModel, Mode, PiecewiseModel
from src.core.errors import DatasetFormatError
from src.core.tools import export


def _rows(path):
    with open(path, 'r', encoding='utf-8', newline='') as file:
        return list(csv.reader(file))


class TestDataset:
    def test_round_trip(self, tmp_path, simulated):
        dataset, _ = simulated(noise_sigma=0.25, seed=3)
        path = tmp_path / 'scene' / 'dataset.json'
        export.save_dataset(dataset, path)
        assert export.load_dataset(path) == dataset

    def test_pose_hint_and_ids_survive(self, tmp_path, tiny_dataset):
        hint = Extrinsics((0.1, 0.0, 0.0), (0.0, 0.0, 5.0))
        view = View(tiny_dataset.views[0].world, tiny_dataset.views[0].image, ('a', 'b', 'c', 'd'), hint)
        dataset = CalibrationDataset((view,) + tiny_dataset.views[1:], tiny_dataset.image_size)
        path = tmp_path / 'dataset.json'
        export.save_dataset(dataset, path)
        assert export.load_dataset(path) == dataset

    def test_wrong_format(self, tmp_path):
        path = tmp_path / 'dataset.json'
        path.write_text(json.dumps({'format': 'other/2', 'views': []}), encoding='utf-8')
        with pytest.raises(DatasetFormatError) as info:
            export.load_dataset(path)
        assert info.value.fields == ['format']

    def test_malformed_views(self, tmp_path):
        path = tmp_path / 'dataset.json'
        data = {'format': DATASET_FORMAT, 'views': [{'points': [{'world': [0, 0], 'image': [1, 1]}]}, {'dots': []}]}
        path.write_text(json.dumps(data), encoding='utf-8')
        with pytest.raises(DatasetFormatError) as info:
            export.load_dataset(path)
        assert info.value.fields == ['views[1]']

    def test_not_json(self, tmp_path):
        path = tmp_path / 'dataset.json'
        path.write_text('[1, 2', encoding='utf-8')
        with pytest.raises(DatasetFormatError):
            export.load_dataset(path)


class TestImportCsv:
    def test_one_view_per_file(self, tmp_path):
        paths = []
        for index in range(3):
            path = tmp_path / f"view{index}.csv"
            path.write_text("id,X,Y,u,v\n0,0,0,10,20\n1,1,0,110,20\n2,1,1,110,120\n3,0,1,10,120\n",
                            encoding='utf-8')
            paths.append(path)
        dataset = export.import_csv(paths, (640, 480))
        assert dataset.num_views == 3 and dataset.num_points == 12
        assert dataset.views[0].ids == (0, 1, 2, 3)
        np.testing.assert_array_equal(dataset.views[2].image[2], [110.0, 120.0])

    def test_missing_column(self, tmp_path):
        path = tmp_path / 'view.csv'
        path.write_text("id,X,Y,u\n0,0,0,10\n", encoding='utf-8')
        with pytest.raises(DatasetFormatError) as info:
            export.import_csv([path])
        assert info.value.fields == ['v']

    def test_non_numeric(self, tmp_path):
        path = tmp_path / 'view.csv'
        path.write_text("id,X,Y,u,v\n0,0,zero,10,20\n", encoding='utf-8')
        with pytest.raises(DatasetFormatError):
            export.import_csv([path])


class TestReport:
    @pytest.mark.parametrize('model', [
        GeometricModel.create(FunctionKind.T3, (-0.115, -0.13), (-0.12, -0.145)),
        PiecewiseModel.create(FunctionKind.T6, 2).with_coefficients([0.97, 0.94, 0.96, 0.92]),
    ])
    def test_round_trip_is_exact(self, tmp_path, simulated, model):
        dataset, _ = simulated(model, noise_sigma=0.1, seed=4)
        report = calibrate(dataset, model.initial(), RefinementOptions(max_iter=10))
        path = tmp_path / 'report.json'
        export.save_report(report, path)
        assert export.load_report(path) == report

    def test_missing_field(self, tmp_path):
        path = tmp_path / 'report.json'
        path.write_text(json.dumps({'format': 'calibration-report/1', 'intrinsics': {}}), encoding='utf-8')
        with pytest.raises(DatasetFormatError):
            export.load_report(path)


def test_truth_round_trip(tmp_path, simulated):
    _, truth = simulated(PiecewiseModel.create(FunctionKind.T5, 1).with_coefficients([0.97, 0.95]), seed=6)
    path = tmp_path / 'truth.json'
    export.save_truth(truth, path)
    assert export.load_truth(path) == truth


def test_truth_without_model(tmp_path, simulated):
    _, truth = simulated()
    path = tmp_path / 'truth.json'
    export.save_truth(truth, path)
    assert export.load_truth(path).model is None


class TestColumns:
    def test_table(self, tmp_path):
        report = type('Report', (), {'j_final': 0.1})()
        ok = CellResult(Cell('3', Mode.GEOMETRIC, FunctionKind.T3), report)
        failed = CellResult(Cell('3', Mode.RADIAL, FunctionKind.T3), error='pole')
        rows = [ComparisonRow('3', failed, ok),
                ComparisonRow('heikkila', None, ok),
                ComparisonRow('4', ok, ok, True, 0.75)]
        path = tmp_path / 'table.csv'
        assert export.write_table(rows, path) == 3
        assert _rows(path) == [
            ['function', 'J_radial', 'J_geometric', 'radial_between', 'envelope_fraction'],
            ['3', ERROR_MARKER, '0.1', '', ''],
            ['heikkila', '', '0.1', '', ''],
            ['4', '0.1', '0.1', 'True', '0.75'],
        ]

    def test_floats_keep_full_precision(self, tmp_path):
        path = tmp_path / 'curves.csv'
        r = np.array([0.0, 1.0 / 3.0])
        export.write_curves(path, r, {'f_k': np.array([1.0, 0.1 + 0.2])})
        rows = _rows(path)
        assert rows[0] == ['r', 'f_k']
        assert float(rows[2][0]) == 1.0 / 3.0
        assert float(rows[2][1]) == 0.1 + 0.2

    def test_points_with_and_without_ids(self, tmp_path):
        path = tmp_path / 'points.csv'
        path.write_text("u,v\n320,240\n330.5,250\n", encoding='utf-8')
        ids, u, v = export.read_points(path)
        assert ids == [0, 1]
        np.testing.assert_array_equal(u, [320.0, 330.5])

        path.write_text("id,u,v\np7,1,2\n", encoding='utf-8')
        assert export.read_points(path)[0] == ['p7']
