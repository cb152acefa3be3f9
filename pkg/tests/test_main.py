import csv
import json

import numpy as np
import pytest

from src.config import ERROR_MARKER, EXIT_OK, EXIT_INPUT_ERROR, EXIT_NOT_CONVERGED
from src.core.distortion import (DecenteringModel, DistortionFn, FunctionKind, Formulation, GeometricModel, Mode,
                                 PiecewiseModel, RadialModel, RadiusUnits)
from src.core.calibration.dataset import CalibrationDataset
from src.core.tools import export
from src.main import main, parse_model

T3_TRUTH = GeometricModel.create(FunctionKind.T3, (-0.115, -0.13), (-0.12, -0.145))


def _rows(path):
    with open(path, 'r', encoding='utf-8', newline='') as file:
        return list(csv.DictReader(file))


@pytest.fixture
def dataset_file(tmp_path):
    config = tmp_path / 'scene.json'
    config.write_text(json.dumps({'model': T3_TRUTH.to_record(), 'noise_sigma': 0.1, 'seed': 9}), encoding='utf-8')
    path = tmp_path / 'dataset.json'
    assert main(['simulate', str(config), '-o', str(path)]) == EXIT_OK
    return path


@pytest.fixture
def report_file(tmp_path, dataset_file):
    path = tmp_path / 'report.json'
    assert main(['calibrate', str(dataset_file), '-o', str(path), '--fn', '3']) == EXIT_OK
    return path


class TestParseModel:
    def test_geometric_default(self):
        assert parse_model('geometric', '3') == GeometricModel.create(FunctionKind.T3, (0.0, 0.0), (0.0, 0.0))

    def test_du_mode(self):
        model = parse_model('du', '4')
        assert model.mode == Mode.GEOMETRIC and model.formulation == Formulation.DU

    def test_poly_orders(self):
        assert parse_model('radial', 'poly6').fn.order == 6
        assert parse_model('geometric', 'poly6').fn_x.order == 3
        with pytest.raises(ValueError):
            parse_model('geometric', 'poly5')

    def test_piecewise(self):
        model = parse_model('radial', '6', segments=3)
        assert isinstance(model, PiecewiseModel)
        assert model.mode == Mode.RADIAL and model.segments == 3
        with pytest.raises(ValueError):
            parse_model('geometric', '3', segments=2)

    def test_decentering(self):
        model = parse_model('geometric', 'heikkila', decentering_radius='pixel')
        assert model == DecenteringModel(radius_units=RadiusUnits.PIXEL)
        for mode in ('radial', 'du'):
            with pytest.raises(ValueError):
                parse_model(mode, 'heikkila')

    def test_unknown_function(self):
        with pytest.raises(ValueError):
            parse_model('radial', '11')


class TestSimulate:
    def test_files(self, tmp_path, dataset_file):
        dataset = export.load_dataset(dataset_file)
        truth = export.load_truth(tmp_path / 'dataset.truth.json')
        assert dataset.num_views == 5 and dataset.num_points == 320
        assert truth.model == T3_TRUTH and truth.seed == 9

    def test_seed_flag(self, tmp_path):
        path = tmp_path / 'dataset.json'
        truth = tmp_path / 'truth.json'
        assert main(['simulate', '-o', str(path), '--truth', str(truth), '--seed', '3']) == EXIT_OK
        assert export.load_truth(truth).seed == 3


class TestCalibrate:
    def test_report(self, report_file):
        report = export.load_report(report_file)
        assert report.converged
        assert report.model.kind == FunctionKind.T3 and report.model.mode == Mode.GEOMETRIC
        assert 0.07 <= report.rms_per_axis <= 0.13

    def test_iteration_limit(self, tmp_path, dataset_file):
        path = tmp_path / 'report.json'
        assert main(['calibrate', str(dataset_file), '-o', str(path), '--max-iter', '1']) == EXIT_NOT_CONVERGED
        assert not export.load_report(path).converged

    def test_missing_input(self, tmp_path, capsys):
        code = main(['calibrate', str(tmp_path / 'absent.json'), '-o', str(tmp_path / 'report.json')])
        assert code == EXIT_INPUT_ERROR
        assert 'error:' in capsys.readouterr().err

    def test_bad_flag_combination(self, tmp_path, dataset_file):
        code = main(['calibrate', str(dataset_file), '-o', str(tmp_path / 'r.json'), '--fn', '3', '--segments', '2'])
        assert code == EXIT_INPUT_ERROR

    def test_too_few_views(self, tmp_path, tiny_dataset):
        path = tmp_path / 'dataset.json'
        export.save_dataset(CalibrationDataset(tiny_dataset.views[:2], (640, 480)), path)
        assert main(['calibrate', str(path), '-o', str(tmp_path / 'r.json')]) == EXIT_INPUT_ERROR


class TestUndistort:
    def test_principal_point_maps_to_origin(self, tmp_path, report_file):
        report = export.load_report(report_file)
        points = tmp_path / 'points.csv'
        points.write_text(f"id,u,v\nc,{report.intrinsics.u0!r},{report.intrinsics.v0!r}\n", encoding='utf-8')
        out = tmp_path / 'undistorted.csv'
        assert main(['undistort', str(report_file), str(points), '-o', str(out)]) == EXIT_OK
        row = _rows(out)[0]
        assert row['id'] == 'c'
        assert abs(float(row['x'])) < 1e-12 and abs(float(row['y'])) < 1e-12
        assert float(row['redistortion_error']) < 1e-9

    def test_analytic_rejected_for_polynomial(self, tmp_path, report_file):
        points = tmp_path / 'points.csv'
        points.write_text("u,v\n300,200\n", encoding='utf-8')
        code = main(['undistort', str(report_file), str(points), '-o', str(tmp_path / 'o.csv'), '--method', 'analytic'])
        assert code == EXIT_INPUT_ERROR


class TestCurves:
    def test_geometric_columns_and_trace(self, tmp_path, report_file):
        out = tmp_path / 'curves.csv'
        plot = tmp_path / 'curves.png'
        assert main(['curves', str(report_file), '-o', str(out), '--samples', '11', '--plot', str(plot)]) == EXIT_OK
        rows = _rows(out)
        assert len(rows) == 11
        assert list(rows[0]) == ['r', 'f_k1', 'f_k2']
        assert float(rows[0]['r']) == 0.0 and float(rows[0]['f_k1']) == 1.0
        assert len(_rows(tmp_path / 'curves-trace.csv')) == 360
        assert plot.exists() and (tmp_path / 'curves-trace.png').exists()

    def test_radial_companion(self, tmp_path, dataset_file, report_file):
        radial = tmp_path / 'radial.json'
        assert main(['calibrate', str(dataset_file), '-o', str(radial), '--mode', 'radial']) == EXIT_OK
        out = tmp_path / 'curves.csv'
        assert main(['curves', str(report_file), '-o', str(out), '--companion', str(radial)]) == EXIT_OK
        assert list(_rows(out)[0]) == ['r', 'f_k1', 'f_k2', 'f_k_radial']

    def test_radial_primary_keeps_its_column(self, tmp_path, dataset_file):
        primary, companion = tmp_path / 'primary.json', tmp_path / 'companion.json'
        for path, fn in ((primary, '3'), (companion, '4')):
            code = main(['calibrate', str(dataset_file), '-o', str(path), '--mode', 'radial', '--fn', fn])
            assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
        out = tmp_path / 'curves.csv'
        assert main(['curves', str(primary), '-o', str(out), '--companion', str(companion)]) == EXIT_OK
        last = _rows(out)[-1]
        assert list(last) == ['r', 'f_k', 'f_k_radial']
        expected = export.load_report(primary).model.fn.values(np.array([float(last['r'])]))[0][0]
        assert float(last['f_k']) == pytest.approx(float(expected), rel=1e-12)
        assert last['f_k'] != last['f_k_radial']

    def test_decentering_report_rejected(self, tmp_path, dataset_file, capsys):
        report = tmp_path / 'heikkila.json'
        code = main(['calibrate', str(dataset_file), '-o', str(report), '--fn', 'heikkila'])
        assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
        code = main(['curves', str(report), '-o', str(tmp_path / 'curves.csv')])
        assert code == EXIT_INPUT_ERROR
        assert 'no f(r) curve' in capsys.readouterr().err
        assert not (tmp_path / 'curves.csv').exists()

    def test_companion_must_be_radial(self, tmp_path, report_file):
        out = tmp_path / 'curves.csv'
        assert main(['curves', str(report_file), '-o', str(out), '--companion', str(report_file)]) == EXIT_INPUT_ERROR

    def test_too_few_samples(self, tmp_path, report_file):
        assert main(['curves', str(report_file), '-o', str(tmp_path / 'c.csv'), '--samples', '1']) == EXIT_INPUT_ERROR


def test_import_csv(tmp_path):
    paths = []
    for index in range(3):
        path = tmp_path / f"view{index}.csv"
        path.write_text("id,X,Y,u,v\n0,0,0,10,20\n1,1,0,110,20\n2,1,1,110,120\n", encoding='utf-8')
        paths.append(str(path))
    out = tmp_path / 'dataset.json'
    assert main(['import-csv', *paths, '-o', str(out), '--image-size', '640', '480']) == EXIT_OK
    dataset = export.load_dataset(out)
    assert dataset.num_views == 3 and dataset.image_size == (640, 480)


@pytest.mark.slow
def test_compare(tmp_path, dataset_file):
    out = tmp_path / 'table.csv'
    assert main(['compare', str(dataset_file), '-o', str(out), '--max-iter', '20']) == EXIT_OK
    rows = _rows(out)
    assert len(rows) == 12
    assert [row['function'] for row in rows[-2:]] == ['poly6', 'heikkila']
    assert rows[-1]['J_radial'] == ''


@pytest.mark.slow
def test_compare_on_radial_truth(tmp_path):
    config = tmp_path / 'scene.json'
    truth = RadialModel(DistortionFn(FunctionKind.T2, (-0.1,)))
    config.write_text(json.dumps({'model': truth.to_record()}), encoding='utf-8')
    dataset = tmp_path / 'dataset.json'
    assert main(['simulate', str(config), '-o', str(dataset)]) == EXIT_OK
    out = tmp_path / 'table.csv'
    assert main(['compare', str(dataset), '-o', str(out), '--max-iter', '200', '--tol', '1e-12']) == EXIT_OK
    rows = {row['function']: row for row in _rows(out)}
    # these families contain 1 + k r^2, so both columns reach the noise-free floor together
    for name in ('2', '4', '10', 'poly6'):
        radial, geometric = float(rows[name]['J_radial']), float(rows[name]['J_geometric'])
        assert radial < 1e-10 and geometric < 1e-10
        assert abs(geometric - radial) <= 1e-6 * radial + 1e-10
    for name in (str(i) for i in range(1, 11)):
        if ERROR_MARKER not in (rows[name]['J_radial'], rows[name]['J_geometric']):
            assert float(rows[name]['J_geometric']) <= float(rows[name]['J_radial']) * (1 + 1e-6)
