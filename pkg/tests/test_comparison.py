from types import SimpleNamespace

import pytest

from src.core.calibration import comparison
from src.core.calibration.comparison import (BASELINE_ROW, DECENTERING_ROW, Cell, comparison_cells, envelope_fraction,
                                             radial_between, run_cell, run_comparison)
from src.core.calibration.refinement import RefinementOptions
from src.core.distortion import DistortionFn, FunctionKind, GeometricModel, Mode, RadialModel
from src.core.errors import PoleAtRadius

T3_TRUTH = GeometricModel.create(FunctionKind.T3, (-0.115, -0.13), (-0.12, -0.145))


@pytest.fixture
def fake_calibrate(monkeypatch):
    """Geometric J equals the function code; the geometric T7 cell hits a pole."""
    def calibrate(dataset, model, options):
        if model.kind == FunctionKind.T7 and model.mode == Mode.GEOMETRIC:
            raise PoleAtRadius(0.4)
        code = model.kind.code
        j = float(code) if code.isdigit() else 0.5
        if model.mode == Mode.RADIAL:
            j += 100.0
        return SimpleNamespace(j_final=j, model=model.initial(), r_max=0.5)

    monkeypatch.setattr(comparison, 'calibrate', calibrate)


def test_cells():
    cells = comparison_cells()
    assert len(cells) == 23
    assert cells[-1] == Cell(DECENTERING_ROW, Mode.GEOMETRIC, FunctionKind.DECENTERING)
    baseline = [c for c in cells if c.row == BASELINE_ROW]
    assert [(c.mode, c.order) for c in baseline] == [(Mode.RADIAL, 6), (Mode.GEOMETRIC, 3)]


def test_failed_cell_is_recorded(fake_calibrate, tiny_dataset):
    result = run_cell(tiny_dataset, Cell('7', Mode.GEOMETRIC, FunctionKind.T7), RefinementOptions())
    assert result.report is None
    assert result.j is None
    assert 'pole' in result.error


def test_row_order(fake_calibrate, tiny_dataset):
    rows = run_comparison(tiny_dataset)
    assert [row.name for row in rows] == ['10', '9', '8', '6', '5', '4', '3', '2', '1', '7',
                                          BASELINE_ROW, DECENTERING_ROW]
    failed = rows[9]
    assert failed.geometric.report is None and failed.radial.j == 107.0
    assert failed.radial_between is None and failed.envelope_fraction is None
    assert rows[-1].radial is None
    assert rows[0].radial_between is True
    assert rows[0].envelope_fraction == 1.0


class TestDiagnostics:
    def test_radial_between(self):
        geometric = GeometricModel.create(FunctionKind.T2, (-0.12,), (-0.08,))
        assert radial_between(RadialModel(DistortionFn(FunctionKind.T2, (-0.1,))), geometric)
        assert not radial_between(RadialModel(DistortionFn(FunctionKind.T2, (-0.2,))), geometric)

    def test_envelope_fraction(self):
        geometric = GeometricModel.create(FunctionKind.T2, (-0.12,), (-0.08,))
        inside = RadialModel(DistortionFn(FunctionKind.T2, (-0.1,)))
        outside = RadialModel(DistortionFn(FunctionKind.T2, (-0.3,)))
        assert envelope_fraction(inside, geometric, 0.6) == 1.0
        # both curves start at f(0) = 1, so only the origin counts for the outlier
        assert envelope_fraction(outside, geometric, 0.6, samples=11) == pytest.approx(1 / 11)


@pytest.mark.slow
class TestFullTable:
    def test_geometric_never_worse(self, simulated):
        dataset, _ = simulated(T3_TRUTH, noise_sigma=0.1, seed=7)
        rows = run_comparison(dataset)
        assert len(rows) == 12
        for row in rows[:10]:
            assert row.geometric.j <= row.radial.j * (1 + 1e-6)
        catalog = [row.geometric.j for row in rows[:10]]
        assert catalog == sorted(catalog, reverse=True)

    def test_workers_match_serial(self, simulated):
        dataset, _ = simulated(T3_TRUTH, noise_sigma=0.1, seed=8)
        options = RefinementOptions(max_iter=15)
        serial = run_comparison(dataset, options)
        parallel = run_comparison(dataset, options, jobs=2)
        assert [(r.name, r.geometric.j) for r in serial] == [(r.name, r.geometric.j) for r in parallel]
