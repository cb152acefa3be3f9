from __future__ import annotations

from .functions import FunctionKind, DistortionFn
from .models import (DistortionModel, RadialModel, GeometricModel, DecenteringModel, Formulation, Mode,
                     RadiusUnits)
from .piecewise import PiecewiseModel, PiecewiseProfile
from ..errors import DatasetFormatError


def create_model(mode: Mode, kind: FunctionKind, formulation: Formulation = Formulation.UD, order: int = 0,
                 segments: int = 0, radius_units: RadiusUnits = RadiusUnits.NORMALIZED) -> DistortionModel:
    """Build a model at its undistorted starting point."""
    if kind == FunctionKind.DECENTERING:
        return DecenteringModel(radius_units=radius_units)
    if segments:
        if formulation != Formulation.UD:
            raise ValueError("Piecewise models are defined in the U-D formulation only")
        return PiecewiseModel.create(kind, segments, mode)
    zeros = DistortionFn.zeros(kind, order)
    if mode == Mode.RADIAL:
        return RadialModel(zeros, formulation)
    return GeometricModel(zeros, zeros, formulation)


def model_from_record(record: dict) -> DistortionModel:
    """Inverse of DistortionModel.to_record."""
    try:
        kind = record['kind']
        mode = Mode(record['mode'])
        if kind == FunctionKind.DECENTERING.code:
            return DecenteringModel(tuple(record['coefficients']),
                                    RadiusUnits(record.get('radius_units', RadiusUnits.NORMALIZED.value)))
        if kind == 'piecewise':
            base_kind = FunctionKind.get_by_code(record['base_kind'])
            r_max = float(record['r_max'])
            profile_x = PiecewiseProfile(base_kind, tuple(record['g1']), r_max)
            profile_y = PiecewiseProfile(base_kind, tuple(record['g2']), r_max) if mode == Mode.GEOMETRIC else None
            return PiecewiseModel(profile_x, profile_y)

        fn_kind = FunctionKind.get_by_code(kind)
        formulation = Formulation.get_by_code(record.get('formulation', Formulation.UD.code))
        order = int(record.get('order', 0))
        if mode == Mode.RADIAL:
            return RadialModel(DistortionFn(fn_kind, tuple(record['k1']), order), formulation)
        return GeometricModel.create(fn_kind, record['k1'], record['k2'], formulation, order)
    except KeyError as e:
        raise DatasetFormatError("Model record is missing fields", [str(e.args[0])]) from e
