"""Command line: calibrate, compare, undistort, curves, simulate and import-csv."""
from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import (EXIT_OK, EXIT_INPUT_ERROR, EXIT_NOT_CONVERGED, MAX_ITERATIONS, TOLERANCE_X,
                     DEFAULT_CURVE_SAMPLES, DEFAULT_TRACE_RADIUS, DEFAULT_TRACE_SAMPLES, ERROR_MARKER)
from .core import repository
from .core.calibration.comparison import run_comparison
from .core.calibration.refinement import RefinementOptions, calibrate
from .core.camera import Intrinsics, to_pixels
from .core.distortion import (FunctionKind, Formulation, Mode, RadiusUnits, DistortionModel,
                              create_model)
from .core.distortion.undistortion import Method, default_method, undistort_points
from .core.errors import CalibrationError
from .core.simulation import load_config, simulate
from .core.tools import export
from .core.tools.plotting import plot_curves, plot_trace

logger = logging.getLogger(__name__)

POLY_PATTERN = re.compile(r'^poly(\d+)$')
MODES = ('radial', 'geometric', 'du')


# =============================================
# Model selection
# =============================================
def parse_model(mode: str, fn: str, formulation: str = 'ud', segments: int = 0,
                decentering_radius: str = RadiusUnits.NORMALIZED.value) -> DistortionModel:
    """Translate the model flags; --mode du is the geometric model in the D-U formulation."""
    model_mode = Mode.RADIAL if mode == 'radial' else Mode.GEOMETRIC
    model_formulation = Formulation.DU if mode == 'du' else Formulation.get_by_code(formulation)
    units = RadiusUnits(decentering_radius)

    if fn == FunctionKind.DECENTERING.code:
        if mode == 'radial' or model_formulation != Formulation.UD or segments:
            raise ValueError("The decentering model is geometric, U-D and not piecewise")
        return create_model(Mode.GEOMETRIC, FunctionKind.DECENTERING, radius_units=units)

    match = POLY_PATTERN.match(fn)
    if match:
        total = int(match.group(1))
        if total < 1:
            raise ValueError("--fn polyN needs N >= 1")
        if model_mode == Mode.GEOMETRIC and total % 2:
            raise ValueError(f"--fn {fn} splits its coefficients over two axes; N must be even")
        order = total if model_mode == Mode.RADIAL else total // 2
        if segments:
            raise ValueError("--segments requires --fn 5 or 6")
        return create_model(model_mode, FunctionKind.POLY_EVEN, model_formulation, order)

    kind = FunctionKind.get_by_code(fn)
    if not kind.in_catalog:
        raise ValueError(f"Invalid function: {fn}")
    if segments and kind not in (FunctionKind.T5, FunctionKind.T6):
        raise ValueError("--segments requires --fn 5 or 6")
    return create_model(model_mode, kind, model_formulation, segments=segments)


def _options(args: argparse.Namespace) -> RefinementOptions:
    return RefinementOptions(max_iter=args.max_iter, tol_x=args.tol, tol_fun=args.tol, fix_skew=args.fix_skew)


# =============================================
# Commands
# =============================================
def cmd_calibrate(args: argparse.Namespace) -> int:
    model = parse_model(args.mode, args.fn, args.formulation, args.segments, args.decentering_radius)
    dataset = export.load_dataset(args.input)
    report = calibrate(dataset, model, _options(args))
    export.save_report(report, args.output)
    print(report.summary())
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_compare(args: argparse.Namespace) -> int:
    dataset = export.load_dataset(args.input)
    rows = run_comparison(dataset, _options(args), args.jobs, RadiusUnits(args.decentering_radius))
    export.write_table(rows, args.output)
    for row in rows:
        radial = '' if row.radial is None else (row.radial.j if row.radial.report else ERROR_MARKER)
        geometric = '' if row.geometric is None else (row.geometric.j if row.geometric.report else ERROR_MARKER)
        print(f"{row.name:>8}  radial {radial!s:>24}  geometric {geometric!s:>24}")
    return EXIT_OK


def cmd_undistort(args: argparse.Namespace) -> int:
    report = export.load_report(args.report)
    model, intr = report.model, report.intrinsics
    method = Method(args.method) if args.method else default_method(model)
    ids, u_d, v_d = export.read_points(args.points)

    x, y = undistort_points(model, u_d, v_d, intr, method)
    u, v = to_pixels(x, y, intr)
    u_check, v_check, _ = model.distort_points(x, y, intr)
    error = np.hypot(u_check - u_d, v_check - v_d)
    export.write_points(args.output, ids, u_d, v_d, x, y, u, v, error)

    worst = float(np.nanmax(error)) if error.size else 0.0
    print(f"{len(ids)} point(s) undistorted with {method.value}; max re-distortion error {worst:.3g} px")
    if method == Method.APPROX and worst > 1e-6:
        logger.warning("Approximate inverse leaves up to %.3g px of re-distortion error", worst)
    return EXIT_OK


def _curve_columns(model: DistortionModel, r: np.ndarray, prefix: str) -> dict[str, np.ndarray]:
    fx, fy = model.axis_profiles()
    if model.mode == Mode.RADIAL:
        return {prefix: fx.values(r)[0]}
    return {f"{prefix}1": fx.values(r)[0], f"{prefix}2": fy.values(r)[0]}


def _suffixed(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}-{suffix}{path.suffix}")


def cmd_curves(args: argparse.Namespace) -> int:
    report = export.load_report(args.report)
    if args.samples < 2:
        raise ValueError("--samples must be at least 2")
    if report.model.kind == FunctionKind.DECENTERING:
        raise ValueError("The decentering model acts on pixel offsets and has no f(r) curve")
    r_max = report.r_max if report.r_max > 0.0 else DEFAULT_TRACE_RADIUS
    r = np.linspace(0.0, r_max, args.samples)
    curves = _curve_columns(report.model, r, 'f_k')
    if args.companion:
        companion = export.load_report(args.companion)
        if companion.model.mode != Mode.RADIAL:
            raise ValueError("The companion report must hold a radial model")
        curves.update(_curve_columns(companion.model, r, 'f_k_radial'))
    export.write_curves(args.output, r, curves)

    theta = np.linspace(0.0, 2.0 * np.pi, DEFAULT_TRACE_SAMPLES, endpoint=False)
    x, y = DEFAULT_TRACE_RADIUS * np.cos(theta), DEFAULT_TRACE_RADIUS * np.sin(theta)
    x_d, y_d, _ = report.model.distort_points(x, y, Intrinsics(1.0, 1.0))
    export.write_trace(_suffixed(args.output, 'trace'), x, y, x_d, y_d)

    if args.plot:
        plot_curves(r, curves, args.plot)
        plot_trace(x, y, x_d, y_d, _suffixed(args.plot, 'trace'))
    print(f"{args.samples} curve sample(s) over [0, {r_max:.6g}] written to {args.output}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    dataset, truth = simulate(config)
    export.save_dataset(dataset, args.output)
    export.save_truth(truth, args.truth or args.output.with_suffix('.truth.json'))
    print(f"{dataset.num_views} view(s), {dataset.num_points} point(s) written to {args.output}")
    return EXIT_OK


def cmd_import_csv(args: argparse.Namespace) -> int:
    dataset = export.import_csv(args.inputs, tuple(args.image_size))
    export.save_dataset(dataset, args.output)
    print(f"{dataset.num_views} view(s), {dataset.num_points} point(s) written to {args.output}")
    return EXIT_OK


# =============================================
# Parser
# =============================================
def _add_optimizer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--fix-skew', action='store_true', help="Hold the skew gamma at zero")
    parser.add_argument('--max-iter', type=int, default=MAX_ITERATIONS, help="Outer iteration limit")
    parser.add_argument('--tol', type=float, default=TOLERANCE_X, help="Step and function tolerance")
    parser.add_argument('--decentering-radius', choices=[u.value for u in RadiusUnits],
                        default=RadiusUnits.NORMALIZED.value, help="Radius entering the decentering terms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='distortion-calibration',
                                     description="Planar camera calibration with radial and geometric distortion")
    parser.add_argument('-v', '--verbose', action='store_true', help="Log optimizer progress")
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('calibrate', help="Calibrate one distortion model")
    p.add_argument('input', type=Path, help="Dataset file")
    p.add_argument('-o', '--output', type=Path, required=True, help="Report file to write")
    p.add_argument('--mode', choices=MODES, default='geometric')
    p.add_argument('--formulation', choices=[f.code for f in Formulation], default=Formulation.UD.code)
    p.add_argument('--fn', default='3', help="1..10, polyN or heikkila")
    p.add_argument('--segments', type=int, choices=(1, 2, 3), default=0, help="Piecewise T5/T6 segments")
    _add_optimizer_flags(p)
    p.set_defaults(handler=cmd_calibrate)

    p = commands.add_parser('compare', help="Radial against geometric J for every function")
    p.add_argument('input', type=Path)
    p.add_argument('-o', '--output', type=Path, required=True, help="Table file to write")
    p.add_argument('--jobs', type=int, default=1, help="Worker processes")
    _add_optimizer_flags(p)
    p.set_defaults(handler=cmd_compare)

    p = commands.add_parser('undistort', help="Undistort a list of observed pixels")
    p.add_argument('report', type=Path)
    p.add_argument('points', type=Path, help="CSV with columns u,v (and optionally id)")
    p.add_argument('-o', '--output', type=Path, required=True)
    p.add_argument('--method', choices=[m.value for m in Method], default=None)
    p.set_defaults(handler=cmd_undistort)

    p = commands.add_parser('curves', help="Sample f(r) per axis and the ellipse trace")
    p.add_argument('report', type=Path)
    p.add_argument('-o', '--output', type=Path, required=True)
    p.add_argument('--samples', type=int, default=DEFAULT_CURVE_SAMPLES)
    p.add_argument('--companion', type=Path, default=None, help="Radial report to overlay")
    p.add_argument('--plot', type=Path, default=None, help="PNG file for the curves")
    p.set_defaults(handler=cmd_curves)

    p = commands.add_parser('simulate', help="Generate a synthetic dataset and its truth")
    p.add_argument('config', type=Path, nargs='?', default=None)
    p.add_argument('-o', '--output', type=Path, required=True)
    p.add_argument('--truth', type=Path, default=None)
    p.add_argument('--seed', type=int, default=None)
    p.set_defaults(handler=cmd_simulate)

    p = commands.add_parser('import-csv', help="Build a dataset from per-view id,X,Y,u,v files")
    p.add_argument('inputs', type=Path, nargs='+')
    p.add_argument('-o', '--output', type=Path, required=True)
    p.add_argument('--image-size', type=int, nargs=2, default=(0, 0), metavar=('WIDTH', 'HEIGHT'))
    p.set_defaults(handler=cmd_import_csv)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if not repository.is_initialized():
        repository.initialize()
    try:
        return args.handler(args)
    except (CalibrationError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
