import numpy as np
import pytest

from src.core.camera import Intrinsics
from src.core.distortion import DistortionFn, FunctionKind, Mode, PiecewiseModel, PiecewiseProfile
from src.core.distortion.piecewise import coeffs_from_knots, knot_breakpoints, eval_profile, update_r_max
from src.core.distortion.undistortion import Method, analytic_inverse, approx_inverse, default_method
from src.core.errors import InvalidKnot, EmptyDataset, PoleAtRadius

UNIT = Intrinsics(1.0, 1.0)


class TestKnots:
    def test_breakpoints(self):
        np.testing.assert_allclose(knot_breakpoints(0.9, 3), [0.3, 0.6, 0.9])

    def test_worked_example(self):
        # k1 = (1/0.9 - 1) / 0.4, k2 = (1/0.8 - 1/0.9) / 0.4, a2 = 1/0.9 - 0.4 k2
        coefficients = coeffs_from_knots((0.9, 0.8), (0.4, 0.8), FunctionKind.T5)
        assert coefficients.k == pytest.approx((0.277778, 0.347222), abs=5e-7)
        assert coefficients.a == pytest.approx((1.0, 0.972222), abs=5e-7)

    @pytest.mark.parametrize('base_kind', [FunctionKind.T5, FunctionKind.T6])
    @pytest.mark.parametrize('knots', [(0.9,), (0.97, 0.91), (1.02, 0.95, 0.88)])
    def test_back_substitution(self, base_kind, knots):
        profile = PiecewiseProfile(base_kind, knots, r_max=0.75)
        values, _ = profile.values(profile.breakpoints)
        np.testing.assert_allclose(values, knots, atol=1e-12)

    @pytest.mark.parametrize('base_kind', [FunctionKind.T5, FunctionKind.T6])
    def test_continuous_at_interior_knots(self, base_kind):
        profile = PiecewiseProfile(base_kind, (0.97, 0.91, 0.86), r_max=0.9)
        a, k = profile.coefficients.a, profile.coefficients.k
        for i, r in enumerate(profile.breakpoints[:-1]):
            rho = r if base_kind == FunctionKind.T5 else r * r
            assert 1.0 / (a[i] + k[i] * rho) == pytest.approx(1.0 / (a[i + 1] + k[i + 1] * rho), abs=1e-12)

    def test_invalid_knot_value(self):
        with pytest.raises(InvalidKnot):
            coeffs_from_knots((0.9, -0.1), (0.4, 0.8), FunctionKind.T5)

    def test_zero_r_max(self):
        with pytest.raises(InvalidKnot):
            PiecewiseProfile(FunctionKind.T6, (0.9, 0.8)).values(np.array([0.1]))

    def test_base_kind(self):
        with pytest.raises(ValueError):
            PiecewiseProfile(FunctionKind.T3, (0.9,), 1.0)


class TestProfile:
    @pytest.mark.parametrize('base_kind', [FunctionKind.T5, FunctionKind.T6])
    def test_single_segment_is_the_base_function_bitwise(self, base_kind):
        profile = PiecewiseProfile(base_kind, (0.92,), r_max=0.8)
        fn = DistortionFn(base_kind, (profile.coefficients.k[0],))
        r = np.linspace(0.0, 1.2, 49)
        assert np.array_equal(profile.values(r)[0], fn.values(r)[0])

    def test_identity_knots(self):
        profile = PiecewiseProfile.identity(FunctionKind.T5, 3, r_max=1.0)
        np.testing.assert_array_equal(profile.values(np.linspace(0.0, 2.0, 9))[0], np.ones(9))

    def test_breakpoint_belongs_to_the_left_segment(self):
        profile = PiecewiseProfile(FunctionKind.T5, (0.9, 0.8), r_max=0.8)
        assert profile.segment_index(np.array([0.0, 0.4, 0.41, 0.8, 5.0])).tolist() == [0, 0, 1, 1, 1]

    def test_pole_past_r_max(self):
        # one segment with k = (1/2 - 1) / 1 vanishes at r = 2
        profile = PiecewiseProfile(FunctionKind.T5, (2.0,), r_max=1.0)
        with pytest.raises(PoleAtRadius):
            eval_profile(profile, 2.0)

    def test_derivative(self):
        profile = PiecewiseProfile(FunctionKind.T6, (0.97, 0.9), r_max=1.0)
        r = np.array([0.2, 0.7])
        h = 1e-6
        numeric = (profile.values(r + h)[0] - profile.values(r - h)[0]) / (2 * h)
        np.testing.assert_allclose(profile.derivative(r), numeric, rtol=1e-7)

    def test_update_r_max(self):
        assert update_r_max([0.1, 0.7, 0.3]) == 0.7
        with pytest.raises(EmptyDataset):
            update_r_max([])


class TestModel:
    def test_radial_and_geometric_coefficients(self):
        radial = PiecewiseModel.create(FunctionKind.T6, 2, Mode.RADIAL, 1.0)
        geometric = PiecewiseModel.create(FunctionKind.T6, 2, Mode.GEOMETRIC, 1.0)
        assert radial.num_coefficients == 2 and geometric.num_coefficients == 4
        assert geometric.label == 'geometric/6x2'

    def test_refresh_keeps_knots(self):
        model = PiecewiseModel.create(FunctionKind.T5, 2).with_coefficients([0.9, 0.8, 0.95, 0.85])
        refreshed = model.refresh(0.6)
        assert refreshed.r_max == 0.6
        assert refreshed.coefficients.tolist() == [0.9, 0.8, 0.95, 0.85]

    def test_invalid_knots_flag_every_point(self):
        model = PiecewiseModel.create(FunctionKind.T5, 2, r_max=1.0).with_coefficients([0.9, -1.0, 1.0, 1.0])
        _, _, bad = model.distort_points(np.array([0.1, 0.2]), np.array([0.0, 0.1]), UNIT)
        assert bad.all()

    @pytest.mark.parametrize('base_kind', [FunctionKind.T5, FunctionKind.T6])
    @pytest.mark.parametrize('segments', [1, 2, 3])
    def test_analytic_inverse(self, base_kind, segments):
        knots = [0.97, 0.93, 0.9][:segments] + [0.99, 0.95, 0.92][:segments]
        model = PiecewiseModel.create(base_kind, segments, r_max=0.8).with_coefficients(knots)
        rng = np.random.default_rng(segments)
        r = 0.8 * np.sqrt(rng.uniform(0.0, 1.0, 400))
        theta = rng.uniform(0.0, 2.0 * np.pi, 400)
        x, y = r * np.cos(theta), r * np.sin(theta)
        x_d, y_d, _ = model.distort_points(x, y, UNIT)

        x_u, y_u = analytic_inverse(model, x_d, y_d)
        np.testing.assert_allclose(x_u, x, atol=1e-12)
        np.testing.assert_allclose(y_u, y, atol=1e-12)
        assert default_method(model) == Method.ANALYTIC

    def test_no_approximate_inverse(self):
        model = PiecewiseModel.create(FunctionKind.T5, 2, r_max=1.0)
        with pytest.raises(ValueError):
            approx_inverse(model, np.array([0.1]), np.array([0.1]))
