"""
Tests for linear and Gaussian-process interpolation.
"""

import math

import numpy as np
import pytest

from rtscalib.exceptions import IllConditionedError, InsufficientDataError, PipelineError
from rtscalib.interpolators import (
    GaussianProcessInterpolator,
    LinearInterpolator,
    get_interpolator,
    interpolate_gp,
    interpolate_linear,
)
from rtscalib.interpolators.gaussian_process import squared_exponential
from rtscalib.schemas import CartesianPoint, GpKernelParams, InterpolationKind, Trajectory


def affine_support(times) -> Trajectory:
    times = np.asarray(times, dtype=float)
    positions = np.column_stack([3.0 + 0.5 * times, -1.0 - 0.2 * times, np.full(len(times), 0.4)])
    return Trajectory(times, positions, "rts2", 2, 2)


def curved_support(times) -> Trajectory:
    times = np.asarray(times, dtype=float)
    positions = np.column_stack([5.0 * np.sin(0.3 * times), 2.0 * np.cos(0.2 * times), 0.01 * times ** 2])
    return Trajectory(times, positions, "rts1", 1, 1)


def textbook_gp_mean(support: Trajectory, query: np.ndarray, params: GpKernelParams) -> np.ndarray:
    """Posterior mean built from scratch: explicit kernel loops, polyfit trend, LU solve."""
    times = [float(t) for t in support.times]

    def kernel(a: float, b: float) -> float:
        return params.signal_sigma ** 2 * math.exp(-((a - b) ** 2) / (2.0 * params.length_scale ** 2))

    gram = np.array([[kernel(a, b) for b in times] for a in times])
    gram += params.noise_sigma ** 2 * np.eye(len(times))
    cross = np.array([[kernel(float(q), b) for b in times] for q in query])

    mean = np.empty((len(query), 3))
    for axis in range(3):
        slope, intercept = np.polyfit(support.times, support.positions[:, axis], 1)
        residual = support.positions[:, axis] - (slope * support.times + intercept)
        mean[:, axis] = slope * query + intercept + cross @ np.linalg.solve(gram, residual)
    return mean


# =============================================================================
# Linear
# =============================================================================

class TestLinearInterpolation:
    """Tests for piecewise-linear interpolation."""

    def test_exact_on_affine_motion(self):
        support = affine_support(np.arange(0.0, 10.01, 0.4))
        query = np.linspace(0.0, 10.0, 97)
        result = interpolate_linear(support, query)
        np.testing.assert_allclose(result.positions, affine_support(query).positions, atol=1e-12)

    def test_support_times_reproduce_samples(self):
        support = curved_support(np.arange(0.0, 8.0, 0.4))
        result = interpolate_linear(support, support.times)
        np.testing.assert_allclose(result.positions, support.positions, atol=1e-12)

    def test_keeps_frame_and_ids(self):
        result = interpolate_linear(affine_support([0.0, 1.0]), [0.5])
        assert (result.frame_id, result.station_id, result.prism_id) == ("rts2", 2, 2)

    def test_accepts_points(self):
        points = [
            CartesianPoint(time=0.0, position=[0.0, 0.0, 0.0], station_id=3, prism_id=3),
            CartesianPoint(time=2.0, position=[2.0, 4.0, 0.0], station_id=3, prism_id=3),
        ]
        result = interpolate_linear(points, [0.5])
        np.testing.assert_allclose(result.positions, [[0.5, 1.0, 0.0]])

    def test_refuses_to_extrapolate(self):
        with pytest.raises(PipelineError, match="extrapolate"):
            interpolate_linear(affine_support([0.0, 1.0]), [1.5])

    def test_rounding_overshoot_is_clipped(self):
        result = interpolate_linear(affine_support([0.0, 1.0]), [1.0 + 1e-12])
        assert result.times[0] == 1.0

    def test_empty_support(self):
        with pytest.raises(InsufficientDataError):
            interpolate_linear([], [0.0])


# =============================================================================
# Gaussian process
# =============================================================================

class TestGaussianProcessInterpolation:
    """Tests for the GP posterior mean."""

    def test_matches_textbook_regression(self):
        params = GpKernelParams(length_scale=1.0, signal_sigma=1.0, noise_sigma=0.02)
        support = curved_support(np.arange(0.0, 12.0, 0.4))
        query = np.linspace(0.0, support.times[-1], 113)
        result = interpolate_gp(support, query, params)
        np.testing.assert_allclose(result.positions, textbook_gp_mean(support, query, params), atol=1e-9, rtol=0.0)

    def test_default_kernel_matches_textbook_regression(self):
        support = curved_support(np.arange(0.0, 12.0, 0.4))
        query = np.linspace(0.0, support.times[-1], 57)
        result = interpolate_gp(support, query)
        np.testing.assert_allclose(
            result.positions, textbook_gp_mean(support, query, GpKernelParams()), atol=1e-7, rtol=0.0
        )

    def test_kernel_is_symmetric_with_signal_variance_diagonal(self):
        params = GpKernelParams(length_scale=0.7, signal_sigma=1.5)
        t = np.array([0.0, 0.3, 1.1, 2.0])
        gram = squared_exponential(t, t, params)
        np.testing.assert_allclose(gram, gram.T, atol=0.0)
        np.testing.assert_allclose(np.diag(gram), 2.25)
        assert gram[0, 1] == pytest.approx(2.25 * math.exp(-0.5 * (0.3 / 0.7) ** 2))

    def test_long_length_scale_two_points_is_linear(self):
        support = curved_support([1.0, 3.0])
        params = GpKernelParams(length_scale=1e6 * 2.0)
        query = np.linspace(1.0, 3.0, 21)
        result = interpolate_gp(support, query, params, min_support=2)
        np.testing.assert_allclose(result.positions, interpolate_linear(support, query).positions, atol=1e-6)

    def test_long_length_scale_affine_support_is_linear(self):
        support = affine_support([0.0, 0.5, 1.5, 2.0, 3.0])
        params = GpKernelParams(length_scale=1e6 * 3.0)
        query = np.linspace(0.0, 3.0, 31)
        result = interpolate_gp(support, query, params)
        np.testing.assert_allclose(result.positions, interpolate_linear(support, query).positions, atol=1e-6)

    def test_long_length_scale_curved_support_tends_to_fitted_line(self):
        # With three or more curved points the limit is the least-squares line, not the polyline.
        times = np.array([0.0, 0.6, 1.2, 1.8, 2.4])
        support = curved_support(times)
        params = GpKernelParams(length_scale=1e6 * 2.4)
        query = np.linspace(0.0, 2.4, 25)
        result = interpolate_gp(support, query, params)
        fitted = np.column_stack([
            np.polyval(np.polyfit(times, support.positions[:, axis], 1), query) for axis in range(3)
        ])
        np.testing.assert_allclose(result.positions, fitted, atol=1e-6)

    def test_affine_motion_is_exact(self):
        support = affine_support(np.arange(0.0, 6.01, 0.4))
        query = np.linspace(0.0, 6.0, 31)
        result = interpolate_gp(support, query)
        np.testing.assert_allclose(result.positions, affine_support(query).positions, atol=1e-9)

    def test_close_to_smooth_truth(self):
        times = np.arange(0.0, 20.0, 0.4)
        query = np.linspace(1.0, 18.0, 50)
        result = interpolate_gp(curved_support(times), query)
        np.testing.assert_allclose(result.positions, curved_support(query).positions, atol=5e-3)

    def test_min_support(self):
        with pytest.raises(InsufficientDataError, match="needs 3 support points"):
            interpolate_gp(affine_support([0.0, 1.0]), [0.5])

    def test_ill_conditioned_kernel(self):
        params = GpKernelParams(length_scale=1.0, signal_sigma=1.0, noise_sigma=0.0)
        support = curved_support(np.arange(0.0, 5.0, 0.1))
        with pytest.raises(IllConditionedError, match="condition number"):
            interpolate_gp(support, [1.0], params)

    def test_refuses_to_extrapolate(self):
        with pytest.raises(PipelineError, match="extrapolate"):
            interpolate_gp(affine_support([0.0, 1.0, 2.0]), [-0.5])


# =============================================================================
# Factory
# =============================================================================

class TestFactory:
    """Tests for get_interpolator."""

    def test_by_enum(self):
        assert isinstance(get_interpolator(InterpolationKind.LINEAR), LinearInterpolator)

    def test_by_string_with_params(self):
        params = GpKernelParams(length_scale=2.0)
        interpolator = get_interpolator("gaussian_process", params)
        assert isinstance(interpolator, GaussianProcessInterpolator)
        assert interpolator.get_interpolator_info()["length_scale"] == 2.0

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            get_interpolator("cubic")

    def test_info(self):
        assert LinearInterpolator().get_interpolator_info() == {"kind": "linear"}


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
