"""
Tests for the inter-prism cost, its solver and the velocity-thresholded prior search.
"""

import dataclasses
import math

import numpy as np
import pytest

from rtscalib.calibrators import (
    CalibrationInputs,
    InterPrismCalibrator,
    colocation_prior,
    get_calibrator,
    heading_coverage,
    inter_prism_calibrate,
    inter_prism_cost,
    inter_prism_jacobian,
    inter_prism_residual_vector,
    mirror_vertical,
    point_speeds,
    sample_speeds,
    search_prior,
    solve_damped_least_squares,
)
from rtscalib.config import PriorSearchSettings
from rtscalib.exceptions import ConfigError, InsufficientDataError, SolverError
from rtscalib.preprocess import run_pipeline
from rtscalib.schemas import (
    DEFAULT_STATION_POSES,
    CalibrationMethod,
    RigidTransform,
    SyncedTrajectories,
    Trajectory,
    TrajectoryKind,
    Twist,
    Validation,
)
from rtscalib.se3 import exp_map, log_map, transform_delta, yaw_transform
from rtscalib.simulate import evaluate_against_truth, generate_scene


def perturbed(twist: Twist, shift: float, dphi: float) -> Twist:
    return Twist(rho=twist.rho + shift, phi=twist.phi + dphi)


def synced_for(make_scene, exact_pipeline_config, **overrides):
    logs, truth, delta = generate_scene(make_scene(**overrides))
    return run_pipeline(logs, exact_pipeline_config), truth, delta


def near_half_turn_stations():
    """Default stations with station 2 turned almost half a turn from station 1."""
    first, second, third = DEFAULT_STATION_POSES
    return first, dataclasses.replace(second, yaw=first.yaw + math.pi - 1e-4), third


def regauged_synced(synced: SyncedTrajectories, gauge: RigidTransform) -> SyncedTrajectories:
    first = synced.trajectories[0]
    moved = Trajectory(first.times, gauge.apply(first.positions), first.frame_id, first.station_id, first.prism_id)
    return SyncedTrajectories(
        synced.common_times, (moved,) + tuple(synced.trajectories[1:]), synced.intervals, synced.interval_index
    )


# =============================================================================
# Cost and Jacobian
# =============================================================================

class TestInterPrismCost:
    """Tests for the residuals, cost and Jacobian."""

    def test_cost_matches_direct_formula(self, noise_free_run):
        _, truth, delta, synced = noise_free_run
        xi_12 = perturbed(log_map(truth.T_12), 0.2, 0.01)
        xi_13 = perturbed(log_map(truth.T_13), -0.1, -0.02)

        u = exp_map(xi_12).apply(synced.positions(2))
        w = exp_map(xi_13).apply(synced.positions(3))
        q1 = synced.positions(1)
        squares = np.concatenate([
            (np.linalg.norm(q1 - u, axis=1) - delta.alpha) ** 2,
            (np.linalg.norm(q1 - w, axis=1) - delta.beta) ** 2,
            (np.linalg.norm(u - w, axis=1) - delta.gamma) ** 2,
        ])
        assert inter_prism_cost(xi_12, xi_13, synced, delta) == pytest.approx(squares.mean(), rel=1e-12)

    def test_truth_has_zero_cost(self, noise_free_run):
        _, truth, delta, synced = noise_free_run
        cost = inter_prism_cost(log_map(truth.T_12), log_map(truth.T_13), synced, delta)
        assert cost < 1e-20

    def test_residual_layout(self, noise_free_run):
        _, truth, delta, synced = noise_free_run
        residuals = inter_prism_residual_vector(log_map(truth.T_12), log_map(truth.T_13), synced, delta)
        assert residuals.shape == (3 * len(synced),)

    def test_cost_invariant_to_a_common_yaw_change_of_frame(self, noisy_run):
        _, truth, delta, synced = noisy_run
        T_12 = yaw_transform(np.array([0.05, 0.02, -0.01]), 0.003, "rts1", "rts1").compose(truth.T_12)
        gauge = yaw_transform(np.array([-4.0, 9.0, 0.3]), -2.2, "rts1", "rts1")
        before = inter_prism_cost(log_map(T_12), log_map(truth.T_13), synced, delta)
        after = inter_prism_cost(
            log_map(gauge.compose(T_12)), log_map(gauge.compose(truth.T_13)), regauged_synced(synced, gauge), delta
        )
        assert before > 1e-6
        assert after == pytest.approx(before, abs=1e-12)

    @pytest.mark.parametrize("dphi", [0.0, 0.3, -1.2])
    def test_jacobian_matches_finite_difference(self, noise_free_run, dphi):
        _, truth, delta, synced = noise_free_run
        subset = synced.subset(np.arange(len(synced)) % 10 == 0)
        xi_12 = perturbed(log_map(truth.T_12), 0.5, dphi)
        xi_13 = perturbed(log_map(truth.T_13), -0.3, -dphi)
        x = np.concatenate([xi_12.as_vector(), xi_13.as_vector()])

        def residuals(v):
            return inter_prism_residual_vector(
                Twist.from_vector(v[:4]), Twist.from_vector(v[4:]), subset, delta
            )

        h = 1e-6
        numeric = np.column_stack([
            (residuals(x + h * e) - residuals(x - h * e)) / (2.0 * h) for e in np.eye(8)
        ])
        analytic = inter_prism_jacobian(xi_12, xi_13, subset)
        np.testing.assert_allclose(analytic, numeric, atol=1e-6)


# =============================================================================
# Damped least squares
# =============================================================================

class TestDampedLeastSquares:
    """Tests for the Levenberg-Marquardt loop."""

    def test_rosenbrock(self):
        outcome = solve_damped_least_squares(
            np.array([-1.2, 1.0]),
            lambda x: np.array([10.0 * (x[1] - x[0] ** 2), 1.0 - x[0]]),
            lambda x: np.array([[-20.0 * x[0], 10.0], [-1.0, 0.0]]),
        )
        assert outcome.converged
        np.testing.assert_allclose(outcome.x, [1.0, 1.0], atol=1e-6)

    def test_cost_never_increases(self):
        outcome = solve_damped_least_squares(
            np.array([-1.2, 1.0]),
            lambda x: np.array([10.0 * (x[1] - x[0] ** 2), 1.0 - x[0]]),
            lambda x: np.array([[-20.0 * x[0], 10.0], [-1.0, 0.0]]),
        )
        assert np.all(np.diff(outcome.cost_history) <= 0.0)
        assert len(outcome.cost_history) == outcome.iterations + 1

    def test_zero_residual_start(self):
        outcome = solve_damped_least_squares(
            np.zeros(2), lambda x: x.copy(), lambda x: np.eye(2)
        )
        assert outcome.converged
        assert outcome.iterations == 0

    def test_non_finite_residuals(self):
        with pytest.raises(SolverError, match="Non-finite"):
            solve_damped_least_squares(np.ones(2), lambda x: np.full(2, np.nan), lambda x: np.eye(2))

    def test_all_singular_jacobian_is_not_converged(self):
        outcome = solve_damped_least_squares(
            np.zeros(2), lambda x: np.array([0.3, -0.4]), lambda x: np.zeros((2, 2))
        )
        assert not outcome.converged
        assert outcome.iterations == 0
        assert outcome.cost == pytest.approx(0.125)

    def test_normalization_is_applied_to_accepted_steps(self):
        seen = []

        def normalize(x):
            seen.append(x.copy())
            return x

        outcome = solve_damped_least_squares(
            np.array([2.0, -1.0]), lambda x: x - np.array([0.5, 0.5]), lambda x: np.eye(2),
            normalize_fn=normalize,
        )
        assert outcome.converged
        assert len(seen) == outcome.iterations
        np.testing.assert_allclose(outcome.x, [0.5, 0.5], atol=1e-8)

    def test_budget_exhaustion(self):
        outcome = solve_damped_least_squares(
            np.array([-1.2, 1.0]),
            lambda x: np.array([10.0 * (x[1] - x[0] ** 2), 1.0 - x[0]]),
            lambda x: np.array([[-20.0 * x[0], 10.0], [-1.0, 0.0]]),
            max_iterations=1,
        )
        assert outcome.iterations == 1
        assert not outcome.converged


# =============================================================================
# Method D solve
# =============================================================================

class TestInterPrismCalibrate:
    """Tests for inter_prism_calibrate from a given prior."""

    def test_noise_free_recovery(self, noise_free_run):
        _, truth, delta, synced = noise_free_run
        prior = (
            perturbed(log_map(truth.T_12), 0.5, math.radians(5.0)),
            perturbed(log_map(truth.T_13), -0.5, math.radians(-5.0)),
        )
        result = inter_prism_calibrate(synced, delta, prior)
        assert result.method == CalibrationMethod.INTER_PRISM
        assert result.converged
        assert result.validation == Validation.UNVALIDATED
        assert np.all(np.diff(result.cost_history) <= 0.0)
        for trans, rot in evaluate_against_truth(result, truth).values():
            assert trans < 1e-6
            assert rot < 1e-7

    def test_recovery_across_the_half_turn(self, make_scene, exact_pipeline_config):
        synced, truth, delta = synced_for(
            make_scene, exact_pipeline_config, station_poses=near_half_turn_stations()
        )
        xi_12 = log_map(truth.T_12)
        assert xi_12.phi == pytest.approx(math.pi - 1e-4, abs=1e-9)
        prior = (perturbed(xi_12, 0.05, 0.02), perturbed(log_map(truth.T_13), -0.05, -0.01))
        assert prior[0].phi < 0.0
        result = inter_prism_calibrate(synced, delta, prior)
        assert result.converged
        for trans, rot in evaluate_against_truth(result, truth).values():
            assert trans < 1e-6
            assert rot < 1e-7

    def test_rejects_shared_prism(self, noise_free_shared_run, noise_free_run):
        _, synced = noise_free_shared_run
        delta = noise_free_run[2]
        with pytest.raises(ConfigError, match="three distinct prisms"):
            inter_prism_calibrate(synced, delta, (Twist(), Twist()))

    def test_needs_ten_samples(self, noise_free_run):
        _, _, delta, synced = noise_free_run
        with pytest.raises(InsufficientDataError, match="10 samples"):
            inter_prism_calibrate(synced.subset(np.arange(len(synced)) < 9), delta, (Twist(), Twist()))


# =============================================================================
# Prior search
# =============================================================================

class TestSpeeds:
    """Tests for point and sample speeds."""

    def test_constant_velocity(self):
        times = np.arange(0.0, 5.0, 0.5)
        positions = np.column_stack([0.3 * times, 0.4 * times, np.zeros(len(times))])
        speeds = point_speeds(Trajectory(times, positions, "rts1", 1, 1))
        np.testing.assert_allclose(speeds, 0.5)

    def test_gap_does_not_create_speed(self):
        times = np.array([0.0, 1.0, 2.0, 10.0, 11.0, 12.0])
        positions = np.column_stack([[0.0, 0.0, 0.0, 50.0, 50.0, 50.0], np.zeros(6), np.zeros(6)])
        speeds = point_speeds(Trajectory(times, positions, "rts1", 1, 1), np.array([0, 0, 0, 1, 1, 1]))
        np.testing.assert_allclose(speeds, 0.0)

    def test_sample_speeds_take_the_fastest_prism(self, noise_free_run):
        synced = noise_free_run[3]
        speeds = sample_speeds(synced)
        for trajectory in synced.trajectories:
            assert np.all(speeds >= point_speeds(trajectory, synced.interval_index) - 1e-15)


class TestPriorSearch:
    """Tests for search_prior and the method D calibrator."""

    def test_colocation_prior_is_close(self, noise_free_run):
        _, truth, _, synced = noise_free_run
        prior_12, prior_13 = colocation_prior(synced, sample_speeds(synced) <= 0.11)
        for prior, true_transform in ((prior_12, truth.T_12), (prior_13, truth.T_13)):
            _, rot = transform_delta(exp_map(prior), true_transform.with_frames("source", "target"))
            assert rot < math.radians(15.0)

    def test_figure_eight_validates(self, noise_free_run):
        _, truth, delta, synced = noise_free_run
        (xi_12, xi_13), diagnostics = search_prior(synced, delta)
        assert diagnostics.validation == Validation.VALIDATED
        assert diagnostics.similar_convergence_count >= 3
        assert diagnostics.heading_coverage_deg >= 180.0
        assert not diagnostics.vertical_ambiguous
        assert diagnostics.start_tau_v == pytest.approx(0.01)
        assert len(diagnostics.step_entries(1)) == len(diagnostics.step_entries(2))
        assert diagnostics.best_step2 >= len(diagnostics.step_entries(1))
        assert transform_delta(diagnostics.best.T_12, truth.T_12)[0] < 1e-6
        assert transform_delta(diagnostics.best.T_13, truth.T_13)[0] < 1e-6
        assert transform_delta(exp_map(xi_12, "rts2", "rts1"), truth.T_12)[0] < 1e-6

    def test_thresholds_step_by_tau_v_step(self, noise_free_run):
        _, _, delta, synced = noise_free_run
        _, diagnostics = search_prior(synced, delta)
        thresholds = [e.tau_v for e in diagnostics.step_entries(1)]
        np.testing.assert_allclose(np.diff(thresholds), 0.1)
        assert diagnostics.step_entries(1)[-1].sample_count == len(synced)

    def test_start_shifts_when_too_few_slow_samples(self, noise_free_run):
        _, _, delta, synced = noise_free_run
        settings = PriorSearchSettings(tau_v_start=0.0001)
        _, diagnostics = search_prior(synced, delta, settings=settings)
        assert diagnostics.start_shifted
        assert diagnostics.start_tau_v > 0.0001
        assert any("shifted" in note for note in diagnostics.notes)

    def test_nothing_selected(self, noise_free_run):
        _, _, delta, synced = noise_free_run
        settings = PriorSearchSettings(tau_v_start=0.0001, tau_v_step=0.0001)
        with pytest.raises(InsufficientDataError, match="selects"):
            search_prior(synced, delta, robot_speed_max=0.0003, settings=settings)

    def test_straight_line_is_degenerate(self, make_scene, exact_pipeline_config):
        synced, _, delta = synced_for(make_scene, exact_pipeline_config, trajectory=TrajectoryKind.STRAIGHT_LINE)
        _, diagnostics = search_prior(synced, delta)
        assert diagnostics.validation == Validation.DEGENERATE
        assert any("insufficient rotation" in note for note in diagnostics.notes)

    def test_static_is_degenerate(self, make_scene, exact_pipeline_config):
        synced, _, delta = synced_for(
            make_scene, exact_pipeline_config, trajectory=TrajectoryKind.STATIC, duration_s=60.0
        )
        _, diagnostics = search_prior(synced, delta)
        assert diagnostics.validation == Validation.DEGENERATE
        assert diagnostics.effective_entries == 1

    def test_heading_coverage(self, noise_free_run, make_scene, exact_pipeline_config):
        synced = noise_free_run[3]
        assert heading_coverage(synced) >= 180.0
        straight, _, _ = synced_for(make_scene, exact_pipeline_config, trajectory=TrajectoryKind.STRAIGHT_LINE)
        assert 0.0 < heading_coverage(straight) <= 60.0
        l_shape, _, _ = synced_for(make_scene, exact_pipeline_config, trajectory=TrajectoryKind.L_SHAPE)
        assert heading_coverage(l_shape) <= 120.0

    def test_heading_coverage_of_a_static_body_is_zero(self, make_scene, exact_pipeline_config):
        synced, _, _ = synced_for(
            make_scene, exact_pipeline_config, trajectory=TrajectoryKind.STATIC, duration_s=60.0
        )
        assert heading_coverage(synced) == 0.0

    def test_l_shape_is_degenerate(self, make_scene, exact_pipeline_config):
        synced, _, delta = synced_for(make_scene, exact_pipeline_config, trajectory=TrajectoryKind.L_SHAPE)
        _, diagnostics = search_prior(synced, delta)
        assert diagnostics.validation == Validation.DEGENERATE
        assert any("insufficient rotation" in note for note in diagnostics.notes)

    def test_flat_ground_is_vertically_ambiguous(self, make_scene, exact_pipeline_config):
        synced, _, delta = synced_for(make_scene, exact_pipeline_config, terrain_relief_m=0.0)
        _, diagnostics = search_prior(synced, delta)
        assert diagnostics.vertical_ambiguous
        assert diagnostics.validation == Validation.DEGENERATE
        assert any("vertical ambiguity" in note for note in diagnostics.notes)

    def test_mirror_image_fits_flat_ground_equally(self, make_scene, exact_pipeline_config):
        synced, truth, delta = synced_for(make_scene, exact_pipeline_config, terrain_relief_m=0.0)
        mirror_12, mirror_13 = mirror_vertical(synced, truth.T_12, truth.T_13)
        assert inter_prism_cost(log_map(mirror_12), log_map(mirror_13), synced, delta) < 1e-20
        # prisms 2 and 3 sit 0.20 m and 0.35 m below prism 1 on the body
        assert mirror_12.translation[2] - truth.T_12.translation[2] == pytest.approx(0.40, abs=1e-9)
        assert mirror_13.translation[2] - truth.T_13.translation[2] == pytest.approx(0.70, abs=1e-9)
        np.testing.assert_allclose(mirror_12.rotation, truth.T_12.rotation)
        np.testing.assert_allclose(mirror_12.translation[:2], truth.T_12.translation[:2])

    def test_mirror_image_is_rejected_on_tilting_ground(self, noise_free_run):
        _, truth, delta, synced = noise_free_run
        mirror_12, mirror_13 = mirror_vertical(synced, truth.T_12, truth.T_13)
        assert inter_prism_cost(log_map(mirror_12), log_map(mirror_13), synced, delta) > 1e-6
        _, diagnostics = search_prior(synced, delta)
        assert diagnostics.mirror_cost is not None
        assert not diagnostics.vertical_ambiguous

    def test_large_metric_is_not_validated(self, noisy_run):
        _, _, delta, synced = noisy_run
        settings = PriorSearchSettings(max_metric_median_m=1e-6)
        _, diagnostics = search_prior(synced, delta, settings=settings)
        assert diagnostics.validation == Validation.UNVALIDATED
        assert any("exceeds" in note for note in diagnostics.notes)

    def test_noisy_figure_eight_validates(self, noisy_run):
        _, truth, delta, synced = noisy_run
        _, diagnostics = search_prior(synced, delta)
        assert diagnostics.validation == Validation.VALIDATED
        trans, rot = transform_delta(diagnostics.best.T_12, truth.T_12)
        assert trans < 0.05
        assert rot < math.radians(0.5)

    def test_calibrator_carries_the_verdict(self, noise_free_run):
        _, truth, delta, synced = noise_free_run
        calibrator = get_calibrator("inter_prism")
        assert isinstance(calibrator, InterPrismCalibrator)
        result = calibrator.calibrate(CalibrationInputs(synced=synced, delta=delta))
        assert result.validation == Validation.VALIDATED
        assert result.metadata["effective_entries"] >= 2
        assert calibrator.diagnostics is not None
        for trans, rot in evaluate_against_truth(result, truth).values():
            assert trans < 1e-6
            assert rot < 1e-7

    def test_calibrator_across_the_half_turn(self, make_scene, exact_pipeline_config):
        synced, truth, delta = synced_for(
            make_scene, exact_pipeline_config, station_poses=near_half_turn_stations()
        )
        result = get_calibrator("inter_prism").calibrate(CalibrationInputs(synced=synced, delta=delta))
        assert result.validation == Validation.VALIDATED
        for trans, rot in evaluate_against_truth(result, truth).values():
            assert trans < 1e-6
            assert rot < 1e-7

    def test_calibrator_needs_distances(self, noise_free_run):
        synced = noise_free_run[3]
        with pytest.raises(ConfigError, match="missing inputs: delta"):
            get_calibrator("inter_prism").calibrate(CalibrationInputs(synced=synced))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
