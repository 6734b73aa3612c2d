"""
Monte-Carlo acceptance suites on simulated scenes.

These run hundreds of calibrations and are marked slow; deselect them with
``pytest -m "not slow"``.
"""

import math

import numpy as np
import pytest

from rtscalib.calibrators import (
    CalibrationInputs,
    get_calibrator,
    inter_prism_cost,
    point_to_point_align,
    static_gcp_calibrate,
)
from rtscalib.compare import ABLATION_VARIANTS, run_method_comparison, run_pipeline_ablation
from rtscalib.config import RunConfig, apply_overrides
from rtscalib.metrics import inter_prism_metric
from rtscalib.preprocess import run_pipeline
from rtscalib.schemas import SceneConfig, TrajectoryKind, Twist, Validation
from rtscalib.se3 import exp_map, log_map, yaw_rotation
from rtscalib.simulate import derive_seeds, generate_gcp_observations, generate_scene

pytestmark = pytest.mark.slow

MONTE_CARLO_SEEDS = derive_seeds(2024, 100)


def calibrate_inter_prism(scene: SceneConfig):
    """(synced, delta, inter-prism result, static-GCP result) for one noisy scene."""
    logs, _, delta = generate_scene(scene)
    synced = run_pipeline(logs, RunConfig().pipeline.to_pipeline_config())
    result = get_calibrator("inter_prism").calibrate(CalibrationInputs(synced=synced, delta=delta))
    station_gcps, world = generate_gcp_observations(scene)
    reference = static_gcp_calibrate(station_gcps, world)
    return synced, delta, result, reference


@pytest.fixture(scope="module")
def noisy_figure_eight():
    """Per seed: (inter-prism metric of method D, of method B, D's validation, D's cost history)."""
    runs = []
    for seed in MONTE_CARLO_SEEDS:
        synced, delta, result, reference = calibrate_inter_prism(SceneConfig(seed=seed))
        runs.append((
            inter_prism_metric(synced, result.T_12, result.T_13, delta).median,
            inter_prism_metric(synced, reference.T_12, reference.T_13, delta).median,
            result.validation,
            result.cost_history,
        ))
    return runs


# =============================================================================
# Recovery
# =============================================================================

def test_noise_free_recovery_with_random_geometry(make_scene):
    """Every method recovers the truth for ten random station layouts."""
    config = apply_overrides(RunConfig(), {"output_rate": 2.5})
    for geometry_seed in range(10):
        records = run_method_comparison(make_scene(geometry_seed=geometry_seed), [0], config)
        for method, (record,) in records.items():
            assert "error" not in record, (geometry_seed, record)
            for name in ("12", "13"):
                assert record[f"trans_err_{name}"] < 1e-6, (geometry_seed, method)
                assert record[f"rot_err_{name}"] < 1e-7, (geometry_seed, method)


def test_inter_prism_beats_static_gcp(noisy_figure_eight):
    """Method D scores a lower inter-prism metric than method B on the same data."""
    dynamic = np.median([run[0] for run in noisy_figure_eight])
    static = np.median([run[1] for run in noisy_figure_eight])
    assert dynamic < static


def test_accepted_steps_never_increase_cost(noisy_figure_eight):
    for *_, history in noisy_figure_eight:
        assert np.all(np.diff(history) <= 0.0)


# =============================================================================
# Pre-processing
# =============================================================================

def test_outlier_filter_lowers_the_metric():
    """With 1% angular outliers the filter lowers the metric in at least 95% of seeds."""
    variants = {name: ABLATION_VARIANTS[name] for name in ("minimal", "outlier_filter")}
    records = run_pipeline_ablation(SceneConfig(outlier_rate=0.01), MONTE_CARLO_SEEDS, variants=variants)
    better = sum(
        filtered["inter_prism_median"] < raw["inter_prism_median"]
        for raw, filtered in zip(records["minimal"], records["outlier_filter"])
    )
    assert better >= 0.95 * len(MONTE_CARLO_SEEDS)


# =============================================================================
# Validation
# =============================================================================

def test_figure_eight_validates(noisy_figure_eight):
    validated = sum(run[2] == Validation.VALIDATED for run in noisy_figure_eight)
    assert validated >= 0.95 * len(noisy_figure_eight)


@pytest.mark.parametrize("trajectory", [TrajectoryKind.STRAIGHT_LINE, TrajectoryKind.L_SHAPE])
def test_poor_trajectories_are_flagged(trajectory):
    flagged = 0
    for seed in MONTE_CARLO_SEEDS:
        _, _, result, _ = calibrate_inter_prism(SceneConfig(trajectory=trajectory, seed=seed))
        flagged += result.validation != Validation.VALIDATED
    assert flagged >= 0.9 * len(MONTE_CARLO_SEEDS)


# =============================================================================
# Oracles
# =============================================================================

def test_yaw_alignment_matches_grid_search():
    """Closed-form yaw alignment agrees with a 0.01 degree grid over yaw."""
    rng = np.random.default_rng(5)
    grid = np.radians(np.arange(-1.0, 1.0 + 1e-9, 0.01))
    for _ in range(20):
        yaw = rng.uniform(-math.pi, math.pi)
        measured = rng.uniform(-20.0, 20.0, (5, 3))
        reference = measured @ yaw_rotation(yaw).T + rng.uniform(-50.0, 50.0, 3)
        reference += rng.normal(0.0, 0.001, reference.shape)

        estimate = point_to_point_align(reference, measured)

        def cost(phi):
            rotated = measured @ yaw_rotation(phi).T
            offset = np.mean(reference - rotated, axis=0)
            return np.sum((reference - rotated - offset) ** 2)

        costs = [cost(yaw + d) for d in grid]
        best = yaw + grid[int(np.argmin(costs))]
        assert abs(math.remainder(estimate.yaw - best, 2 * math.pi)) <= math.radians(0.01)
        assert cost(estimate.yaw) <= min(costs) + 1e-12


def test_cost_matches_direct_formula_at_random_twists(noise_free_run):
    _, _, delta, synced = noise_free_run
    rng = np.random.default_rng(8)
    q1, q2, q3 = (synced.positions(k) for k in (1, 2, 3))
    for _ in range(100):
        xi_12 = Twist(rng.normal(0.0, 50.0, 3), rng.uniform(-math.pi, math.pi))
        xi_13 = Twist(rng.normal(0.0, 50.0, 3), rng.uniform(-math.pi, math.pi))
        u, w = exp_map(xi_12).apply(q2), exp_map(xi_13).apply(q3)
        direct = np.mean(np.concatenate([
            (np.linalg.norm(q1 - u, axis=1) - delta.alpha) ** 2,
            (np.linalg.norm(q1 - w, axis=1) - delta.beta) ** 2,
            (np.linalg.norm(u - w, axis=1) - delta.gamma) ** 2,
        ]))
        assert inter_prism_cost(xi_12, xi_13, synced, delta) == pytest.approx(direct, rel=1e-12)


def test_exp_log_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        xi = Twist(rng.uniform(-100.0, 100.0, 3), rng.uniform(-math.pi + 1e-6, math.pi - 1e-6))
        back = log_map(exp_map(xi))
        np.testing.assert_allclose(back.as_vector(), xi.as_vector(), atol=1e-9)


def test_identical_runs_are_identical():
    scene = SceneConfig(seed=MONTE_CARLO_SEEDS[0])
    first = calibrate_inter_prism(scene)[2]
    second = calibrate_inter_prism(scene)[2]
    np.testing.assert_array_equal(first.T_12.as_matrix(), second.T_12.as_matrix())
    np.testing.assert_array_equal(first.T_13.as_matrix(), second.T_13.as_matrix())
    assert first.cost_history == second.cost_history


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
