"""
Tests for the GCP and inter-prism metrics.
"""

import numpy as np
import pytest

from rtscalib.exceptions import InsufficientDataError
from rtscalib.metrics import (
    apparent_distances,
    gcp_metric,
    gcp_metric_from_sets,
    inter_prism_metric,
    inter_prism_residuals,
)
from rtscalib.schemas import GcpSet, MetricKind, MetricReport, RigidTransform, SyncedTrajectories, Trajectory
from rtscalib.se3 import transform_delta, yaw_transform


def reference_gauge() -> RigidTransform:
    """A yaw-only change of the reference frame of station 1."""
    return yaw_transform(np.array([3.0, -7.0, 0.5]), 1.1, "rts1", "rts1")


def regauged_synced(synced: SyncedTrajectories, gauge: RigidTransform) -> SyncedTrajectories:
    first = synced.trajectories[0]
    moved = Trajectory(first.times, gauge.apply(first.positions), first.frame_id, first.station_id, first.prism_id)
    return SyncedTrajectories(
        synced.common_times, (moved,) + tuple(synced.trajectories[1:]), synced.intervals, synced.interval_index
    )


class TestMetricReport:
    """Tests for median and IQR conventions."""

    def test_even_count(self):
        report = MetricReport.from_samples(MetricKind.GCP, [4.0, 1.0, 3.0, 2.0])
        assert report.median == pytest.approx(2.5)
        assert report.iqr == pytest.approx(1.5)
        assert report.count == 4

    def test_single_sample(self):
        report = MetricReport.from_samples(MetricKind.INTER_PRISM, [0.003])
        assert report.median == 0.003
        assert report.iqr == 0.0

    def test_empty(self):
        with pytest.raises(ValueError, match="empty"):
            MetricReport.from_samples(MetricKind.GCP, [])

    def test_negative_samples(self):
        with pytest.raises(ValueError, match="non-negative"):
            MetricReport.from_samples(MetricKind.GCP, [0.1, -0.2])


class TestInterPrismMetric:
    """Tests for the inter-prism metric."""

    def test_truth_reproduces_distances(self, noise_free_run):
        _, truth, delta, synced = noise_free_run
        distances = apparent_distances(
            synced.positions(1), synced.positions(2), synced.positions(3), truth.T_12, truth.T_13
        )
        np.testing.assert_allclose(distances, np.tile(delta.as_array(), (len(synced), 1)), atol=1e-9)

    def test_truth_scores_zero(self, noise_free_run):
        _, truth, delta, synced = noise_free_run
        report = inter_prism_metric(synced, truth.T_12, truth.T_13, delta)
        assert report.kind == MetricKind.INTER_PRISM
        assert report.count == 3 * len(synced)
        assert report.median < 1e-9

    def test_wrong_transform_scores_worse(self, noise_free_run):
        _, truth, delta, synced = noise_free_run
        shifted = yaw_transform(np.array([0.1, 0.0, 0.0]), 0.0, "rts1", "rts1").compose(truth.T_12)
        residuals = inter_prism_residuals(synced, shifted, truth.T_13, delta)
        assert residuals.shape == (len(synced), 3)
        assert np.allclose(residuals[:, 1], 0.0, atol=1e-9)
        assert inter_prism_metric(synced, shifted, truth.T_13, delta).median > 1e-3

    def test_invariant_to_a_common_yaw_change_of_frame(self, noisy_run):
        _, truth, delta, synced = noisy_run
        T_12 = yaw_transform(np.array([0.02, -0.01, 0.03]), 0.004, "rts1", "rts1").compose(truth.T_12)
        gauge = reference_gauge()
        before = inter_prism_metric(synced, T_12, truth.T_13, delta)
        after = inter_prism_metric(
            regauged_synced(synced, gauge), gauge.compose(T_12), gauge.compose(truth.T_13), delta
        )
        assert before.median > 1e-3
        assert after.median == pytest.approx(before.median, abs=1e-12)
        assert after.iqr == pytest.approx(before.iqr, abs=1e-12)
        np.testing.assert_allclose(np.sort(after.samples), np.sort(before.samples), atol=1e-12, rtol=0.0)


class TestGcpMetric:
    """Tests for the GCP metric."""

    def test_pairwise_distances(self):
        report = gcp_metric({
            "P1": [np.zeros(3), np.array([0.003, 0.0, 0.0]), np.array([0.0, 0.004, 0.0])],
        })
        np.testing.assert_allclose(sorted(report.samples), [0.003, 0.004, 0.005])
        assert report.median == pytest.approx(0.004)

    def test_incomplete_gcp_is_skipped(self):
        report = gcp_metric({
            "P1": [np.zeros(3), np.zeros(3), np.zeros(3)],
            "P2": [np.zeros(3), None, np.zeros(3)],
        })
        assert report.count == 3

    def test_no_complete_gcp(self):
        with pytest.raises(InsufficientDataError, match="all three stations"):
            gcp_metric({"P1": [np.zeros(3), None, None]})

    def test_truth_scores_zero(self, noise_free_gcps):
        station_gcps, _, truth = noise_free_gcps
        report = gcp_metric_from_sets(station_gcps, truth.T_12, truth.T_13)
        assert report.count == 12
        assert report.median < 1e-9

    def test_label_missing_at_one_station(self, noise_free_gcps):
        station_gcps, _, truth = noise_free_gcps
        reduced = list(station_gcps)
        reduced[1] = GcpSet(reduced[1].frame_id, reduced[1].points[1:])
        report = gcp_metric_from_sets(reduced, truth.T_12, truth.T_13)
        assert report.count == 9

    def test_metric_grows_with_the_error(self, noise_free_gcps):
        station_gcps, _, truth = noise_free_gcps
        rotated = truth.T_13.compose(yaw_transform(np.zeros(3), 0.01, "rts3", "rts3"))
        assert transform_delta(rotated, truth.T_13)[1] == pytest.approx(0.01)
        report = gcp_metric_from_sets(station_gcps, truth.T_12, rotated)
        assert report.median > 0.05

    def test_invariant_to_a_common_yaw_change_of_frame(self, noise_free_gcps):
        station_gcps, _, truth = noise_free_gcps
        rotated = truth.T_13.compose(yaw_transform(np.zeros(3), 0.01, "rts3", "rts3"))
        gauge = reference_gauge()
        first = station_gcps[0]
        moved = GcpSet.from_array(first.frame_id, first.labels, gauge.apply(first.positions()))
        before = gcp_metric_from_sets(station_gcps, truth.T_12, rotated)
        after = gcp_metric_from_sets(
            [moved, station_gcps[1], station_gcps[2]], gauge.compose(truth.T_12), gauge.compose(rotated)
        )
        assert after.median == pytest.approx(before.median, abs=1e-12)
        assert after.iqr == pytest.approx(before.iqr, abs=1e-12)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
