"""
Tests for the synthetic scene generator.
"""

import dataclasses
import math

import numpy as np
import pytest

from rtscalib.preprocess import filter_outlier_records
from rtscalib.schemas import PipelineConfig, SceneConfig, TrajectoryKind
from rtscalib.se3 import polar_to_cartesian
from rtscalib.simulate import (
    arc_length,
    body_poses,
    body_rotations,
    derive_seeds,
    generate_gcp_observations,
    generate_scene,
    resolve_station_poses,
    station_times,
    station_transforms,
    terrain_height,
    true_prism_positions,
)


class TestSeeds:
    """Tests for seed derivation."""

    def test_deterministic(self):
        assert derive_seeds(42, 5) == derive_seeds(42, 5)

    def test_distinct_children(self):
        seeds = derive_seeds(0, 50)
        assert len(set(seeds)) == 50

    def test_prefix_stable(self):
        assert derive_seeds(3, 10)[:4] == derive_seeds(3, 4)


class TestGeometry:
    """Tests for station placement and body motion."""

    def test_fixed_poses_by_default(self):
        scene = SceneConfig()
        assert resolve_station_poses(scene) == tuple(scene.station_poses)

    def test_random_geometry(self):
        poses = resolve_station_poses(SceneConfig(geometry_seed=5))
        for pose in poses:
            assert 50.0 <= math.hypot(pose.x, pose.y) <= 70.0
            assert 1.3 <= pose.z <= 1.7
        assert poses == resolve_station_poses(SceneConfig(geometry_seed=5))

    def test_speed_profile_stops_every_period(self):
        scene = SceneConfig(speed_max=0.5, speed_period_s=20.0)
        s = arc_length(scene, np.array([0.0, 10.0, 20.0, 40.0]))
        assert s[0] == 0.0
        assert s[2] == pytest.approx(0.5 * 0.5 * 20.0)
        assert s[3] == pytest.approx(2.0 * s[2])
        h = 1e-4
        at_stop = (arc_length(scene, np.array([20.0 + h])) - arc_length(scene, np.array([20.0 - h]))) / (2 * h)
        assert at_stop[0] == pytest.approx(0.0, abs=1e-6)

    def test_lead_in_keeps_the_body_still(self):
        scene = SceneConfig(static_lead_in_s=15.0)
        positions, headings = body_poses(scene, np.array([0.0, 7.0, 15.0]))
        np.testing.assert_allclose(positions[0], positions[2])
        assert headings[0] == headings[1]

    def test_figure_eight_stays_in_bounds(self):
        scene = SceneConfig(trajectory_size_m=10.0)
        positions, _ = body_poses(scene, np.linspace(0.0, 600.0, 3001))
        assert np.all(np.abs(positions[:, 0]) <= 10.0 + 1e-9)
        assert np.all(np.abs(positions[:, 1]) <= 5.0 + 1e-9)
        np.testing.assert_array_equal(positions[:, 2], terrain_height(scene, positions[:, :2]))
        assert np.max(np.abs(positions[:, 2])) <= scene.terrain_relief_m

    def test_straight_line_never_turns(self):
        scene = SceneConfig(trajectory=TrajectoryKind.STRAIGHT_LINE)
        _, headings = body_poses(scene, np.linspace(0.0, 180.0, 500))
        assert np.ptp(headings) == 0.0

    def test_scripted_waypoints(self):
        scene = SceneConfig(
            trajectory=TrajectoryKind.SCRIPTED, waypoints=[(0.0, 0.0), (3.0, 4.0)], speed_max=1.0
        )
        positions, headings = body_poses(scene, np.array([0.0, 1000.0]))
        np.testing.assert_allclose(positions[1], [3.0, 4.0, terrain_height(scene, [(3.0, 4.0)])[0]])
        assert headings[0] == pytest.approx(math.atan2(4.0, 3.0))

    def test_scripted_needs_waypoints(self):
        with pytest.raises(ValueError, match="waypoints"):
            SceneConfig(trajectory=TrajectoryKind.SCRIPTED)

    def test_prisms_keep_their_distances(self):
        scene = SceneConfig()
        times = np.linspace(0.0, 180.0, 400)
        p1, p2, p3 = (true_prism_positions(scene, k, times) for k in (1, 2, 3))
        delta = scene.true_distances()
        np.testing.assert_allclose(np.linalg.norm(p1 - p2, axis=1), delta.alpha, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(p1 - p3, axis=1), delta.beta, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(p2 - p3, axis=1), delta.gamma, atol=1e-12)

    def test_collinear_prisms_rejected(self):
        with pytest.raises(ValueError, match="collinear"):
            SceneConfig(prism_offsets=((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (2.0, 0.0, 0.0)))

    def test_flat_ground_is_a_pure_yaw(self):
        scene = SceneConfig(terrain_relief_m=0.0)
        positions, headings = body_poses(scene, np.linspace(0.0, 60.0, 50))
        rotations = body_rotations(scene, positions, headings)
        np.testing.assert_array_equal(positions[:, 2], 0.0)
        np.testing.assert_allclose(rotations[:, 2, :], np.tile([0.0, 0.0, 1.0], (50, 1)), atol=1e-15)
        np.testing.assert_allclose(rotations[:, 0, 0], np.cos(headings), atol=1e-15)
        np.testing.assert_allclose(rotations[:, 1, 0], np.sin(headings), atol=1e-15)

    def test_body_rotations_are_proper(self):
        scene = SceneConfig()
        positions, headings = body_poses(scene, np.linspace(0.0, 180.0, 300))
        rotations = body_rotations(scene, positions, headings)
        identity = np.einsum("nji,njk->nik", rotations, rotations)
        np.testing.assert_allclose(identity, np.tile(np.eye(3), (300, 1, 1)), atol=1e-12)
        np.testing.assert_allclose(np.linalg.det(rotations), 1.0, atol=1e-12)

    def test_relief_tilts_the_body(self):
        scene = SceneConfig()
        times = np.linspace(0.0, 180.0, 400)
        p1, p2 = (true_prism_positions(scene, k, times) for k in (1, 2))
        height_gap = p1[:, 2] - p2[:, 2]
        assert np.ptp(height_gap) > 0.01
        flat = dataclasses.replace(scene, terrain_relief_m=0.0)
        f1, f2 = (true_prism_positions(flat, k, times) for k in (1, 2))
        np.testing.assert_allclose(f1[:, 2] - f2[:, 2], 0.2, atol=1e-12)

    def test_terrain_must_be_valid(self):
        with pytest.raises(ValueError, match="Terrain"):
            SceneConfig(terrain_relief_m=-0.1)
        with pytest.raises(ValueError, match="Terrain"):
            SceneConfig(terrain_wavelength_m=0.0)


class TestGenerateScene:
    """Tests for generate_scene."""

    def test_deterministic(self):
        scene = SceneConfig(duration_s=20.0, seed=9)
        logs_a, _, _ = generate_scene(scene)
        logs_b, _, _ = generate_scene(scene)
        for a, b in zip(logs_a, logs_b):
            assert [(r.time, r.azimuth, r.elevation, r.range) for r in a.records] == [
                (r.time, r.azimuth, r.elevation, r.range) for r in b.records
            ]

    def test_seed_changes_noise(self):
        logs_a, _, _ = generate_scene(SceneConfig(duration_s=20.0, seed=1))
        logs_b, _, _ = generate_scene(SceneConfig(duration_s=20.0, seed=2))
        assert logs_a[0].records[5].range != logs_b[0].records[5].range

    def test_noise_free_records_are_exact(self, make_scene):
        scene = make_scene(duration_s=20.0)
        logs, truth, _ = generate_scene(scene)
        for log, pose in zip(logs, truth.station_poses):
            world = np.array([pose.apply(polar_to_cartesian(r).position) for r in log.records])
            expected = true_prism_positions(scene, log.station_id, log.times)
            np.testing.assert_allclose(world, expected, atol=1e-9)

    def test_range_noise_level(self):
        scene = SceneConfig(duration_s=400.0, seed=3)
        noisy, _, _ = generate_scene(scene)
        exact, _, _ = generate_scene(dataclasses.replace(scene, range_noise_m=0.0, angle_noise_rad=0.0))
        errors = np.array([a.range - b.range for a, b in zip(noisy[0].records, exact[0].records)])
        assert np.std(errors) == pytest.approx(0.002, rel=0.1)

    def test_truth_chains_station_poses(self):
        _, truth, delta = generate_scene(SceneConfig(duration_s=10.0))
        poses = truth.station_poses
        composed = poses[0].compose(truth.T_12)
        np.testing.assert_allclose(composed.as_matrix(), poses[1].as_matrix(), atol=1e-12)
        assert (truth.T_13.from_frame, truth.T_13.to_frame) == ("rts3", "rts1")
        assert delta == SceneConfig().true_distances()
        assert sorted(truth.prism_world) == [1, 2, 3]
        assert truth.times[1] - truth.times[0] == pytest.approx(0.1)

    def test_prism_assignment(self):
        logs, _, _ = generate_scene(SceneConfig(duration_s=10.0, prism_assignment=(1, 1, 1)))
        assert [log.prism_ids for log in logs] == [[1], [1], [1]]

    def test_dropouts(self):
        scene = SceneConfig(duration_s=30.0, dropouts=[(2, 10.0, 12.0)])
        logs, truth, _ = generate_scene(scene)
        times = logs[1].times
        assert not np.any((times >= 10.0) & (times <= 12.0))
        assert len(logs[0]) == 75
        assert len(logs[1]) == 75 - 6
        assert truth.dropouts == [(2, 10.0, 12.0)]

    def test_time_offsets(self):
        scene = SceneConfig(duration_s=10.0, station_time_offsets=(0.0, 0.13, 0.27))
        assert station_times(scene, 3)[0] == pytest.approx(0.27)
        np.testing.assert_allclose(np.diff(station_times(scene, 2)), 0.4)

    def test_outliers(self):
        scene = SceneConfig(duration_s=180.0, outlier_rate=0.02, seed=4)
        logs, truth, _ = generate_scene(scene)
        for log in logs:
            indices = truth.outlier_indices[log.station_id]
            assert len(indices) == round(0.02 * len(log))
            assert all(0 <= i < len(log) for i in indices)
            assert all(b - a > 1 for a, b in zip(indices, indices[1:]))

    def test_noise_free_default_passes_the_outlier_filter(self, make_scene):
        logs, _, _ = generate_scene(make_scene(duration_s=180.0))
        for log in logs:
            assert len(filter_outlier_records(log, PipelineConfig())) == len(log)


class TestGcpObservations:
    """Tests for generate_gcp_observations."""

    def test_noise_free_observations_map_to_world(self, make_scene):
        scene = make_scene()
        station_gcps, world = generate_gcp_observations(scene)
        assert world.frame_id == "world"
        for gcps, pose in zip(station_gcps, station_transforms(scene)):
            assert gcps.labels == world.labels
            np.testing.assert_allclose(pose.apply(gcps.positions()), world.positions(), atol=1e-9)

    def test_frames(self):
        station_gcps, _ = generate_gcp_observations(SceneConfig())
        assert [g.frame_id for g in station_gcps] == ["rts1", "rts2", "rts3"]

    def test_no_pillars(self):
        with pytest.raises(ValueError, match="no GCP pillars"):
            generate_gcp_observations(SceneConfig(gcp_world=()))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
