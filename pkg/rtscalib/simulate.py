"""
Synthetic scenes: a ground vehicle carrying three prisms, observed by three stations.

The body drives over gently undulating ground, h(x, y) = A sin(kx) cos(ky), with its
heading tangent to the path and its roll and pitch set by the local slope. The speed
profile v(t) = v_max sin^2(pi t / period) brings it to rest once per period.
Each station samples its assigned prism at a fixed rate, converts the exact position
to polar coordinates in its own frame and adds Gaussian noise per channel. Dropout
windows and angle outliers are applied on top, and everything the calibration is
expected to recover is kept in a GroundTruth record.

Monte-Carlo seeds: ``derive_seeds(seed, count)`` spawns independent child seeds
with ``numpy.random.SeedSequence``; inside a scene the noise streams of the three
stations and of the GCP observations are spawned the same way from ``cfg.seed``.
"""

import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .schemas import (
    CalibrationResult,
    GcpSet,
    GroundTruth,
    InterPrismDistances,
    MeasurementLog,
    PolarMeasurement,
    RigidTransform,
    SceneConfig,
    StationPose,
    TrajectoryKind,
)
from .se3 import WORLD_FRAME, polar_to_cartesian, station_frame, transform_delta

TRUTH_RATE_HZ = 10.0
FIGURE_EIGHT_SAMPLES = 20001

OUTLIER_MIN = math.radians(0.5)
OUTLIER_MAX = math.radians(2.0)


def derive_seeds(seed: int, count: int) -> List[int]:
    """Independent child seeds for Monte-Carlo repetitions."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def _noise_generators(seed: int) -> List[np.random.Generator]:
    # stations 1, 2, 3, then GCP observations
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(4)]


# =============================================================================
# Geometry
# =============================================================================

def resolve_station_poses(cfg: SceneConfig) -> Tuple[StationPose, StationPose, StationPose]:
    """
    Station poses of a scene.

    With ``geometry_seed`` set, stations are placed 50-70 m from the origin at
    bearings roughly 120 degrees apart, with random heights and headings.
    """
    if cfg.geometry_seed is None:
        return tuple(cfg.station_poses)

    rng = np.random.default_rng(cfg.geometry_seed)
    base = rng.uniform(0.0, 2.0 * math.pi)
    poses = []
    for k in range(3):
        bearing = base + k * 2.0 * math.pi / 3.0 + rng.uniform(-math.radians(15.0), math.radians(15.0))
        distance = rng.uniform(50.0, 70.0)
        poses.append(
            StationPose(
                x=distance * math.cos(bearing),
                y=distance * math.sin(bearing),
                z=rng.uniform(1.3, 1.7),
                yaw=rng.uniform(-math.pi, math.pi),
            )
        )
    return tuple(poses)


def station_transforms(cfg: SceneConfig) -> List[RigidTransform]:
    """True station -> world transforms of stations 1, 2, 3."""
    return [pose.to_transform(k) for k, pose in enumerate(resolve_station_poses(cfg), start=1)]


def arc_length(cfg: SceneConfig, times: np.ndarray) -> np.ndarray:
    """Distance travelled at each time under the sin^2 speed profile."""
    moving = np.maximum(np.asarray(times, dtype=float) - cfg.static_lead_in_s, 0.0)
    period = cfg.speed_period_s
    return cfg.speed_max * (0.5 * moving - period / (4.0 * math.pi) * np.sin(2.0 * math.pi * moving / period))


def _figure_eight(size: float, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # Lemniscate of Gerono x = A sin u, y = (A / 2) sin 2u, parameterized by arc length
    u = np.linspace(0.0, 2.0 * math.pi, FIGURE_EIGHT_SAMPLES)
    dx = size * np.cos(u)
    dy = size * np.cos(2.0 * u)
    speed = np.hypot(dx, dy)
    lengths = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(u))])
    lap = lengths[-1]
    u_s = np.interp(np.mod(s, lap), lengths, u)
    xy = np.column_stack([size * np.sin(u_s), 0.5 * size * np.sin(2.0 * u_s)])
    heading = np.arctan2(np.cos(2.0 * u_s), np.cos(u_s))
    return xy, heading


def _polyline(waypoints: Sequence[Tuple[float, float]], s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    points = np.asarray(waypoints, dtype=float)
    segments = np.diff(points, axis=0)
    lengths = np.linalg.norm(segments, axis=1)
    starts = np.concatenate([[0.0], np.cumsum(lengths)])
    s = np.clip(s, 0.0, starts[-1])
    index = np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(segments) - 1)
    fraction = (s - starts[index]) / lengths[index]
    xy = points[index] + fraction[:, None] * segments[index]
    heading = np.arctan2(segments[index, 1], segments[index, 0])
    return xy, heading


def path_waypoints(cfg: SceneConfig) -> Optional[List[Tuple[float, float]]]:
    """Polyline of the line-based trajectory kinds (None for the others)."""
    size = cfg.trajectory_size_m
    if cfg.trajectory == TrajectoryKind.STRAIGHT_LINE:
        return [(-2.5 * size, -0.5 * size), (2.5 * size, 0.5 * size)]
    if cfg.trajectory == TrajectoryKind.L_SHAPE:
        return [(-1.5 * size, -size), (size, -size), (size, 1.5 * size)]
    if cfg.trajectory == TrajectoryKind.SCRIPTED:
        return list(cfg.waypoints)
    return None


def terrain_height(cfg: SceneConfig, xy: np.ndarray) -> np.ndarray:
    """Ground height under the given horizontal positions."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    k = 2.0 * math.pi / cfg.terrain_wavelength_m
    return cfg.terrain_relief_m * np.sin(k * xy[:, 0]) * np.cos(k * xy[:, 1])


def terrain_normals(cfg: SceneConfig, xy: np.ndarray) -> np.ndarray:
    """(n, 3) unit ground normals under the given horizontal positions."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    k = 2.0 * math.pi / cfg.terrain_wavelength_m
    amplitude = cfg.terrain_relief_m * k
    dh_dx = amplitude * np.cos(k * xy[:, 0]) * np.cos(k * xy[:, 1])
    dh_dy = -amplitude * np.sin(k * xy[:, 0]) * np.sin(k * xy[:, 1])
    normals = np.column_stack([-dh_dx, -dh_dy, np.ones(len(xy))])
    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


def body_poses(cfg: SceneConfig, times: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Body position and heading at the given times.

    Returns:
        ((n, 3) world positions on the ground, (n,) headings in radians)
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    if cfg.trajectory == TrajectoryKind.STATIC:
        xy, heading = np.zeros((len(times), 2)), np.zeros(len(times))
    else:
        s = arc_length(cfg, times)
        if cfg.trajectory == TrajectoryKind.FIGURE_EIGHT:
            xy, heading = _figure_eight(cfg.trajectory_size_m, s)
        else:
            xy, heading = _polyline(path_waypoints(cfg), s)
    return np.column_stack([xy, terrain_height(cfg, xy)]), heading


def body_rotations(cfg: SceneConfig, positions: np.ndarray, heading: np.ndarray) -> np.ndarray:
    """
    (n, 3, 3) body -> world rotations.

    The body z axis is the ground normal and its x axis is the heading direction
    projected onto the ground, so on flat ground this is a pure yaw.
    """
    normal = terrain_normals(cfg, positions[:, :2])
    forward = np.column_stack([np.cos(heading), np.sin(heading), np.zeros(len(heading))])
    forward -= np.sum(forward * normal, axis=1, keepdims=True) * normal
    forward /= np.linalg.norm(forward, axis=1, keepdims=True)
    left = np.cross(normal, forward)
    return np.stack([forward, left, normal], axis=2)


def true_prism_positions(cfg: SceneConfig, prism_id: int, times: np.ndarray) -> np.ndarray:
    """(n, 3) world positions of one prism."""
    position, heading = body_poses(cfg, times)
    offset = np.asarray(cfg.prism_offsets[prism_id - 1], dtype=float)
    return position + body_rotations(cfg, position, heading) @ offset


def _to_polar(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    horizontal = np.hypot(points[:, 0], points[:, 1])
    distance = np.linalg.norm(points, axis=1)
    azimuth = np.mod(np.arctan2(points[:, 0], points[:, 1]), 2.0 * math.pi)
    elevation = np.arctan2(points[:, 2], horizontal)
    return azimuth, elevation, distance


def _choose_outliers(rng: np.random.Generator, count: int, rate: float) -> List[int]:
    """Non-adjacent row indices of the records to corrupt."""
    target = int(round(rate * count))
    if target == 0 or count < 3:
        return []
    chosen: List[int] = []
    for index in rng.permutation(count):
        if len(chosen) == target:
            break
        if all(abs(int(index) - c) > 1 for c in chosen):
            chosen.append(int(index))
    return sorted(chosen)


# =============================================================================
# Scene generation
# =============================================================================

def station_times(cfg: SceneConfig, station_id: int) -> np.ndarray:
    """Sampling times of one station after its dropout windows are removed."""
    count = int(round(cfg.duration_s * cfg.rate_hz))
    times = cfg.station_time_offsets[station_id - 1] + np.arange(count) / cfg.rate_hz
    keep = np.ones(count, dtype=bool)
    for dropout_station, start, end in cfg.dropouts:
        if dropout_station == station_id:
            keep &= ~((times >= start) & (times <= end))
    return times[keep]


def generate_scene(cfg: SceneConfig) -> Tuple[List[MeasurementLog], GroundTruth, InterPrismDistances]:
    """
    Simulate the three station logs of a scene.

    Args:
        cfg: Scene configuration

    Returns:
        (logs of stations 1, 2, 3, ground truth, exact inter-prism distances);
        fully determined by ``cfg``
    """
    poses = station_transforms(cfg)
    rngs = _noise_generators(cfg.seed)
    delta = cfg.true_distances()

    logs, outlier_indices = [], {}
    for station_id in (1, 2, 3):
        rng = rngs[station_id - 1]
        prism_id = cfg.prism_assignment[station_id - 1]
        times = station_times(cfg, station_id)
        local = poses[station_id - 1].inverse().apply(true_prism_positions(cfg, prism_id, times))
        azimuth, elevation, distance = _to_polar(local)

        azimuth = azimuth + rng.normal(0.0, cfg.angle_noise_rad, len(times))
        elevation = elevation + rng.normal(0.0, cfg.angle_noise_rad, len(times))
        distance = distance + rng.normal(0.0, cfg.range_noise_m, len(times))

        outliers = _choose_outliers(rng, len(times), cfg.outlier_rate)
        for index in outliers:
            offset = rng.uniform(OUTLIER_MIN, OUTLIER_MAX) * rng.choice([-1.0, 1.0])
            if rng.integers(2) == 0:
                azimuth[index] += offset
            else:
                elevation[index] += offset
        outlier_indices[station_id] = outliers

        records = [
            PolarMeasurement(
                time=float(t), azimuth=float(a), elevation=float(e), range=float(r),
                station_id=station_id, prism_id=prism_id,
            )
            for t, a, e, r in zip(times, azimuth, elevation, distance)
        ]
        logs.append(MeasurementLog(station_id=station_id, records=records))

    span = cfg.duration_s + max(cfg.station_time_offsets)
    truth_times = np.arange(int(math.floor(span * TRUTH_RATE_HZ)) + 1) / TRUTH_RATE_HZ
    T_world_1 = poses[0].inverse()
    truth = GroundTruth(
        T_12=T_world_1.compose(poses[1]),
        T_13=T_world_1.compose(poses[2]),
        station_poses=poses,
        delta=delta,
        times=truth_times,
        prism_world={p: true_prism_positions(cfg, p, truth_times) for p in (1, 2, 3)},
        outlier_indices=outlier_indices,
        dropouts=list(cfg.dropouts),
        seed=cfg.seed,
    )
    return logs, truth, delta


def generate_gcp_observations(cfg: SceneConfig) -> Tuple[List[GcpSet], GcpSet]:
    """
    Noisy observations of the scene's pillars by every station.

    Returns:
        (GcpSets of stations 1, 2, 3 in their own frames, exact world GcpSet)
    """
    if not cfg.gcp_world:
        raise ValueError(f"Scene '{cfg.name}' defines no GCP pillars")

    labels = [label for label, *_ in cfg.gcp_world]
    world_points = np.array([xyz for _, *xyz in cfg.gcp_world], dtype=float)
    world = GcpSet.from_array(WORLD_FRAME, labels, world_points)
    rng = _noise_generators(cfg.seed)[3]

    station_sets = []
    for station_id, pose in enumerate(station_transforms(cfg), start=1):
        azimuth, elevation, distance = _to_polar(pose.inverse().apply(world_points))
        azimuth = azimuth + rng.normal(0.0, cfg.angle_noise_rad, len(labels))
        elevation = elevation + rng.normal(0.0, cfg.angle_noise_rad, len(labels))
        distance = distance + rng.normal(0.0, cfg.range_noise_m, len(labels))
        points = [
            polar_to_cartesian(PolarMeasurement(0.0, float(a), float(e), float(r), station_id, 1))
            for a, e, r in zip(azimuth, elevation, distance)
        ]
        station_sets.append(
            GcpSet.from_array(station_frame(station_id), labels, np.array([p.position for p in points]))
        )
    return station_sets, world


def evaluate_against_truth(result: CalibrationResult, truth: GroundTruth) -> Dict[str, Tuple[float, float]]:
    """
    Translation (m) and rotation (rad) errors of the estimated transforms.

    Returns:
        {"T_12": (trans_err, rot_err), "T_13": (trans_err, rot_err)}
    """
    return {
        "T_12": transform_delta(result.T_12, truth.T_12),
        "T_13": transform_delta(result.T_13, truth.T_13),
    }
