"""
Core data structures for rtscalib.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .se3 import (
    CartesianPoint,
    PolarMeasurement,
    RigidTransform,
    Twist,
    WORLD_FRAME,
    station_frame,
    yaw_rotation,
)

__all__ = [
    "CartesianPoint",
    "PolarMeasurement",
    "RigidTransform",
    "Twist",
    "CalibrationMethod",
    "Validation",
    "MetricKind",
    "InterpolationKind",
    "TrajectoryKind",
    "MeasurementLog",
    "GcpSet",
    "InterPrismDistances",
    "GpKernelParams",
    "PipelineConfig",
    "TimeInterval",
    "Trajectory",
    "IntervalSplit",
    "SyncedTrajectories",
    "CalibrationResult",
    "SweepEntry",
    "PriorSearchDiagnostics",
    "MetricReport",
    "StationPose",
    "SceneConfig",
    "GroundTruth",
    "RunManifest",
    "CALIBRATION_METHODS",
]


class CalibrationMethod(str, Enum):
    """Extrinsic calibration methods."""
    TWO_POINT = "two_point"  # A
    STATIC_GCP = "static_gcp"  # B
    DYNAMIC_GCP = "dynamic_gcp"  # C
    INTER_PRISM = "inter_prism"  # D


class Validation(str, Enum):
    """Outcome of the convergence validation of a calibration."""
    VALIDATED = "validated"
    UNVALIDATED = "unvalidated"
    DEGENERATE = "degenerate"


class MetricKind(str, Enum):
    """Evaluation metrics."""
    GCP = "gcp"
    INTER_PRISM = "inter_prism"


class InterpolationKind(str, Enum):
    """Interpolation used by the last pre-processing block."""
    LINEAR = "linear"
    GAUSSIAN_PROCESS = "gaussian_process"


class TrajectoryKind(str, Enum):
    """Shapes the simulator can drive the prism body along."""
    FIGURE_EIGHT = "figure_eight"
    STRAIGHT_LINE = "straight_line"
    L_SHAPE = "l_shape"
    STATIC = "static"
    SCRIPTED = "scripted"


@dataclass
class MeasurementLog:
    """
    Time-ordered readings of one station.

    Attributes:
        station_id: Observing station (1, 2 or 3)
        records: Polar measurements with strictly increasing timestamps
        malformed_rows: Rows skipped while parsing the source file
    """
    station_id: int
    records: List[PolarMeasurement] = field(default_factory=list)
    malformed_rows: int = 0

    def __post_init__(self):
        if self.station_id not in (1, 2, 3):
            raise ValueError(f"station_id must be 1, 2 or 3, got {self.station_id}")
        for record in self.records:
            if record.station_id != self.station_id:
                raise ValueError(
                    f"Record of station {record.station_id} in log of station {self.station_id}"
                )
        for previous, current in zip(self.records, self.records[1:]):
            if current.time <= previous.time:
                raise ValueError(
                    f"Timestamps must be strictly increasing ({previous.time} then {current.time})"
                )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.records], dtype=float)

    @property
    def prism_ids(self) -> List[int]:
        return sorted({r.prism_id for r in self.records})


@dataclass
class GcpSet:
    """
    Labeled static points expressed in one frame.

    Attributes:
        frame_id: Frame tag of every point (``rts1`` .. ``rts3`` or ``world``)
        points: Labeled points, labels unique
    """
    frame_id: str
    points: List[CartesianPoint] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for point in self.points:
            if point.label is None:
                raise ValueError("Every GCP needs a label")
            if point.label in seen:
                raise ValueError(f"Duplicate GCP label: {point.label}")
            seen.add(point.label)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def labels(self) -> List[str]:
        return [p.label for p in self.points]

    def get(self, label: str) -> np.ndarray:
        for point in self.points:
            if point.label == label:
                return point.position
        raise KeyError(label)

    def positions(self, labels: Optional[Sequence[str]] = None) -> np.ndarray:
        """Stack point positions in the given label order (all points by default)."""
        if labels is None:
            labels = self.labels
        return np.array([self.get(label) for label in labels], dtype=float).reshape(-1, 3)

    def common_labels(self, *others: "GcpSet") -> List[str]:
        """Labels present in this set and every other set, in this set's order."""
        shared = [label for label in self.labels if all(label in o.labels for o in others)]
        return shared

    @classmethod
    def from_array(cls, frame_id: str, labels: Sequence[str], positions: np.ndarray) -> "GcpSet":
        positions = np.asarray(positions, dtype=float)
        return cls(
            frame_id=frame_id,
            points=[
                CartesianPoint(time=0.0, position=p, frame_id=frame_id, label=label)
                for label, p in zip(labels, positions)
            ],
        )


@dataclass(frozen=True)
class InterPrismDistances:
    """
    Premeasured distances between the three body-mounted prisms.

    Attributes:
        alpha: Prism 1 to prism 2, meters
        beta: Prism 1 to prism 3, meters
        gamma: Prism 2 to prism 3, meters
    """
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise ValueError(f"{name} must be a positive distance, got {value}")
        a, b, c = self.alpha, self.beta, self.gamma
        if not (a < b + c and b < a + c and c < a + b):
            raise ValueError(
                f"Inter-prism distances violate the triangle inequality: {a}, {b}, {c}"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma])


@dataclass(frozen=True)
class GpKernelParams:
    """
    Squared-exponential kernel hyperparameters (fixed, never optimized).

    Attributes:
        length_scale: Seconds
        signal_sigma: Meters
        noise_sigma: Meters, added as variance on the diagonal
    """
    length_scale: float = 1.0
    signal_sigma: float = 1.0
    noise_sigma: float = 0.002

    def __post_init__(self):
        if self.length_scale <= 0.0 or self.signal_sigma <= 0.0:
            raise ValueError("GP length scale and signal sigma must be positive")
        if self.noise_sigma < 0.0:
            raise ValueError(f"GP noise sigma must be non-negative, got {self.noise_sigma}")


@dataclass(frozen=True)
class PipelineConfig:
    """
    Thresholds and switches of the four pre-processing blocks.

    Attributes:
        tau_r: Max range rate, m/s
        tau_e: Max elevation rate, rad/s
        tau_a: Max azimuth rate, rad/s
        tau_s: Max gap inside an interval, seconds
        tau_l: Min interval duration, seconds
        interpolation: Interpolation kind of the last block
        output_rate: Common grid rate, Hz
        enable_outlier_filter: Run block 1
        enable_interval_filter: Run block 3
        gp: Kernel parameters when interpolation is a GP
    """
    tau_r: float = 2.0
    tau_e: float = math.radians(1.0)
    tau_a: float = math.radians(1.0)
    tau_s: float = 1.0
    tau_l: float = 6.0
    interpolation: InterpolationKind = InterpolationKind.LINEAR
    output_rate: float = 10.0
    enable_outlier_filter: bool = True
    enable_interval_filter: bool = True
    gp: GpKernelParams = field(default_factory=GpKernelParams)

    def __post_init__(self):
        for name in ("tau_r", "tau_e", "tau_a", "tau_s", "tau_l", "output_rate"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise ValueError(f"{name} must be positive, got {value}")
        object.__setattr__(self, "interpolation", InterpolationKind(self.interpolation))


@dataclass(frozen=True)
class TimeInterval:
    """Closed time interval [start, end] in seconds."""
    start: float
    end: float

    def __post_init__(self):
        if not self.end - self.start > 0.0:
            raise ValueError(f"Interval end must follow start, got [{self.start}, {self.end}]")

    @property
    def duration(self) -> float:
        return self.end - self.start

    def contains(self, t: float) -> bool:
        return self.start <= t <= self.end


@dataclass(eq=False)
class Trajectory:
    """
    Time-ordered Cartesian prism positions in a single frame.

    Attributes:
        times: (n,) strictly increasing seconds
        positions: (n, 3) meters
        frame_id: Frame tag of the positions
        station_id: Observing station
        prism_id: Tracked prism
    """
    times: np.ndarray
    positions: np.ndarray
    frame_id: str
    station_id: int
    prism_id: int

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if len(self.times) != len(self.positions):
            raise ValueError(
                f"{len(self.times)} timestamps for {len(self.positions)} positions"
            )
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("Trajectory timestamps must be strictly increasing")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("Trajectory positions must be finite")

    def __len__(self) -> int:
        return len(self.times)

    def subset(self, mask: np.ndarray) -> "Trajectory":
        return Trajectory(
            self.times[mask], self.positions[mask], self.frame_id, self.station_id, self.prism_id
        )

    @classmethod
    def from_points(
        cls, points: Sequence[CartesianPoint], station_id: int, prism_id: int
    ) -> "Trajectory":
        frame = points[0].frame_id if points else station_frame(station_id)
        return cls(
            times=np.array([p.time for p in points], dtype=float),
            positions=np.array([p.position for p in points], dtype=float).reshape(-1, 3),
            frame_id=frame,
            station_id=station_id,
            prism_id=prism_id,
        )


@dataclass
class IntervalSplit:
    """
    Common coverage of the three stations.

    Attributes:
        intervals: Common intervals ordered by start time
        segments: Per station id, one support trajectory per interval; each support
            brackets its interval so interpolation never extrapolates
    """
    intervals: List[TimeInterval]
    segments: Dict[int, List[Trajectory]]

    def __post_init__(self):
        for station_id, segments in self.segments.items():
            if len(segments) != len(self.intervals):
                raise ValueError(
                    f"Station {station_id} has {len(segments)} segments for "
                    f"{len(self.intervals)} intervals"
                )

    def keep(self, indices: Sequence[int]) -> "IntervalSplit":
        return IntervalSplit(
            intervals=[self.intervals[i] for i in indices],
            segments={s: [segs[i] for i in indices] for s, segs in self.segments.items()},
        )


@dataclass(eq=False)
class SyncedTrajectories:
    """
    Interpolated trajectories of the three stations on one common grid.

    Attributes:
        common_times: (n,) strictly increasing grid shared by all trajectories
        trajectories: One trajectory per station, in station order 1, 2, 3
        intervals: Common intervals the grid was drawn from
        interval_index: (n,) index into ``intervals`` of every grid sample
    """
    common_times: np.ndarray
    trajectories: Tuple[Trajectory, Trajectory, Trajectory]
    intervals: List[TimeInterval] = field(default_factory=list)
    interval_index: Optional[np.ndarray] = None

    def __post_init__(self):
        self.common_times = np.asarray(self.common_times, dtype=float).reshape(-1)
        self.trajectories = tuple(self.trajectories)
        if len(self.trajectories) != 3:
            raise ValueError(f"Expected 3 trajectories, got {len(self.trajectories)}")
        for k, trajectory in enumerate(self.trajectories, start=1):
            if trajectory.station_id != k:
                raise ValueError(f"Trajectory {k} belongs to station {trajectory.station_id}")
            if not np.array_equal(trajectory.times, self.common_times):
                raise ValueError(f"Trajectory of station {k} is not on the common grid")
        if self.interval_index is None:
            self.interval_index = np.zeros(len(self.common_times), dtype=int)
        self.interval_index = np.asarray(self.interval_index, dtype=int).reshape(-1)
        if len(self.interval_index) != len(self.common_times):
            raise ValueError("interval_index must have one entry per grid sample")

    def __len__(self) -> int:
        return len(self.common_times)

    def positions(self, station_id: int) -> np.ndarray:
        return self.trajectories[station_id - 1].positions

    @property
    def prism_ids(self) -> Tuple[int, int, int]:
        return tuple(t.prism_id for t in self.trajectories)

    def subset(self, mask: np.ndarray) -> "SyncedTrajectories":
        """Keep the grid samples selected by a boolean mask."""
        mask = np.asarray(mask, dtype=bool)
        return SyncedTrajectories(
            common_times=self.common_times[mask],
            trajectories=tuple(t.subset(mask) for t in self.trajectories),
            intervals=list(self.intervals),
            interval_index=self.interval_index[mask],
        )


@dataclass(eq=False)
class CalibrationResult:
    """
    Estimated station-to-station transforms.

    Attributes:
        method: Calibration method that produced the result
        T_12: Transform rts2 -> rts1
        T_13: Transform rts3 -> rts1
        final_cost: Method cost at the solution, m^2
        residuals: Per-sample residuals, meters
        iterations: Solver iterations (0 for closed-form methods)
        converged: Whether the solver met a convergence criterion
        validation: Convergence validation verdict
        leveled: Transforms are yaw-only (false only for full SE(3) GCP alignment)
        cost_history: Accepted costs of the iterative solver
        metadata: Diagnostic scalars
    """
    method: CalibrationMethod
    T_12: RigidTransform
    T_13: RigidTransform
    final_cost: float
    residuals: np.ndarray
    iterations: int = 0
    converged: bool = True
    validation: Validation = Validation.VALIDATED
    leveled: bool = True
    cost_history: List[float] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.method = CalibrationMethod(self.method)
        self.validation = Validation(self.validation)
        self.residuals = np.asarray(self.residuals, dtype=float).reshape(-1)
        if self.final_cost < 0.0:
            raise ValueError(f"Cost must be non-negative, got {self.final_cost}")
        if self.iterations < 0:
            raise ValueError(f"Iterations must be non-negative, got {self.iterations}")
        expected = {
            "T_12": (station_frame(2), station_frame(1)),
            "T_13": (station_frame(3), station_frame(1)),
        }
        for name, (from_frame, to_frame) in expected.items():
            transform = getattr(self, name)
            if (transform.from_frame, transform.to_frame) != (from_frame, to_frame):
                raise ValueError(
                    f"{name} must map {from_frame} -> {to_frame}, got "
                    f"{transform.from_frame} -> {transform.to_frame}"
                )
            if self.leveled and not transform.is_yaw_only():
                raise ValueError(f"{name} is not yaw-only")


@dataclass(eq=False)
class SweepEntry:
    """
    One inter-prism solve of the prior search.

    Attributes:
        step: Sweep step (1 or 2)
        tau_v: Speed threshold, m/s
        sample_count: Grid samples below the threshold
        cost: Inter-prism cost on the subset, m^2
        metric_median: Inter-prism metric median on the full data, meters
        T_12: Estimated rts2 -> rts1
        T_13: Estimated rts3 -> rts1
        converged: Solver convergence flag
        iterations: Solver iterations
    """
    step: int
    tau_v: float
    sample_count: int
    cost: float
    metric_median: float
    T_12: RigidTransform
    T_13: RigidTransform
    converged: bool
    iterations: int


@dataclass(eq=False)
class PriorSearchDiagnostics:
    """
    Record of the two-step velocity sweep.

    Attributes:
        tau_v_step: Threshold increment, m/s
        entries: Sweep entries of both steps in execution order
        best_step1: Index into entries of the best step-1 entry
        best_step2: Index into entries of the best step-2 entry
        similar_convergence_count: Other entries agreeing with the final best
        start_tau_v: First threshold actually solved
        start_shifted: The sweep started above the configured initial threshold
        effective_entries: Distinct sample subsets solved per step
        heading_coverage_deg: Smallest angular spread of the direction of travel over the stations
        mirror_cost: Cost of the refined vertical mirror image of the best step-1 entry
        vertical_branch_switched: Step 2 was seeded with the mirror image
        vertical_ambiguous: The mirror image fits as well as the original but differs from it
        validation: Verdict on the best step-2 entry
        notes: Human-readable remarks
    """
    tau_v_step: float
    entries: List[SweepEntry] = field(default_factory=list)
    best_step1: Optional[int] = None
    best_step2: Optional[int] = None
    similar_convergence_count: int = 0
    start_tau_v: float = 0.0
    start_shifted: bool = False
    effective_entries: int = 0
    heading_coverage_deg: float = 0.0
    mirror_cost: Optional[float] = None
    vertical_branch_switched: bool = False
    vertical_ambiguous: bool = False
    validation: Validation = Validation.UNVALIDATED
    notes: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.validation = Validation(self.validation)
        for step in (1, 2):
            thresholds = [e.tau_v for e in self.entries if e.step == step]
            for previous, current in zip(thresholds, thresholds[1:]):
                if not math.isclose(current - previous, self.tau_v_step, rel_tol=1e-9, abs_tol=1e-12):
                    raise ValueError(
                        f"Step {step} thresholds must increase by {self.tau_v_step}, "
                        f"got {previous} then {current}"
                    )

    def step_entries(self, step: int) -> List[SweepEntry]:
        return [e for e in self.entries if e.step == step]

    @property
    def best(self) -> Optional[SweepEntry]:
        index = self.best_step2 if self.best_step2 is not None else self.best_step1
        return None if index is None else self.entries[index]


@dataclass(eq=False)
class MetricReport:
    """
    Distribution of one evaluation metric.

    Attributes:
        kind: Metric tag
        samples: Non-negative residual distances, meters
        median: Median of samples
        iqr: 75th minus 25th percentile (linear interpolation between ranks)
        count: Number of samples
    """
    kind: MetricKind
    samples: np.ndarray
    median: float
    iqr: float
    count: int

    def __post_init__(self):
        self.kind = MetricKind(self.kind)
        self.samples = np.asarray(self.samples, dtype=float).reshape(-1)
        if self.count != len(self.samples):
            raise ValueError(f"count {self.count} does not match {len(self.samples)} samples")
        if np.any(self.samples < 0.0):
            raise ValueError("Metric samples must be non-negative")

    @classmethod
    def from_samples(cls, kind: MetricKind, samples: Sequence[float]) -> "MetricReport":
        samples = np.asarray(samples, dtype=float).reshape(-1)
        if len(samples) == 0:
            raise ValueError("Cannot summarize an empty metric")
        q25, q50, q75 = np.percentile(samples, [25.0, 50.0, 75.0], method="linear")
        return cls(kind=kind, samples=samples, median=float(q50), iqr=float(q75 - q25), count=len(samples))


@dataclass(frozen=True)
class StationPose:
    """
    World pose of a leveled station.

    Attributes:
        x, y, z: Station origin in the world frame, meters
        yaw: Heading of the station frame, radians
    """
    x: float
    y: float
    z: float
    yaw: float

    def to_transform(self, station_id: int) -> RigidTransform:
        """Transform station frame -> world frame."""
        return RigidTransform(
            yaw_rotation(self.yaw), np.array([self.x, self.y, self.z]), station_frame(station_id), WORLD_FRAME
        )


DEFAULT_STATION_POSES = (
    StationPose(-40.0, -35.0, 1.6, math.radians(20.0)),
    StationPose(55.0, -25.0, 1.4, math.radians(-110.0)),
    StationPose(5.0, 60.0, 1.5, math.radians(150.0)),
)

DEFAULT_PRISM_OFFSETS = (
    (0.55, 0.0, 0.60),
    (-0.45, 0.45, 0.40),
    (-0.45, -0.45, 0.25),
)

DEFAULT_GCP_WORLD = (
    ("P1", -12.0, -10.0, 0.35),
    ("P2", 14.0, -9.0, 0.42),
    ("P3", 13.0, 11.0, 0.28),
    ("P4", -11.0, 12.0, 0.51),
)


@dataclass
class SceneConfig:
    """
    Synthetic scene: a rigid body carrying three prisms observed by three stations.

    Attributes:
        name: Scene name
        station_poses: World pose of stations 1, 2, 3
        prism_offsets: Prism positions in the body frame, meters
        trajectory: Path shape
        duration_s: Length of the run, seconds
        speed_max: Peak body speed, m/s
        speed_period_s: Period of the sin^2 speed profile, seconds
        trajectory_size_m: Half-width of the figure-eight, or segment length of lines
        waypoints: Horizontal polyline for scripted paths
        rate_hz: Measurement rate per station
        range_noise_m: Range noise sigma
        angle_noise_rad: Azimuth and elevation noise sigma
        dropouts: (station_id, start_s, end_s) windows without measurements
        outlier_rate: Fraction of records corrupted with 0.5-2 degree angle errors
        seed: Noise seed
        geometry_seed: When set, station poses are drawn at random from this seed
        prism_assignment: Prism tracked by stations 1, 2, 3
        station_time_offsets: Sampling phase of each station, seconds
        static_lead_in_s: Time spent static before moving
        terrain_relief_m: Amplitude of the sinusoidal ground relief, meters (0 for flat ground)
        terrain_wavelength_m: Wavelength of the ground relief, meters
        gcp_world: (label, x, y, z) pillars in the world frame
    """
    name: str = "figure_eight"
    station_poses: Tuple[StationPose, StationPose, StationPose] = DEFAULT_STATION_POSES
    prism_offsets: Tuple[Tuple[float, float, float], ...] = DEFAULT_PRISM_OFFSETS
    trajectory: TrajectoryKind = TrajectoryKind.FIGURE_EIGHT
    duration_s: float = 180.0
    speed_max: float = 0.5
    speed_period_s: float = 20.0
    trajectory_size_m: float = 10.0
    waypoints: Optional[List[Tuple[float, float]]] = None
    rate_hz: float = 2.5
    range_noise_m: float = 0.002
    angle_noise_rad: float = 4.85e-6
    dropouts: List[Tuple[int, float, float]] = field(default_factory=list)
    outlier_rate: float = 0.0
    seed: int = 0
    geometry_seed: Optional[int] = None
    prism_assignment: Tuple[int, int, int] = (1, 2, 3)
    station_time_offsets: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    static_lead_in_s: float = 0.0
    terrain_relief_m: float = 0.15
    terrain_wavelength_m: float = 12.0
    gcp_world: Tuple[Tuple[str, float, float, float], ...] = DEFAULT_GCP_WORLD

    def __post_init__(self):
        self.trajectory = TrajectoryKind(self.trajectory)
        if len(self.station_poses) != 3:
            raise ValueError(f"Expected 3 station poses, got {len(self.station_poses)}")
        if len(self.prism_offsets) != 3:
            raise ValueError(f"Expected 3 prism offsets, got {len(self.prism_offsets)}")
        offsets = np.asarray(self.prism_offsets, dtype=float)
        normal = np.cross(offsets[1] - offsets[0], offsets[2] - offsets[0])
        if np.linalg.norm(normal) < 1e-6:
            raise ValueError("Prism offsets must not be collinear")
        self.true_distances()
        if self.rate_hz <= 0.0:
            raise ValueError(f"Measurement rate must be positive, got {self.rate_hz}")
        if self.duration_s <= 0.0 or self.speed_period_s <= 0.0:
            raise ValueError("Duration and speed period must be positive")
        if self.speed_max < 0.0 or self.trajectory_size_m <= 0.0:
            raise ValueError("Speed must be non-negative and trajectory size positive")
        if self.range_noise_m < 0.0 or self.angle_noise_rad < 0.0:
            raise ValueError("Noise levels must be non-negative")
        if not 0.0 <= self.outlier_rate <= 0.2:
            raise ValueError(f"Outlier rate must be in [0, 0.2], got {self.outlier_rate}")
        if self.static_lead_in_s < 0.0:
            raise ValueError("Static lead-in must be non-negative")
        if self.terrain_relief_m < 0.0 or self.terrain_wavelength_m <= 0.0:
            raise ValueError("Terrain relief must be non-negative and its wavelength positive")
        if len(self.prism_assignment) != 3 or any(p not in (1, 2, 3) for p in self.prism_assignment):
            raise ValueError(f"Invalid prism assignment: {self.prism_assignment}")
        if len(self.station_time_offsets) != 3:
            raise ValueError("Expected one time offset per station")
        if self.trajectory == TrajectoryKind.SCRIPTED and (not self.waypoints or len(self.waypoints) < 2):
            raise ValueError("Scripted trajectories need at least 2 waypoints")
        for station_id, start, end in self.dropouts:
            if station_id not in (1, 2, 3) or not end > start:
                raise ValueError(f"Invalid dropout window: {(station_id, start, end)}")

    def true_distances(self) -> InterPrismDistances:
        """Exact inter-prism distances implied by the body offsets."""
        o = np.asarray(self.prism_offsets, dtype=float)
        return InterPrismDistances(
            alpha=float(np.linalg.norm(o[0] - o[1])),
            beta=float(np.linalg.norm(o[0] - o[2])),
            gamma=float(np.linalg.norm(o[1] - o[2])),
        )


@dataclass(eq=False)
class GroundTruth:
    """
    Oracle record of a simulated scene.

    Attributes:
        T_12: True rts2 -> rts1
        T_13: True rts3 -> rts1
        station_poses: True station -> world transforms, stations 1, 2, 3
        delta: True inter-prism distances
        times: Dense truth timestamps, seconds
        prism_world: Per prism id, (n, 3) true world positions at ``times``
        outlier_indices: Per station id, indices of corrupted rows in the final log
        dropouts: Dropout windows applied
        seed: Noise seed
    """
    T_12: RigidTransform
    T_13: RigidTransform
    station_poses: List[RigidTransform]
    delta: InterPrismDistances
    times: np.ndarray
    prism_world: Dict[int, np.ndarray]
    outlier_indices: Dict[int, List[int]] = field(default_factory=dict)
    dropouts: List[Tuple[int, float, float]] = field(default_factory=list)
    seed: int = 0


@dataclass
class RunManifest:
    """
    Everything needed to reproduce one CLI run.

    Attributes:
        command: Subcommand name
        version: rtscalib version
        config: Resolved configuration snapshot
        inputs: Input path -> sha256 digest
        outputs: Output path -> sha256 digest
        seeds: Named seeds used by the run
        started_at: ISO-8601 start time
        finished_at: ISO-8601 end time
    """
    command: str
    version: str
    config: Dict[str, Any] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    seeds: Dict[str, int] = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "version": self.version,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "seeds": self.seeds,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


# Calibration methods and their descriptions
CALIBRATION_METHODS = {
    "two_point": {
        "label": "A",
        "name": "Two-point resection",
        "description": "Each station resected on two known pillars, yaw-only",
        "inputs": "GCP files",
    },
    "static_gcp": {
        "label": "B",
        "name": "Static GCPs calibration",
        "description": "Point-to-point alignment of at least three static GCPs shared by the stations",
        "inputs": "GCP files",
    },
    "dynamic_gcp": {
        "label": "C",
        "name": "Dynamic GCPs calibration",
        "description": "Point-to-point alignment of one shared prism tracked by all stations",
        "inputs": "shared-prism logs",
    },
    "inter_prism": {
        "label": "D",
        "name": "Dynamic inter-prism calibration",
        "description": "Least squares on the premeasured inter-prism distances after a velocity-thresholded prior search",
        "inputs": "three-prism logs and distances",
    },
}
