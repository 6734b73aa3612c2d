"""
Run and scene configuration.

Files are YAML in surveyor units (degrees, degrees per second, seconds, meters, Hz).
They are validated by pydantic models and converted once into the radian-based
dataclasses used everywhere else.
"""

import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .exceptions import ConfigError
from .schemas import (
    GpKernelParams,
    InterpolationKind,
    PipelineConfig,
    SceneConfig,
    StationPose,
    TrajectoryKind,
    DEFAULT_GCP_WORLD,
    DEFAULT_PRISM_OFFSETS,
    DEFAULT_STATION_POSES,
)

ARCSECOND = math.radians(1.0 / 3600.0)


class _Settings(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PipelineSettings(_Settings):
    """Pre-processing thresholds as written in config files."""
    tau_r: float = Field(2.0, gt=0, description="Max range rate, m/s (platform max speed)")
    tau_e_deg: float = Field(1.0, gt=0, description="Max elevation rate, deg/s")
    tau_a_deg: float = Field(1.0, gt=0, description="Max azimuth rate, deg/s")
    tau_s: float = Field(1.0, gt=0, description="Max gap inside an interval, s")
    tau_l: float = Field(6.0, gt=0, description="Min interval duration, s")
    interpolation: InterpolationKind = InterpolationKind.LINEAR
    output_rate: float = Field(10.0, gt=0, description="Common grid rate, Hz")
    enable_outlier_filter: bool = True
    enable_interval_filter: bool = True
    gp_length_scale_s: float = Field(1.0, gt=0)
    gp_sigma_m: float = Field(1.0, gt=0)
    gp_noise_m: float = Field(0.002, ge=0)
    max_workers: Optional[int] = Field(None, ge=1)

    def to_pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            tau_r=self.tau_r,
            tau_e=math.radians(self.tau_e_deg),
            tau_a=math.radians(self.tau_a_deg),
            tau_s=self.tau_s,
            tau_l=self.tau_l,
            interpolation=self.interpolation,
            output_rate=self.output_rate,
            enable_outlier_filter=self.enable_outlier_filter,
            enable_interval_filter=self.enable_interval_filter,
            gp=GpKernelParams(
                length_scale=self.gp_length_scale_s,
                signal_sigma=self.gp_sigma_m,
                noise_sigma=self.gp_noise_m,
            ),
        )


class SolverSettings(_Settings):
    """Damped least-squares stopping rules."""
    max_iterations: int = Field(200, ge=1)
    step_tolerance: float = Field(1e-10, gt=0)
    cost_tolerance: float = Field(1e-12, gt=0)
    initial_damping: float = Field(1e-3, gt=0)


class PriorSearchSettings(_Settings):
    """Velocity sweep and convergence validation."""
    tau_v_start: float = Field(0.01, gt=0, description="First speed threshold, m/s")
    tau_v_step: float = Field(0.10, gt=0, description="Threshold increment, m/s")
    robot_speed_max: float = Field(2.0, gt=0, description="Upper end of the sweep, m/s")
    min_samples: int = Field(10, ge=10)
    similar_translation_m: float = Field(0.05, gt=0)
    similar_rotation_deg: float = Field(0.5, gt=0)
    min_similar: int = Field(3, ge=1)
    min_heading_coverage_deg: float = Field(180.0, ge=0, le=360)
    heading_sector_deg: float = Field(30.0, gt=0, le=180)
    heading_sector_min_fraction: float = Field(0.02, ge=0, lt=1)
    heading_min_speed: float = Field(0.05, gt=0, description="Slowest sample in the heading coverage, m/s")
    vertical_branch_cost_ratio: float = Field(2.0, ge=1)
    max_metric_median_m: float = Field(0.05, gt=0, description="Largest metric median of a validated result, m")


class MetricSettings(_Settings):
    reference_line_m: float = Field(0.02, ge=0, description="RTK-GNSS reference printed in reports")


class RunConfig(_Settings):
    """Top-level run configuration (``configs/default.yaml``)."""
    seed: int = 0
    static_yaw_only: bool = True
    pipeline: PipelineSettings = Field(default_factory=PipelineSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    prior_search: PriorSearchSettings = Field(default_factory=PriorSearchSettings)
    metrics: MetricSettings = Field(default_factory=MetricSettings)


class StationSettings(_Settings):
    x: float
    y: float
    z: float
    yaw_deg: float


class DropoutSettings(_Settings):
    station: int = Field(ge=1, le=3)
    start_s: float
    end_s: float


class GcpSettings(_Settings):
    label: str
    x: float
    y: float
    z: float


class SceneSettings(_Settings):
    """Synthetic scene as written in ``scenes/*.yaml``."""
    name: str = "figure_eight"
    description: str = ""
    stations: List[StationSettings] = Field(
        default_factory=lambda: [
            StationSettings(x=p.x, y=p.y, z=p.z, yaw_deg=math.degrees(p.yaw))
            for p in DEFAULT_STATION_POSES
        ]
    )
    prism_offsets: List[Tuple[float, float, float]] = Field(
        default_factory=lambda: [tuple(o) for o in DEFAULT_PRISM_OFFSETS]
    )
    trajectory: TrajectoryKind = TrajectoryKind.FIGURE_EIGHT
    duration_s: float = Field(180.0, gt=0)
    speed_max: float = Field(0.5, ge=0)
    speed_period_s: float = Field(20.0, gt=0)
    trajectory_size_m: float = Field(10.0, gt=0)
    waypoints: Optional[List[Tuple[float, float]]] = None
    rate_hz: float = Field(2.5, gt=0)
    range_noise_m: float = Field(0.002, ge=0)
    angle_noise_arcsec: float = Field(1.0, ge=0)
    dropouts: List[DropoutSettings] = Field(default_factory=list)
    outlier_rate: float = Field(0.0, ge=0, le=0.2)
    seed: int = 0
    geometry_seed: Optional[int] = None
    prism_assignment: Tuple[int, int, int] = (1, 2, 3)
    station_time_offsets: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    static_lead_in_s: float = Field(0.0, ge=0)
    terrain_relief_m: float = Field(0.15, ge=0, description="Amplitude of the ground undulation, m")
    terrain_wavelength_m: float = Field(12.0, gt=0)
    gcp_world: List[GcpSettings] = Field(
        default_factory=lambda: [
            GcpSettings(label=label, x=x, y=y, z=z) for label, x, y, z in DEFAULT_GCP_WORLD
        ]
    )

    @field_validator("stations")
    @classmethod
    def _three_stations(cls, value: List[StationSettings]) -> List[StationSettings]:
        if len(value) != 3:
            raise ValueError(f"expected 3 stations, got {len(value)}")
        return value

    @field_validator("prism_offsets")
    @classmethod
    def _three_prisms(cls, value):
        if len(value) != 3:
            raise ValueError(f"expected 3 prism offsets, got {len(value)}")
        return value

    def to_scene_config(self) -> SceneConfig:
        try:
            return SceneConfig(
                name=self.name,
                station_poses=tuple(
                    StationPose(s.x, s.y, s.z, math.radians(s.yaw_deg)) for s in self.stations
                ),
                prism_offsets=tuple(tuple(o) for o in self.prism_offsets),
                trajectory=self.trajectory,
                duration_s=self.duration_s,
                speed_max=self.speed_max,
                speed_period_s=self.speed_period_s,
                trajectory_size_m=self.trajectory_size_m,
                waypoints=[tuple(w) for w in self.waypoints] if self.waypoints else None,
                rate_hz=self.rate_hz,
                range_noise_m=self.range_noise_m,
                angle_noise_rad=self.angle_noise_arcsec * ARCSECOND,
                dropouts=[(d.station, d.start_s, d.end_s) for d in self.dropouts],
                outlier_rate=self.outlier_rate,
                seed=self.seed,
                geometry_seed=self.geometry_seed,
                prism_assignment=tuple(self.prism_assignment),
                station_time_offsets=tuple(self.station_time_offsets),
                static_lead_in_s=self.static_lead_in_s,
                terrain_relief_m=self.terrain_relief_m,
                terrain_wavelength_m=self.terrain_wavelength_m,
                gcp_world=tuple((g.label, g.x, g.y, g.z) for g in self.gcp_world),
            )
        except ValueError as e:
            raise ConfigError(f"Invalid scene '{self.name}': {e}") from e


def read_yaml(path: str | Path) -> Dict[str, Any]:
    """
    Read a YAML mapping.

    Args:
        path: YAML file

    Returns:
        Parsed mapping (empty for an empty file)
    """
    path = Path(path)

    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")

    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse {path}: {e}") from e

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping, got {type(data).__name__}")
    return data


def load_run_config(path: Optional[str | Path] = None) -> RunConfig:
    """
    Load a run configuration; defaults apply to every key the file omits.

    Args:
        path: YAML file, or None for the built-in defaults

    Returns:
        Validated RunConfig
    """
    data = read_yaml(path) if path is not None else {}
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e}") from e


def parse_scene(data: Dict[str, Any]) -> SceneSettings:
    try:
        return SceneSettings.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid scene configuration: {e}") from e


# Override flag -> (section, key); None section means top level
OVERRIDE_KEYS = {
    "tau_r": ("pipeline", "tau_r"),
    "tau_e_deg": ("pipeline", "tau_e_deg"),
    "tau_a_deg": ("pipeline", "tau_a_deg"),
    "tau_s": ("pipeline", "tau_s"),
    "tau_l": ("pipeline", "tau_l"),
    "interpolation": ("pipeline", "interpolation"),
    "output_rate": ("pipeline", "output_rate"),
    "enable_outlier_filter": ("pipeline", "enable_outlier_filter"),
    "enable_interval_filter": ("pipeline", "enable_interval_filter"),
    "max_workers": ("pipeline", "max_workers"),
    "robot_speed_max": ("prior_search", "robot_speed_max"),
    "static_yaw_only": (None, "static_yaw_only"),
    "seed": (None, "seed"),
}


def apply_overrides(config: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
    """
    Return a copy of ``config`` with command-line values applied.

    Args:
        config: Configuration loaded from file
        overrides: Flag name -> value; None values are ignored

    Returns:
        Re-validated RunConfig
    """
    data = config.model_dump()
    for name, value in overrides.items():
        if value is None:
            continue
        if name not in OVERRIDE_KEYS:
            raise ConfigError(f"Unknown override: {name}")
        section, key = OVERRIDE_KEYS[name]
        target = data if section is None else data[section]
        target[key] = value
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid override: {e}") from e


def config_snapshot(config: BaseModel) -> Dict[str, Any]:
    """JSON-ready dump of a configuration, for manifests."""
    return config.model_dump(mode="json")
