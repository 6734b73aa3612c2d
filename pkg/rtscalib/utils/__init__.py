"""Utility functions."""

from .log_loader import (
    load_station_logs,
    parse_gcp_file,
    parse_inter_prism_distances,
    parse_measurement_log,
    write_gcp_file,
    write_inter_prism_distances,
    write_measurement_log,
    write_synced_trajectories,
)
from .report_writer import (
    format_calibration_report,
    format_result,
    parse_calibration_report,
    read_calibration_report,
    read_ground_truth,
    sha256_file,
    write_calibration_report,
    write_ground_truth,
    write_manifest,
    write_metric_samples,
)
from .scene_loader import list_scenes, load_all_scenes, load_scene

__all__ = [
    "load_scene",
    "load_all_scenes",
    "list_scenes",
    "parse_measurement_log",
    "parse_gcp_file",
    "parse_inter_prism_distances",
    "load_station_logs",
    "write_measurement_log",
    "write_gcp_file",
    "write_inter_prism_distances",
    "write_synced_trajectories",
    "format_calibration_report",
    "write_calibration_report",
    "parse_calibration_report",
    "read_calibration_report",
    "format_result",
    "write_metric_samples",
    "write_manifest",
    "sha256_file",
    "write_ground_truth",
    "read_ground_truth",
]
