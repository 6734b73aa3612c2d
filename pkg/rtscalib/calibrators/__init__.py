"""Extrinsic calibration methods."""

from .alignment import alignment_residuals, point_to_point_align
from .base import BaseCalibrator, CalibrationInputs
from .dynamic_gcp import dynamic_gcp_calibrate
from .inter_prism import (
    inter_prism_calibrate,
    inter_prism_cost,
    inter_prism_jacobian,
    inter_prism_residual_vector,
    solve_damped_least_squares,
)
from .methods import (
    DynamicGcpCalibrator,
    InterPrismCalibrator,
    StaticGcpCalibrator,
    TwoPointCalibrator,
    get_calibrator,
)
from .prior_search import (
    colocation_prior,
    heading_coverage,
    mirror_vertical,
    point_speeds,
    point_velocities,
    sample_speeds,
    search_prior,
)
from .static_gcp import static_gcp_calibrate, two_point_calibrate, two_point_resection

__all__ = [
    "BaseCalibrator",
    "CalibrationInputs",
    "TwoPointCalibrator",
    "StaticGcpCalibrator",
    "DynamicGcpCalibrator",
    "InterPrismCalibrator",
    "get_calibrator",
    "point_to_point_align",
    "alignment_residuals",
    "two_point_resection",
    "two_point_calibrate",
    "static_gcp_calibrate",
    "dynamic_gcp_calibrate",
    "inter_prism_cost",
    "inter_prism_residual_vector",
    "inter_prism_jacobian",
    "inter_prism_calibrate",
    "solve_damped_least_squares",
    "point_velocities",
    "point_speeds",
    "sample_speeds",
    "colocation_prior",
    "heading_coverage",
    "mirror_vertical",
    "search_prior",
]
