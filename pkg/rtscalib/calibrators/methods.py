"""The four calibration methods behind one interface."""

import logging
from typing import Dict, Optional, Sequence, Tuple

from ..config import PriorSearchSettings, RunConfig, SolverSettings
from ..schemas import (
    CalibrationMethod,
    CalibrationResult,
    PriorSearchDiagnostics,
    Twist,
)
from .base import BaseCalibrator, CalibrationInputs
from .dynamic_gcp import dynamic_gcp_calibrate
from .inter_prism import inter_prism_calibrate
from .prior_search import search_prior
from .static_gcp import static_gcp_calibrate, two_point_calibrate

logger = logging.getLogger(__name__)


class TwoPointCalibrator(BaseCalibrator):
    """Method A: two-point resection of every station."""

    required_inputs = ("station_gcps",)

    def __init__(self, labels: Optional[Sequence[str]] = None):
        self.labels = list(labels) if labels else None

    def calibrate(self, inputs: CalibrationInputs) -> CalibrationResult:
        self.check_inputs(inputs)
        return two_point_calibrate(inputs.station_gcps, inputs.world, self.labels)

    def get_calibrator_info(self) -> Dict:
        return {"method": CalibrationMethod.TWO_POINT.value, "labels": self.labels}


class StaticGcpCalibrator(BaseCalibrator):
    """Method B: alignment of at least three static GCPs."""

    required_inputs = ("station_gcps",)

    def __init__(self, yaw_only: bool = True):
        self.yaw_only = yaw_only

    def calibrate(self, inputs: CalibrationInputs) -> CalibrationResult:
        self.check_inputs(inputs)
        return static_gcp_calibrate(inputs.station_gcps, inputs.world, yaw_only=self.yaw_only)

    def get_calibrator_info(self) -> Dict:
        return {"method": CalibrationMethod.STATIC_GCP.value, "yaw_only": self.yaw_only}


class DynamicGcpCalibrator(BaseCalibrator):
    """Method C: alignment of one shared prism tracked by all stations."""

    required_inputs = ("synced",)

    def __init__(self, yaw_only: bool = True):
        self.yaw_only = yaw_only

    def calibrate(self, inputs: CalibrationInputs) -> CalibrationResult:
        self.check_inputs(inputs)
        return dynamic_gcp_calibrate(inputs.synced, yaw_only=self.yaw_only)

    def get_calibrator_info(self) -> Dict:
        return {"method": CalibrationMethod.DYNAMIC_GCP.value, "yaw_only": self.yaw_only}


class InterPrismCalibrator(BaseCalibrator):
    """
    Method D: prior search followed by the inter-prism least squares on all samples.

    The validation verdict of the prior search is carried into the result. When a
    prior is given the search is skipped and the result stays unvalidated.
    """

    required_inputs = ("synced", "delta")

    def __init__(
        self,
        prior_search: Optional[PriorSearchSettings] = None,
        solver: Optional[SolverSettings] = None,
        robot_speed_max: Optional[float] = None,
        prior: Optional[Tuple[Twist, Twist]] = None,
    ):
        self.prior_search = prior_search or PriorSearchSettings()
        self.solver = solver or SolverSettings()
        self.robot_speed_max = robot_speed_max
        self.prior = prior
        self.diagnostics: Optional[PriorSearchDiagnostics] = None

    def calibrate(self, inputs: CalibrationInputs) -> CalibrationResult:
        self.check_inputs(inputs)

        if self.prior is not None:
            return inter_prism_calibrate(inputs.synced, inputs.delta, self.prior, **self.solver.model_dump())

        prior, diagnostics = search_prior(
            inputs.synced, inputs.delta, self.robot_speed_max, self.prior_search, self.solver
        )
        self.diagnostics = diagnostics
        result = inter_prism_calibrate(inputs.synced, inputs.delta, prior, **self.solver.model_dump())
        result.validation = diagnostics.validation
        result.metadata.update({
            "sweep_entries": len(diagnostics.entries),
            "effective_entries": diagnostics.effective_entries,
            "similar_convergence_count": diagnostics.similar_convergence_count,
            "heading_coverage_deg": diagnostics.heading_coverage_deg,
            "mirror_cost": diagnostics.mirror_cost,
            "vertical_branch_switched": diagnostics.vertical_branch_switched,
            "start_tau_v": diagnostics.start_tau_v,
            "start_shifted": diagnostics.start_shifted,
            "best_tau_v": diagnostics.best.tau_v,
            "notes": list(diagnostics.notes),
        })
        logger.info(
            "Inter-prism calibration %s after %d iterations (final cost %.3e m^2)",
            result.validation.value, result.iterations, result.final_cost,
        )
        return result

    def get_calibrator_info(self) -> Dict:
        return {
            "method": CalibrationMethod.INTER_PRISM.value,
            "prior_search": self.prior_search.model_dump(),
            "solver": self.solver.model_dump(),
            "robot_speed_max": self.robot_speed_max,
        }


def get_calibrator(method: CalibrationMethod | str, config: Optional[RunConfig] = None) -> BaseCalibrator:
    """
    Create a calibrator for a method.

    Args:
        method: Method tag (two_point, static_gcp, dynamic_gcp, inter_prism)
        config: Run configuration supplying method settings (defaults when None)

    Returns:
        Calibrator instance
    """
    config = config or RunConfig()
    method = CalibrationMethod(method)

    if method == CalibrationMethod.TWO_POINT:
        return TwoPointCalibrator()
    if method == CalibrationMethod.STATIC_GCP:
        return StaticGcpCalibrator(yaw_only=config.static_yaw_only)
    if method == CalibrationMethod.DYNAMIC_GCP:
        return DynamicGcpCalibrator(yaw_only=config.static_yaw_only)
    return InterPrismCalibrator(
        prior_search=config.prior_search,
        solver=config.solver,
        robot_speed_max=config.prior_search.robot_speed_max,
    )
