"""Dynamic GCP calibration (method C): one shared prism tracked by every station."""

import numpy as np

from ..exceptions import ConfigError, InsufficientDataError
from ..schemas import CalibrationMethod, CalibrationResult, SyncedTrajectories, Validation
from ..se3 import station_frame
from .alignment import alignment_residuals, point_to_point_align

MIN_SAMPLES = 10


def dynamic_gcp_calibrate(synced: SyncedTrajectories, yaw_only: bool = True) -> CalibrationResult:
    """
    Align every synchronized sample of the shared prism onto station 1.

    Args:
        synced: Synchronized trajectories of one physical prism
        yaw_only: Constrain to 4 DOF

    Returns:
        CalibrationResult with 2n correspondence distances as residuals

    Raises:
        ConfigError: If the stations track different prisms
        InsufficientDataError: Fewer than 10 samples
    """
    if len(set(synced.prism_ids)) != 1:
        raise ConfigError(
            f"Dynamic GCP calibration needs one shared prism, stations track {synced.prism_ids}"
        )
    if len(synced) < MIN_SAMPLES:
        raise InsufficientDataError(
            f"Dynamic GCP calibration needs {MIN_SAMPLES} samples, got {len(synced)}"
        )

    reference = synced.positions(1)
    transforms, residuals = {}, []
    for station_id in (2, 3):
        measured = synced.positions(station_id)
        transform = point_to_point_align(
            reference, measured, yaw_only=yaw_only,
            from_frame=station_frame(station_id), to_frame=station_frame(1),
        )
        transforms[station_id] = transform
        residuals.append(alignment_residuals(reference, measured, transform))
    residuals = np.concatenate(residuals)

    return CalibrationResult(
        method=CalibrationMethod.DYNAMIC_GCP,
        T_12=transforms[2],
        T_13=transforms[3],
        final_cost=float(np.mean(residuals ** 2)),
        residuals=residuals,
        validation=Validation.VALIDATED,
        leveled=yaw_only,
        metadata={"samples": len(synced), "prism_id": synced.prism_ids[0]},
    )
