"""Static calibration on surveyed ground control points (methods A and B)."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import DegenerateGeometryError, InsufficientDataError
from ..schemas import (
    CalibrationMethod,
    CalibrationResult,
    CartesianPoint,
    GcpSet,
    RigidTransform,
    Validation,
)
from ..se3 import station_frame
from .alignment import alignment_residuals, as_array, point_to_point_align

logger = logging.getLogger(__name__)

# Two-point resection cannot resolve yaw from pillars closer than this horizontally.
MIN_RESECTION_SEPARATION = 0.01  # meters


def _horizontal_separation(points: np.ndarray) -> float:
    return float(np.linalg.norm(points[0, :2] - points[1, :2]))


def two_point_resection(
    known: GcpSet, measured: GcpSet | Sequence[CartesianPoint]
) -> RigidTransform:
    """
    Yaw-only pose of a leveled station from two points of known position.

    Args:
        known: Two reference points (more are accepted; the first two matched are used)
        measured: The same points seen by the station, as a GcpSet (matched by label)
            or as two CartesianPoints (matched by order)

    Returns:
        Transform measured frame -> known frame, exact on both points for a leveled station

    Raises:
        DegenerateGeometryError: If the points are less than 1 cm apart horizontally
    """
    if isinstance(measured, GcpSet):
        labels = known.common_labels(measured)
        if len(labels) < 2:
            raise InsufficientDataError(
                f"Two-point resection needs 2 shared labels, got {len(labels)}"
            )
        labels = labels[:2]
        reference = known.positions(labels)
        observed = measured.positions(labels)
        from_frame = measured.frame_id
    else:
        if len(measured) != 2 or len(known) < 2:
            raise InsufficientDataError("Two-point resection needs exactly two points")
        reference = known.positions(known.labels[:2])
        observed = as_array(measured)
        from_frame = measured[0].frame_id

    for name, points in (("known", reference), ("measured", observed)):
        if _horizontal_separation(points) < MIN_RESECTION_SEPARATION:
            raise DegenerateGeometryError(
                f"The two {name} points are less than {MIN_RESECTION_SEPARATION * 100:.0f} cm apart horizontally"
            )

    return point_to_point_align(
        reference, observed, yaw_only=True, from_frame=from_frame, to_frame=known.frame_id
    )


def _chain(world_poses: List[RigidTransform], station_id: int) -> RigidTransform:
    """T_1i = (W_T_1)^-1 o W_T_i."""
    return world_poses[0].inverse().compose(world_poses[station_id - 1])


def _relabel(transform: RigidTransform, station_id: int) -> RigidTransform:
    return transform.with_frames(station_frame(station_id), station_frame(1))


def _check_three(station_gcps: Sequence[GcpSet]) -> None:
    if len(station_gcps) != 3:
        raise InsufficientDataError(f"Expected GCP sets of 3 stations, got {len(station_gcps)}")


def two_point_calibrate(
    station_gcps: Sequence[GcpSet],
    world: Optional[GcpSet] = None,
    labels: Optional[Sequence[str]] = None,
) -> CalibrationResult:
    """
    Method A: resect every station on the same two points.

    Args:
        station_gcps: Observations of stations 1, 2, 3
        world: Surveyed coordinates; without it station 1's observations are the reference
        labels: The two labels to use (default: first two shared by every set)

    Returns:
        CalibrationResult; residuals are the correspondence distances over every shared label
    """
    _check_three(station_gcps)
    sets = list(station_gcps) + ([world] if world is not None else [])
    shared = sets[0].common_labels(*sets[1:])
    chosen = list(labels) if labels is not None else shared[:2]
    if len(chosen) != 2 or any(label not in shared for label in chosen):
        raise InsufficientDataError(
            f"Two-point resection needs 2 labels seen by every station, shared: {shared}"
        )

    def pick(gcps: GcpSet) -> GcpSet:
        return GcpSet(gcps.frame_id, [p for p in gcps.points if p.label in chosen])

    if world is not None:
        poses = [two_point_resection(pick(world), pick(g)) for g in station_gcps]
        T_12 = _relabel(_chain(poses, 2), 2)
        T_13 = _relabel(_chain(poses, 3), 3)
    else:
        T_12 = _relabel(two_point_resection(pick(station_gcps[0]), pick(station_gcps[1])), 2)
        T_13 = _relabel(two_point_resection(pick(station_gcps[0]), pick(station_gcps[2])), 3)

    residuals = _pair_residuals(station_gcps, T_12, T_13, shared)
    return CalibrationResult(
        method=CalibrationMethod.TWO_POINT,
        T_12=T_12,
        T_13=T_13,
        final_cost=float(np.mean(residuals ** 2)),
        residuals=residuals,
        validation=Validation.VALIDATED,
        metadata={"labels": chosen, "check_points": len(shared) - 2, "world": world is not None},
    )


def _pair_residuals(
    station_gcps: Sequence[GcpSet], T_12: RigidTransform, T_13: RigidTransform, labels: Sequence[str]
) -> np.ndarray:
    reference = station_gcps[0].positions(labels)
    return np.concatenate([
        alignment_residuals(reference, station_gcps[1].positions(labels), T_12),
        alignment_residuals(reference, station_gcps[2].positions(labels), T_13),
    ])


def static_gcp_calibrate(
    station_gcps: Sequence[GcpSet],
    world: Optional[GcpSet] = None,
    yaw_only: bool = True,
) -> CalibrationResult:
    """
    Method B: point-to-point alignment on at least three static GCPs.

    Without a world set, station 1 is the origin and T_12, T_13 align the other
    stations' observations onto station 1's. With a world set every station is
    aligned onto the surveyed coordinates and the relative transforms are chained.

    Args:
        station_gcps: Observations of stations 1, 2, 3
        world: Optional surveyed coordinates
        yaw_only: Constrain to 4 DOF (leveled stations); False solves full SE(3)

    Returns:
        CalibrationResult with the post-alignment correspondence distances as residuals

    Raises:
        InsufficientDataError: Fewer than 3 common labels for a pair
    """
    _check_three(station_gcps)

    if world is not None:
        poses, residuals = [], []
        for station_id, gcps in enumerate(station_gcps, start=1):
            labels = world.common_labels(gcps)
            if len(labels) < 3:
                raise InsufficientDataError(
                    f"Station {station_id} shares {len(labels)} GCP(s) with the world set, need 3"
                )
            reference, observed = world.positions(labels), gcps.positions(labels)
            pose = point_to_point_align(reference, observed, yaw_only=yaw_only)
            poses.append(pose)
            residuals.append(alignment_residuals(reference, observed, pose))
        T_12 = _relabel(_chain(poses, 2), 2)
        T_13 = _relabel(_chain(poses, 3), 3)
        residuals = np.concatenate(residuals)
    else:
        transforms, residuals = {}, []
        for station_id in (2, 3):
            labels = station_gcps[0].common_labels(station_gcps[station_id - 1])
            if len(labels) < 3:
                raise InsufficientDataError(
                    f"Stations 1 and {station_id} share {len(labels)} GCP(s), need 3"
                )
            reference = station_gcps[0].positions(labels)
            observed = station_gcps[station_id - 1].positions(labels)
            transform = _relabel(point_to_point_align(reference, observed, yaw_only=yaw_only), station_id)
            transforms[station_id] = transform
            residuals.append(alignment_residuals(reference, observed, transform))
        T_12, T_13 = transforms[2], transforms[3]
        residuals = np.concatenate(residuals)

    logger.debug("Static GCP alignment: %d residuals, rms %.4f m", len(residuals), np.sqrt(np.mean(residuals ** 2)))
    return CalibrationResult(
        method=CalibrationMethod.STATIC_GCP,
        T_12=T_12,
        T_13=T_13,
        final_cost=float(np.mean(residuals ** 2)),
        residuals=residuals,
        validation=Validation.VALIDATED,
        leveled=yaw_only,
        metadata={"world": world is not None, "yaw_only": yaw_only},
    )
