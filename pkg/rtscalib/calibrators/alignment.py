"""Closed-form point-to-point alignment (full rigid and yaw-only)."""

import math
from typing import Sequence, Union

import numpy as np

from ..exceptions import DegenerateGeometryError, InsufficientDataError
from ..schemas import CartesianPoint, RigidTransform
from ..se3 import yaw_rotation

# Relative size of the second singular value below which points count as collinear.
COLLINEAR_RATIO = 1e-10

# Horizontal spread (meters) below which yaw is unobservable.
COINCIDENT_SPREAD = 1e-9

Points = Union[np.ndarray, Sequence[CartesianPoint]]


def as_array(points: Points) -> np.ndarray:
    if len(points) and isinstance(points[0], CartesianPoint):
        return np.array([p.position for p in points], dtype=float)
    return np.asarray(points, dtype=float).reshape(-1, 3)


def _frame_of(points: Points, default: str) -> str:
    if len(points) and isinstance(points[0], CartesianPoint):
        return points[0].frame_id
    return default


def point_to_point_align(
    reference: Points,
    measured: Points,
    yaw_only: bool = True,
    from_frame: str = "source",
    to_frame: str = "target",
) -> RigidTransform:
    """
    Least-squares rigid transform T minimizing sum ||reference_k - T measured_k||^2.

    The full case is the SVD solution on the cross-covariance of the centered sets,
    with a sign correction that keeps the rotation proper. The yaw-only case solves
    the 2-D rotation angle in closed form on the horizontal components and takes the
    vertical offset from the centroid difference.

    Args:
        reference: (n, 3) target points q_k
        measured: (n, 3) source points p_k, matched to reference by index
        yaw_only: Restrict the rotation to the vertical axis (4 DOF)
        from_frame: Frame tag of measured (taken from CartesianPoints when given)
        to_frame: Frame tag of reference (taken from CartesianPoints when given)

    Returns:
        Transform mapping measured into reference

    Raises:
        InsufficientDataError: Fewer than 3 pairs (2 when yaw_only) or unequal lengths
        DegenerateGeometryError: Collinear points (full) or coincident horizontal points (yaw)
    """
    q = as_array(reference)
    p = as_array(measured)
    from_frame = _frame_of(measured, from_frame)
    to_frame = _frame_of(reference, to_frame)

    if len(p) != len(q):
        raise InsufficientDataError(f"Point sets differ in length: {len(p)} vs {len(q)}")
    required = 2 if yaw_only else 3
    if len(p) < required:
        raise InsufficientDataError(f"Alignment needs at least {required} point pairs, got {len(p)}")

    p_mean = p.mean(axis=0)
    q_mean = q.mean(axis=0)
    p_centered = p - p_mean
    q_centered = q - q_mean

    if yaw_only:
        spread = math.sqrt(float(np.sum(p_centered[:, :2] ** 2)))
        if spread < COINCIDENT_SPREAD:
            raise DegenerateGeometryError("Points coincide horizontally; yaw is unobservable")
        sin_sum = np.sum(p_centered[:, 0] * q_centered[:, 1] - p_centered[:, 1] * q_centered[:, 0])
        cos_sum = np.sum(p_centered[:, 0] * q_centered[:, 0] + p_centered[:, 1] * q_centered[:, 1])
        if sin_sum == 0.0 and cos_sum == 0.0:
            raise DegenerateGeometryError("Reference points coincide horizontally; yaw is unobservable")
        rotation = yaw_rotation(math.atan2(sin_sum, cos_sum))
    else:
        singular = np.linalg.svd(p_centered, compute_uv=False)
        if singular[0] == 0.0 or singular[1] <= COLLINEAR_RATIO * singular[0]:
            raise DegenerateGeometryError("Points are collinear; rotation is unobservable")
        covariance = p_centered.T @ q_centered
        u, _, vt = np.linalg.svd(covariance)
        v = vt.T
        d = np.sign(np.linalg.det(v @ u.T))
        rotation = v @ np.diag([1.0, 1.0, d]) @ u.T

    translation = q_mean - rotation @ p_mean
    return RigidTransform(rotation, translation, from_frame, to_frame)


def alignment_residuals(reference: Points, measured: Points, transform: RigidTransform) -> np.ndarray:
    """Distances ||reference_k - T measured_k|| after alignment."""
    return np.linalg.norm(as_array(reference) - transform.apply(as_array(measured)), axis=1)
