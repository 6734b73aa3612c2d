"""
Evaluation metrics: GCP metric and inter-prism metric.

Both are reported as a MetricReport (median and IQR over non-negative distances).
Quartiles use linear interpolation between order statistics (numpy's default
"linear" method, the inclusive rule), so the median of an even count is the mean
of the two middle values.
"""

import logging
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from .exceptions import InsufficientDataError
from .schemas import (
    GcpSet,
    InterPrismDistances,
    MetricKind,
    MetricReport,
    RigidTransform,
    SyncedTrajectories,
)

logger = logging.getLogger(__name__)


def apparent_distances(
    q1: np.ndarray, q2: np.ndarray, q3: np.ndarray, T_12: RigidTransform, T_13: RigidTransform
) -> np.ndarray:
    """
    Inter-prism distances seen through candidate transforms.

    Args:
        q1, q2, q3: (n, 3) prism positions in their station frames, same grid
        T_12: Candidate rts2 -> rts1
        T_13: Candidate rts3 -> rts1

    Returns:
        (n, 3) columns |q1 - T_12 q2|, |q1 - T_13 q3|, |T_12 q2 - T_13 q3|
    """
    u = T_12.apply(q2)
    w = T_13.apply(q3)
    return np.column_stack([
        np.linalg.norm(q1 - u, axis=1),
        np.linalg.norm(q1 - w, axis=1),
        np.linalg.norm(u - w, axis=1),
    ])


def inter_prism_residuals(
    synced: SyncedTrajectories,
    T_12: RigidTransform,
    T_13: RigidTransform,
    delta: InterPrismDistances,
) -> np.ndarray:
    """Signed residuals, (n, 3), apparent minus premeasured distances."""
    distances = apparent_distances(
        synced.positions(1), synced.positions(2), synced.positions(3), T_12, T_13
    )
    return distances - delta.as_array()


def inter_prism_metric(
    synced: SyncedTrajectories,
    T_12: RigidTransform,
    T_13: RigidTransform,
    delta: InterPrismDistances,
) -> MetricReport:
    """
    Distribution of |apparent - premeasured| over all 3n inter-prism distances.

    Args:
        synced: Synchronized trajectories of three distinct prisms
        T_12: rts2 -> rts1
        T_13: rts3 -> rts1
        delta: Premeasured distances

    Returns:
        MetricReport over 3n absolute residuals (per sample: alpha, beta, gamma)
    """
    residuals = inter_prism_residuals(synced, T_12, T_13, delta)
    return MetricReport.from_samples(MetricKind.INTER_PRISM, np.abs(residuals).reshape(-1))


def gcp_metric(world_points: Mapping[str, Sequence[Optional[np.ndarray]]]) -> MetricReport:
    """
    Pairwise distances among the three observations of every GCP.

    Args:
        world_points: GCP label -> its three observations, already in one common frame;
            a missing observation is None

    Returns:
        MetricReport over 3 distances per complete GCP

    Raises:
        InsufficientDataError: If no GCP is observed by all three stations
    """
    samples = []
    for label in sorted(world_points):
        triplet = list(world_points[label])
        if len(triplet) != 3 or any(p is None for p in triplet):
            logger.warning("GCP %s is not observed by all three stations; skipped", label)
            continue
        a, b, c = (np.asarray(p, dtype=float) for p in triplet)
        samples += [np.linalg.norm(a - b), np.linalg.norm(a - c), np.linalg.norm(b - c)]

    if not samples:
        raise InsufficientDataError("No GCP is observed by all three stations")
    return MetricReport.from_samples(MetricKind.GCP, samples)


def gcp_metric_from_sets(
    station_gcps: Sequence[GcpSet], T_12: RigidTransform, T_13: RigidTransform
) -> MetricReport:
    """
    GCP metric of per-station observations mapped into the frame of station 1.

    Args:
        station_gcps: GCP observations of stations 1, 2, 3
        T_12: rts2 -> rts1
        T_13: rts3 -> rts1
    """
    transforms = (None, T_12, T_13)
    labels = []
    for gcps in station_gcps:
        labels += [label for label in gcps.labels if label not in labels]

    world_points: Dict[str, list] = {}
    for label in labels:
        triplet = []
        for gcps, transform in zip(station_gcps, transforms):
            if label not in gcps.labels:
                triplet.append(None)
                continue
            position = gcps.get(label)
            triplet.append(position if transform is None else transform.apply(position))
        world_points[label] = triplet
    return gcp_metric(world_points)
