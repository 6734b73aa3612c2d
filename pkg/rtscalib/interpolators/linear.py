"""Piecewise-linear interpolation."""

from typing import Dict

import numpy as np

from ..schemas import InterpolationKind, Trajectory
from .base import BaseInterpolator, Support, as_trajectory, check_query_times


def interpolate_linear(points: Support, query_times: np.ndarray) -> Trajectory:
    """
    Per-axis piecewise-linear interpolation.

    Args:
        points: Support points (Trajectory or list of CartesianPoint)
        query_times: Times inside the support span

    Returns:
        Trajectory at query_times

    Raises:
        PipelineError: If a query lies outside the support span
    """
    support = as_trajectory(points)
    query = check_query_times(support, query_times)
    positions = np.column_stack(
        [np.interp(query, support.times, support.positions[:, axis]) for axis in range(3)]
    ) if len(query) else np.empty((0, 3))
    return Trajectory(query, positions, support.frame_id, support.station_id, support.prism_id)


class LinearInterpolator(BaseInterpolator):
    """Linear interpolation between consecutive support points."""

    def interpolate(self, support: Support, query_times: np.ndarray) -> Trajectory:
        return interpolate_linear(support, query_times)

    def get_interpolator_info(self) -> Dict:
        return {"kind": InterpolationKind.LINEAR.value}
