"""Base class for trajectory interpolators."""

from abc import ABC, abstractmethod
from typing import Dict, Sequence, Union

import numpy as np

from ..exceptions import InsufficientDataError, PipelineError
from ..schemas import CartesianPoint, Trajectory

# Query times may overshoot the support span by rounding only.
SPAN_TOLERANCE = 1e-9

Support = Union[Trajectory, Sequence[CartesianPoint]]


def as_trajectory(points: Support) -> Trajectory:
    """Accept a Trajectory or a time-ordered list of CartesianPoints."""
    if isinstance(points, Trajectory):
        return points
    points = list(points)
    if not points:
        raise InsufficientDataError("Cannot interpolate without support points")
    station_id = points[0].station_id or 1
    prism_id = points[0].prism_id or 1
    return Trajectory.from_points(points, station_id=station_id, prism_id=prism_id)


def check_query_times(support: Trajectory, query_times) -> np.ndarray:
    """
    Validate query times against the support span.

    Returns:
        Query times clipped onto the span (only rounding-level overshoot is tolerated)
    """
    query = np.asarray(query_times, dtype=float).reshape(-1)
    if len(support) == 0:
        raise InsufficientDataError("Cannot interpolate without support points")
    if len(query) == 0:
        return query
    start, end = support.times[0], support.times[-1]
    if query.min() < start - SPAN_TOLERANCE or query.max() > end + SPAN_TOLERANCE:
        raise PipelineError(
            f"Refusing to extrapolate: queries span [{query.min()}, {query.max()}] "
            f"but support covers [{start}, {end}]"
        )
    return np.clip(query, start, end)


class BaseInterpolator(ABC):
    """Abstract base class for per-axis trajectory interpolation."""

    def __init__(self, **kwargs):
        """
        Initialize the interpolator.

        Args:
            **kwargs: Interpolator-specific arguments
        """
        self.config = kwargs

    @abstractmethod
    def interpolate(self, support: Support, query_times: np.ndarray) -> Trajectory:
        """
        Interpolate support positions at the query times.

        Args:
            support: Time-ordered points of one station and one prism
            query_times: Times inside the support span

        Returns:
            Trajectory at the query times, same frame and ids as the support
        """
        pass

    @abstractmethod
    def get_interpolator_info(self) -> Dict:
        """
        Get information about the interpolator.

        Returns:
            Dictionary with interpolator metadata
        """
        pass
