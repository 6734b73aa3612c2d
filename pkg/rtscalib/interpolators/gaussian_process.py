"""
Gaussian-process interpolation with a squared-exponential kernel.

Each axis is regressed independently on one support segment. The prior mean is a
least-squares line in time, so constant and affine motion come out exact and the
infinite length-scale limit reduces to linear interpolation. Hyperparameters are
fixed; nothing is fitted by marginal likelihood.
"""

import logging
from typing import Dict, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..exceptions import IllConditionedError, InsufficientDataError
from ..schemas import GpKernelParams, InterpolationKind, Trajectory
from .base import BaseInterpolator, Support, as_trajectory, check_query_times

logger = logging.getLogger(__name__)

MAX_CONDITION_NUMBER = 1e12


def squared_exponential(t_a: np.ndarray, t_b: np.ndarray, params: GpKernelParams) -> np.ndarray:
    """k(t, t') = sigma^2 exp(-(t - t')^2 / (2 l^2)) for every pair."""
    diff = t_a[:, None] - t_b[None, :]
    return params.signal_sigma ** 2 * np.exp(-0.5 * (diff / params.length_scale) ** 2)


def interpolate_gp(
    points: Support,
    query_times: np.ndarray,
    params: Optional[GpKernelParams] = None,
    min_support: int = 3,
) -> Trajectory:
    """
    Posterior mean of a per-axis GP at the query times.

    Args:
        points: Support points of one segment
        query_times: Times inside the support span
        params: Kernel hyperparameters (defaults: l = 1 s, sigma = 1 m, sigma_n = 2 mm)
        min_support: Fewest support points accepted

    Returns:
        Trajectory of posterior means

    Raises:
        InsufficientDataError: Fewer than min_support points
        IllConditionedError: Kernel matrix condition number above 1e12
    """
    params = params or GpKernelParams()
    support = as_trajectory(points)
    query = check_query_times(support, query_times)

    n = len(support)
    if n < min_support:
        raise InsufficientDataError(f"GP interpolation needs {min_support} support points, got {n}")
    if len(query) == 0:
        return Trajectory(query, np.empty((0, 3)), support.frame_id, support.station_id, support.prism_id)

    origin = support.times.mean()
    t = support.times - origin
    t_query = query - origin

    design = np.column_stack([np.ones(n), t])
    trend, *_ = np.linalg.lstsq(design, support.positions, rcond=None)
    residual = support.positions - design @ trend

    gram = squared_exponential(t, t, params) + params.noise_sigma ** 2 * np.eye(n)
    condition = np.linalg.cond(gram)
    if not condition <= MAX_CONDITION_NUMBER:
        raise IllConditionedError(
            f"GP kernel matrix condition number {condition:.3e} exceeds {MAX_CONDITION_NUMBER:.0e}; "
            "increase the noise sigma or shorten the length scale"
        )

    weights = cho_solve(cho_factor(gram, lower=True), residual)
    cross = squared_exponential(t_query, t, params)
    mean = np.column_stack([np.ones(len(t_query)), t_query]) @ trend + cross @ weights

    logger.debug("GP on %d support points, %d queries, cond %.2e", n, len(query), condition)
    return Trajectory(query, mean, support.frame_id, support.station_id, support.prism_id)


class GaussianProcessInterpolator(BaseInterpolator):
    """Squared-exponential GP posterior mean."""

    def __init__(self, params: Optional[GpKernelParams] = None, min_support: int = 3, **kwargs):
        super().__init__(**kwargs)
        self.params = params or GpKernelParams()
        self.min_support = min_support

    def interpolate(self, support: Support, query_times: np.ndarray) -> Trajectory:
        return interpolate_gp(support, query_times, self.params, self.min_support)

    def get_interpolator_info(self) -> Dict:
        return {
            "kind": InterpolationKind.GAUSSIAN_PROCESS.value,
            "length_scale": self.params.length_scale,
            "signal_sigma": self.params.signal_sigma,
            "noise_sigma": self.params.noise_sigma,
            "min_support": self.min_support,
        }
