"""Trajectory interpolators."""

from typing import Optional

from ..schemas import GpKernelParams, InterpolationKind
from .base import BaseInterpolator
from .gaussian_process import GaussianProcessInterpolator, interpolate_gp
from .linear import LinearInterpolator, interpolate_linear


def get_interpolator(kind: InterpolationKind | str, params: Optional[GpKernelParams] = None) -> BaseInterpolator:
    """
    Create an interpolator by kind.

    Args:
        kind: "linear" or "gaussian_process"
        params: Kernel hyperparameters (GP only)

    Returns:
        Interpolator instance
    """
    kind = InterpolationKind(kind)
    if kind == InterpolationKind.LINEAR:
        return LinearInterpolator()
    return GaussianProcessInterpolator(params=params)


__all__ = [
    "BaseInterpolator",
    "LinearInterpolator",
    "GaussianProcessInterpolator",
    "interpolate_linear",
    "interpolate_gp",
    "get_interpolator",
]
