"""
Coordinate conventions and the yaw-constrained SE(3) algebra shared by every solver.

Conventions (used consistently by every module):
    - z axis points up; every station is assumed perfectly leveled.
    - Azimuth is measured clockwise from +y ("north") in the horizontal plane.
    - Elevation is measured upward from the horizontal plane.
    - Angles are radians inside the package; degrees only appear in files and on the CLI.

A RigidTransform maps points expressed in ``from_frame`` into ``to_frame``:
``p_to = R @ p_from + t``. The se(3) parameterization only carries a yaw angle,
``xi = (rho, phi)`` with the rotation vector fixed to ``[0, 0, phi]``.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .exceptions import FrameMismatchError, UnleveledTransformError


# =============================================================================
# Numerical constants
# =============================================================================

ORTHONORMAL_TOLERANCE = 1e-9
LEVEL_TOLERANCE = 1e-9

# Below this angle V(phi) is replaced by its first-order expansion.
ZERO_ANGLE = 1e-12

# Below this angle dV/dphi uses its Taylor series (closed form cancels badly).
SERIES_ANGLE = 1e-4

WORLD_FRAME = "world"


def station_frame(station_id: int) -> str:
    """Frame tag of a station (e.g. ``rts2``)."""
    return f"rts{station_id}"


def wrap_angle(angle: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    return angle - 2.0 * math.pi * math.ceil((angle - math.pi) / (2.0 * math.pi))


def normalize_azimuth(azimuth: float) -> float:
    """Normalize an azimuth to [0, 2*pi)."""
    normalized = azimuth % (2.0 * math.pi)
    if normalized >= 2.0 * math.pi:
        normalized = 0.0
    return normalized


def _frozen_array(values, shape: Tuple[int, ...], name: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} must be finite, got {array}")
    array.setflags(write=False)
    return array


# =============================================================================
# Measurement types
# =============================================================================

@dataclass(frozen=True)
class PolarMeasurement:
    """
    One timestamped reading from one station tracking one prism.

    Attributes:
        time: Seconds on the common clock
        azimuth: Radians, clockwise from +y, normalized to [0, 2*pi)
        elevation: Radians above the horizontal plane, in (-pi/2, pi/2)
        range: Slope distance in meters
        station_id: Observing station (1, 2 or 3)
        prism_id: Tracked prism (1, 2 or 3)
    """
    time: float
    azimuth: float
    elevation: float
    range: float
    station_id: int = 1
    prism_id: int = 1

    def __post_init__(self):
        for name in ("time", "azimuth", "elevation", "range"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")
        if self.range <= 0.0:
            raise ValueError(f"Range must be positive, got {self.range}")
        if not -math.pi / 2.0 < self.elevation < math.pi / 2.0:
            raise ValueError(f"Elevation must be in (-pi/2, pi/2), got {self.elevation}")
        if self.station_id not in (1, 2, 3):
            raise ValueError(f"station_id must be 1, 2 or 3, got {self.station_id}")
        if self.prism_id not in (1, 2, 3):
            raise ValueError(f"prism_id must be 1, 2 or 3, got {self.prism_id}")
        object.__setattr__(self, "azimuth", normalize_azimuth(float(self.azimuth)))


@dataclass(frozen=True, eq=False)
class CartesianPoint:
    """
    A position in a station or world frame.

    Attributes:
        time: Seconds (meaningless for static GCPs, left at 0.0)
        position: 3-vector in meters
        frame_id: Frame tag (``rts1``, ``rts2``, ``rts3`` or ``world``)
        station_id: Observing station, if any
        prism_id: Prism the point belongs to, if any
        label: GCP label, if any
    """
    time: float
    position: np.ndarray
    frame_id: str = WORLD_FRAME
    station_id: Optional[int] = None
    prism_id: Optional[int] = None
    label: Optional[str] = None

    def __post_init__(self):
        if not math.isfinite(self.time):
            raise ValueError(f"time must be finite, got {self.time}")
        object.__setattr__(self, "position", _frozen_array(self.position, (3,), "position"))


def polar_to_cartesian(m: PolarMeasurement) -> CartesianPoint:
    """
    Convert a polar reading to a Cartesian point in the observing station's frame.

    Args:
        m: Polar measurement

    Returns:
        Point at (r cos(el) sin(az), r cos(el) cos(az), r sin(el))
    """
    horizontal = m.range * math.cos(m.elevation)
    position = (
        horizontal * math.sin(m.azimuth),
        horizontal * math.cos(m.azimuth),
        m.range * math.sin(m.elevation),
    )
    return CartesianPoint(
        time=m.time,
        position=position,
        frame_id=station_frame(m.station_id),
        station_id=m.station_id,
        prism_id=m.prism_id,
    )


def cartesian_to_polar(position: np.ndarray) -> Tuple[float, float, float]:
    """Inverse of polar_to_cartesian: returns (azimuth, elevation, range)."""
    x, y, z = (float(v) for v in position)
    distance = math.sqrt(x * x + y * y + z * z)
    if distance <= 0.0:
        raise ValueError("Cannot express the station origin in polar coordinates")
    azimuth = normalize_azimuth(math.atan2(x, y))
    elevation = math.asin(max(-1.0, min(1.0, z / distance)))
    return azimuth, elevation, distance


# =============================================================================
# Yaw-only Lie algebra helpers
# =============================================================================

def yaw_rotation(phi: float) -> np.ndarray:
    """Rotation about +z by phi (counter-clockwise seen from above)."""
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def yaw_rotation_derivative(phi: float) -> np.ndarray:
    """d R_z(phi) / d phi."""
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[-s, -c, 0.0], [c, -s, 0.0], [0.0, 0.0, 0.0]])


def _jacobian_coefficients(phi: float) -> Tuple[float, float]:
    # V(phi) horizontal block is [[a, -b], [b, a]]
    if abs(phi) < ZERO_ANGLE:
        return 1.0, 0.5 * phi
    a = math.sin(phi) / phi
    b = 2.0 * math.sin(0.5 * phi) ** 2 / phi
    return a, b


def _jacobian_coefficient_derivatives(phi: float) -> Tuple[float, float]:
    if abs(phi) < SERIES_ANGLE:
        phi2 = phi * phi
        return -phi / 3.0 + phi * phi2 / 30.0, 0.5 - phi2 / 8.0 + phi2 * phi2 / 144.0
    c, s = math.cos(phi), math.sin(phi)
    phi2 = phi * phi
    return (phi * c - s) / phi2, (phi * s - (1.0 - c)) / phi2


def left_jacobian_yaw(phi: float) -> np.ndarray:
    """SE(3) left Jacobian V restricted to a rotation vector [0, 0, phi]."""
    a, b = _jacobian_coefficients(phi)
    return np.array([[a, -b, 0.0], [b, a, 0.0], [0.0, 0.0, 1.0]])


def left_jacobian_yaw_derivative(phi: float) -> np.ndarray:
    """d V(phi) / d phi."""
    da, db = _jacobian_coefficient_derivatives(phi)
    return np.array([[da, -db, 0.0], [db, da, 0.0], [0.0, 0.0, 0.0]])


# =============================================================================
# Group elements
# =============================================================================

@dataclass(frozen=True, eq=False)
class RigidTransform:
    """
    Proper rigid transformation mapping ``from_frame`` points into ``to_frame``.

    Attributes:
        rotation: 3x3 orthonormal matrix with determinant +1
        translation: 3-vector in meters
        from_frame: Source frame tag
        to_frame: Target frame tag
    """
    rotation: np.ndarray
    translation: np.ndarray
    from_frame: str = "source"
    to_frame: str = "target"

    def __post_init__(self):
        rotation = _frozen_array(self.rotation, (3, 3), "rotation")
        gram_error = np.linalg.norm(rotation.T @ rotation - np.eye(3))
        if gram_error >= ORTHONORMAL_TOLERANCE:
            raise ValueError(f"Rotation is not orthonormal (|R^T R - I| = {gram_error:.3e})")
        if np.linalg.det(rotation) <= 0.0:
            raise ValueError("Rotation must have determinant +1")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", _frozen_array(self.translation, (3,), "translation"))

    @classmethod
    def identity(cls, from_frame: str = "source", to_frame: str = "target") -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3), from_frame, to_frame)

    @classmethod
    def from_matrix(
        cls, matrix: np.ndarray, from_frame: str = "source", to_frame: str = "target"
    ) -> "RigidTransform":
        """Build from a 4x4 homogeneous matrix."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (4, 4):
            raise ValueError(f"Expected a 4x4 matrix, got shape {matrix.shape}")
        if not np.allclose(matrix[3], [0.0, 0.0, 0.0, 1.0], rtol=0.0, atol=1e-12):
            raise ValueError(f"Last row must be [0, 0, 0, 1], got {matrix[3]}")
        return cls(matrix[:3, :3], matrix[:3, 3], from_frame, to_frame)

    def as_matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def with_frames(self, from_frame: str, to_frame: str) -> "RigidTransform":
        return RigidTransform(self.rotation, self.translation, from_frame, to_frame)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Return ``self ∘ other`` (apply ``other`` first)."""
        if self.from_frame != other.to_frame:
            raise FrameMismatchError(
                f"Cannot compose {self.to_frame}<-{self.from_frame} with "
                f"{other.to_frame}<-{other.from_frame}"
            )
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
            other.from_frame,
            self.to_frame,
        )

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def inverse(self) -> "RigidTransform":
        rotation_t = self.rotation.T
        return RigidTransform(
            rotation_t, -rotation_t @ self.translation, self.to_frame, self.from_frame
        )

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform a (3,) point or an (n, 3) array of points."""
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    @property
    def yaw(self) -> float:
        return math.atan2(self.rotation[1, 0], self.rotation[0, 0])

    def is_yaw_only(self, tolerance: float = LEVEL_TOLERANCE) -> bool:
        """True when the rotation keeps the z axis fixed within tolerance."""
        r = self.rotation
        off_axis = max(abs(r[0, 2]), abs(r[1, 2]), abs(r[2, 0]), abs(r[2, 1]))
        return off_axis < tolerance and abs(r[2, 2] - 1.0) < tolerance


@dataclass(frozen=True, eq=False)
class Twist:
    """
    Yaw-constrained se(3) parameters.

    An unwrapped phi is wrapped to (-pi, pi] and rho is re-expressed so that the
    exponential map is unchanged (V(phi) is not 2*pi-periodic).

    Attributes:
        rho: Translation parameters in meters
        phi: Yaw angle in radians, wrapped to (-pi, pi]
    """
    rho: np.ndarray = field(default_factory=lambda: np.zeros(3))
    phi: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValueError(f"phi must be finite, got {self.phi}")
        rho = _frozen_array(self.rho, (3,), "rho")
        raw = float(self.phi)
        wrapped = wrap_angle(raw)
        if wrapped != raw:
            translation = left_jacobian_yaw(raw) @ rho
            rho = _frozen_array(np.linalg.solve(left_jacobian_yaw(wrapped), translation), (3,), "rho")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "phi", wrapped)

    def as_vector(self) -> np.ndarray:
        return np.array([self.rho[0], self.rho[1], self.rho[2], self.phi])

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "Twist":
        vector = np.asarray(vector, dtype=float)
        return cls(rho=vector[:3], phi=float(vector[3]))


# =============================================================================
# Maps
# =============================================================================

def yaw_transform(
    rho: np.ndarray, phi: float, from_frame: str = "source", to_frame: str = "target"
) -> RigidTransform:
    """Exponential map for unwrapped parameters (used inside solvers)."""
    return RigidTransform(
        yaw_rotation(phi), left_jacobian_yaw(phi) @ np.asarray(rho, dtype=float), from_frame, to_frame
    )


def exp_map(xi: Twist, from_frame: str = "source", to_frame: str = "target") -> RigidTransform:
    """
    Exponential map of a yaw-only twist.

    Args:
        xi: Twist (rho, phi)
        from_frame: Source frame tag of the resulting transform
        to_frame: Target frame tag of the resulting transform

    Returns:
        Transform with rotation R_z(phi) and translation V(phi) @ rho
    """
    return yaw_transform(xi.rho, xi.phi, from_frame, to_frame)


def log_map(transform: RigidTransform) -> Twist:
    """
    Logarithm of a yaw-only transform.

    Raises:
        UnleveledTransformError: If the rotation moves the z axis
    """
    if not transform.is_yaw_only():
        raise UnleveledTransformError(
            f"Transform {transform.to_frame}<-{transform.from_frame} is not yaw-only "
            "(stations must be leveled)"
        )
    phi = transform.yaw
    a, b = _jacobian_coefficients(phi)
    tx, ty, tz = transform.translation
    det = a * a + b * b
    rho = np.array([(a * tx + b * ty) / det, (-b * tx + a * ty) / det, tz])
    return Twist(rho=rho, phi=phi)


def transform_delta(a: RigidTransform, b: RigidTransform) -> Tuple[float, float]:
    """
    Translation and rotation differences between two transforms of the same frame pair.

    Returns:
        (translation difference in meters, rotation angle of R_a^T R_b in radians)
    """
    if a.from_frame != b.from_frame or a.to_frame != b.to_frame:
        raise FrameMismatchError(
            f"Cannot compare {a.to_frame}<-{a.from_frame} with {b.to_frame}<-{b.from_frame}"
        )
    trans_diff = float(np.linalg.norm(a.translation - b.translation))
    relative = a.rotation.T @ b.rotation
    skew_part = np.array([
        relative[2, 1] - relative[1, 2],
        relative[0, 2] - relative[2, 0],
        relative[1, 0] - relative[0, 1],
    ])
    sin_angle = 0.5 * np.linalg.norm(skew_part)
    cos_angle = 0.5 * (np.trace(relative) - 1.0)
    return trans_diff, math.atan2(sin_angle, cos_angle)
