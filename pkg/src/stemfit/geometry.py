"""Frames, rigid transforms, and the wrench mapping between sensor and world.

Conventions used throughout the package:

* quaternions are scalar-first ``(w, x, y, z)``,
* a :class:`RigidTransform` carries the world-from-sensor rotation and the
  sensor origin expressed in the world frame, so ``p_world = R @ p_sensor + t``,
* angles returned to callers are degrees; internal math is radians.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateInputError, FrameMismatchError

DEGENERATE_NORM = 1e-12


class Frame(Enum):
    SENSOR = "sensor"
    WORLD = "world"


@dataclass(frozen=True)
class Vec3:
    """Immutable 3-vector with finite components (SI units per context)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"Vec3.{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, a) -> "Vec3":
        ax = np.asarray(a, dtype=float).reshape(3)
        return cls(float(ax[0]), float(ax[1]), float(ax[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def __mul__(self, scalar: float) -> "Vec3":
        return Vec3(self.x * scalar, self.y * scalar, self.z * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class UnitQuaternion:
    """Scalar-first unit quaternion; normalized on construction."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        w, x, y, z = (float(self.w), float(self.x), float(self.y), float(self.z))
        norm = math.sqrt(w * w + x * x + y * y + z * z)
        if not math.isfinite(norm) or norm < DEGENERATE_NORM:
            raise ValueError(f"quaternion norm {norm!r} too small to normalize")
        object.__setattr__(self, "w", w / norm)
        object.__setattr__(self, "x", x / norm)
        object.__setattr__(self, "y", y / norm)
        object.__setattr__(self, "z", z / norm)

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle(cls, axis, angle_rad: float) -> "UnitQuaternion":
        ax = axis.as_array() if isinstance(axis, Vec3) else np.asarray(axis, dtype=float)
        norm = float(np.linalg.norm(ax))
        if norm < DEGENERATE_NORM:
            raise DegenerateInputError("rotation axis has near-zero norm")
        ax = ax / norm
        half = 0.5 * angle_rad
        s = math.sin(half)
        return cls(math.cos(half), s * ax[0], s * ax[1], s * ax[2])

    @classmethod
    def from_rotation_matrix(cls, matrix) -> "UnitQuaternion":
        m = np.asarray(matrix, dtype=float)
        trace = m[0, 0] + m[1, 1] + m[2, 2]
        if trace > 0.0:
            s = math.sqrt(trace + 1.0) * 2.0
            w = 0.25 * s
            x = (m[2, 1] - m[1, 2]) / s
            y = (m[0, 2] - m[2, 0]) / s
            z = (m[1, 0] - m[0, 1]) / s
        elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
            s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
            w = (m[2, 1] - m[1, 2]) / s
            x = 0.25 * s
            y = (m[0, 1] + m[1, 0]) / s
            z = (m[0, 2] + m[2, 0]) / s
        elif m[1, 1] >= m[2, 2]:
            s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
            w = (m[0, 2] - m[2, 0]) / s
            x = (m[0, 1] + m[1, 0]) / s
            y = 0.25 * s
            z = (m[1, 2] + m[2, 1]) / s
        else:
            s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
            w = (m[1, 0] - m[0, 1]) / s
            x = (m[0, 2] + m[2, 0]) / s
            y = (m[1, 2] + m[2, 1]) / s
            z = 0.25 * s
        return cls(w, x, y, z)

    def conjugate(self) -> "UnitQuaternion":
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def multiply(self, other: "UnitQuaternion") -> "UnitQuaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return UnitQuaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def rotation_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
            ]
        )


@dataclass(frozen=True)
class RigidTransform:
    """World-from-sensor pose: rotation plus sensor origin in the world frame."""

    rotation: UnitQuaternion
    translation: Vec3

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(UnitQuaternion.identity(), Vec3(0.0, 0.0, 0.0))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        rot = self.rotation.multiply(other.rotation)
        trans = self.rotation.rotation_matrix() @ other.translation.as_array()
        return RigidTransform(rot, Vec3.from_array(trans + self.translation.as_array()))

    def inverse(self) -> "RigidTransform":
        rot = self.rotation.conjugate()
        trans = -(rot.rotation_matrix() @ self.translation.as_array())
        return RigidTransform(rot, Vec3.from_array(trans))


@dataclass(frozen=True)
class Wrench:
    """Force/torque pair tagged with the frame its components live in."""

    force: Vec3
    torque: Vec3
    frame: Frame


def transform_point(transform: RigidTransform, point: Vec3) -> Vec3:
    """Map a sensor-frame point into the world frame."""
    rotated = transform.rotation.rotation_matrix() @ point.as_array()
    return Vec3.from_array(rotated + transform.translation.as_array())


def adjoint_wrench_to_world(transform: RigidTransform, wrench: Wrench) -> Wrench:
    """Re-express a sensor-frame wrench in the world frame.

    Force maps by rotation alone; torque gains the moment-arm cross term from
    the frame origin offset.
    """
    if wrench.frame is not Frame.SENSOR:
        raise FrameMismatchError(
            f"expected a sensor-frame wrench, got frame={wrench.frame.value}"
        )
    rot = transform.rotation.rotation_matrix()
    force_w = rot @ wrench.force.as_array()
    torque_w = rot @ wrench.torque.as_array() + np.cross(
        transform.translation.as_array(), force_w
    )
    return Wrench(Vec3.from_array(force_w), Vec3.from_array(torque_w), Frame.WORLD)


def angle_between(r1: Vec3, r2: Vec3) -> float:
    """Angle between two vectors in degrees, covering [0, 180] continuously.

    Uses the two-argument arctangent of (cross-product norm, dot product) so
    obtuse angles are well defined instead of wrapping.
    """
    a = r1.as_array()
    b = r2.as_array()
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a < DEGENERATE_NORM or norm_b < DEGENERATE_NORM:
        raise DegenerateInputError(
            f"angle_between needs nonzero vectors (norms {norm_a:.3e}, {norm_b:.3e})"
        )
    cross = float(np.linalg.norm(np.cross(a, b)))
    dot = float(np.dot(a, b))
    return math.degrees(math.atan2(cross, dot))
