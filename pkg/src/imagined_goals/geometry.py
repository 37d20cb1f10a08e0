"""Small quaternion / rigid-pose toolkit.

Conventions used throughout the package:
  - world frame is right-handed, z-up
  - camera frame is right-handed: +z forward, +x right, +y down
  - quaternions are (w, x, y, z), unit norm, and rotate local vectors
    into the parent frame
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

Vec3 = np.ndarray  # shape (3,), float64


def vec3(x: float, y: float, z: float) -> Vec3:
    return np.array([x, y, z], dtype=np.float64)


def unit(v: Vec3) -> Vec3:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return v / n


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(q))
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return np.asarray(q, dtype=np.float64) / n


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        dtype=np.float64,
    )

def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]], dtype=np.float64)


def quat_rotate(q: np.ndarray, v: Vec3) -> Vec3:
    """Rotate vector v by unit quaternion q."""
    w, x, y, z = q
    u = np.array([x, y, z], dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    # v' = v + 2w(u x v) + 2(u x (u x v))
    uv = np.cross(u, v)
    return v + 2.0 * w * uv + 2.0 * np.cross(u, uv)


def quat_from_yaw(yaw_rad: float) -> np.ndarray:
    h = 0.5 * yaw_rad
    return np.array([math.cos(h), 0.0, 0.0, math.sin(h)], dtype=np.float64)


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Rotation matrix (3x3, columns = rotated basis) to unit quaternion (w,x,y,z)."""
    t = m[0, 0] + m[1, 1] + m[2, 2]
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_normalize(q)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotate by `orientation`, then translate by `position`."""

    position: Vec3 = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        object.__setattr__(self, "orientation", quat_normalize(self.orientation))

    def transform(self, point: Vec3) -> Vec3:
        return quat_rotate(self.orientation, point) + self.position

    def inverse_transform(self, point: Vec3) -> Vec3:
        return quat_rotate(quat_conjugate(self.orientation), np.asarray(point) - self.position)

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other: apply `other` first, then `self`."""
        return Pose(
            self.transform(other.position),
            quat_multiply(self.orientation, other.orientation),
        )

    def inverse(self) -> "Pose":
        qc = quat_conjugate(self.orientation)
        return Pose(quat_rotate(qc, -self.position), qc)


def look_at_quat(position: Vec3, target: Vec3) -> np.ndarray:
    """Camera orientation looking from `position` toward `target`, world z as up.

    Camera axes in world coordinates become the matrix columns
    (right, down, forward). Raises if the view direction is parallel to z.
    """
    forward = unit(np.asarray(target, dtype=np.float64) - np.asarray(position, dtype=np.float64))
    up = vec3(0.0, 0.0, 1.0)
    right_raw = np.cross(forward, up)
    n = float(np.linalg.norm(right_raw))
    if n < 1e-12:
        raise ValueError("camera view direction is parallel to world z; look_at is degenerate")
    right = right_raw / n
    down = np.cross(forward, right)
    m = np.column_stack([right, down, forward])
    return quat_from_matrix(m)
