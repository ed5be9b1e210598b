"""Quaternion and rigid-transform helpers plus the planar base pose.

Quaternions are numpy arrays (w, x, y, z). Rigid transforms are (quat, pos)
pairs. The world is 2.5D: bases move on the ground plane, articulated
kinematics run in full 3D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import wrap_angle


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return np.asarray(q, dtype=np.float64) / np.linalg.norm(q)


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector(s) v by quaternion q. v is (3,) or (N, 3)."""
    w = q[0]
    u = np.asarray(q[1:], dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    uv = np.cross(u, v)
    uuv = np.cross(u, uv)
    return v + 2.0 * (w * uv + uuv)


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        return quat_identity()
    half = 0.5 * angle
    s = math.sin(half) / n
    return np.array([math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_to_mat(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Rotation angle between two unit quaternions (double cover aware)."""
    d = abs(float(np.dot(a, b)))
    return 2.0 * math.acos(min(1.0, d))


def yaw_quat(heading: float) -> np.ndarray:
    return np.array([math.cos(heading * 0.5), 0.0, 0.0, math.sin(heading * 0.5)])


def compose(qa: np.ndarray, pa: np.ndarray, qb: np.ndarray, pb: np.ndarray):
    """(qa, pa) . (qb, pb) applied right-to-left."""
    return quat_mul(qa, qb), pa + quat_rotate(qa, pb)


def invert(q: np.ndarray, p: np.ndarray):
    qi = quat_conj(q)
    return qi, -quat_rotate(qi, p)


@dataclass
class BasePose:
    """Planar pose of an agent base: position in meters, heading in (-pi, pi]."""

    x: float
    y: float
    heading: float

    def __post_init__(self):
        self.heading = wrap_angle(self.heading)

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)

    def forward(self) -> tuple[float, float]:
        return (math.cos(self.heading), math.sin(self.heading))

    def to_world(self, p_body) -> np.ndarray:
        """Lift a 3D body-frame point into world coordinates (base z = 0)."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        px, py, pz = p_body
        return np.array([self.x + c * px - s * py, self.y + s * px + c * py, pz])

    def to_world_2d(self, p_body) -> tuple[float, float]:
        c, s = math.cos(self.heading), math.sin(self.heading)
        return (self.x + c * p_body[0] - s * p_body[1], self.y + s * p_body[0] + c * p_body[1])

    def to_body(self, p_world) -> np.ndarray:
        """3D world point expressed in the body frame."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        dx, dy = p_world[0] - self.x, p_world[1] - self.y
        z = p_world[2] if len(p_world) > 2 else 0.0
        return np.array([c * dx + s * dy, -s * dx + c * dy, z])

    def copy(self) -> "BasePose":
        return BasePose(self.x, self.y, self.heading)
