"""Two-disc robot base with a 7-joint serial arm."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .transforms import BasePose, quat_from_axis_angle, quat_mul, quat_rotate, yaw_quat


@dataclass(frozen=True)
class ArmJoint:
    axis: tuple[float, float, float]
    offset: tuple[float, float, float]  # link offset applied after this joint
    lower: float
    upper: float


@dataclass(frozen=True)
class RobotModel:
    center_offset: tuple[float, float]
    center_radius: float
    front_offset: tuple[float, float]
    front_radius: float
    arm_mount: tuple[float, float, float]
    arm_joints: tuple[ArmJoint, ...]
    ee_rest_offset: tuple[float, float, float]

    def __post_init__(self):
        if self.center_radius <= 0 or self.front_radius <= 0:
            raise ValidationError("cylinder radii must be > 0")
        for i, j in enumerate(self.arm_joints):
            if not j.lower < j.upper:
                raise ValidationError(f"arm joint #{i} limits must satisfy lower < upper")
        total = sum(math.hypot(*j.offset[:2]) + abs(j.offset[2]) for j in self.arm_joints)
        if total <= 0:
            raise ValidationError("arm chain length must be > 0")

    @property
    def n_arm_joints(self) -> int:
        return len(self.arm_joints)

    @property
    def plan_radius(self) -> float:
        """Conservative planning radius covering both discs in any heading."""
        reach = max(
            math.hypot(*self.center_offset) + self.center_radius,
            math.hypot(*self.front_offset) + self.front_radius,
        )
        return reach


def clamp_arm_angles(robot: RobotModel, angles: np.ndarray) -> tuple[np.ndarray, bool]:
    a = np.asarray(angles, dtype=np.float64)
    lo = np.array([j.lower for j in robot.arm_joints])
    hi = np.array([j.upper for j in robot.arm_joints])
    clamped = np.clip(a, lo, hi)
    return clamped, bool(np.any(clamped != a))


def arm_forward_kinematics(robot: RobotModel, joint_angles, base: BasePose) -> np.ndarray:
    """World position of the end effector for the given arm configuration.

    Angles outside the limits are clamped (callers surface a warning event).
    """
    angles, _ = clamp_arm_angles(robot, joint_angles)
    q = yaw_quat(base.heading)
    p = np.array([base.x, base.y, 0.0]) + quat_rotate(q, np.asarray(robot.arm_mount))
    for joint, theta in zip(robot.arm_joints, angles):
        q = quat_mul(q, quat_from_axis_angle(joint.axis, float(theta)))
        p = p + quat_rotate(q, np.asarray(joint.offset))
    return p


def ee_body_position(robot: RobotModel, joint_angles) -> np.ndarray:
    return arm_forward_kinematics(robot, joint_angles, BasePose(0.0, 0.0, 0.0))


def robot_collision_discs(robot: RobotModel, base: BasePose):
    """The two body discs in world frame: ((x, y), radius) pairs."""
    return (
        (base.to_world_2d(robot.center_offset), robot.center_radius),
        (base.to_world_2d(robot.front_offset), robot.front_radius),
    )


def default_robot() -> RobotModel:
    joints = (
        ArmJoint((0, 0, 1), (0.0, 0.0, 0.15), -2.8, 2.8),
        ArmJoint((0, 1, 0), (0.25, 0.0, 0.0), -1.9, 1.9),
        ArmJoint((1, 0, 0), (0.20, 0.0, 0.0), -2.8, 2.8),
        ArmJoint((0, 1, 0), (0.18, 0.0, 0.0), -2.6, 2.6),
        ArmJoint((1, 0, 0), (0.12, 0.0, 0.0), -2.8, 2.8),
        ArmJoint((0, 1, 0), (0.08, 0.0, 0.0), -2.0, 2.0),
        ArmJoint((1, 0, 0), (0.05, 0.0, 0.0), -2.8, 2.8),
    )
    model = RobotModel(
        center_offset=(0.0, 0.0),
        center_radius=0.30,
        front_offset=(0.40, 0.0),
        front_radius=0.25,
        arm_mount=(0.25, 0.0, 0.45),
        arm_joints=joints,
        ee_rest_offset=(0.0, 0.0, 0.0),  # replaced below with FK(0)
    )
    rest = ee_body_position(model, np.zeros(len(joints)))
    return RobotModel(
        center_offset=model.center_offset,
        center_radius=model.center_radius,
        front_offset=model.front_offset,
        front_radius=model.front_radius,
        arm_mount=model.arm_mount,
        arm_joints=joints,
        ee_rest_offset=(float(rest[0]), float(rest[1]), float(rest[2])),
    )
