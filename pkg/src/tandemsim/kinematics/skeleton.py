"""Articulated skeleton, poses, and forward kinematics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SizeMismatch, ValidationError
from .transforms import (
    compose,
    quat_identity,
    quat_mul,
    quat_normalize,
    quat_rotate,
)

QUAT_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class Joint:
    name: str
    parent: int  # -1 for the root
    rest_pos: tuple[float, float, float]
    rest_quat: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class HumanoidSkeleton:
    joints: tuple[Joint, ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        roots = [i for i, j in enumerate(self.joints) if j.parent < 0]
        if len(roots) != 1:
            raise ValidationError(f"skeleton must have exactly one root, found {len(roots)}")
        if roots[0] != 0:
            raise ValidationError("root joint must be first")
        for i, j in enumerate(self.joints[1:], start=1):
            if j.parent >= i:
                raise ValidationError(
                    f"joint {j.name!r} (#{i}) has parent #{j.parent}; joints must be topologically sorted"
                )

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    def index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(name)

    def rest_world(self) -> tuple[np.ndarray, np.ndarray]:
        """Accumulated rest transforms: (quats (J,4), positions (J,3)). Cached."""
        cached = self._cache.get("rest_world")
        if cached is None:
            quats = np.zeros((self.n_joints, 4))
            poss = np.zeros((self.n_joints, 3))
            for i, j in enumerate(self.joints):
                lq = np.asarray(j.rest_quat, dtype=np.float64)
                lp = np.asarray(j.rest_pos, dtype=np.float64)
                if j.parent < 0:
                    quats[i], poss[i] = lq, lp
                else:
                    quats[i], poss[i] = compose(quats[j.parent], poss[j.parent], lq, lp)
            quats.setflags(write=False)
            poss.setflags(write=False)
            cached = (quats, poss)
            self._cache["rest_world"] = cached
        return cached


@dataclass
class SkeletonPose:
    """Root transform plus per-joint local rotations."""

    root_pos: np.ndarray  # (3,)
    root_quat: np.ndarray  # (4,)
    joint_quats: np.ndarray  # (J, 4)

    def __post_init__(self):
        self.root_pos = np.asarray(self.root_pos, dtype=np.float64)
        self.root_quat = np.asarray(self.root_quat, dtype=np.float64)
        self.joint_quats = np.asarray(self.joint_quats, dtype=np.float64)
        norms = np.linalg.norm(self.joint_quats, axis=1)
        if np.any(np.abs(norms - 1.0) > QUAT_UNIT_TOL):
            bad = int(np.argmax(np.abs(norms - 1.0)))
            raise ValidationError(f"joint quaternion #{bad} is not unit norm (|q|={norms[bad]:.8f})")

    @staticmethod
    def identity(skeleton: HumanoidSkeleton) -> "SkeletonPose":
        q = np.zeros((skeleton.n_joints, 4))
        q[:, 0] = 1.0
        return SkeletonPose(np.zeros(3), quat_identity(), q)

    def copy(self) -> "SkeletonPose":
        return SkeletonPose(self.root_pos.copy(), self.root_quat.copy(), self.joint_quats.copy())

    def with_root(self, root_pos, root_quat) -> "SkeletonPose":
        return SkeletonPose(np.asarray(root_pos, dtype=np.float64),
                            np.asarray(root_quat, dtype=np.float64),
                            self.joint_quats)


def forward_kinematics(skeleton: HumanoidSkeleton, pose: SkeletonPose):
    """World transforms per joint: (quats (J,4), positions (J,3)).

    child = parent . rest_local . pose_rotation; the root composes the pose
    root transform with its own rest local and rotation.
    """
    if pose.joint_quats.shape[0] != skeleton.n_joints:
        raise SizeMismatch(
            f"pose has {pose.joint_quats.shape[0]} joints, skeleton has {skeleton.n_joints}"
        )
    J = skeleton.n_joints
    quats = np.zeros((J, 4))
    poss = np.zeros((J, 3))
    for i, j in enumerate(skeleton.joints):
        lq = quat_mul(np.asarray(j.rest_quat, dtype=np.float64), pose.joint_quats[i])
        lp = np.asarray(j.rest_pos, dtype=np.float64)
        if j.parent < 0:
            q0, p0 = pose.root_quat, pose.root_pos
        else:
            q0, p0 = quats[j.parent], poss[j.parent]
        quats[i] = quat_mul(q0, lq)
        poss[i] = p0 + quat_rotate(q0, lp)
    return quats, poss


def joint_world_position(skeleton: HumanoidSkeleton, pose: SkeletonPose, name: str) -> np.ndarray:
    _, poss = forward_kinematics(skeleton, pose)
    return poss[skeleton.index(name)]


HAND_JOINT = "right_wrist"
FOOT_JOINTS = ("left_hip", "left_knee", "left_ankle", "right_hip", "right_knee", "right_ankle")

# Standing height of the pelvis above the ground plane.
ROOT_HEIGHT = 0.95


def default_skeleton() -> HumanoidSkeleton:
    """17-joint humanoid: pelvis root, 3-link spine, head, two 3-link arms
    and legs. Rest pose stands at the body-frame origin facing +x."""
    j = Joint
    return HumanoidSkeleton((
        j("root", -1, (0.0, 0.0, ROOT_HEIGHT)),
        j("spine_1", 0, (0.0, 0.0, 0.12)),
        j("spine_2", 1, (0.0, 0.0, 0.12)),
        j("spine_3", 2, (0.0, 0.0, 0.12)),
        j("head", 3, (0.0, 0.0, 0.25)),
        j("left_shoulder", 3, (0.0, 0.20, 0.06)),
        j("left_elbow", 5, (0.0, 0.0, -0.34)),
        j("left_wrist", 6, (0.0, 0.0, -0.44)),
        j("right_shoulder", 3, (0.0, -0.20, 0.06)),
        j("right_elbow", 8, (0.0, 0.0, -0.34)),
        j("right_wrist", 9, (0.0, 0.0, -0.44)),
        j("left_hip", 0, (0.0, 0.10, -0.05)),
        j("left_knee", 11, (0.0, 0.0, -0.42)),
        j("left_ankle", 12, (0.0, 0.0, -0.44)),
        j("right_hip", 0, (0.0, -0.10, -0.05)),
        j("right_knee", 14, (0.0, 0.0, -0.42)),
        j("right_ankle", 15, (0.0, 0.0, -0.44)),
    ))
