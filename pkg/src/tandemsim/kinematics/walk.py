"""Walk-cycle playback and the rotate-then-advance base controller."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..geometry import wrap_angle
from .skeleton import HumanoidSkeleton, SkeletonPose
from .transforms import BasePose, quat_angle, quat_from_axis_angle, yaw_quat, quat_mul, quat_rotate

# Below this commanded speed the clip phase freezes instead of crawling.
MIN_ANIM_SPEED = 0.05
DEFAULT_FACING_TOL = 0.1


@dataclass(frozen=True)
class WalkClip:
    """One gait cycle: poses, per-frame root forward displacement, timing."""

    frames: tuple[SkeletonPose, ...]
    displacements: np.ndarray  # (F,), meters moved during each frame
    frame_duration: float
    loop_tolerance: float = 0.8  # max joint-rotation distance frame[-1] vs frame[0]

    def __post_init__(self):
        object.__setattr__(self, "displacements",
                           np.asarray(self.displacements, dtype=np.float64))
        if len(self.frames) < 2:
            raise ValidationError("walk clip needs at least 2 frames")
        if len(self.displacements) != len(self.frames):
            raise ValidationError("one displacement per frame required")
        if self.total_displacement <= 0:
            raise ValidationError("walk clip total displacement must be > 0")
        first, last = self.frames[0], self.frames[-1]
        gap = max(
            quat_angle(first.joint_quats[j], last.joint_quats[j])
            for j in range(first.joint_quats.shape[0])
        )
        if gap > self.loop_tolerance:
            raise ValidationError(
                f"first/last frames are not loop-compatible (joint gap {gap:.3f} rad "
                f"> tolerance {self.loop_tolerance})"
            )

    @property
    def total_displacement(self) -> float:
        return float(self.displacements.sum())

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def frame_at_phase(self, phase: float) -> SkeletonPose:
        idx = int(math.floor((phase % 1.0) * self.n_frames)) % self.n_frames
        return self.frames[idx]


@dataclass
class WalkState:
    phase: float = 0.0


def posed_at(clip: WalkClip, skeleton: HumanoidSkeleton, base: BasePose, phase: float) -> SkeletonPose:
    """Clip frame at `phase`, rooted at the planar base pose."""
    frame = clip.frame_at_phase(phase)
    yaw = yaw_quat(base.heading)
    root_pos = np.array([base.x, base.y, 0.0]) + quat_rotate(yaw, frame.root_pos)
    return SkeletonPose(root_pos, quat_mul(yaw, frame.root_quat), frame.joint_quats)


def walk_propose(
    base: BasePose,
    target: tuple[float, float],
    dt: float,
    max_linear: float,
    max_angular: float,
    facing_tol: float = DEFAULT_FACING_TOL,
) -> tuple[float, float]:
    """Rotate-then-advance proposal: (new_heading, forward_distance).

    While the heading error exceeds facing_tol the base only rotates
    (distance 0); otherwise it advances toward the target at up to
    max_linear, applying any residual heading correction.
    """
    if max_linear <= 0 or max_angular <= 0:
        raise ValueError("max speeds must be > 0")
    dx, dy = target[0] - base.x, target[1] - base.y
    dist = math.hypot(dx, dy)
    err = wrap_angle(math.atan2(dy, dx) - base.heading) if dist > 1e-12 else 0.0
    max_turn = max_angular * dt
    new_heading = wrap_angle(base.heading + max(-max_turn, min(max_turn, err)))
    if abs(err) > facing_tol:
        return new_heading, 0.0
    return new_heading, min(max_linear * dt, dist)


def advance_phase(phase: float, moved: float, dt: float, clip: WalkClip) -> float:
    """Phase advances with distance moved; freezes below MIN_ANIM_SPEED."""
    if dt > 0 and moved / dt >= MIN_ANIM_SPEED:
        return (phase + moved / clip.total_displacement) % 1.0
    return phase


def step_walk(
    state: WalkState,
    base: BasePose,
    target: tuple[float, float],
    dt: float,
    max_linear: float,
    max_angular: float,
    clip: WalkClip,
    skeleton: HumanoidSkeleton,
    facing_tol: float = DEFAULT_FACING_TOL,
) -> tuple[BasePose, SkeletonPose, WalkState]:
    """Rotate in place to face the target, then advance along the heading.

    The clip phase advances proportionally to distance moved
    (phase += d / total_displacement) and freezes while rotating or when the
    linear speed drops below MIN_ANIM_SPEED.
    """
    new_heading, d = walk_propose(base, target, dt, max_linear, max_angular, facing_tol)
    fx, fy = math.cos(new_heading), math.sin(new_heading)
    new_base = BasePose(base.x + d * fx, base.y + d * fy, new_heading)
    new_state = WalkState(advance_phase(state.phase, d, dt, clip))
    return new_base, posed_at(clip, skeleton, new_base, new_state.phase), new_state


def default_walk_clip(skeleton: HumanoidSkeleton, n_frames: int = 12,
                      stride: float = 0.8, frame_duration: float = 0.05) -> WalkClip:
    """Synthetic single gait cycle: sinusoidal leg swing with counter-swinging
    arms, both feet passing through the cycle once."""
    idx = {n: skeleton.index(n) for n in (
        "left_hip", "right_hip", "left_knee", "right_knee",
        "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    )}
    frames = []
    for k in range(n_frames):
        ph = 2.0 * math.pi * k / n_frames
        q = np.zeros((skeleton.n_joints, 4))
        q[:, 0] = 1.0
        swing = 0.5 * math.sin(ph)
        knee = 0.45 * max(0.0, math.sin(ph + 0.5 * math.pi))
        knee_r = 0.45 * max(0.0, math.sin(ph + 1.5 * math.pi))
        arm = 0.30 * math.sin(ph)
        q[idx["left_hip"]] = quat_from_axis_angle((0, 1, 0), swing)
        q[idx["right_hip"]] = quat_from_axis_angle((0, 1, 0), -swing)
        q[idx["left_knee"]] = quat_from_axis_angle((0, 1, 0), knee)
        q[idx["right_knee"]] = quat_from_axis_angle((0, 1, 0), knee_r)
        q[idx["left_shoulder"]] = quat_from_axis_angle((0, 1, 0), -arm)
        q[idx["right_shoulder"]] = quat_from_axis_angle((0, 1, 0), arm)
        q[idx["left_elbow"]] = quat_from_axis_angle((0, 1, 0), 0.15 + 0.1 * abs(math.sin(ph)))
        q[idx["right_elbow"]] = quat_from_axis_angle((0, 1, 0), 0.15 + 0.1 * abs(math.sin(ph)))
        bob = 0.015 * math.sin(2 * ph)
        frames.append(SkeletonPose(np.array([0.0, 0.0, bob]), np.array([1.0, 0, 0, 0]), q))
    disp = np.full(n_frames, stride / n_frames)
    return WalkClip(tuple(frames), disp, frame_duration)
