"""Cached reach poses: hand-target grid -> full-body pose, with interpolation.

The cache maps body-frame hand targets on a regular 3D lattice to poses whose
forward-kinematics hand position lands on the target. Poses are produced
offline by a closed-form spine-pitch + two-link arm solver and verified by FK
before being stored; lattice points where the solver fails are simply absent,
which defines the reachable region. Leg joints are identical across all
stored poses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import OutOfRange, ValidationError
from .skeleton import HAND_JOINT, HumanoidSkeleton, SkeletonPose, forward_kinematics
from .transforms import quat_from_axis_angle, quat_identity, quat_rotate

DEFAULT_SPACING = 0.1
KEY_EPS = 1e-9


@dataclass
class ReachPoseCache:
    spacing: float
    origin: np.ndarray  # (3,), body-frame coordinates of lattice index (0,0,0)
    entries: dict  # (i, j, k) -> joint quats (J, 4)
    n_joints: int
    hand_joint: str = HAND_JOINT

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        if self.spacing <= 0:
            raise ValidationError("reach cache spacing must be > 0")
        if not self.entries:
            raise ValidationError("reach cache has no entries")

    def key_point(self, key: tuple[int, int, int]) -> np.ndarray:
        return self.origin + np.asarray(key, dtype=np.float64) * self.spacing

    def _lattice(self, target) -> tuple[np.ndarray, np.ndarray]:
        f = (np.asarray(target, dtype=np.float64) - self.origin) / self.spacing
        i0 = np.floor(f + KEY_EPS).astype(int)
        frac = f - i0
        return i0, frac

    def exact_key(self, target) -> tuple[int, int, int] | None:
        f = (np.asarray(target, dtype=np.float64) - self.origin) / self.spacing
        i = np.round(f).astype(int)
        if np.all(np.abs(f - i) < KEY_EPS):
            k = (int(i[0]), int(i[1]), int(i[2]))
            if k in self.entries:
                return k
        return None

    def contains(self, target) -> bool:
        if self.exact_key(target) is not None:
            return True
        i0, _ = self._lattice(target)
        for di in (0, 1):
            for dj in (0, 1):
                for dk in (0, 1):
                    if (i0[0] + di, i0[1] + dj, i0[2] + dk) not in self.entries:
                        return False
        return True

    def pose_from_quats(self, quats: np.ndarray) -> SkeletonPose:
        return SkeletonPose(np.zeros(3), quat_identity(), quats)


def reach_pose(cache: ReachPoseCache, hand_target) -> SkeletonPose:
    """Pose whose hand lands at the body-frame target.

    Lattice points return their stored pose exactly; interior targets blend
    the 8 surrounding entries trilinearly (component-wise on quaternions,
    renormalized). Targets outside the stored region raise OutOfRange.
    """
    exact = cache.exact_key(hand_target)
    if exact is not None:
        return cache.pose_from_quats(cache.entries[exact].copy())
    i0, frac = cache._lattice(hand_target)
    corners = []
    weights = []
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                key = (int(i0[0] + di), int(i0[1] + dj), int(i0[2] + dk))
                q = cache.entries.get(key)
                if q is None:
                    raise OutOfRange(
                        f"hand target {tuple(float(v) for v in hand_target)} is outside "
                        f"the cached reachable region"
                    )
                corners.append(q)
                wx = frac[0] if di else 1.0 - frac[0]
                wy = frac[1] if dj else 1.0 - frac[1]
                wz = frac[2] if dk else 1.0 - frac[2]
                weights.append(wx * wy * wz)
    ref = corners[0]
    blended = np.zeros_like(ref)
    for w, q in zip(weights, corners):
        # align to the reference hemisphere before the linear blend
        signs = np.where(np.sum(q * ref, axis=1) < 0.0, -1.0, 1.0)
        blended += w * q * signs[:, None]
    norms = np.linalg.norm(blended, axis=1, keepdims=True)
    return cache.pose_from_quats(blended / norms)


def pick_motion(cache: ReachPoseCache, hand_start, hand_target, n_steps: int) -> list[SkeletonPose]:
    """Poses for n_steps equally spaced points on the segment start->target."""
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    a = np.asarray(hand_start, dtype=np.float64)
    b = np.asarray(hand_target, dtype=np.float64)
    poses = []
    for k in range(n_steps):
        t = k / (n_steps - 1)
        p = a + t * (b - a)
        try:
            poses.append(reach_pose(cache, p))
        except OutOfRange as exc:
            raise OutOfRange(f"sample #{k} of pick motion: {exc}") from exc
    return poses


# -- offline cache construction -----------------------------------------


def _spine_shoulder_position(skeleton: HumanoidSkeleton, pitch: float) -> np.ndarray:
    """Right-shoulder body-frame position with the spine pitched forward."""
    quats = np.zeros((skeleton.n_joints, 4))
    quats[:, 0] = 1.0
    pose = SkeletonPose(np.zeros(3), quat_identity(), quats)
    for name in ("spine_1", "spine_2", "spine_3"):
        pose.joint_quats[skeleton.index(name)] = quat_from_axis_angle((0, 1, 0), pitch / 3.0)
    _, poss = forward_kinematics(skeleton, pose)
    return poss[skeleton.index("right_shoulder")]


def _pitch_table(skeleton: HumanoidSkeleton, max_pitch: float, n: int = 76):
    pitches = np.linspace(0.0, max_pitch, n)
    shoulders = np.stack([_spine_shoulder_position(skeleton, p) for p in pitches])
    return pitches, shoulders


def solve_reach_ik(skeleton: HumanoidSkeleton, target, comfortable: float = 0.75,
                   max_pitch: float = 1.75, _table=None) -> np.ndarray | None:
    """Joint quats placing the right wrist at the body-frame target, or None.

    Closed-form two-link arm IK, with the spine pitched forward (distributed
    over the three spine joints, smallest tabulated pitch that brings the
    target into comfortable arm reach). Legs stay at rest.
    """
    target = np.asarray(target, dtype=np.float64)
    upper = abs(skeleton.joints[skeleton.index("right_elbow")].rest_pos[2])
    fore = abs(skeleton.joints[skeleton.index("right_wrist")].rest_pos[2])
    pitches, shoulders = _table if _table is not None else _pitch_table(skeleton, max_pitch)
    dists = np.linalg.norm(target[None, :] - shoulders, axis=1)
    ok = np.flatnonzero(dists <= comfortable)
    if len(ok) == 0:
        return None
    pick = int(ok[0])
    pitch = float(pitches[pick])

    quats = np.zeros((skeleton.n_joints, 4))
    quats[:, 0] = 1.0
    for name in ("spine_1", "spine_2", "spine_3"):
        quats[skeleton.index(name)] = quat_from_axis_angle((0, 1, 0), pitch / 3.0)

    shoulder = shoulders[pick]
    d_world = target - shoulder
    # express in the shoulder's parent frame (spine pitched by `pitch` about +y)
    d_local = quat_rotate(quat_from_axis_angle((0, 1, 0), -pitch), d_world)
    length = float(np.linalg.norm(d_local))
    if length < abs(upper - fore) + 1e-3 or length > upper + fore - 1e-4:
        return None
    cos_int = (upper**2 + fore**2 - length**2) / (2 * upper * fore)
    interior = math.acos(max(-1.0, min(1.0, cos_int)))
    bend = math.pi - interior
    elbow_q = quat_from_axis_angle((0, 1, 0), -bend)
    # wrist position in shoulder frame before the shoulder rotation
    w0 = np.array([0.0, 0.0, -upper]) + quat_rotate(elbow_q, np.array([0.0, 0.0, -fore]))
    w0n = w0 / np.linalg.norm(w0)
    dn = d_local / length
    axis = np.cross(w0n, dn)
    s = np.linalg.norm(axis)
    c = float(np.dot(w0n, dn))
    if s < 1e-9:
        shoulder_q = quat_identity() if c > 0 else quat_from_axis_angle((0, 1, 0), math.pi)
    else:
        shoulder_q = quat_from_axis_angle(axis / s, math.atan2(s, c))
    quats[skeleton.index("right_shoulder")] = shoulder_q
    quats[skeleton.index("right_elbow")] = elbow_q
    return quats


def build_reach_cache(
    skeleton: HumanoidSkeleton,
    spacing: float = DEFAULT_SPACING,
    x_range: tuple[float, float] = (0.0, 0.9),
    y_range: tuple[float, float] = (-0.5, 0.5),
    z_range: tuple[float, float] = (0.4, 1.4),
    verify_tol: float = 1e-6,
    max_pitch: float = 1.75,
) -> ReachPoseCache:
    """Solve and FK-verify every lattice point; keep the ones that land."""
    origin = np.array([x_range[0], y_range[0], z_range[0]])
    ni = int(round((x_range[1] - x_range[0]) / spacing)) + 1
    nj = int(round((y_range[1] - y_range[0]) / spacing)) + 1
    nk = int(round((z_range[1] - z_range[0]) / spacing)) + 1
    hand = skeleton.index(HAND_JOINT)
    table = _pitch_table(skeleton, max_pitch)
    entries = {}
    for i in range(ni):
        for j in range(nj):
            for k in range(nk):
                p = origin + np.array([i, j, k]) * spacing
                if p[0] < 0.05:
                    continue  # half-shell: in front of the body only
                quats = solve_reach_ik(skeleton, p, max_pitch=max_pitch, _table=table)
                if quats is None:
                    continue
                pose = SkeletonPose(np.zeros(3), quat_identity(), quats)
                _, poss = forward_kinematics(skeleton, pose)
                if np.linalg.norm(poss[hand] - p) <= max(verify_tol, spacing / 2 * 1e-3):
                    entries[(i, j, k)] = quats
    return ReachPoseCache(spacing=spacing, origin=origin, entries=entries,
                          n_joints=skeleton.n_joints)
