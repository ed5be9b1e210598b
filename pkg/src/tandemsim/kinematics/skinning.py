"""Linear blend skinning over a skeleton."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SizeMismatch, ValidationError
from .skeleton import HumanoidSkeleton, SkeletonPose, forward_kinematics
from .transforms import quat_to_mat

WEIGHT_SUM_TOL = 1e-6
MAX_INFLUENCES = 4


@dataclass
class SkinMesh:
    """Rest vertices with up to 4 joint influences each (weights sum to 1)."""

    rest_vertices: np.ndarray  # (V, 3)
    joint_indices: np.ndarray  # (V, 4) int, padded with 0
    weights: np.ndarray  # (V, 4), padded with 0.0

    def __post_init__(self):
        self.rest_vertices = np.asarray(self.rest_vertices, dtype=np.float64)
        self.joint_indices = np.asarray(self.joint_indices, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.joint_indices.shape != self.weights.shape or self.joint_indices.shape[1] != MAX_INFLUENCES:
            raise ValidationError("joint_indices and weights must both be (V, 4)")
        if np.any(self.weights < 0):
            raise ValidationError("skin weights must be non-negative")
        sums = self.weights.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > WEIGHT_SUM_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ValidationError(f"vertex #{bad} weights sum to {sums[bad]:.8f}, expected 1")

    @property
    def n_vertices(self) -> int:
        return len(self.rest_vertices)


def skin_mesh(mesh: SkinMesh, skeleton: HumanoidSkeleton, pose: SkeletonPose) -> np.ndarray:
    """Deformed vertex positions: v' = sum_i w_i * T_i * Tbar_i^{-1} * v."""
    if int(mesh.joint_indices.max(initial=0)) >= skeleton.n_joints:
        raise SizeMismatch("mesh references joints beyond the skeleton")
    cur_q, cur_p = forward_kinematics(skeleton, pose)
    rest_q, rest_p = skeleton.rest_world()
    J = skeleton.n_joints
    # per-joint skinning matrices A v + b with A = R_cur R_rest^T
    A = np.zeros((J, 3, 3))
    b = np.zeros((J, 3))
    for i in range(J):
        r_cur = quat_to_mat(cur_q[i])
        r_rest = quat_to_mat(rest_q[i])
        A[i] = r_cur @ r_rest.T
        b[i] = cur_p[i] - A[i] @ rest_p[i]
    v = mesh.rest_vertices
    gathered_A = A[mesh.joint_indices]  # (V, 4, 3, 3)
    gathered_b = b[mesh.joint_indices]  # (V, 4, 3)
    per_influence = np.einsum("vkij,vj->vki", gathered_A, v) + gathered_b
    return np.einsum("vk,vki->vi", mesh.weights, per_influence)


def default_skin_mesh(skeleton: HumanoidSkeleton, samples_per_bone: int = 6) -> SkinMesh:
    """Point-cloud skin: samples along each bone, blended across the bone ends."""
    rest_q, rest_p = skeleton.rest_world()
    verts, idxs, wts = [], [], []
    for i, joint in enumerate(skeleton.joints):
        if joint.parent < 0:
            continue
        a = rest_p[joint.parent]
        bpt = rest_p[i]
        for k in range(samples_per_bone):
            t = k / max(1, samples_per_bone - 1)
            verts.append(a + t * (bpt - a))
            idxs.append([joint.parent, i, 0, 0])
            wts.append([1.0 - t, t, 0.0, 0.0])
    return SkinMesh(np.asarray(verts), np.asarray(idxs), np.asarray(wts))
