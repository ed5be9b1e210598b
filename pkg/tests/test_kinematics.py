import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tandemsim.errors import OutOfRange, SizeMismatch, ValidationError
from tandemsim.kinematics import (
    BasePose,
    SkeletonPose,
    arm_forward_kinematics,
    default_robot,
    default_skeleton,
    default_skin_mesh,
    default_walk_clip,
    forward_kinematics,
    pick_motion,
    reach_pose,
    robot_collision_discs,
    skin_mesh,
    step_walk,
)
from tandemsim.kinematics.reach import build_reach_cache
from tandemsim.kinematics.skeleton import FOOT_JOINTS, HAND_JOINT, HumanoidSkeleton, Joint
from tandemsim.kinematics.transforms import quat_from_axis_angle, quat_rotate
from tandemsim.kinematics.walk import WalkState

SKEL = default_skeleton()
CACHE = build_reach_cache(SKEL)
CLIP = default_walk_clip(SKEL)
MESH = default_skin_mesh(SKEL)
ROBOT = default_robot()


# -- forward kinematics -------------------------------------------------

def test_fk_identity_equals_rest():
    pose = SkeletonPose.identity(SKEL)
    q, p = forward_kinematics(SKEL, pose)
    rq, rp = SKEL.rest_world()
    assert np.allclose(q, rq, atol=1e-12)
    assert np.allclose(p, rp, atol=1e-12)


def test_fk_two_joint_chain_right_angle():
    skel = HumanoidSkeleton((
        Joint("root", -1, (0.0, 0.0, 0.0)),
        Joint("a", 0, (1.0, 0.0, 0.0)),
        Joint("b", 1, (1.0, 0.0, 0.0)),
    ))
    pose = SkeletonPose.identity(skel)
    pose.joint_quats[0] = quat_from_axis_angle((0, 0, 1), math.pi / 2)
    _, p = forward_kinematics(skel, pose)
    # rotating the root joint by 90 deg about z puts both links along +y
    assert np.allclose(p[1], [0.0, 1.0, 0.0], atol=1e-12)
    assert np.allclose(p[2], [0.0, 2.0, 0.0], atol=1e-12)


def test_fk_size_mismatch():
    pose = SkeletonPose.identity(SKEL)
    bad = SkeletonPose(pose.root_pos, pose.root_quat, pose.joint_quats[:-1])
    with pytest.raises(SizeMismatch):
        forward_kinematics(SKEL, bad)


@settings(max_examples=100, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi),
       st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_fk_rigid_equivariance(angle, axis_angle, tx, ty, tz):
    axis = np.array([math.cos(axis_angle), math.sin(axis_angle), 0.7])
    q = quat_from_axis_angle(axis, angle)
    t = np.array([tx, ty, tz])
    pose = SkeletonPose.identity(SKEL)
    _, p0 = forward_kinematics(SKEL, pose)
    moved = pose.with_root(t, q)
    _, p1 = forward_kinematics(SKEL, moved)
    expected = t + quat_rotate(q, p0)
    assert np.allclose(p1, expected, atol=1e-6)


# -- skinning -------------------------------------------------------------

def test_lbs_identity_fixed_point():
    pose = SkeletonPose.identity(SKEL)
    v = skin_mesh(MESH, SKEL, pose)
    assert np.abs(v - MESH.rest_vertices).max() < 1e-6


def test_lbs_single_weight_rigid():
    from tandemsim.kinematics.skinning import SkinMesh

    idx = SKEL.index("right_elbow")
    rest_q, rest_p = SKEL.rest_world()
    verts = rest_p[idx] + np.array([[0.05, 0.02, -0.1]])
    mesh = SkinMesh(verts, np.array([[idx, 0, 0, 0]]), np.array([[1.0, 0, 0, 0]]))
    pose = SkeletonPose.identity(SKEL)
    pose.joint_quats[SKEL.index("right_shoulder")] = quat_from_axis_angle((0, 1, 0), 0.8)
    cur_q, cur_p = forward_kinematics(SKEL, pose)
    out = skin_mesh(mesh, SKEL, pose)
    # vertex follows its joint rigidly
    local = verts[0] - rest_p[idx]
    from tandemsim.kinematics.transforms import quat_conj, quat_mul

    rel = quat_mul(cur_q[idx], quat_conj(rest_q[idx]))
    expected = cur_p[idx] + quat_rotate(rel, local)
    assert np.allclose(out[0], expected, atol=1e-9)


def test_lbs_half_half_midpoint():
    from tandemsim.kinematics.skinning import SkinMesh

    j0, j1 = SKEL.index("left_shoulder"), SKEL.index("left_elbow")
    rest_q, rest_p = SKEL.rest_world()
    v = (rest_p[j0] + rest_p[j1]) / 2
    mesh50 = SkinMesh(np.array([v]), np.array([[j0, j1, 0, 0]]), np.array([[0.5, 0.5, 0, 0]]))
    mesh_a = SkinMesh(np.array([v]), np.array([[j0, 0, 0, 0]]), np.array([[1.0, 0, 0, 0]]))
    mesh_b = SkinMesh(np.array([v]), np.array([[j1, 0, 0, 0]]), np.array([[1.0, 0, 0, 0]]))
    pose = SkeletonPose.identity(SKEL)
    pose.joint_quats[j1] = quat_from_axis_angle((0, 1, 0), math.pi / 2)
    blended = skin_mesh(mesh50, SKEL, pose)[0]
    rigid_a = skin_mesh(mesh_a, SKEL, pose)[0]
    rigid_b = skin_mesh(mesh_b, SKEL, pose)[0]
    assert np.allclose(blended, (rigid_a + rigid_b) / 2, atol=1e-12)


def test_skin_weights_must_sum_to_one():
    from tandemsim.kinematics.skinning import SkinMesh

    with pytest.raises(ValidationError):
        SkinMesh(np.zeros((1, 3)), np.zeros((1, 4), dtype=int),
                 np.array([[0.5, 0.25, 0.0, 0.0]]))


# -- walk ---------------------------------------------------------------------

def test_step_walk_advances_straight():
    base = BasePose(1.0, 1.0, 0.0)
    new, pose, state = step_walk(WalkState(0.0), base, (5.0, 1.0), 0.1, 2.5, 2.5,
                                 CLIP, SKEL)
    assert new.x == pytest.approx(1.25)
    assert new.y == pytest.approx(1.0)
    assert new.heading == 0.0


def test_step_walk_rotates_in_place_when_target_behind():
    base = BasePose(1.0, 1.0, 0.0)
    new, pose, state = step_walk(WalkState(0.25), base, (-5.0, 1.0), 0.1, 2.5, 2.5,
                                 CLIP, SKEL)
    assert (new.x, new.y) == (1.0, 1.0)
    assert new.heading == pytest.approx(0.25)
    assert state.phase == 0.25  # frozen while rotating


def test_step_walk_caps_speed():
    base = BasePose(0.0, 0.0, 0.0)
    for target in [(10.0, 0.0), (0.3, 0.2), (-3.0, 1.0)]:
        new, _, _ = step_walk(WalkState(0.0), base, target, 0.1, 2.5, 2.5, CLIP, SKEL)
        assert math.dist((new.x, new.y), (0, 0)) <= 0.25 + 1e-12
        assert abs(new.heading - base.heading) <= 0.25 + 1e-12


def test_full_cycle_returns_to_loop_frame():
    # dt chosen so one cycle is a whole number of steps (0.2 m x 4 = 0.8 m)
    base = BasePose(0.0, 0.0, 0.0)
    state = WalkState(0.0)
    total = CLIP.total_displacement
    dt = 0.08
    step_len = 2.5 * dt
    steps = int(round(total / step_len))
    assert steps * step_len == pytest.approx(total)
    poses = []
    for _ in range(steps):
        base, pose, state = step_walk(state, base, (100.0, 0.0), dt, 2.5, 2.5, CLIP, SKEL)
        poses.append(pose)
    assert state.phase == pytest.approx(0.0, abs=1e-9) or state.phase == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(poses[-1].joint_quats, CLIP.frames[0].joint_quats)


def test_clip_loop_compatibility_validated():
    from tandemsim.kinematics.walk import WalkClip

    frames = [SkeletonPose.identity(SKEL) for _ in range(3)]
    frames[-1] = SkeletonPose.identity(SKEL)
    frames[-1].joint_quats[2] = quat_from_axis_angle((0, 1, 0), 2.0)
    with pytest.raises(ValidationError, match="loop"):
        WalkClip(tuple(frames), np.array([0.1, 0.1, 0.1]), 0.05, loop_tolerance=0.5)


# -- reach cache ----------------------------------------------------------------

def test_reach_pose_exact_at_key():
    key = next(iter(sorted(CACHE.entries)))
    target = CACHE.key_point(key)
    pose = reach_pose(CACHE, target)
    assert np.array_equal(pose.joint_quats, CACHE.entries[key])


def test_reach_pose_interpolated_accuracy():
    keys = sorted(CACHE.entries)
    for key in keys[:: max(1, len(keys) // 25)]:
        nxt = (key[0] + 1, key[1], key[2])
        if nxt not in CACHE.entries:
            continue
        target = (CACHE.key_point(key) + CACHE.key_point(nxt)) / 2
        if not CACHE.contains(target):
            continue
        pose = reach_pose(CACHE, target)
        _, p = forward_kinematics(SKEL, pose)
        hand = p[SKEL.index(HAND_JOINT)]
        assert np.linalg.norm(hand - target) <= CACHE.spacing / 2


def test_reach_pose_out_of_range():
    with pytest.raises(OutOfRange):
        reach_pose(CACHE, (10.0, 0.0, 0.0))


def test_reach_continuity():
    rng = np.random.default_rng(5)
    keys = sorted(CACHE.entries)
    hand = SKEL.index(HAND_JOINT)
    for _ in range(40):
        key = keys[int(rng.integers(len(keys)))]
        base = CACHE.key_point(key)
        delta = rng.uniform(-0.04, 0.04, 3)
        a, b = base, base + delta
        if not (CACHE.contains(a) and CACHE.contains(b)):
            continue
        _, pa = forward_kinematics(SKEL, reach_pose(CACHE, a))
        _, pb = forward_kinematics(SKEL, reach_pose(CACHE, b))
        d_hand = np.linalg.norm(pa[hand] - pb[hand])
        assert d_hand <= np.linalg.norm(delta) + CACHE.spacing


def test_feet_joints_invariant_across_cache():
    foot_idx = [SKEL.index(n) for n in FOOT_JOINTS]
    ref = next(iter(CACHE.entries.values()))
    for quats in CACHE.entries.values():
        assert np.array_equal(quats[foot_idx], ref[foot_idx])


def test_pick_motion_constant_when_endpoints_equal():
    key = next(iter(sorted(CACHE.entries)))
    target = CACHE.key_point(key)
    poses = pick_motion(CACHE, target, target, 4)
    assert len(poses) == 4
    for p in poses:
        assert np.array_equal(p.joint_quats, poses[0].joint_quats)


def test_pick_motion_out_of_range_names_sample():
    key = next(iter(sorted(CACHE.entries)))
    inside = CACHE.key_point(key)
    outside = inside + np.array([5.0, 0.0, 0.0])
    with pytest.raises(OutOfRange, match="sample #"):
        pick_motion(CACHE, inside, outside, 6)


def test_pick_motion_monotone_progress():
    keys = sorted(CACHE.entries)
    a = CACHE.key_point(keys[len(keys) // 3])
    b = CACHE.key_point(keys[2 * len(keys) // 3])
    try:
        poses = pick_motion(CACHE, a, b, 5)
    except OutOfRange:
        pytest.skip("segment leaves the cached region for this asset build")
    hand = SKEL.index(HAND_JOINT)
    seg = b - a
    seg_n = seg / np.linalg.norm(seg)
    prev_t = -math.inf
    for p in poses:
        _, pos = forward_kinematics(SKEL, p)
        t = float(np.dot(pos[hand] - a, seg_n))
        assert t >= prev_t - CACHE.spacing / 2
        prev_t = t


# -- robot arm ------------------------------------------------------------------

def test_arm_fk_zero_angles_at_rest_offset():
    base = BasePose(2.0, -1.0, 0.7)
    ee = arm_forward_kinematics(ROBOT, np.zeros(7), base)
    expected = base.to_world(ROBOT.ee_rest_offset)
    assert np.allclose(ee, expected, atol=1e-12)


def test_arm_fk_base_rotation_equivariance():
    angles = np.array([0.3, -0.4, 0.2, 0.5, -0.1, 0.2, 0.05])
    ee0 = arm_forward_kinematics(ROBOT, angles, BasePose(0, 0, 0))
    ee90 = arm_forward_kinematics(ROBOT, angles, BasePose(0, 0, math.pi / 2))
    rotated = np.array([-ee0[1], ee0[0], ee0[2]])
    assert np.allclose(ee90, rotated, atol=1e-12)


def test_arm_fk_single_joint_hand_computed():
    # only the shoulder-pan joint rotated: rotate every downstream link about z
    theta = 0.7
    angles = np.zeros(7)
    angles[0] = theta
    ee = arm_forward_kinematics(ROBOT, angles, BasePose(0, 0, 0))
    mount = np.asarray(ROBOT.arm_mount)
    rest = np.asarray(ROBOT.ee_rest_offset)
    rel = rest - mount
    c, s = math.cos(theta), math.sin(theta)
    expected = mount + np.array([c * rel[0] - s * rel[1], s * rel[0] + c * rel[1], rel[2]])
    assert np.allclose(ee, expected, atol=1e-12)


def test_arm_angles_clamped():
    from tandemsim.kinematics.robot import clamp_arm_angles

    wild = np.full(7, 10.0)
    clamped, was = clamp_arm_angles(ROBOT, wild)
    assert was
    assert (clamped <= np.array([j.upper for j in ROBOT.arm_joints])).all()


def test_collision_discs_identity_and_mirror():
    discs0 = robot_collision_discs(ROBOT, BasePose(0, 0, 0))
    assert discs0[0][0] == pytest.approx(ROBOT.center_offset)
    assert discs0[1][0] == pytest.approx(ROBOT.front_offset)
    discs_pi = robot_collision_discs(ROBOT, BasePose(0, 0, math.pi))
    assert discs_pi[1][0][0] == pytest.approx(-ROBOT.front_offset[0])


def test_collision_discs_quarter_turn():
    discs = robot_collision_discs(ROBOT, BasePose(0, 0, math.pi / 2))
    (fx, fy), _ = discs[1]
    assert (fx, fy) == pytest.approx((0.0, ROBOT.front_offset[0]))
