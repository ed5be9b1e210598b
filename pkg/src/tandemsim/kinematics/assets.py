"""Versioned JSON asset formats: skeleton/1, walkclip/1, reachcache/1, robot/1.

Default assets are generated procedurally and shipped with the package; any
file in the same format can be dropped in instead (e.g. motion-capture
derived walk clips).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ParseError
from .reach import ReachPoseCache, build_reach_cache
from .robot import ArmJoint, RobotModel, default_robot
from .skeleton import HumanoidSkeleton, Joint, SkeletonPose, default_skeleton
from .skinning import SkinMesh, default_skin_mesh
from .walk import WalkClip, default_walk_clip

SKELETON_SCHEMA = "skeleton/1"
WALKCLIP_SCHEMA = "walkclip/1"
REACHCACHE_SCHEMA = "reachcache/1"
ROBOT_SCHEMA = "robot/1"


def _expect_schema(raw: dict, schema: str, origin: str):
    if not isinstance(raw, dict) or raw.get("schema") != schema:
        raise ParseError(f"{origin}: expected schema {schema!r}")


def skeleton_to_dict(skel: HumanoidSkeleton, mesh: SkinMesh | None = None) -> dict:
    d = {
        "schema": SKELETON_SCHEMA,
        "joints": [
            {"name": j.name, "parent": j.parent, "pos": list(j.rest_pos),
             "quat": list(j.rest_quat)}
            for j in skel.joints
        ],
    }
    if mesh is not None:
        d["skin"] = {
            "vertices": mesh.rest_vertices.tolist(),
            "joint_indices": mesh.joint_indices.tolist(),
            "weights": mesh.weights.tolist(),
        }
    return d


def skeleton_from_dict(raw: dict, origin: str = "<dict>") -> tuple[HumanoidSkeleton, SkinMesh | None]:
    _expect_schema(raw, SKELETON_SCHEMA, origin)
    try:
        joints = tuple(
            Joint(j["name"], int(j["parent"]), tuple(j["pos"]), tuple(j.get("quat", (1, 0, 0, 0))))
            for j in raw["joints"]
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{origin}: malformed skeleton ({exc})") from exc
    skel = HumanoidSkeleton(joints)
    mesh = None
    if "skin" in raw:
        s = raw["skin"]
        mesh = SkinMesh(np.asarray(s["vertices"]), np.asarray(s["joint_indices"]),
                        np.asarray(s["weights"]))
    return skel, mesh


def _pose_to_dict(p: SkeletonPose) -> dict:
    return {"root_pos": p.root_pos.tolist(), "root_quat": p.root_quat.tolist(),
            "joint_quats": p.joint_quats.tolist()}


def _pose_from_dict(d: dict) -> SkeletonPose:
    return SkeletonPose(np.asarray(d["root_pos"]), np.asarray(d["root_quat"]),
                        np.asarray(d["joint_quats"]))


def walkclip_to_dict(clip: WalkClip) -> dict:
    return {
        "schema": WALKCLIP_SCHEMA,
        "frame_duration": clip.frame_duration,
        "loop_tolerance": clip.loop_tolerance,
        "displacements": clip.displacements.tolist(),
        "frames": [_pose_to_dict(f) for f in clip.frames],
    }


def walkclip_from_dict(raw: dict, origin: str = "<dict>") -> WalkClip:
    _expect_schema(raw, WALKCLIP_SCHEMA, origin)
    try:
        return WalkClip(
            frames=tuple(_pose_from_dict(f) for f in raw["frames"]),
            displacements=np.asarray(raw["displacements"]),
            frame_duration=float(raw["frame_duration"]),
            loop_tolerance=float(raw.get("loop_tolerance", 0.8)),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{origin}: malformed walk clip ({exc})") from exc


def reachcache_to_dict(cache: ReachPoseCache) -> dict:
    return {
        "schema": REACHCACHE_SCHEMA,
        "spacing": cache.spacing,
        "origin": cache.origin.tolist(),
        "n_joints": cache.n_joints,
        "hand_joint": cache.hand_joint,
        "entries": [
            {"key": list(k), "joint_quats": q.tolist()} for k, q in sorted(cache.entries.items())
        ],
    }


def reachcache_from_dict(raw: dict, origin: str = "<dict>") -> ReachPoseCache:
    _expect_schema(raw, REACHCACHE_SCHEMA, origin)
    try:
        entries = {
            tuple(int(v) for v in e["key"]): np.asarray(e["joint_quats"], dtype=np.float64)
            for e in raw["entries"]
        }
        return ReachPoseCache(
            spacing=float(raw["spacing"]),
            origin=np.asarray(raw["origin"], dtype=np.float64),
            entries=entries,
            n_joints=int(raw["n_joints"]),
            hand_joint=str(raw.get("hand_joint", "right_wrist")),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{origin}: malformed reach cache ({exc})") from exc


def robot_to_dict(robot: RobotModel) -> dict:
    return {
        "schema": ROBOT_SCHEMA,
        "center": {"offset": list(robot.center_offset), "radius": robot.center_radius},
        "front": {"offset": list(robot.front_offset), "radius": robot.front_radius},
        "arm_mount": list(robot.arm_mount),
        "arm_joints": [
            {"axis": list(j.axis), "offset": list(j.offset), "lower": j.lower, "upper": j.upper}
            for j in robot.arm_joints
        ],
        "ee_rest_offset": list(robot.ee_rest_offset),
    }


def robot_from_dict(raw: dict, origin: str = "<dict>") -> RobotModel:
    _expect_schema(raw, ROBOT_SCHEMA, origin)
    try:
        return RobotModel(
            center_offset=tuple(raw["center"]["offset"]),
            center_radius=float(raw["center"]["radius"]),
            front_offset=tuple(raw["front"]["offset"]),
            front_radius=float(raw["front"]["radius"]),
            arm_mount=tuple(raw["arm_mount"]),
            arm_joints=tuple(
                ArmJoint(tuple(j["axis"]), tuple(j["offset"]), float(j["lower"]), float(j["upper"]))
                for j in raw["arm_joints"]
            ),
            ee_rest_offset=tuple(raw["ee_rest_offset"]),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{origin}: malformed robot model ({exc})") from exc


def load_json(path) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as exc:
        raise ParseError(f"{path}: cannot read asset ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def save_json(path, payload: dict):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f)
        f.write("\n")


class AssetBundle:
    """The set of embodiment assets one simulation needs."""

    def __init__(self, skeleton: HumanoidSkeleton, mesh: SkinMesh | None,
                 walk_clip: WalkClip, reach_cache: ReachPoseCache, robot: RobotModel):
        self.skeleton = skeleton
        self.mesh = mesh
        self.walk_clip = walk_clip
        self.reach_cache = reach_cache
        self.robot = robot


_default_bundle: AssetBundle | None = None


def default_assets() -> AssetBundle:
    """Packaged default assets; falls back to procedural generation when the
    data files are absent (e.g. in a source checkout before fixtures are built)."""
    global _default_bundle
    if _default_bundle is None:
        data_dir = Path(__file__).resolve().parent.parent / "data" / "assets"
        try:
            skel, mesh = skeleton_from_dict(load_json(data_dir / "skeleton_default.json"))
            clip = walkclip_from_dict(load_json(data_dir / "walkclip_default.json"))
            cache = reachcache_from_dict(load_json(data_dir / "reachcache_default.json"))
            robot = robot_from_dict(load_json(data_dir / "robot_default.json"))
        except ParseError:
            skel = default_skeleton()
            mesh = default_skin_mesh(skel)
            clip = default_walk_clip(skel)
            cache = build_reach_cache(skel)
            robot = default_robot()
        _default_bundle = AssetBundle(skel, mesh, clip, cache, robot)
    return _default_bundle


def write_default_assets(data_dir) -> list[str]:
    data_dir = Path(data_dir)
    skel = default_skeleton()
    mesh = default_skin_mesh(skel)
    clip = default_walk_clip(skel)
    cache = build_reach_cache(skel)
    robot = default_robot()
    written = []
    for name, payload in [
        ("skeleton_default.json", skeleton_to_dict(skel, mesh)),
        ("walkclip_default.json", walkclip_to_dict(clip)),
        ("reachcache_default.json", reachcache_to_dict(cache)),
        ("robot_default.json", robot_to_dict(robot)),
    ]:
        save_json(data_dir / name, payload)
        written.append(name)
    return written
