from .transforms import BasePose
from .skeleton import (
    HumanoidSkeleton,
    Joint,
    SkeletonPose,
    default_skeleton,
    forward_kinematics,
)
from .skinning import SkinMesh, default_skin_mesh, skin_mesh
from .walk import WalkClip, WalkState, default_walk_clip, step_walk
from .reach import ReachPoseCache, build_reach_cache, pick_motion, reach_pose
from .robot import (
    RobotModel,
    arm_forward_kinematics,
    default_robot,
    robot_collision_discs,
)
from .assets import AssetBundle, default_assets

__all__ = [
    "AssetBundle",
    "BasePose",
    "HumanoidSkeleton",
    "Joint",
    "ReachPoseCache",
    "RobotModel",
    "SkeletonPose",
    "SkinMesh",
    "WalkClip",
    "WalkState",
    "arm_forward_kinematics",
    "build_reach_cache",
    "default_assets",
    "default_robot",
    "default_skeleton",
    "default_skin_mesh",
    "default_walk_clip",
    "forward_kinematics",
    "pick_motion",
    "reach_pose",
    "robot_collision_discs",
    "skin_mesh",
    "step_walk",
]
