"""World state, action commands, observations, and step events."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..kinematics.transforms import BasePose
from ..kinematics.skeleton import SkeletonPose

ROBOT = "robot"
HUMANOID = "humanoid"


@dataclass
class SimConfig:
    dt: float = 0.1
    max_linear: float = 2.5       # m/s, both agents
    max_angular: float = 2.5      # rad/s, both agents
    cell_size: float = 0.10
    humanoid_radius: float = 0.30
    grasp_threshold: float = 0.15
    goal_snap: float = 0.15
    arm_delta_scale: float = 5e-2
    depth_rays: int = 224
    depth_hfov: float = math.radians(55.0)
    depth_max_range: float = 10.0
    detector_range: float = 10.0
    facing_tol: float = 0.1
    hand_speed: float = 1.0       # m/s along reach segments
    approach_distance: float = 0.55
    arrival_tol: float = 0.15
    lookahead: float = 1.0
    compute_observations: bool = False

    @property
    def step_distance(self) -> float:
        return self.max_linear * self.dt


# -- actions -----------------------------------------------------------


@dataclass
class BaseVelocity:
    """Normalized base velocity command; components are clipped to [-1, 1]
    and scaled by the configured maximum speeds."""

    linear: float
    angular: float


@dataclass
class HumanoidHighLevel:
    """High-level humanoid command, executed by the in-engine controller."""

    kind: str  # "navigate_to" | "pick" | "place" | "stand_still"
    target: tuple[float, float] | None = None
    object_id: str | None = None
    position: tuple[float, float, float] | None = None
    speed: float = 1.0  # walk-speed factor for population diversity
    face: tuple[float, float] | None = None  # turn toward this point after arrival

    @staticmethod
    def navigate_to(target, speed: float = 1.0, face=None) -> "HumanoidHighLevel":
        return HumanoidHighLevel("navigate_to", target=(float(target[0]), float(target[1])),
                                 speed=speed,
                                 face=None if face is None else (float(face[0]), float(face[1])))

    @staticmethod
    def pick(object_id: str) -> "HumanoidHighLevel":
        return HumanoidHighLevel("pick", object_id=object_id)

    @staticmethod
    def place(object_id: str, position) -> "HumanoidHighLevel":
        return HumanoidHighLevel("place", object_id=object_id,
                                 position=tuple(float(v) for v in position))

    @staticmethod
    def stand_still() -> "HumanoidHighLevel":
        return HumanoidHighLevel("stand_still")


@dataclass
class ArmDelta:
    """Delta arm-joint command in [-1, 1], scaled by arm_delta_scale rad."""

    deltas: np.ndarray
    grip: bool = False


@dataclass
class OraclePick:
    """Privileged instantaneous pick: succeeds when the agent is within the
    skill radius of the object and holds nothing; otherwise a no-op event."""

    object_id: str
    radius: float = 1.5


@dataclass
class OraclePlace:
    """Privileged instantaneous place at a position within the skill radius."""

    object_id: str
    position: tuple[float, float, float]
    radius: float = 1.5


ActionCommand = object  # BaseVelocity | HumanoidHighLevel | ArmDelta | OraclePick | OraclePlace | None


# -- events ------------------------------------------------------------


@dataclass
class StepEvents:
    collisions: list = field(default_factory=list)     # canonical (a, b) name pairs
    picks: list = field(default_factory=list)          # (agent_id, object_id, first)
    places: list = field(default_factory=list)         # (agent_id, object_id, at_goal, first)
    noops: list = field(default_factory=list)          # (agent_id, reason)
    aborts: list = field(default_factory=list)         # (agent_id, skill, reason)
    clamps: list = field(default_factory=list)         # agent_id with clamped arm command
    arrivals: list = field(default_factory=list)       # agent_id that reached a nav target

    def add_collision(self, a: str, b: str):
        pair = (a, b) if a <= b else (b, a)
        if pair not in self.collisions:
            self.collisions.append(pair)

    def robot_humanoid_collision(self) -> bool:
        return any(
            a.startswith("human") and b.startswith("robot")
            or a.startswith("robot") and b.startswith("human")
            for a, b in self.collisions
        )


# -- state -------------------------------------------------------------


@dataclass
class AgentState:
    agent_id: str
    kind: str
    base: BasePose
    start_base: BasePose
    arm_angles: np.ndarray | None = None     # robots
    walk_phase: float = 0.0                  # humanoids
    pose: SkeletonPose | None = None         # humanoids, world frame
    holding: str | None = None
    last_cmd: tuple[float, float] = (0.0, 0.0)

    def copy_shallow(self) -> "AgentState":
        return AgentState(
            self.agent_id, self.kind, self.base.copy(), self.start_base.copy(),
            None if self.arm_angles is None else self.arm_angles.copy(),
            self.walk_phase,
            None if self.pose is None else self.pose.copy(),
            self.holding, self.last_cmd,
        )


@dataclass
class ObjectState:
    object_id: str
    position: np.ndarray               # (3,)
    parent: tuple                      # ("receptacle", name) | ("goal", name) | ("held", agent_id)

    def held_by(self) -> str | None:
        return self.parent[1] if self.parent[0] == "held" else None


@dataclass
class Observation:
    depth: np.ndarray | None                   # (R,), meters in (0, max_range]
    humanoid_gps: tuple[float, float] | None   # (distance m, relative heading rad)
    humanoid_detector: int
    arm_angles: np.ndarray | None
    egomotion: tuple[float, float, float]      # (dx, dy, dheading) in the start frame
    holding: int
    ee_to_rest: np.ndarray | None              # (3,)
    privileged: object = None                  # WorldState when granted


@dataclass
class WorldState:
    scene: object
    spec: object
    agents: dict               # agent_id -> AgentState, iteration order = step order
    objects: dict              # object_id -> ObjectState
    step_index: int = 0
    sim_time: float = 0.0
    rng: np.random.Generator | None = None
    rng_draws: int = 0
    picked_once: set = field(default_factory=set)
    placed_goal_once: set = field(default_factory=set)

    @property
    def humanoid(self) -> AgentState | None:
        for a in self.agents.values():
            if a.kind == HUMANOID:
                return a
        return None

    @property
    def robot(self) -> AgentState | None:
        for a in self.agents.values():
            if a.kind == ROBOT:
                return a
        return None

    def object_goal(self, object_id: str):
        for o in self.spec.objects:
            if o.object_id == object_id:
                return o
        raise KeyError(object_id)
