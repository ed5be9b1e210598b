"""Episode specifications: seeded, fully self-describing task instances."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SpecError
from ..kinematics.transforms import BasePose
from ..scene import Scene, geodesic_distance

SOCIALNAV = "socialnav"
REARRANGE = "rearrange"
BENCH = "bench"  # benchmark layouts: agents + objects, no task rules

DEFAULT_MAX_STEPS = 1500
TRAIN_MIN_SEPARATION = 3.0
EVAL_MIN_SEPARATION = 5.0


@dataclass(frozen=True)
class ObjectSpec:
    object_id: str
    start_receptacle: str
    goal_receptacle: str
    start_pos: tuple[float, float, float]
    goal_pos: tuple[float, float, float]


@dataclass
class EpisodeSpec:
    task: str
    scene_id: str
    seed: int
    humanoid_start: BasePose | None
    robot_start: BasePose | None = None          # None -> solo humanoid episode
    extra_robot_starts: tuple = ()               # extra robot bases (benchmark compositions)
    humanoid_waypoints: tuple = ()               # socialnav wander targets
    humanoid_policy_id: str | None = None        # rearrange collaborator id
    objects: tuple[ObjectSpec, ...] = ()
    max_steps: int = DEFAULT_MAX_STEPS
    min_separation: float = EVAL_MIN_SEPARATION
    episode_id: str = ""

    def to_dict(self) -> dict:
        return {
            "schema": "episode/1",
            "episode_id": self.episode_id,
            "task": self.task,
            "scene_id": self.scene_id,
            "seed": self.seed,
            "humanoid_start": None if self.humanoid_start is None else
                              [self.humanoid_start.x, self.humanoid_start.y,
                               self.humanoid_start.heading],
            "robot_start": None if self.robot_start is None else
                           [self.robot_start.x, self.robot_start.y, self.robot_start.heading],
            "extra_robot_starts": [[b.x, b.y, b.heading] for b in self.extra_robot_starts],
            "humanoid_waypoints": [list(w) for w in self.humanoid_waypoints],
            "humanoid_policy_id": self.humanoid_policy_id,
            "objects": [
                {"object_id": o.object_id, "start_receptacle": o.start_receptacle,
                 "goal_receptacle": o.goal_receptacle, "start_pos": list(o.start_pos),
                 "goal_pos": list(o.goal_pos)}
                for o in self.objects
            ],
            "max_steps": self.max_steps,
            "min_separation": self.min_separation,
        }

    @staticmethod
    def from_dict(d: dict) -> "EpisodeSpec":
        rs = d.get("robot_start")
        hs = d.get("humanoid_start")
        return EpisodeSpec(
            task=d["task"],
            scene_id=d["scene_id"],
            seed=int(d["seed"]),
            humanoid_start=None if hs is None else BasePose(*hs),
            robot_start=None if rs is None else BasePose(*rs),
            extra_robot_starts=tuple(BasePose(*b) for b in d.get("extra_robot_starts", [])),
            humanoid_waypoints=tuple(tuple(w) for w in d.get("humanoid_waypoints", [])),
            humanoid_policy_id=d.get("humanoid_policy_id"),
            objects=tuple(
                ObjectSpec(o["object_id"], o["start_receptacle"], o["goal_receptacle"],
                           tuple(o["start_pos"]), tuple(o["goal_pos"]))
                for o in d.get("objects", [])
            ),
            max_steps=int(d.get("max_steps", DEFAULT_MAX_STEPS)),
            min_separation=float(d.get("min_separation", EVAL_MIN_SEPARATION)),
            episode_id=d.get("episode_id", ""),
        )

    def solo_variant(self) -> "EpisodeSpec":
        """Same episode without the robot (for solo-humanoid reference runs)."""
        return EpisodeSpec(
            task=self.task, scene_id=self.scene_id, seed=self.seed,
            humanoid_start=self.humanoid_start, robot_start=None,
            humanoid_waypoints=self.humanoid_waypoints,
            humanoid_policy_id=self.humanoid_policy_id, objects=self.objects,
            max_steps=self.max_steps, min_separation=self.min_separation,
            episode_id=self.episode_id + "/solo" if self.episode_id else "",
        )


def validate_spec(scene: Scene, spec: EpisodeSpec, metric_grid, robot_grid=None):
    """Raise SpecError when the spec cannot be instantiated in the scene."""
    if spec.task not in (SOCIALNAV, REARRANGE, BENCH):
        raise SpecError(f"unknown task {spec.task!r}")
    if scene.id != spec.scene_id:
        raise SpecError(f"spec scene {spec.scene_id!r} does not match scene {scene.id!r}")
    if spec.humanoid_start is not None and not metric_grid.is_free_point(spec.humanoid_start.xy):
        raise SpecError("humanoid start is not navigable")
    if spec.robot_start is not None:
        grid = robot_grid if robot_grid is not None else metric_grid
        if not grid.is_free_point(spec.robot_start.xy):
            raise SpecError("robot start is not navigable (or inside a wall)")
        if spec.humanoid_start is not None and spec.min_separation > 0:
            from ..errors import Unreachable

            try:
                sep = geodesic_distance(metric_grid, spec.robot_start.xy,
                                        spec.humanoid_start.xy)
            except Unreachable as exc:
                raise SpecError(f"robot cannot reach the humanoid start ({exc})") from exc
            if sep < spec.min_separation - 1e-9:
                raise SpecError(
                    f"start separation {sep:.2f} m below required {spec.min_separation} m"
                )
    if spec.task == REARRANGE:
        if len(spec.objects) != 2:
            raise SpecError("rearrange specs require exactly 2 objects")
        starts = [o.start_receptacle for o in spec.objects]
        if len(set(starts)) != len(starts):
            raise SpecError("rearrange objects must start on distinct receptacles")
        for o in spec.objects:
            for rec_name in (o.start_receptacle, o.goal_receptacle):
                try:
                    rec = scene.receptacle(rec_name)
                except KeyError:
                    raise SpecError(f"receptacle {rec_name!r} not in scene") from None
                if not rec.open:
                    raise SpecError(f"receptacle {rec_name!r} is not open")
            if o.start_receptacle == o.goal_receptacle:
                raise SpecError(f"object {o.object_id!r} has goal == start receptacle")
    if spec.task == SOCIALNAV:
        if spec.humanoid_start is None:
            raise SpecError("socialnav specs require a humanoid")
        if not spec.humanoid_waypoints:
            raise SpecError("socialnav specs require humanoid waypoints")
