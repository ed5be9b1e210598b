"""Seeded episode generation for both tasks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import SpecError, Unreachable
from ..kinematics.assets import default_assets
from ..kinematics.transforms import BasePose
from ..policies.skills import approach_point
from ..scene import Scene, geodesic_distance, sample_navigable_point
from ..tasks.episodes import (
    EpisodeSpec,
    ObjectSpec,
    REARRANGE,
    SOCIALNAV,
    EVAL_MIN_SEPARATION,
    validate_spec,
)

PLACEMENT_RETRIES = 300
N_WANDER_WAYPOINTS = 64
OBJECT_JITTER = 0.05


def _in_spawn_region(scene: Scene, p) -> bool:
    if not scene.spawn_regions:
        return True
    return any(x0 <= p[0] <= x1 and y0 <= p[1] <= y1
               for x0, y0, x1, y1 in scene.spawn_regions)


def _sample_start(scene, grid, rng, spawn_only=True):
    from ..geometry import min_segment_distance

    segments = scene.all_segments()
    for _ in range(PLACEMENT_RETRIES):
        p = sample_navigable_point(grid, rng)
        if spawn_only and not _in_spawn_region(scene, p):
            continue
        # cell centers clear the inflation radius; the jittered point must too
        if min_segment_distance(p, segments) < grid.agent_radius + 0.01:
            continue
        return p
    raise SpecError(f"could not sample a spawn point in scene {scene.id!r}")


def generate_socialnav_spec(scene: Scene, seed: int, cfg=None, assets=None,
                            min_separation: float = EVAL_MIN_SEPARATION,
                            max_steps: int = 1500, episode_id: str = "") -> EpisodeSpec:
    from ..engine.world import SimConfig

    cfg = cfg or SimConfig()
    assets = assets or default_assets()
    rng = np.random.default_rng(seed)
    metric_grid = scene.grid(cfg.cell_size, cfg.humanoid_radius)
    robot_grid = scene.grid(cfg.cell_size, assets.robot.plan_radius)
    for _ in range(PLACEMENT_RETRIES):
        hum_xy = _sample_start(scene, metric_grid, rng)
        rob_xy = _sample_start(scene, robot_grid, rng)
        try:
            sep = geodesic_distance(metric_grid, rob_xy, hum_xy)
        except Unreachable:
            continue
        if sep < min_separation:
            continue
        waypoints = tuple(
            sample_navigable_point(metric_grid, rng) for _ in range(N_WANDER_WAYPOINTS)
        )
        spec = EpisodeSpec(
            task=SOCIALNAV,
            scene_id=scene.id,
            seed=seed,
            humanoid_start=BasePose(hum_xy[0], hum_xy[1], float(rng.uniform(-math.pi, math.pi))),
            robot_start=BasePose(rob_xy[0], rob_xy[1], float(rng.uniform(-math.pi, math.pi))),
            humanoid_waypoints=waypoints,
            max_steps=max_steps,
            min_separation=min_separation,
            episode_id=episode_id,
        )
        validate_spec(scene, spec, metric_grid, robot_grid)
        return spec
    raise SpecError(f"no valid social-nav placement found in scene {scene.id!r} (seed {seed})")


def generate_rearrange_spec(scene: Scene, seed: int, cfg=None, assets=None,
                            min_separation: float = EVAL_MIN_SEPARATION,
                            max_steps: int = 1500, episode_id: str = "",
                            humanoid_policy_id: str = "plan") -> EpisodeSpec:
    from ..engine.world import SimConfig

    cfg = cfg or SimConfig()
    assets = assets or default_assets()
    rng = np.random.default_rng(seed)
    metric_grid = scene.grid(cfg.cell_size, cfg.humanoid_radius)
    robot_grid = scene.grid(cfg.cell_size, assets.robot.plan_radius)
    open_recs = [r for r in scene.receptacles if r.open]
    if len(open_recs) < 4:
        raise SpecError(f"scene {scene.id!r} has fewer than 4 open receptacles")

    def usable(rec) -> bool:
        hum_ap = approach_point(metric_grid, rec.center, prefer=0.55, r_min=0.42, r_max=0.80)
        rob_ap = approach_point(robot_grid, rec.center, prefer=1.0, r_min=0.3, r_max=1.4)
        return hum_ap is not None and rob_ap is not None

    usable_recs = [r for r in open_recs if usable(r)]
    if len(usable_recs) < 4:
        raise SpecError(f"scene {scene.id!r} lacks 4 approachable open receptacles")
    for _ in range(PLACEMENT_RETRIES):
        order = rng.permutation(len(usable_recs))
        starts = [usable_recs[order[0]], usable_recs[order[1]]]
        goals = [usable_recs[order[2]], usable_recs[order[3]]]
        objects = []
        for k, (s, g) in enumerate(zip(starts, goals)):
            jx, jy = rng.uniform(-OBJECT_JITTER, OBJECT_JITTER, 2)
            gx, gy = rng.uniform(-OBJECT_JITTER, OBJECT_JITTER, 2)
            objects.append(ObjectSpec(
                object_id=f"obj_{k}",
                start_receptacle=s.name,
                goal_receptacle=g.name,
                start_pos=(s.center[0] + jx, s.center[1] + jy, s.height),
                goal_pos=(g.center[0] + gx, g.center[1] + gy, g.height),
            ))
        hum_xy = _sample_start(scene, metric_grid, rng)
        rob_xy = _sample_start(scene, robot_grid, rng)
        try:
            sep = geodesic_distance(metric_grid, rob_xy, hum_xy)
        except Unreachable:
            continue
        if sep < min_separation:
            continue
        spec = EpisodeSpec(
            task=REARRANGE,
            scene_id=scene.id,
            seed=seed,
            humanoid_start=BasePose(hum_xy[0], hum_xy[1], float(rng.uniform(-math.pi, math.pi))),
            robot_start=BasePose(rob_xy[0], rob_xy[1], float(rng.uniform(-math.pi, math.pi))),
            humanoid_policy_id=humanoid_policy_id,
            objects=tuple(objects),
            max_steps=max_steps,
            min_separation=min_separation,
            episode_id=episode_id,
        )
        validate_spec(scene, spec, metric_grid, robot_grid)
        return spec
    raise SpecError(f"no valid rearrange placement found in scene {scene.id!r} (seed {seed})")


@dataclass
class SplitConfig:
    task: str
    scenes: tuple[str, ...]
    episodes_per_scene: int = 50
    seed: int = 0
    max_steps: int = 1500
    min_separation: float = EVAL_MIN_SEPARATION


def generate_episodes(split: SplitConfig, scene_provider) -> list[EpisodeSpec]:
    """Seeded spec list; (seed, scene index, episode index) fully determine
    every spec."""
    specs = []
    gen = generate_socialnav_spec if split.task == SOCIALNAV else generate_rearrange_spec
    for si, scene_id in enumerate(split.scenes):
        scene = scene_provider(scene_id)
        for k in range(split.episodes_per_scene):
            seed = split.seed * 1_000_000 + si * 10_000 + k
            specs.append(gen(
                scene, seed,
                min_separation=split.min_separation,
                max_steps=split.max_steps,
                episode_id=f"{scene_id}#{k}",
            ))
    return specs
