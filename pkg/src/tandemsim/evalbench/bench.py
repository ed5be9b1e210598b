"""Throughput benchmark: random-action rollouts, steady-state timing.

Protocol: per configuration cell, roll 300 random-action steps per agent,
repeat over `runs` runs, report env-steps/second as mean +/- standard error.
Setup and reset time is excluded; only the stepping loop is timed. Multi-env
cells fan environments out across worker processes (one timed rollout each,
aggregate throughput = total steps / slowest worker).
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from ..engine.sim import Environment
from ..engine.vector_env import WorkerVectorEnv
from ..engine.world import SimConfig
from ..errors import SpecError
from ..fixtures import fixture_for_class
from ..kinematics.assets import default_assets
from ..kinematics.transforms import BasePose
from ..policies.random_actions import make_random_action_fn
from ..scene import sample_navigable_point, scene_to_dict
from ..tasks.episodes import BENCH, EpisodeSpec, ObjectSpec
from .report import BenchCell, BenchReport

BENCH_STEPS = 300
AGENT_SETUPS = ("robot", "humanoid", "robot-robot", "robot-humanoid")


@dataclass
class BenchConfig:
    scene_classes: tuple = ("small", "medium", "large")
    object_counts: tuple = (2,)
    agent_setups: tuple = ("robot", "humanoid", "robot-humanoid")
    env_counts: tuple = (1, 16)
    runs: int = 10
    steps: int = BENCH_STEPS
    seed: int = 0
    workers: int | None = None  # defaults to min(env count, cpu count)

    def __post_init__(self):
        if self.runs < 2:
            raise SpecError("benchmark needs at least 2 runs for error bars")


def _bench_spec(scene, n_objects: int, agents: str, seed: int) -> EpisodeSpec:
    """A rearrange-flavored spec used purely as a world layout; random
    velocity actions drive whatever agents the composition includes."""
    rng = np.random.default_rng(seed)
    assets = default_assets()
    metric_grid = scene.grid(0.10, 0.30)
    robot_grid = scene.grid(0.10, assets.robot.plan_radius)
    open_recs = [r for r in scene.receptacles if r.open]
    objects = []
    for k in range(n_objects):
        rec = open_recs[k % len(open_recs)]
        goal = open_recs[(k + 1) % len(open_recs)]
        objects.append(ObjectSpec(
            object_id=f"obj_{k}", start_receptacle=rec.name, goal_receptacle=goal.name,
            start_pos=rec.surface_point(), goal_pos=goal.surface_point(),
        ))
    if agents not in AGENT_SETUPS:
        raise SpecError(f"unknown agent setup {agents!r}")
    placed: list = []
    segments = scene.all_segments()

    def place(grid) -> BasePose:
        from ..geometry import min_segment_distance

        for _ in range(300):
            cand = sample_navigable_point(grid, rng)
            # cell centers clear the inflation radius; the jittered point must too
            if min_segment_distance(cand, segments) < grid.agent_radius + 0.01:
                continue
            if all((cand[0] - p[0]) ** 2 + (cand[1] - p[1]) ** 2 > 4.0 for p in placed):
                placed.append(cand)
                return BasePose(cand[0], cand[1], 0.0)
        raise SpecError("could not place benchmark agents")

    humanoid = place(metric_grid) if "humanoid" in agents else None
    robot = place(robot_grid) if agents.startswith("robot") else None
    extra = (place(robot_grid),) if agents == "robot-robot" else ()
    return EpisodeSpec(
        task=BENCH, scene_id=scene.id, seed=seed,
        humanoid_start=humanoid, robot_start=robot, extra_robot_starts=extra,
        objects=tuple(objects), max_steps=10 ** 9, min_separation=0.0,
        humanoid_policy_id="bench",
    )


def _make_action_fn(env, setup: str, seed: int):
    from ..engine.world import BaseVelocity

    rng = np.random.default_rng(seed)
    ids = list(env.world.agents.keys())

    def sample():
        for aid in ids:
            env.observe(aid)
        return {aid: BaseVelocity(float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
                for aid in ids}

    return sample


def _time_single_env(scene, n_objects, setup, steps, seed) -> float:
    spec = _bench_spec(scene, n_objects, setup, seed)
    env = Environment(scene, spec)
    fn = _make_action_fn(env, setup, seed + 101)
    # steady state: exclude construction; warm the planner caches
    env.step(fn())
    t0 = time.perf_counter()
    for _ in range(steps):
        env.step(fn())
    elapsed = time.perf_counter() - t0
    return steps / elapsed


def _time_multi_env(scene, n_objects, setup, steps, seed, n_envs, workers) -> float:
    specs = [_bench_spec(scene, n_objects, setup, seed + i) for i in range(n_envs)]
    vec = WorkerVectorEnv(specs, [scene_to_dict(scene)], workers=workers)
    try:
        total, slowest = vec.rollout(steps, seed + 500)
        return total / slowest
    finally:
        vec.close()


def benchmark(cfg: BenchConfig, progress=None) -> BenchReport:
    report = BenchReport(config={
        "scene_classes": list(cfg.scene_classes), "object_counts": list(cfg.object_counts),
        "agent_setups": list(cfg.agent_setups), "env_counts": list(cfg.env_counts),
        "runs": cfg.runs, "steps": cfg.steps, "seed": cfg.seed,
    })
    workers = cfg.workers or max(1, min(os.cpu_count() or 1, 16))
    for scene_class in cfg.scene_classes:
        scene = fixture_for_class(scene_class)
        scene.grid(0.10, 0.30).csr_graph()
        for n_objects in cfg.object_counts:
            for setup in cfg.agent_setups:
                for n_envs in cfg.env_counts:
                    cell = BenchCell(scene_class, n_objects, setup, n_envs)
                    for run in range(cfg.runs):
                        seed = cfg.seed + 7919 * run
                        if n_envs == 1:
                            sps = _time_single_env(scene, n_objects, setup,
                                                   cfg.steps, seed)
                        else:
                            sps = _time_multi_env(scene, n_objects, setup, cfg.steps,
                                                  seed, n_envs, workers)
                        cell.runs.append(sps)
                    report.cells.append(cell)
                    if progress:
                        progress(cell)
    return report
