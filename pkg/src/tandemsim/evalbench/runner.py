"""Episode execution: policies in, trace out."""

from __future__ import annotations

import math

import numpy as np

from ..engine.sim import Environment
from ..engine.world import SimConfig
from ..geometry import dist2d
from ..kinematics.assets import default_assets
from ..policies.base import NavProbe
from ..tasks.episodes import EpisodeSpec, REARRANGE, SOCIALNAV
from ..tasks.rewards import RewardConfig, facing_dot
from ..tasks.trace import (
    EpisodeTrace,
    NavStepRecord,
    RearrangeStepRecord,
    TERMINAL_COLLISION,
    TERMINAL_SUCCESS,
    TERMINAL_TIMEOUT,
)

# geodesic distances beyond this horizon are recorded as None (no metric,
# reward band, or policy switch depends on their exact value)
DELTA_HORIZON = 3.6


class DeltaProbe:
    """Per-step geodesic robot-humanoid distance.

    When the straight segment is traversable the geodesic equals the
    straight-line distance (cheap); otherwise a range-limited planner field
    sourced at the humanoid cell supplies the around-the-wall distance."""

    def __init__(self, grid, horizon: float = DELTA_HORIZON):
        self.grid = grid
        self.horizon = horizon

    def delta(self, humanoid_xy, robot_xy) -> float | None:
        d_straight = dist2d(humanoid_xy, robot_xy)
        if d_straight > self.horizon:
            return None
        if self.grid.line_is_free(humanoid_xy, robot_xy):
            return d_straight
        try:
            src = self.grid.snap(humanoid_xy, snap_radius=0.6)
            dst = self.grid.snap(robot_xy, snap_radius=0.6)
        except Exception:
            return None
        dist, _ = self.grid.plan_field(src, limit=self.horizon)
        d = float(dist[self.grid.flat(dst)])
        return None if math.isinf(d) else d


def run_episode(
    scene,
    spec: EpisodeSpec,
    robot_policy=None,
    humanoid_policy=None,
    assets=None,
    cfg: SimConfig | None = None,
    reward_cfg: RewardConfig | None = None,
    on_step=None,
) -> EpisodeTrace:
    """Run one episode to termination and return its trace.

    Social navigation terminates on robot-humanoid contact or timeout;
    rearrangement terminates when both objects rest at their goals, else
    timeout. `on_step(env, events, record)` is called after every step
    (recording hook)."""
    assets = assets or default_assets()
    cfg = cfg or SimConfig()
    reward_cfg = reward_cfg or RewardConfig()
    env = Environment(scene, spec, assets=assets, cfg=cfg)
    world = env.world
    for policy in (robot_policy, humanoid_policy):
        if policy is not None:
            policy.reset(scene, spec, world)
    probe_src = DeltaProbe(env.metric_grid) if spec.task == SOCIALNAV else None
    records = []
    terminal = TERMINAL_TIMEOUT
    probe = NavProbe()
    if probe_src is not None and world.robot is not None:
        probe = NavProbe(
            delta=probe_src.delta(world.humanoid.base.xy, world.robot.base.xy),
            humanoid_xy=world.humanoid.base.xy,
        )
    for _t in range(spec.max_steps):
        actions = {}
        if humanoid_policy is not None and world.humanoid is not None:
            cmd = humanoid_policy.act(world, probe)
            if cmd is not None:
                actions[world.humanoid.agent_id] = cmd
        prev_robot_xy = None
        if robot_policy is not None and world.robot is not None:
            prev_robot_xy = world.robot.base.xy
            cmd = robot_policy.act(world, probe)
            if cmd is not None:
                actions[world.robot.agent_id] = cmd
        events = env.step(actions)
        t = world.step_index
        if spec.task == SOCIALNAV:
            robot = world.robot
            hum = world.humanoid
            delta = probe_src.delta(hum.base.xy, robot.base.xy)
            speed = (
                dist2d(prev_robot_xy, robot.base.xy) / cfg.dt
                if prev_robot_xy is not None else 0.0
            )
            rec = NavStepRecord(
                t=t,
                robot_xy=robot.base.xy,
                robot_heading=robot.base.heading,
                human_xy=hum.base.xy,
                cmd_linear=robot.last_cmd[0],
                speed=speed,
                delta=delta,
                facing=facing_dot(robot.base, hum.base.xy),
                collision=events.robot_humanoid_collision(),
            )
            probe = NavProbe(delta=delta, humanoid_xy=hum.base.xy)
        else:
            robot = world.robot
            rec = RearrangeStepRecord(
                t=t,
                robot_xy=None if robot is None else robot.base.xy,
                human_xy=world.humanoid.base.xy,
                picks=list(events.picks),
                places=list(events.places),
                collision=events.robot_humanoid_collision(),
            )
        records.append(rec)
        if on_step is not None:
            on_step(env, events, rec)
        if spec.task == SOCIALNAV and events.robot_humanoid_collision():
            terminal = TERMINAL_COLLISION
            break
        if spec.task == REARRANGE:
            if all(o.parent[0] == "goal" for o in world.objects.values()):
                terminal = TERMINAL_SUCCESS
                break
    return EpisodeTrace(
        task=spec.task,
        spec=spec,
        records=records,
        terminal_cause=terminal,
        steps=world.step_index,
    )
