"""Minimum finding steps for a trajectory-omniscient navigator.

The oracle knows the humanoid's full future trajectory and the map. It
resamples the trajectory into (approximately arc-)equally spaced waypoints,
computes for each waypoint index i the planner steps r_i from the robot
start, and returns the earliest i with r_i <= i. The humanoid trajectory
itself comes from re-simulating the scripted walker in a solo environment,
so it matches the live episode exactly (episodes terminate on contact before
any divergence could occur).
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import Unreachable
from ..scene import Scene, geodesic_distance
from .episodes import EpisodeSpec
from .rewards import RewardConfig

DEFAULT_WAYPOINT_SPACING = 0.5


class SoloHumanoidSimulator:
    """Incrementally simulates the robot-free humanoid trajectory so callers
    only pay for the horizon they actually inspect."""

    def __init__(self, scene: Scene, spec: EpisodeSpec, assets=None, cfg=None):
        from ..engine.sim import Environment
        from ..engine.world import SimConfig
        from ..kinematics.assets import default_assets
        from ..policies.socialnav import ScriptedWaypointWalker

        assets = assets or default_assets()
        cfg = cfg or SimConfig()
        solo = spec.solo_variant()
        self._env = Environment(scene, solo, assets=assets, cfg=cfg)
        self._walker = ScriptedWaypointWalker()
        self._walker.reset(scene, solo, self._env.world)
        self._hum_id = self._env.world.humanoid.agent_id
        self._positions = [tuple(self._env.world.humanoid.base.xy)]
        self.max_steps = spec.max_steps

    def extend_to(self, n_steps: int) -> np.ndarray:
        n_steps = min(n_steps, self.max_steps)
        while len(self._positions) - 1 < n_steps:
            self._env.step({self._hum_id: self._walker.act(self._env.world)})
            self._positions.append(tuple(self._env.world.humanoid.base.xy))
        return np.asarray(self._positions[: n_steps + 1])


def simulate_solo_humanoid(scene: Scene, spec: EpisodeSpec, assets=None, cfg=None,
                           n_steps: int | None = None) -> np.ndarray:
    """Humanoid base positions (n_steps+1, 2) of the robot-free episode."""
    sim = SoloHumanoidSimulator(scene, spec, assets=assets, cfg=cfg)
    return sim.extend_to(n_steps if n_steps is not None else spec.max_steps)


def select_oracle_waypoints(trajectory: np.ndarray, spacing: float,
                            step_distance: float) -> list[int]:
    """Step indices of the resampled trajectory: one waypoint per `spacing`
    meters of arc, with a time-based fallback (so a stationary humanoid still
    gets waypoints)."""
    time_gap = max(1, int(math.ceil(2.0 * spacing / step_distance)))
    selected = []
    cum = 0.0
    last = 0
    for i in range(1, len(trajectory)):
        cum += float(np.hypot(*(trajectory[i] - trajectory[i - 1])))
        if cum >= spacing - 1e-12 or (i - last) >= time_gap:
            selected.append(i)
            cum = 0.0
            last = i
    return selected


def oracle_finding_steps(
    spec: EpisodeSpec,
    scene: Scene,
    assets=None,
    cfg=None,
    reward_cfg: RewardConfig | None = None,
    waypoint_spacing: float = DEFAULT_WAYPOINT_SPACING,
    trajectory: np.ndarray | None = None,
) -> int:
    """Earliest step at which the omniscient navigator can have reached the
    humanoid; spec.max_steps when no step qualifies."""
    from ..engine.world import SimConfig
    from ..kinematics.assets import default_assets

    assets = assets or default_assets()
    cfg = cfg or SimConfig()
    reward_cfg = reward_cfg or RewardConfig()
    if spec.robot_start is None:
        raise ValueError("oracle finding steps need a robot start pose")
    metric_grid = scene.grid(cfg.cell_size, cfg.humanoid_radius)
    robot_grid = scene.grid(cfg.cell_size, assets.robot.plan_radius)
    lazy = None
    if trajectory is None:
        lazy = SoloHumanoidSimulator(scene, spec, assets=assets, cfg=cfg)
        trajectory = lazy.extend_to(min(128, spec.max_steps))
    start_xy = spec.robot_start.xy
    # already inside the finding band at reset
    d0 = geodesic_distance(metric_grid, start_xy, tuple(trajectory[0]))
    if reward_cfg.near_band <= d0 <= reward_cfg.far_band:
        return 0
    field = robot_grid.distance_field(robot_grid.snap(start_xy, snap_radius=1.2))
    try:
        d_start = field.at_point(tuple(trajectory[0]), snap_radius=1.2)
    except Exception:
        d_start = math.inf
    if math.isinf(d_start):
        raise Unreachable("humanoid start is unreachable from the robot start")
    step_distance = cfg.step_distance
    E = spec.max_steps if lazy is not None else min(spec.max_steps, len(trajectory) - 1)
    scanned = 0
    while True:
        horizon = len(trajectory) - 1
        for i in select_oracle_waypoints(trajectory[: horizon + 1], waypoint_spacing,
                                         step_distance):
            if i <= scanned:
                continue
            try:
                d = field.at_point(tuple(trajectory[i]), snap_radius=1.2)
            except Exception:
                continue
            if math.isinf(d):
                continue
            r = math.ceil(d / step_distance)
            if r <= i:
                return i
        scanned = horizon
        if horizon >= E or lazy is None:
            break
        trajectory = lazy.extend_to(min(E, horizon * 2))
    return E
