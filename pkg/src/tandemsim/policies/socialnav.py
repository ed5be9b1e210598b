"""Social-navigation controllers: the scripted wandering humanoid and the
privileged find-and-follow heuristic expert."""

from __future__ import annotations

import logging
import math

import numpy as np

from ..engine.world import BaseVelocity, HumanoidHighLevel
from ..geometry import dist2d, wrap_angle
from ..kinematics.transforms import BasePose
from ..scene import OccupancyGrid
from .base import NavProbe, Policy

log = logging.getLogger(__name__)

WAYPOINT_ARRIVAL = 0.2
WAYPOINT_STUCK_LIMIT = 80


class ScriptedWaypointWalker(Policy):
    """Walks the humanoid through the spec's精 waypoint list in order,
    advancing on arrival (0.2 m) and skipping waypoints it cannot make
    progress toward. The list cycles when exhausted, so the trajectory is a
    pure function of the spec."""

    agent_id = "human_0"

    def __init__(self):
        self.idx = 0
        self.stuck = 0
        self.last_xy = None

    def reset(self, scene, spec, world):
        self.waypoints = list(spec.humanoid_waypoints)
        self.idx = 0
        self.stuck = 0
        self.last_xy = None

    def act(self, world, probe=None):
        hum = world.humanoid
        if not self.waypoints:
            return HumanoidHighLevel.stand_still()
        wp = self.waypoints[self.idx % len(self.waypoints)]
        if dist2d(hum.base.xy, wp) <= WAYPOINT_ARRIVAL:
            self.idx += 1
            self.stuck = 0
            wp = self.waypoints[self.idx % len(self.waypoints)]
        if self.last_xy is not None and dist2d(self.last_xy, hum.base.xy) < 1e-4:
            self.stuck += 1
            if self.stuck >= WAYPOINT_STUCK_LIMIT:
                self.idx += 1
                self.stuck = 0
                wp = self.waypoints[self.idx % len(self.waypoints)]
        else:
            self.stuck = 0
        self.last_xy = hum.base.xy
        return HumanoidHighLevel.navigate_to(wp)


class HeuristicExpertSocnav(Policy):
    """Map-privileged expert: plans to the humanoid's current position and
    drives the path at max speed; inside 1.5 m it backs up while turning to
    face the humanoid."""

    agent_id = "robot_0"

    def __init__(self, backup_distance: float = 1.5, backup_linear: float = -1.0,
                 replan_threshold: float = 0.5):
        self.backup_distance = backup_distance
        self.backup_linear = backup_linear
        self.replan_threshold = replan_threshold

    def reset(self, scene, spec, world):
        from ..kinematics.assets import default_assets

        self.grid: OccupancyGrid = scene.grid(0.10, default_assets().robot.plan_radius)
        self._field = None
        self._pred = None
        self._plan_src_xy = None

    # -- helpers ---------------------------------------------------------

    def _replan(self, humanoid_xy):
        try:
            src = self.grid.snap(humanoid_xy, snap_radius=1.2)
        except Exception:
            self._field = None
            return
        dist, pred = self.grid.plan_field(src)
        self._field = dist
        self._pred = pred
        self._plan_src_xy = humanoid_xy

    def _steer_target(self, base: BasePose):
        """Next clear point along the predecessor chain toward the humanoid."""
        grid = self.grid
        try:
            cell = grid.snap(base.xy, snap_radius=1.2)
        except Exception:
            return None
        flat = grid.flat(cell)
        if not math.isfinite(self._field[flat]):
            return None
        chain = []
        cur = flat
        for _ in range(40):  # up to ~4 m of 0.1 m cells
            nxt = self._pred[cur]
            if nxt < 0:
                break
            chain.append(int(nxt))
            cur = int(nxt)
        if not chain:
            return None
        best = grid.center_of(grid.unflat(chain[0]))
        for flat_idx in chain:
            pt = grid.center_of(grid.unflat(flat_idx))
            if dist2d(base.xy, pt) > 1.0:
                break
            if self._clear_line(base.xy, pt):
                best = pt
        return best

    def _clear_line(self, a, b) -> bool:
        return self.grid.line_is_free(a, b)

    @staticmethod
    def _drive_towards(base: BasePose, target, backward: bool = False) -> BaseVelocity:
        bearing = math.atan2(target[1] - base.y, target[0] - base.x)
        err = wrap_angle(bearing - base.heading)
        # one-step angular command saturates at the cap; dt and max_angular
        # are engine-side, so normalize by a nominal full-turn step of 0.25 rad
        ang = max(-1.0, min(1.0, err / 0.25))
        if backward:
            return BaseVelocity(0.0, ang)
        lin = math.cos(err) if abs(err) < math.pi / 2 else 0.0
        return BaseVelocity(max(0.0, lin), ang)

    # -- policy ------------------------------------------------------------

    def act(self, world, probe: NavProbe | None = None):
        robot = world.robot
        hum = world.humanoid
        if robot is None or hum is None:
            return None
        delta = probe.delta if probe is not None else None
        # collision avoidance reacts to the fresh straight-line distance; the
        # recorded geodesic is one step stale and never smaller than this
        euclid = dist2d(robot.base.xy, hum.base.xy)
        if euclid <= self.backup_distance:
            # back away while turning to face the humanoid
            bearing = math.atan2(hum.base.y - robot.base.y, hum.base.x - robot.base.x)
            err = wrap_angle(bearing - robot.base.heading)
            ang = max(-1.0, min(1.0, err / 0.25))
            return BaseVelocity(self.backup_linear, ang)
        if (
            self._field is None
            or self._plan_src_xy is None
            or dist2d(self._plan_src_xy, hum.base.xy) > self.replan_threshold
        ):
            self._replan(hum.base.xy)
        if self._field is None:
            log.warning("heuristic expert: humanoid position not plannable; waiting")
            return BaseVelocity(0.0, 0.0)
        # near the band, steer directly at the humanoid when the line is clear
        if delta is not None and self._clear_line(robot.base.xy, hum.base.xy):
            return self._drive_towards(robot.base, hum.base.xy)
        target = self._steer_target(robot.base)
        if target is None:
            log.warning("heuristic expert: humanoid unreachable; waiting")
            return BaseVelocity(0.0, 0.0)
        return self._drive_towards(robot.base, target)
