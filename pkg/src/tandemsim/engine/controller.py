"""In-engine humanoid controller: navigation, animated reach, attach/detach.

The controller turns latched high-level commands into per-step motion
proposals and reach-pose playback. It is deliberately usable outside the
engine (no robot, walls only) so that oracles can reproduce humanoid
trajectories exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import OutOfRange, Unreachable
from ..geometry import dist2d, wrap_angle
from ..kinematics.assets import AssetBundle
from ..kinematics.reach import pick_motion, reach_pose
from ..kinematics.skeleton import SkeletonPose, forward_kinematics
from ..kinematics.transforms import BasePose, quat_identity
from ..kinematics.walk import advance_phase, posed_at, walk_propose
from ..scene import OccupancyGrid, shortest_path
from .world import HumanoidHighLevel, SimConfig

# Body-frame hand parking position while carrying or after retracting.
CARRY_TARGET = (0.35, -0.1, 0.95)
NO_PROGRESS_LIMIT = 30
DETOUR_DISTANCE = 0.8
# Walk planning uses an extra inflation margin over the true disc radius so
# that any point inside a free cell keeps true clearance >= the radius
# (half-cell diagonal bound); the final creep approach is exempt.
PLAN_MARGIN = 0.075


@dataclass
class ControllerStep:
    """One tick of controller output, applied by the caller."""

    new_heading: float | None = None
    forward: float = 0.0
    pose_body: SkeletonPose | None = None   # reach animation frame (body frame)
    attach: str | None = None
    detach: tuple | None = None             # (object_id, world position (3,))
    completed: str | None = None            # command kind that finished this tick
    noop_reason: str | None = None


def _same_command(a: HumanoidHighLevel | None, b: HumanoidHighLevel | None) -> bool:
    if a is None or b is None:
        return a is b
    return (a.kind, a.target, a.object_id, a.position, a.speed, a.face) == (
        b.kind, b.target, b.object_id, b.position, b.speed, b.face)


class HumanoidController:
    """Per-agent stateful executor of HumanoidHighLevel commands."""

    def __init__(self, grid: OccupancyGrid, assets: AssetBundle, cfg: SimConfig):
        self.grid = grid
        self.assets = assets
        self.cfg = cfg
        self.command: HumanoidHighLevel | None = None
        self.mode = "idle"
        self.path: list[tuple[float, float]] = []
        self.path_idx = 0
        self.nav_goal: tuple[float, float] | None = None
        self.reach_frames: list[SkeletonPose] = []
        self.reach_idx = 0
        self.reach_stage = ""        # "forward" | "retract"
        self.reach_payload = None    # ("pick", obj) | ("place", obj, pos)
        self.no_progress = 0
        self.detour_side = 1.0
        self.detour_goal: tuple[float, float] | None = None
        self._reach_speed = 1.0

    # -- command latching ------------------------------------------------

    def set_command(self, cmd: HumanoidHighLevel | None):
        if _same_command(cmd, self.command):
            return
        # an in-flight reach is not interrupted by stand-still (one-shot
        # pick/place commands); any other command cancels it
        if (
            self.mode == "reach"
            and cmd is not None
            and cmd.kind == "stand_still"
        ):
            return
        self.command = cmd
        self.mode = "idle"
        self.path = []
        self.reach_frames = []
        self.reach_payload = None
        self.no_progress = 0
        self.detour_goal = None

    # -- helpers -----------------------------------------------------------

    def _clearance_ok(self, a, b) -> bool:
        return self.grid.line_is_free(a, b)

    def _lookahead_target(self, base: BasePose) -> tuple[float, float]:
        """Furthest path waypoint (within the lookahead cap) reachable on a
        straight clear line; falls back to the next waypoint."""
        best = self.path[self.path_idx]
        for i in range(self.path_idx, len(self.path)):
            wp = self.path[i]
            if dist2d(base.xy, wp) > self.cfg.lookahead:
                break
            if self._clearance_ok(base.xy, wp):
                best = wp
                self.path_idx = i
            else:
                break
        return best

    def _plan(self, start_xy, goal_xy) -> bool:
        try:
            self.path = shortest_path(self.grid, start_xy, goal_xy, snap_radius=1.0)
        except Unreachable:
            return False
        self.path_idx = 0
        return True

    def hand_body_position(self, pose_body: SkeletonPose) -> np.ndarray:
        _, poss = forward_kinematics(self.assets.skeleton, pose_body)
        return poss[self.assets.skeleton.index(self.assets.reach_cache.hand_joint)]

    def _nearest_cache_point(self, target_body) -> np.ndarray:
        cache = self.assets.reach_cache
        if cache.contains(target_body):
            return np.asarray(target_body, dtype=np.float64)
        best, best_d = None, math.inf
        for key in cache.entries:
            p = cache.key_point(key)
            d = float(np.linalg.norm(p - target_body))
            if d < best_d - 1e-12 or (abs(d - best_d) <= 1e-12 and best is not None and tuple(p) < tuple(best)):
                best, best_d = p, d
        return best

    def _start_reach(self, base: BasePose, pose_now: SkeletonPose | None,
                     target_world, payload, speed: float = 1.0) -> bool:
        """Queue forward reach frames toward a world-space hand target."""
        self._reach_speed = max(0.1, speed)
        cache = self.assets.reach_cache
        target_body = base.to_body(target_world)
        if not cache.contains(target_body):
            return False
        if pose_now is not None:
            body_pose = SkeletonPose(np.zeros(3), quat_identity(), pose_now.joint_quats)
            start_body = self.hand_body_position(body_pose)
        else:
            start_body = None
        if start_body is None or not cache.contains(start_body):
            start_body = self._nearest_cache_point(
                start_body if start_body is not None else np.asarray(CARRY_TARGET)
            )
        frames = None
        for start in (start_body, self._nearest_cache_point(np.asarray(CARRY_TARGET))):
            # the cached region is not convex; fall back to starting the
            # motion from the carry point when the direct segment exits it
            dist = float(np.linalg.norm(np.asarray(target_body) - start))
            n = max(2, int(math.ceil(
                dist / (self.cfg.hand_speed * self._reach_speed * self.cfg.dt))) + 1)
            try:
                frames = pick_motion(cache, start, target_body, n)
                break
            except OutOfRange:
                continue
        if frames is None:
            return False
        self.reach_frames = frames
        self._forward_frames = frames
        self.reach_idx = 0
        self.reach_stage = "forward"
        self.reach_payload = payload
        self.mode = "reach"
        return True

    def _retract_frames(self, from_body) -> list[SkeletonPose]:
        """Retract by rewinding the forward motion (always inside the cached
        region by construction), then move on to the carry pose if the
        remaining segment stays inside; otherwise park at the rewind end."""
        cache = self.assets.reach_cache
        frames = list(reversed(self._forward_frames))
        start = self.hand_body_position(frames[-1])
        target = self._nearest_cache_point(np.asarray(CARRY_TARGET))
        dist = float(np.linalg.norm(target - start))
        if dist > 1e-9:
            n = max(2, int(math.ceil(
                dist / (self.cfg.hand_speed * self._reach_speed * self.cfg.dt))) + 1)
            try:
                frames.extend(pick_motion(cache, start, target, n)[1:])
            except OutOfRange:
                pass
        return frames

    # -- per-step execution ----------------------------------------------

    def tick(self, base: BasePose, pose_now: SkeletonPose | None, world) -> ControllerStep:
        cmd = self.command
        if cmd is None or cmd.kind == "stand_still":
            return ControllerStep()
        if cmd.kind == "navigate_to":
            return self._tick_navigate(base)
        if cmd.kind in ("pick", "place"):
            return self._tick_manipulate(base, pose_now, world, cmd)
        return ControllerStep(noop_reason=f"unknown command {cmd.kind!r}")

    CREEP_RADIUS = 0.6      # final straight-line approach, off the grid
    CREEP_ARRIVAL = 0.06

    def _tick_navigate(self, base: BasePose) -> ControllerStep:
        goal = self.detour_goal or self.command.target
        dist_goal = dist2d(base.xy, self.command.target)
        arrival = self.CREEP_ARRIVAL if self.command.face is not None else self.cfg.arrival_tol
        if dist_goal <= arrival:
            face = self.command.face
            if face is not None:
                err = wrap_angle(math.atan2(face[1] - base.y, face[0] - base.x) - base.heading)
                if abs(err) > self.cfg.facing_tol:
                    max_turn = self.cfg.max_angular * self.cfg.dt
                    turn = max(-max_turn, min(max_turn, err))
                    return ControllerStep(new_heading=wrap_angle(base.heading + turn),
                                          forward=0.0)
            self.mode = "idle"
            self.detour_goal = None
            return ControllerStep(completed="navigate_to")
        if self.detour_goal is None and dist_goal <= self.CREEP_RADIUS:
            # close in on the exact point without grid snapping; the engine's
            # collision filter still guards the motion
            heading, forward = walk_propose(
                base, self.command.target, self.cfg.dt,
                self.cfg.max_linear * self.command.speed,
                self.cfg.max_angular * self.command.speed, self.cfg.facing_tol,
            )
            self.mode = "nav"
            return ControllerStep(new_heading=heading, forward=forward)
        if self.mode != "nav" or self.nav_goal != goal:
            if not self._plan(base.xy, goal):
                return ControllerStep(noop_reason="navigate target unreachable")
            self.mode = "nav"
            self.nav_goal = goal
        if self.detour_goal and dist2d(base.xy, self.detour_goal) <= self.cfg.arrival_tol:
            self.detour_goal = None
            self.mode = "idle"  # replan to the true goal next tick
            return ControllerStep()
        target = self._lookahead_target(base)
        heading, forward = walk_propose(
            base, target, self.cfg.dt, self.cfg.max_linear * self.command.speed,
            self.cfg.max_angular * self.command.speed, self.cfg.facing_tol,
        )
        return ControllerStep(new_heading=heading, forward=forward)

    def register_progress(self, base: BasePose, moved: float):
        """Called by the engine after collision acceptance; detects a blocked
        walk (e.g. another agent in the way) and sets up a sidestep detour."""
        if self.mode != "nav":
            self.no_progress = 0
            return
        if moved < 0.25 * self.cfg.step_distance:
            self.no_progress += 1
        else:
            self.no_progress = 0
        if self.no_progress >= NO_PROGRESS_LIMIT:
            self.no_progress = 0
            self.mode = "idle"  # force replan, possibly via a sidestep detour
            if self.detour_goal is None and self.path:
                self.detour_goal = self._detour_point(base)
            else:
                self.detour_goal = None
            self.detour_side = -self.detour_side

    def _detour_point(self, base: BasePose) -> tuple[float, float] | None:
        if not self.path:
            return None
        wp = self.path[min(self.path_idx, len(self.path) - 1)]
        head = math.atan2(wp[1] - base.y, wp[0] - base.x)
        # perpendicular sidestep from the current position around a blocker
        for scale in (1.0, 0.5):
            px = base.x + math.cos(head + self.detour_side * math.pi / 2) * DETOUR_DISTANCE * scale
            py = base.y + math.sin(head + self.detour_side * math.pi / 2) * DETOUR_DISTANCE * scale
            if self.grid.is_free_point((px, py)):
                return (px, py)
        return None

    def _tick_manipulate(self, base, pose_now, world, cmd) -> ControllerStep:
        if self.mode != "reach":
            # validate preconditions and queue the forward reach
            agent = next(a for a in world.agents.values() if a.kind == "humanoid")
            if cmd.kind == "pick":
                obj = world.objects.get(cmd.object_id)
                if obj is None:
                    return ControllerStep(noop_reason="pick target missing")
                if agent.holding is not None:
                    return ControllerStep(noop_reason="already holding")
                if obj.held_by() is not None:
                    return ControllerStep(noop_reason="object held by another agent")
                target_world = obj.position
                payload = ("pick", cmd.object_id)
            else:
                if agent.holding != cmd.object_id:
                    return ControllerStep(noop_reason="not holding the object to place")
                target_world = np.asarray(cmd.position, dtype=np.float64)
                payload = ("place", cmd.object_id, tuple(cmd.position))
            if not self._start_reach(base, pose_now, target_world, payload,
                                     speed=cmd.speed):
                return ControllerStep(noop_reason=f"{cmd.kind} target out of reach")
        # play the queued animation
        frame = self.reach_frames[self.reach_idx]
        step = ControllerStep(pose_body=frame)
        self.reach_idx += 1
        if self.reach_idx >= len(self.reach_frames):
            if self.reach_stage == "forward":
                payload = self.reach_payload
                if payload[0] == "pick":
                    step.attach = payload[1]
                else:
                    step.detach = (payload[1], np.asarray(payload[2], dtype=np.float64))
                hand_body = self.hand_body_position(frame)
                self.reach_frames = self._retract_frames(hand_body)
                self.reach_idx = 0
                self.reach_stage = "retract"
            else:
                step.completed = self.command.kind
                self.mode = "idle"
                self.reach_frames = []
                self.reach_payload = None
        return step
