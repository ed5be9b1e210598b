"""Rearrangement controllers: scripted plan-based humanoid collaborators and
the greedy privileged robot that splits the task with them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..engine.world import HumanoidHighLevel
from ..geometry import dist2d
from ..kinematics.assets import default_assets
from .base import Policy
from .skills import OracleSkillExecutor, Primitive, Skill, approach_point

MANIP_STALL_LIMIT = 40


def _object_done(world, object_id: str) -> bool:
    return world.objects[object_id].parent[0] == "goal"


class PlanPopMember(Policy):
    """Scripted humanoid collaborator that rearranges an assigned subset of
    the episode objects, then stops. Behavior is a pure function of
    (assignment, speed factor, start delay, episode spec)."""

    agent_id = "human_0"

    def __init__(self, assigned: tuple[str, ...], speed: float = 1.0, start_delay: int = 0):
        self.assigned = tuple(assigned)
        self.speed = speed
        self.start_delay = start_delay

    def reset(self, scene, spec, world):
        from ..engine.controller import PLAN_MARGIN

        self.assets = default_assets()
        cfg_cell, radius = 0.10, 0.30
        self.grid = scene.grid(cfg_cell, radius + PLAN_MARGIN)
        self._approach = {}
        self._ring_idx = {}
        self._stall = 0
        self._last_cmd_kind = None
        self._last_nav = None
        self._parked = False
        self._park_anchor = None
        self._park_stall = 0
        self._aside_goal = None
        self._aside_age = 0
        self._crowded = 0
        self._world_ref = world

    # stand-distance ring cycled on stalls; paired with the controller's
    # off-grid creep so the body lands at ring distance exactly
    APPROACH_RINGS = (0.63, 0.58, 0.68)

    def _approach_for(self, key, pos_xy):
        if key not in self._approach:
            ring = self.APPROACH_RINGS[self._ring_idx.get(key, 0) % len(self.APPROACH_RINGS)]
            cell_pt = approach_point(self.grid, pos_xy, prefer=ring, r_min=0.42, r_max=0.95)
            if cell_pt is None:
                self._approach[key] = None
            else:
                d = dist2d(cell_pt, pos_xy)
                ux, uy = (cell_pt[0] - pos_xy[0]) / d, (cell_pt[1] - pos_xy[1]) / d
                self._approach[key] = (pos_xy[0] + ux * ring, pos_xy[1] + uy * ring)
        return self._approach[key]

    def _reachable(self, base, pos3) -> bool:
        return self.assets.reach_cache.contains(base.to_body(pos3))

    def act(self, world, probe=None):
        hum = world.humanoid
        self._world_ref = world
        if world.step_index < self.start_delay:
            return HumanoidHighLevel.stand_still()
        # operate on the held object first, else the next assigned one
        target_id = None
        if hum.holding in self.assigned:
            target_id = hum.holding
        else:
            for oid in self.assigned:
                obj = world.objects.get(oid)
                if obj is None or _object_done(world, oid):
                    continue
                if obj.held_by() not in (None, hum.agent_id):
                    continue
                target_id = oid
                break
        if target_id is None:
            return self._idle(hum)
        self._parked = False
        spec_obj = world.object_goal(target_id)
        if hum.holding == target_id:
            goal = np.asarray(spec_obj.goal_pos)
            if self._reachable(hum.base, goal):
                cmd = HumanoidHighLevel.place(target_id, spec_obj.goal_pos)
                cmd.speed = self.speed
                return self._manip(cmd)
            ap = self._approach_for(("goal", target_id), (goal[0], goal[1]))
            if ap is None:
                return HumanoidHighLevel.stand_still()
            return self._nav(ap, face=(goal[0], goal[1]))
        obj = world.objects[target_id]
        if self._reachable(hum.base, obj.position):
            cmd = HumanoidHighLevel.pick(target_id)
            cmd.speed = self.speed
            return self._manip(cmd)
        ap = self._approach_for(("obj", target_id, tuple(obj.parent)),
                                (obj.position[0], obj.position[1]))
        if ap is None:
            return HumanoidHighLevel.stand_still()
        return self._nav(ap, face=(obj.position[0], obj.position[1]))

    def _nav(self, ap, face):
        cmd = HumanoidHighLevel.navigate_to(ap, speed=self.speed, face=face)
        self._last_nav = cmd
        return cmd

    def _idle(self, hum):
        """Nothing left to do: finish the in-flight walking leg (so the body
        parks by a receptacle rather than mid-corridor), then stand still.
        A blocked leg (e.g. the robot works where we meant to park) is
        abandoned on the spot. A parked body still steps aside when the
        robot lingers right next to it (members with no assignment never
        move, honoring the stay-at-start contract)."""
        from ..geometry import dist2d

        if self._parked or self._last_nav is None:
            if self.assigned:
                step_aside = self._step_aside(hum)
                if step_aside is not None:
                    return step_aside
            return HumanoidHighLevel.stand_still()
        if self._park_anchor is None or dist2d(self._park_anchor, hum.base.xy) > 0.15:
            self._park_anchor = hum.base.xy
            self._park_stall = 0
        else:
            self._park_stall += 1
        if self._park_stall > 30 or dist2d(hum.base.xy, self._last_nav.target) <= 0.25:
            self._parked = True
            return HumanoidHighLevel.stand_still()
        return self._last_nav

    def _step_aside(self, hum):
        """Yield space: when the robot crowds a parked humanoid for a while,
        walk one sidestep away from it and park there instead."""
        world = self._world_ref
        robot = world.robot if world is not None else None
        if self._aside_goal is not None:
            if dist2d(hum.base.xy, self._aside_goal) <= 0.25 or self._aside_age > 120:
                self._aside_goal = None
                self._aside_age = 0
                return None
            self._aside_age += 1
            return HumanoidHighLevel.navigate_to(self._aside_goal, speed=self.speed)
        if robot is None:
            return None
        if dist2d(robot.base.xy, hum.base.xy) < 1.0:
            self._crowded += 1
        else:
            self._crowded = 0
            return None
        if self._crowded < 25:
            return None
        self._crowded = 0
        away = math.atan2(hum.base.y - robot.base.y, hum.base.x - robot.base.x)
        for dtheta in (0.0, math.pi / 2, -math.pi / 2, math.pi / 4, -math.pi / 4):
            ang = away + dtheta
            cand = (hum.base.x + 0.9 * math.cos(ang), hum.base.y + 0.9 * math.sin(ang))
            if self.grid.is_free_point(cand):
                self._aside_goal = cand
                self._aside_age = 0
                return HumanoidHighLevel.navigate_to(cand, speed=self.speed)
        return None

    def _manip(self, cmd):
        # watchdog: a pick/place that never lands falls back to re-approaching
        # from a different ring distance
        if self._last_cmd_kind == cmd.kind:
            self._stall += 1
        else:
            self._stall = 0
        self._last_cmd_kind = cmd.kind
        if self._stall > MANIP_STALL_LIMIT:
            self._stall = 0
            for key in list(self._approach):
                self._ring_idx[key] = self._ring_idx.get(key, 0) + 1
            self._approach.clear()
            return HumanoidHighLevel.stand_still()
        return cmd


class SoloHumanoid(PlanPopMember):
    """Reference collaborator that rearranges every object by itself."""

    def __init__(self, speed: float = 1.0):
        super().__init__(assigned=(), speed=speed)

    def reset(self, scene, spec, world):
        self.assigned = tuple(o.object_id for o in spec.objects)
        super().reset(scene, spec, world)


class GreedyOracleRobot(Policy):
    """Two-layer privileged robot: targets the unfinished object the humanoid
    is not nearest to (ties go to the object nearer the robot), navigates with
    the map, picks/places instantaneously, and yields with a backward
    primitive whenever a moving humanoid is within the skill-abort radius.
    An idle humanoid is treated as a temporary obstacle instead: the robot
    replans around it (masked planner field) rather than waiting forever."""

    agent_id = "robot_0"

    IDLE_WINDOW = 40
    IDLE_MOVE = 0.2
    # avoid-radius ladder around an idle humanoid: start wide, squeeze tighter
    # when the wide mask disconnects the map (e.g. a doorway); escape
    # hysteresis sits 0.2 below the active radius to prevent oscillation
    AVOID_LEVELS = (1.15, 0.85)

    def __init__(self, skill_radius: float = 1.5):
        self.skill_radius = skill_radius

    def reset(self, scene, spec, world):
        assets = default_assets()
        self.grid = scene.grid(0.10, assets.robot.plan_radius)
        self.skills = OracleSkillExecutor(self.grid, skill_radius=self.skill_radius)
        self._nav_goal_key = None
        self._nav_masked = False
        self._avoid_level = 0
        self._hum_anchor = None
        self._hum_anchor_age = 0
        self._hum_obj_dist = {}
        self._approach_score = {}
        self._current_target = None
        self._esc_anchor = None
        self._esc_age = 0
        self._esc_flip = False
        self._esc_side = 1.0
        self._progress_state = None
        self._progress_age = 0
        self._relocate_until = -1
        self._reloc_goal = None

    def _humanoid_idle(self, world) -> bool:
        hum = world.humanoid
        if hum is None:
            return False
        if (
            self._hum_anchor is None
            or dist2d(self._hum_anchor, hum.base.xy) > self.IDLE_MOVE
        ):
            self._hum_anchor = hum.base.xy
            self._hum_anchor_age = 0
            return False
        self._hum_anchor_age += 1
        return self._hum_anchor_age >= self.IDLE_WINDOW

    def _motion_legal(self, world, base_pose) -> bool:
        """Mirror of the engine's end-pose acceptance for the robot."""
        from ..geometry import min_segment_distance
        from ..kinematics.assets import default_assets
        from ..kinematics.robot import robot_collision_discs

        hum = world.humanoid
        segments = world.scene.all_segments()
        for center, radius in robot_collision_discs(default_assets().robot, base_pose):
            if min_segment_distance(center, segments) < radius:
                return False
            if hum is not None and dist2d(center, hum.base.xy) < radius + 0.30:
                return False
        return True

    def _escape_primitive(self, world) -> Primitive | None:
        """Primitive that moves the robot away from the humanoid, picking only
        motions the engine will accept (end-pose legality). A retreat that
        stays stuck escalates the avoid level so masked navigation can take
        over from inside the pocket."""
        from ..geometry import min_segment_distance
        from ..kinematics.transforms import BasePose

        robot = world.robot
        hum = world.humanoid
        if self._esc_anchor is not None and dist2d(self._esc_anchor, robot.base.xy) > 0.2:
            self._esc_anchor = robot.base.xy
            self._esc_age = 0
        else:
            if self._esc_anchor is None:
                self._esc_anchor = robot.base.xy
            self._esc_age += 1
            if self._esc_age > 30 and self._avoid_level + 1 < len(self.AVOID_LEVELS):
                self._avoid_level += 1
                self._esc_age = 0
        away = math.atan2(robot.base.y - hum.base.y, robot.base.x - hum.base.x)
        segments = world.scene.all_segments()
        d_now = dist2d(robot.base.xy, hum.base.xy)
        pick = away
        for k in (0, 1, -1, 2, -2, 3, -3, 4):
            cand = away + k * math.pi / 4
            probe = (robot.base.x + 0.45 * math.cos(cand),
                     robot.base.y + 0.45 * math.sin(cand))
            if min_segment_distance(probe, segments) < 0.42:
                continue
            if dist2d(probe, hum.base.xy) < d_now - 0.1:
                continue
            pick = cand
            break
        h = robot.base.heading
        step = 0.25
        fwd_pose = BasePose(robot.base.x + step * math.cos(h),
                            robot.base.y + step * math.sin(h), h)
        bwd_pose = BasePose(robot.base.x - step * math.cos(h),
                            robot.base.y - step * math.sin(h), h)
        left_pose = BasePose(robot.base.x, robot.base.y, h + step)
        right_pose = BasePose(robot.base.x, robot.base.y, h - step)
        err_fwd = (pick - h + math.pi) % (2 * math.pi) - math.pi
        err_bwd = (pick + math.pi - h + math.pi) % (2 * math.pi) - math.pi
        # aligned translations first (reverse preferred), then whichever legal
        # turn best re-aims either end of the robot at the escape direction
        if abs(err_bwd) < 0.9 and self._motion_legal(world, bwd_pose) \
                and dist2d(bwd_pose.xy, hum.base.xy) > d_now - 0.05:
            return Primitive("backward")
        if abs(err_fwd) < 0.9 and self._motion_legal(world, fwd_pose) \
                and dist2d(fwd_pose.xy, hum.base.xy) > d_now - 0.05:
            return Primitive("forward")
        turn = self._committed_turn(world, robot.base, pick)
        if turn is not None:
            return turn
        for name, pose in (("backward", bwd_pose), ("forward", fwd_pose)):
            if self._motion_legal(world, pose) and dist2d(pose.xy, hum.base.xy) > d_now - 0.05:
                return Primitive(name)
        return None  # fully pinned: stand still this step

    def _committed_turn(self, world, base, pick) -> Primitive | None:
        """Pick a rotation direction by simulating whole legal arcs, so the
        robot never bounces off an illegal mid-arc pose."""
        from ..kinematics.transforms import BasePose

        scores = []
        for sign, name in ((1.0, "turn_left"), (-1.0, "turn_right")):
            h = base.heading
            legal_steps = 0
            aligned_in = None
            for i in range(1, 15):
                h = h + sign * 0.25
                if not self._motion_legal(world, BasePose(base.x, base.y, h)):
                    break
                legal_steps = i
                err_f = (pick - h + math.pi) % (2 * math.pi) - math.pi
                err_b = (pick + math.pi - h + math.pi) % (2 * math.pi) - math.pi
                if min(abs(err_f), abs(err_b)) < 0.5:
                    aligned_in = i
                    break
            if legal_steps == 0:
                continue
            score = (0, aligned_in) if aligned_in is not None else (1, -legal_steps)
            scores.append((score, name))
        if not scores:
            return None
        return Primitive(min(scores)[1])

    def _update_claims(self, world):
        """Objects the humanoid appears to be going for: anything it has
        steadily approached for a while and is its nearest target."""
        hum = world.humanoid
        if hum is None:
            return set()
        d_h = {oid: dist2d(hum.base.xy, obj.position[:2])
               for oid, obj in world.objects.items()}
        for oid, d in d_h.items():
            prev = self._hum_obj_dist.get(oid)
            if prev is not None and prev - d > 0.05:
                self._approach_score[oid] = self._approach_score.get(oid, 0) + 1
            elif prev is not None and d - prev > 0.05:
                self._approach_score[oid] = 0
        self._hum_obj_dist = d_h
        claims = set()
        if hum.holding is not None:
            claims.add(hum.holding)
        nearest = min(d_h, key=lambda o: d_h[o]) if d_h else None
        for oid, score in self._approach_score.items():
            if score >= 10 and oid == nearest and d_h[oid] < 4.0:
                claims.add(oid)
        return claims

    def _pick_target(self, world):
        hum = world.humanoid
        robot = world.robot
        claims = self._update_claims(world)
        if robot.holding in world.objects and not _object_done(world, robot.holding):
            return robot.holding
        available = [
            oid for oid, obj in sorted(world.objects.items())
            if obj.parent[0] != "goal" and obj.held_by() is None
        ]
        if not available:
            self._current_target = None
            return None
        unclaimed = [o for o in available if o not in claims] or available
        if self._current_target in unclaimed:
            return self._current_target
        if len(unclaimed) == 1 or hum is None:
            choice = unclaimed[0]
        else:
            # prefer the object the humanoid is NOT nearest to (tie: nearer robot)
            d_h = {o: dist2d(hum.base.xy, world.objects[o].position[:2]) for o in unclaimed}
            far = max(unclaimed, key=lambda o: d_h[o])
            near = min(unclaimed, key=lambda o: d_h[o])
            if abs(d_h[far] - d_h[near]) < 1e-9:
                d_r = {o: dist2d(robot.base.xy, world.objects[o].position[:2])
                       for o in unclaimed}
                choice = min(unclaimed, key=lambda o: d_r[o])
            else:
                choice = far
        self._current_target = choice
        return choice

    RELOCATE_AFTER = 260   # steps without task progress before backing off
    RELOCATE_HOLD = 30

    def _task_state(self, world):
        return tuple(sorted(
            (oid, obj.parent[0], obj.held_by() or "")
            for oid, obj in world.objects.items()
        )) + (world.robot.holding or "",)

    def _relocating(self, world):
        """Long stalls trigger a back-off: retreat to the freest point away
        from the humanoid, pause, then retry the task from the new vantage."""
        state = self._task_state(world)
        if state != self._progress_state:
            self._progress_state = state
            self._progress_age = 0
            self._relocate_until = -1
            return None
        self._progress_age += 1
        robot = world.robot
        hum = world.humanoid
        if self._relocate_until >= 0:
            if world.step_index < self._relocate_until:
                if self._reloc_goal is not None and \
                        dist2d(robot.base.xy, self._reloc_goal) > 0.4:
                    return self._navigate(world, ("relocate", self._relocate_until),
                                          self._reloc_goal, self._humanoid_idle(world))
                return "wait"
            self._relocate_until = -1
            self._progress_age = 0
            self._nav_goal_key = None
            self.skills.execution.active = None
            return None
        if self._progress_age >= self.RELOCATE_AFTER and hum is not None:
            best = None
            for flat in self.grid.free_flat[:: max(1, len(self.grid.free_flat) // 600)]:
                p = self.grid.center_of(self.grid.unflat(int(flat)))
                d_h = dist2d(p, hum.base.xy)
                d_r = dist2d(p, robot.base.xy)
                if d_r > 7.0:
                    continue
                key = (-d_h, self.grid.flat(self.grid.cell_of(p)))
                if best is None or key < best[0]:
                    best = (key, p)
            if best is not None:
                self._reloc_goal = best[1]
                self._relocate_until = world.step_index + self.RELOCATE_AFTER // 2
        return None

    def act(self, world, probe=None):
        robot = world.robot
        hum = world.humanoid
        if robot is None:
            return None
        reloc = self._relocating(world)
        if reloc == "wait":
            return None
        if reloc is not None:
            return reloc
        idle = self._humanoid_idle(world)
        if not idle:
            self._avoid_level = 0
        hum_dist = math.inf if hum is None else dist2d(robot.base.xy, hum.base.xy)
        if hum_dist < self.skill_radius and not idle:
            self.skills.abort("humanoid within skill-abort radius")
            self._nav_goal_key = None
            return self.skills.execute(self._escape_primitive(world), world)
        if idle and hum_dist < self.AVOID_LEVELS[self._avoid_level] - 0.2:
            # step out of the masked zone before routing around the idle partner
            self._nav_goal_key = None
            return self.skills.execute(self._escape_primitive(world), world)
        self._esc_anchor = None
        target_id = self._pick_target(world)
        if target_id is None:
            return None  # both objects done: wait
        spec_obj = world.object_goal(target_id)
        if robot.holding == target_id:
            goal_xy = (spec_obj.goal_pos[0], spec_obj.goal_pos[1])
            if dist2d(robot.base.xy, goal_xy) <= self.skill_radius - 0.1:
                return self.skills.execute(
                    Skill("place", object_id=target_id, goal_pos=tuple(spec_obj.goal_pos)),
                    world, abort_on_humanoid=not idle)
            return self._navigate(world, ("goal", target_id), goal_xy, idle)
        obj = world.objects[target_id]
        obj_xy = (obj.position[0], obj.position[1])
        if dist2d(robot.base.xy, obj_xy) <= self.skill_radius - 0.1:
            return self.skills.execute(Skill("pick", object_id=target_id), world,
                                       abort_on_humanoid=not idle)
        return self._navigate(world, ("obj", target_id), obj_xy, idle)

    def _navigate(self, world, key, dest_xy, idle: bool):
        hum = world.humanoid
        radius = self.AVOID_LEVELS[self._avoid_level]
        nav_key = (key, idle, self._avoid_level)
        if self._nav_goal_key != nav_key:
            avoid_c = (hum.base.xy, radius) if (idle and hum is not None) else None
            ap = approach_point(self.grid, dest_xy, prefer=1.0, r_min=0.3,
                                r_max=self.skill_radius - 0.1, avoid=avoid_c)
            if ap is None:
                # idle partner parked on every stand point: take the best
                # unmasked one and rely on collision rejection
                ap = approach_point(self.grid, dest_xy, prefer=1.0, r_min=0.3,
                                    r_max=self.skill_radius - 0.1)
            if ap is None:
                return None
            self._nav_goal = ap
            self._nav_goal_key = nav_key
            self.skills.execution.active = None  # force a fresh plan
        avoid = (hum.base.xy, radius) if (idle and hum is not None) else None
        cmd = self.skills.execute(Skill("navigate_to", target=self._nav_goal), world,
                                  avoid=avoid, abort_on_humanoid=not idle)
        if cmd is None and idle:
            if self._avoid_level + 1 < len(self.AVOID_LEVELS):
                # the wide mask disconnected the map (doorways): squeeze tighter
                self._avoid_level += 1
                self._nav_goal_key = None
            else:
                # inside the tightest mask and unable to plan: move out first
                return self.skills.execute(self._escape_primitive(world), world)
        return cmd
