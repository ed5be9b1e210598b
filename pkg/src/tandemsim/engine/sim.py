"""The deterministic simulation core.

One Environment owns one WorldState. Stepping integrates per-agent commands
(heading first, then translation), rejects colliding translations in place
(collision event, pose unchanged), keeps held objects glued to the holder's
hand, and emits step events. All state advances are pure functions of
(spec, seed, action stream); `state_hash` digests the documented field order
below for replay and batching equivalence checks.

State-hash field order (little-endian, 64-bit blake2b):
  step_index u64 | sim_time f64 | for each agent sorted by id:
  id bytes | kind byte | x f64 | y f64 | heading f64 |
  [robot: 7 arm angles f64, humanoid: walk_phase f64 + pose root pos/quat +
   joint quats f64] | holding id bytes | last_cmd 2xf64 |
  for each object sorted by id: id bytes | position 3xf64 | parent tag bytes |
  rng_draws u64
"""

from __future__ import annotations

import hashlib
import math
import struct

import numpy as np

from ..errors import (
    AlreadyHolding,
    NotHolding,
    OutOfGrasp,
    SpecError,
)
from ..geometry import (
    dist2d,
    min_segment_distance,
    rays_hit_discs,
    rays_hit_segments,
    segments_block_los,
    wrap_angle,
)
from ..kinematics.assets import AssetBundle, default_assets
from ..kinematics.robot import arm_forward_kinematics, clamp_arm_angles, robot_collision_discs
from ..kinematics.skeleton import SkeletonPose, forward_kinematics
from ..kinematics.transforms import BasePose, quat_identity, quat_mul, quat_rotate, yaw_quat
from ..kinematics.walk import advance_phase, posed_at
from ..scene import Scene
from ..tasks.episodes import EpisodeSpec, validate_spec
from .controller import HumanoidController, PLAN_MARGIN
from .world import (
    HUMANOID,
    ROBOT,
    AgentState,
    ArmDelta,
    BaseVelocity,
    HumanoidHighLevel,
    Observation,
    ObjectState,
    OraclePick,
    OraclePlace,
    SimConfig,
    StepEvents,
    WorldState,
)


class Environment:
    """A single simulated episode instance."""

    def __init__(self, scene: Scene, spec: EpisodeSpec,
                 assets: AssetBundle | None = None, cfg: SimConfig | None = None):
        self.scene = scene
        self.cfg = cfg or SimConfig()
        self.assets = assets or default_assets()
        self.metric_grid = scene.grid(self.cfg.cell_size, self.cfg.humanoid_radius)
        self.walk_grid = scene.grid(self.cfg.cell_size,
                                    self.cfg.humanoid_radius + PLAN_MARGIN)
        self.robot_grid = scene.grid(self.cfg.cell_size, self.assets.robot.plan_radius)
        self.segments = scene.all_segments()
        self.world: WorldState | None = None
        self.controllers: dict[str, HumanoidController] = {}
        self.reset(spec)

    # -- lifecycle ---------------------------------------------------------

    def reset(self, spec: EpisodeSpec | None = None) -> WorldState:
        if spec is not None:
            self.spec = spec
        validate_spec(self.scene, self.spec, self.metric_grid, self.robot_grid)
        agents: dict[str, AgentState] = {}
        if self.spec.humanoid_start is not None:
            hum = AgentState(
                agent_id="human_0", kind=HUMANOID,
                base=self.spec.humanoid_start.copy(),
                start_base=self.spec.humanoid_start.copy(),
            )
            hum.pose = posed_at(self.assets.walk_clip, self.assets.skeleton, hum.base, 0.0)
            agents[hum.agent_id] = hum
        if self.spec.robot_start is not None:
            rob = AgentState(
                agent_id="robot_0", kind=ROBOT,
                base=self.spec.robot_start.copy(), start_base=self.spec.robot_start.copy(),
                arm_angles=np.zeros(self.assets.robot.n_arm_joints),
            )
            agents[rob.agent_id] = rob
        for i, b in enumerate(self.spec.extra_robot_starts, start=1):
            agents[f"robot_{i}"] = AgentState(
                agent_id=f"robot_{i}", kind=ROBOT, base=b.copy(), start_base=b.copy(),
                arm_angles=np.zeros(self.assets.robot.n_arm_joints),
            )
        objects = {}
        for o in self.spec.objects:
            objects[o.object_id] = ObjectState(
                object_id=o.object_id,
                position=np.asarray(o.start_pos, dtype=np.float64),
                parent=("receptacle", o.start_receptacle),
            )
        world = WorldState(
            scene=self.scene, spec=self.spec, agents=agents, objects=objects,
            rng=np.random.default_rng(self.spec.seed),
        )
        # placement sanity: no agent may start in contact
        for a in agents.values():
            if self._agent_collides(world, a, a.base):
                raise SpecError(f"agent {a.agent_id} start pose collides with the scene")
        self.world = world
        self.controllers = {
            aid: HumanoidController(self.walk_grid, self.assets, self.cfg)
            for aid, a in agents.items() if a.kind == HUMANOID
        }
        return world

    # -- geometry of agents --------------------------------------------

    def agent_discs(self, agent: AgentState, base: BasePose | None = None):
        base = base or agent.base
        if agent.kind == ROBOT:
            return robot_collision_discs(self.assets.robot, base)
        return ((base.xy, self.cfg.humanoid_radius),)

    def _agent_collides(self, world: WorldState, agent: AgentState, base: BasePose,
                        record: StepEvents | None = None) -> bool:
        hit = False
        for center, radius in self.agent_discs(agent, base):
            if min_segment_distance(center, self.segments) < radius:
                hit = True
                if record is not None:
                    record.add_collision(agent.agent_id, "wall")
        for other in world.agents.values():
            if other.agent_id == agent.agent_id:
                continue
            for c1, r1 in self.agent_discs(agent, base):
                for c2, r2 in self.agent_discs(other):
                    if dist2d(c1, c2) < r1 + r2:
                        hit = True
                        if record is not None:
                            record.add_collision(agent.agent_id, other.agent_id)
        return hit

    def hand_world(self, agent_id: str) -> np.ndarray:
        """World position of the manipulator: humanoid hand or robot end effector."""
        agent = self.world.agents[agent_id]
        if agent.kind == ROBOT:
            return arm_forward_kinematics(self.assets.robot, agent.arm_angles, agent.base)
        _, poss = forward_kinematics(self.assets.skeleton, agent.pose)
        return poss[self.assets.skeleton.index(self.assets.reach_cache.hand_joint)]

    # -- attach / detach -------------------------------------------------

    def attach(self, agent_id: str, object_id: str):
        world = self.world
        agent = world.agents[agent_id]
        obj = world.objects[object_id]
        if agent.holding is not None:
            raise AlreadyHolding(f"{agent_id} already holds {agent.holding}")
        hand = self.hand_world(agent_id)
        d = float(np.linalg.norm(hand - obj.position))
        if d > self.cfg.grasp_threshold:
            raise OutOfGrasp(
                f"{agent_id} hand is {d:.3f} m from {object_id}; "
                f"grasp threshold is {self.cfg.grasp_threshold} m"
            )
        agent.holding = object_id
        obj.parent = ("held", agent_id)
        obj.position = hand.copy()

    def detach(self, agent_id: str, position) -> bool:
        """Release the held object at `position`. Returns True when the object
        landed on its goal (within goal_snap)."""
        world = self.world
        agent = world.agents[agent_id]
        if agent.holding is None:
            raise NotHolding(f"{agent_id} holds nothing")
        object_id = agent.holding
        obj = world.objects[object_id]
        position = np.asarray(position, dtype=np.float64)
        goal = world.object_goal(object_id)
        at_goal = float(np.linalg.norm(position - np.asarray(goal.goal_pos))) <= self.cfg.goal_snap
        if at_goal:
            obj.position = np.asarray(goal.goal_pos, dtype=np.float64)
            obj.parent = ("goal", goal.goal_receptacle)
        else:
            rec = next(
                (r for r in self.scene.receptacles
                 if r.contains_xy(position[0], position[1]) and abs(position[2] - r.height) <= 0.3),
                None,
            )
            obj.position = position.copy()
            obj.parent = ("receptacle", rec.name) if rec is not None else ("floor", "")
        agent.holding = None
        return at_goal

    # -- stepping ----------------------------------------------------------

    def _integrate_base(self, world, agent, v, w, events) -> float:
        """Heading-then-translation integration with reject-and-hold collisions.
        Returns accepted forward displacement."""
        dt = self.cfg.dt
        new_heading = wrap_angle(agent.base.heading + w * dt)
        if agent.kind == ROBOT and w != 0.0:
            # the offset front disc sweeps while turning
            probe = BasePose(agent.base.x, agent.base.y, new_heading)
            if self._agent_collides(world, agent, probe, record=events):
                new_heading = agent.base.heading
        d = v * dt
        if d != 0.0:
            nx = agent.base.x + d * math.cos(new_heading)
            ny = agent.base.y + d * math.sin(new_heading)
            probe = BasePose(nx, ny, new_heading)
            if self._agent_collides(world, agent, probe, record=events):
                agent.base = BasePose(agent.base.x, agent.base.y, new_heading)
                return 0.0
            agent.base = probe
            return abs(d)
        agent.base = BasePose(agent.base.x, agent.base.y, new_heading)
        return 0.0

    def step(self, actions: dict, dt: float | None = None) -> StepEvents:
        """Advance the world by one tick. Unknown/invalid commands become
        no-op events rather than errors."""
        world = self.world
        cfg = self.cfg
        if dt is None:
            dt = cfg.dt
        events = StepEvents()
        for agent in list(world.agents.values()):
            cmd = actions.get(agent.agent_id)
            if cmd is None:
                agent.last_cmd = (0.0, 0.0)
                continue
            if isinstance(cmd, BaseVelocity):
                lin = float(np.clip(cmd.linear, -1.0, 1.0))
                ang = float(np.clip(cmd.angular, -1.0, 1.0))
                agent.last_cmd = (lin, ang)
                moved = self._integrate_base(world, agent, lin * cfg.max_linear,
                                             ang * cfg.max_angular, events)
                if agent.kind == HUMANOID:
                    agent.walk_phase = advance_phase(agent.walk_phase, moved, dt,
                                                     self.assets.walk_clip)
                    agent.pose = posed_at(self.assets.walk_clip, self.assets.skeleton,
                                          agent.base, agent.walk_phase)
            elif isinstance(cmd, HumanoidHighLevel):
                if agent.kind != HUMANOID:
                    events.noops.append((agent.agent_id, "high-level command on a robot"))
                    agent.last_cmd = (0.0, 0.0)
                    continue
                self._step_humanoid_highlevel(world, agent, cmd, events)
            elif isinstance(cmd, ArmDelta):
                if agent.kind != ROBOT:
                    events.noops.append((agent.agent_id, "arm command on a humanoid"))
                    agent.last_cmd = (0.0, 0.0)
                    continue
                self._step_arm(world, agent, cmd, events)
            elif isinstance(cmd, (OraclePick, OraclePlace)):
                agent.last_cmd = (0.0, 0.0)
                self._step_oracle_manip(world, agent, cmd, events)
            else:
                events.noops.append((agent.agent_id, f"unknown command {type(cmd).__name__}"))
                agent.last_cmd = (0.0, 0.0)
        # held objects track the holder's hand
        for agent in world.agents.values():
            if agent.holding is not None:
                world.objects[agent.holding].position = self.hand_world(agent.agent_id)
        world.step_index += 1
        world.sim_time = world.step_index * cfg.dt
        return events

    def _step_humanoid_highlevel(self, world, agent, cmd, events):
        ctrl = self.controllers[agent.agent_id]
        ctrl.set_command(cmd)
        out = ctrl.tick(agent.base, agent.pose, world)
        moved = 0.0
        if out.noop_reason is not None:
            events.noops.append((agent.agent_id, out.noop_reason))
        if out.new_heading is not None:
            w = wrap_angle(out.new_heading - agent.base.heading) / self.cfg.dt
            v = out.forward / self.cfg.dt
            agent.last_cmd = (v / self.cfg.max_linear, w / self.cfg.max_angular)
            moved = self._integrate_base(world, agent, v, w, events)
            agent.walk_phase = advance_phase(agent.walk_phase, moved, self.cfg.dt,
                                             self.assets.walk_clip)
            agent.pose = posed_at(self.assets.walk_clip, self.assets.skeleton,
                                  agent.base, agent.walk_phase)
        else:
            agent.last_cmd = (0.0, 0.0)
        ctrl.register_progress(agent.base, moved)
        if out.pose_body is not None:
            yaw = yaw_quat(agent.base.heading)
            root = np.array([agent.base.x, agent.base.y, 0.0])
            agent.pose = SkeletonPose(
                root + quat_rotate(yaw, out.pose_body.root_pos),
                quat_mul(yaw, out.pose_body.root_quat),
                out.pose_body.joint_quats,
            )
        if out.attach is not None:
            try:
                self.attach(agent.agent_id, out.attach)
                first = out.attach not in world.picked_once
                world.picked_once.add(out.attach)
                events.picks.append((agent.agent_id, out.attach, first))
            except (AlreadyHolding, OutOfGrasp) as exc:
                events.noops.append((agent.agent_id, str(exc)))
        if out.detach is not None:
            object_id, pos = out.detach
            try:
                at_goal = self.detach(agent.agent_id, pos)
                first = at_goal and object_id not in world.placed_goal_once
                if at_goal:
                    world.placed_goal_once.add(object_id)
                events.places.append((agent.agent_id, object_id, at_goal, first))
            except NotHolding as exc:
                events.noops.append((agent.agent_id, str(exc)))
        if out.completed == "navigate_to":
            events.arrivals.append(agent.agent_id)

    def _step_oracle_manip(self, world, agent, cmd, events):
        """Instantaneous privileged pick/place with precondition-gated no-ops."""
        if isinstance(cmd, OraclePick):
            obj = world.objects.get(cmd.object_id)
            if obj is None:
                events.noops.append((agent.agent_id, f"oracle pick: no object {cmd.object_id!r}"))
                return
            if agent.holding is not None:
                events.noops.append((agent.agent_id, "oracle pick: already holding"))
                return
            if obj.held_by() is not None:
                events.noops.append((agent.agent_id, "oracle pick: object held by another agent"))
                return
            if dist2d(agent.base.xy, (obj.position[0], obj.position[1])) > cmd.radius:
                events.noops.append((agent.agent_id, "oracle pick: out of skill radius"))
                return
            agent.holding = cmd.object_id
            obj.parent = ("held", agent.agent_id)
            obj.position = self.hand_world(agent.agent_id)
            first = cmd.object_id not in world.picked_once
            world.picked_once.add(cmd.object_id)
            events.picks.append((agent.agent_id, cmd.object_id, first))
            return
        # OraclePlace
        if agent.holding != cmd.object_id:
            events.noops.append((agent.agent_id, "oracle place: not holding that object"))
            return
        pos = np.asarray(cmd.position, dtype=np.float64)
        if dist2d(agent.base.xy, (pos[0], pos[1])) > cmd.radius:
            events.noops.append((agent.agent_id, "oracle place: out of skill radius"))
            return
        at_goal = self.detach(agent.agent_id, pos)
        first = at_goal and cmd.object_id not in world.placed_goal_once
        if at_goal:
            world.placed_goal_once.add(cmd.object_id)
        events.places.append((agent.agent_id, cmd.object_id, at_goal, first))

    def _step_arm(self, world, agent, cmd, events):
        cfg = self.cfg
        deltas = np.clip(np.asarray(cmd.deltas, dtype=np.float64), -1.0, 1.0)
        proposal = agent.arm_angles + deltas * cfg.arm_delta_scale
        clamped, was_clamped = clamp_arm_angles(self.assets.robot, proposal)
        if was_clamped:
            events.clamps.append(agent.agent_id)
        agent.arm_angles = clamped
        agent.last_cmd = (0.0, 0.0)
        if cmd.grip and agent.holding is None:
            hand = self.hand_world(agent.agent_id)
            candidates = sorted(
                (float(np.linalg.norm(hand - o.position)), o.object_id)
                for o in world.objects.values() if o.held_by() is None
            )
            if candidates and candidates[0][0] <= cfg.grasp_threshold:
                try:
                    self.attach(agent.agent_id, candidates[0][1])
                    first = candidates[0][1] not in world.picked_once
                    world.picked_once.add(candidates[0][1])
                    events.picks.append((agent.agent_id, candidates[0][1], first))
                except (AlreadyHolding, OutOfGrasp) as exc:
                    events.noops.append((agent.agent_id, str(exc)))
            else:
                events.noops.append((agent.agent_id, "no object within grasp"))
        elif not cmd.grip and agent.holding is not None:
            object_id = agent.holding
            at_goal = self.detach(agent.agent_id, self.hand_world(agent.agent_id))
            first = at_goal and object_id not in world.placed_goal_once
            if at_goal:
                world.placed_goal_once.add(object_id)
            events.places.append((agent.agent_id, object_id, at_goal, first))

    # -- queries -----------------------------------------------------------

    def check_collision(self) -> list[tuple[str, str]]:
        """Current overlaps: disc-disc and disc-wall, canonically ordered."""
        world = self.world
        contacts = []
        agents = list(world.agents.values())
        for i, a in enumerate(agents):
            for center, radius in self.agent_discs(a):
                if min_segment_distance(center, self.segments) < radius:
                    pair = tuple(sorted((a.agent_id, "wall")))
                    if pair not in contacts:
                        contacts.append(pair)
            for b in agents[i + 1:]:
                hit = any(
                    dist2d(c1, c2) < r1 + r2
                    for c1, r1 in self.agent_discs(a)
                    for c2, r2 in self.agent_discs(b)
                )
                if hit:
                    contacts.append(tuple(sorted((a.agent_id, b.agent_id))))
        return sorted(contacts)

    def observe(self, agent_id: str, privileged: bool = False) -> Observation:
        world = self.world
        cfg = self.cfg
        agent = world.agents[agent_id]
        base = agent.base
        # depth: one ray row across the horizontal FOV, walls plus other agents
        half = cfg.depth_hfov / 2.0
        angles = base.heading + np.linspace(-half, half, cfg.depth_rays)
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        if agent.kind == ROBOT:
            cam = base.to_world_2d(self.assets.robot.front_offset)
        else:
            cam = base.xy
        depth = rays_hit_segments(cam, dirs, self.segments, cfg.depth_max_range)
        centers, radii = [], []
        for other in world.agents.values():
            if other.agent_id == agent_id:
                continue
            for c, r in self.agent_discs(other):
                centers.append(c)
                radii.append(r)
        if centers:
            disc_hits = rays_hit_discs(cam, dirs, np.asarray(centers), np.asarray(radii),
                                       cfg.depth_max_range)
            depth = np.minimum(depth, disc_hits)
        depth = np.maximum(depth, 1e-6)

        hum = world.humanoid
        gps = None
        detector = 0
        if hum is not None and hum.agent_id != agent_id:
            dx, dy = hum.base.x - base.x, hum.base.y - base.y
            dist = math.hypot(dx, dy)
            rel = wrap_angle(math.atan2(dy, dx) - base.heading)
            gps = (dist, rel)
            if (
                abs(rel) <= half
                and dist <= cfg.detector_range
                and not segments_block_los(base.xy, hum.base.xy, self.segments)
            ):
                detector = 1

        ego_dx = base.x - agent.start_base.x
        ego_dy = base.y - agent.start_base.y
        c, s = math.cos(-agent.start_base.heading), math.sin(-agent.start_base.heading)
        ego = (c * ego_dx - s * ego_dy, s * ego_dx + c * ego_dy,
               wrap_angle(base.heading - agent.start_base.heading))

        ee_to_rest = None
        arm = None
        if agent.kind == ROBOT:
            arm = agent.arm_angles.copy()
            ee = arm_forward_kinematics(self.assets.robot, agent.arm_angles, base)
            rest = base.to_world(self.assets.robot.ee_rest_offset)
            ee_to_rest = rest - ee
        return Observation(
            depth=depth,
            humanoid_gps=gps,
            humanoid_detector=detector,
            arm_angles=arm,
            egomotion=ego,
            holding=int(agent.holding is not None),
            ee_to_rest=ee_to_rest,
            privileged=world if privileged else None,
        )

    # -- hashing -----------------------------------------------------------

    def state_hash(self) -> int:
        world = self.world
        h = hashlib.blake2b(digest_size=8)
        h.update(struct.pack("<Qd", world.step_index, world.sim_time))
        for aid in sorted(world.agents):
            a = world.agents[aid]
            h.update(aid.encode())
            h.update(b"R" if a.kind == ROBOT else b"H")
            h.update(struct.pack("<3d", a.base.x, a.base.y, a.base.heading))
            if a.kind == ROBOT:
                h.update(a.arm_angles.astype("<f8").tobytes())
            else:
                h.update(struct.pack("<d", a.walk_phase))
                h.update(a.pose.root_pos.astype("<f8").tobytes())
                h.update(a.pose.root_quat.astype("<f8").tobytes())
                h.update(a.pose.joint_quats.astype("<f8").tobytes())
            h.update((a.holding or "-").encode())
            h.update(struct.pack("<2d", *a.last_cmd))
        for oid in sorted(world.objects):
            o = world.objects[oid]
            h.update(oid.encode())
            h.update(np.asarray(o.position, dtype="<f8").tobytes())
            h.update(("/".join(str(p) for p in o.parent)).encode())
        h.update(struct.pack("<Q", world.rng_draws))
        return int.from_bytes(h.digest(), "little")
