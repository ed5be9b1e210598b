"""High-level action vocabulary, oracle skills, primitives, and path driving."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..engine.world import BaseVelocity, OraclePick, OraclePlace
from ..geometry import dist2d, wrap_angle
from ..kinematics.transforms import BasePose
from ..scene import OccupancyGrid

SKILL_RADIUS = 1.5          # oracle pick/place reach and the skill-abort radius
PRIMITIVE_TURN = 1.0        # full one-step turn (max_angular * dt)
PRIMITIVE_MOVE = 1.0        # full one-step translation (max_linear * dt)


@dataclass(frozen=True)
class Skill:
    kind: str                     # "navigate_to" | "pick" | "place"
    target: tuple | None = None   # navigate destination
    object_id: str | None = None
    goal_pos: tuple | None = None


@dataclass(frozen=True)
class Primitive:
    name: str  # "forward" | "backward" | "turn_left" | "turn_right"


WAIT = None


@dataclass
class SkillExecution:
    active: Skill | None = None
    progress_steps: int = 0
    abort_reason: str | None = None


def execute_primitive(primitive: Primitive) -> BaseVelocity:
    """Fixed-magnitude base commands: one max-speed step of translation or turn."""
    if primitive.name == "forward":
        return BaseVelocity(PRIMITIVE_MOVE, 0.0)
    if primitive.name == "backward":
        return BaseVelocity(-PRIMITIVE_MOVE, 0.0)
    if primitive.name == "turn_left":
        return BaseVelocity(0.0, PRIMITIVE_TURN)
    if primitive.name == "turn_right":
        return BaseVelocity(0.0, -PRIMITIVE_TURN)
    raise ValueError(f"unknown primitive {primitive.name!r}")


def approach_point(grid: OccupancyGrid, target_xy, prefer: float,
                   r_min: float, r_max: float,
                   avoid=None) -> tuple[float, float] | None:
    """Deterministic navigable stand-point near a target: the free cell whose
    center distance to the target is closest to `prefer` (ties by cell index).
    `avoid` = (center_xy, radius) excludes cells inside a temporary obstacle."""
    k = int(math.ceil(r_max / grid.cell_size)) + 1
    cx, cy = grid.cell_of(target_xy)
    best = None
    for dx in range(-k, k + 1):
        for dy in range(-k, k + 1):
            cell = (cx + dx, cy + dy)
            if not grid.is_free_cell(cell):
                continue
            p = grid.center_of(cell)
            d = dist2d(p, target_xy)
            if d < r_min or d > r_max:
                continue
            if avoid is not None and dist2d(p, avoid[0]) <= avoid[1]:
                continue
            key = (abs(d - prefer), cell)
            if best is None or key < best[0]:
                best = (key, p)
    return None if best is None else best[1]


class PathDriver:
    """Follows a planner field (single-source Dijkstra from the destination)
    with line-of-sight smoothing; shared by the privileged controllers."""

    def __init__(self, grid: OccupancyGrid, lookahead: float = 1.0):
        self.grid = grid
        self.lookahead = lookahead
        self._field = None
        self._pred = None
        self._goal_xy = None
        self._masked = False
        self._avoid = None  # (center_xy, radius) the masked plan routes around

    def plan_to(self, goal_xy, avoid=None) -> bool:
        """Plan toward goal_xy; `avoid` = (center_xy, radius) masks a
        temporary circular obstacle (e.g. an idle agent) out of the graph."""
        try:
            src = self.grid.snap(goal_xy, snap_radius=1.2)
        except Exception:
            self._field = None
            return False
        blocked = None
        self._avoid = None
        if avoid is not None:
            center, radius = avoid
            blocked = self.grid.cells_within(center, radius)
            src_flat = self.grid.flat(src)
            if src_flat in set(int(b) for b in blocked):
                blocked = None  # goal inside the avoid zone: fall back to unmasked
            else:
                self._avoid = (tuple(center), radius)
        self._field, self._pred = self.grid.plan_field(src, blocked_flat=blocked)
        self._goal_xy = goal_xy
        self._masked = blocked is not None
        return True

    @property
    def goal_xy(self):
        return self._goal_xy

    def clear_line(self, a, b) -> bool:
        if self._avoid is not None:
            (cx, cy), r = self._avoid
            ax, ay = a
            ex, ey = b[0] - ax, b[1] - ay
            ee = ex * ex + ey * ey
            t = 0.0 if ee < 1e-300 else max(0.0, min(1.0, ((cx - ax) * ex + (cy - ay) * ey) / ee))
            if math.hypot(ax + t * ex - cx, ay + t * ey - cy) < r:
                return False
        return self.grid.line_is_free(a, b)

    def steer_target(self, base: BasePose):
        """Next clear point along the predecessor chain toward the goal."""
        if self._field is None:
            return None
        grid = self.grid
        if self._goal_xy is not None and self.clear_line(base.xy, self._goal_xy):
            return self._goal_xy
        try:
            cell = grid.snap(base.xy, snap_radius=1.2)
        except Exception:
            return None
        flat = grid.flat(cell)
        if not math.isfinite(self._field[flat]):
            return None
        chain = []
        cur = flat
        for _ in range(int(4.0 / grid.cell_size)):
            nxt = self._pred[cur]
            if nxt < 0:
                break
            chain.append(int(nxt))
            cur = int(nxt)
        if not chain:
            return self._goal_xy
        best = grid.center_of(grid.unflat(chain[0]))
        for flat_idx in chain:
            pt = grid.center_of(grid.unflat(flat_idx))
            if dist2d(base.xy, pt) > self.lookahead:
                break
            if self.clear_line(base.xy, pt):
                best = pt
        return best

    @staticmethod
    def drive_towards(base: BasePose, target, speed: float = 1.0) -> BaseVelocity:
        """Velocity command toward a point: full turn rate, forward speed
        scaled by heading alignment (one full turn step = 0.25 rad)."""
        bearing = math.atan2(target[1] - base.y, target[0] - base.x)
        err = wrap_angle(bearing - base.heading)
        ang = max(-1.0, min(1.0, err / 0.25))
        lin = speed * math.cos(err) if abs(err) < math.pi / 2 else 0.0
        return BaseVelocity(max(0.0, lin), ang)


class OracleSkillExecutor:
    """Executes robot skills with privileged information: map-based
    navigation and instantaneous pick/place. Aborts with a replan signal
    whenever the humanoid comes within SKILL_RADIUS."""

    def __init__(self, grid: OccupancyGrid, skill_radius: float = SKILL_RADIUS):
        self.driver = PathDriver(grid)
        self.skill_radius = skill_radius
        self.execution = SkillExecution()
        self.abort_events: list[tuple[str, str]] = []

    def abort(self, reason: str):
        if self.execution.active is not None:
            self.abort_events.append((self.execution.active.kind, reason))
            self.execution = SkillExecution(abort_reason=reason)

    def execute(self, skill: Skill | Primitive | None, world, avoid=None,
                abort_on_humanoid: bool = True):
        """One step of the given skill; returns an engine ActionCommand or None.

        Primitives always execute (they are the escape hatch); skills abort
        with a replan signal when the humanoid is within the abort radius,
        unless the caller suspends that (abort_on_humanoid=False) to squeeze
        past an idle partner via a masked plan."""
        if skill is None:
            self.execution = SkillExecution()
            return None
        if isinstance(skill, Primitive):
            self.execution = SkillExecution()
            return execute_primitive(skill)
        robot = world.robot
        hum = world.humanoid
        fresh = self.execution.active != skill
        if fresh:
            self.execution = SkillExecution(active=skill)
        if abort_on_humanoid and hum is not None and robot is not None:
            if dist2d(robot.base.xy, hum.base.xy) < self.skill_radius:
                self.abort("humanoid within skill-abort radius")
                return None
        if fresh and skill.kind == "navigate_to":
            self.driver.plan_to(skill.target, avoid=avoid)
        self.execution.progress_steps += 1
        if skill.kind == "navigate_to":
            target = self.driver.steer_target(robot.base)
            if target is None:
                return None
            return self.drive(robot.base, target)
        if skill.kind == "pick":
            return OraclePick(skill.object_id, radius=self.skill_radius)
        if skill.kind == "place":
            return OraclePlace(skill.object_id, skill.goal_pos, radius=self.skill_radius)
        raise ValueError(f"unknown skill kind {skill.kind!r}")

    def drive(self, base, target):
        return PathDriver.drive_towards(base, target)
