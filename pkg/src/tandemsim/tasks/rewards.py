"""Per-step reward calculators for both tasks and the three skill trainers.

All calculators are pure functions of small step snapshots, so golden traces
can exercise every piecewise branch exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..kinematics.transforms import BasePose


@dataclass(frozen=True)
class RewardConfig:
    # social navigation
    socnav_success_bonus: float = 10.0
    socnav_orientation_weight: float = 3.0
    socnav_slack: float = 0.1
    near_band: float = 1.0
    far_band: float = 2.0
    orientation_band: float = 3.0
    in_band_reward: float = 2.0
    facing_threshold: float = 0.5
    hold_steps: int = 400
    # rearrangement, task level
    rearrange_success_bonus: float = 10.0
    subgoal_bonus: float = 5.0
    agent_collision_penalty: float = 5.0
    rearrange_slack: float = 0.005
    # navigation skill
    nav_success_bonus: float = 10.0
    nav_orientation_weight: float = 5e-2
    nav_collision_penalty: float = 5e-3
    nav_slack: float = 1e-2
    nav_success_distance: float = 1.5
    # pick skill
    pick_success_bonus: float = 2.0
    wrong_pick_penalty: float = 0.5
    pick_slack: float = 0.005
    rest_threshold: float = 0.15
    # place skill
    place_correct_bonus: float = 5.0
    place_success_bonus: float = 10.0
    place_slack: float = 0.005

    def __post_init__(self):
        if not (0.0 < self.near_band < self.far_band):
            raise ValueError("distance bands must satisfy 0 < near < far")


# -- social navigation ----------------------------------------------------


def socnav_distance_reward(prev_delta: float, cur_delta: float,
                           cfg: RewardConfig = RewardConfig()) -> float:
    """Piecewise distance shaping: push away inside the near band, constant
    bonus inside [near, far], progress reward beyond."""
    if prev_delta < 0 or cur_delta < 0:
        raise ValueError("distances must be >= 0")
    if cur_delta <= cfg.near_band:
        return cur_delta - prev_delta
    if cur_delta <= cfg.far_band:
        return cfg.in_band_reward
    return prev_delta - cur_delta


def facing_dot(robot: BasePose, humanoid_xy) -> float:
    dx, dy = humanoid_xy[0] - robot.x, humanoid_xy[1] - robot.y
    n = math.hypot(dx, dy)
    if n < 1e-12:
        return 0.0
    fx, fy = robot.forward()
    return (dx * fx + dy * fy) / n


def socnav_orientation_reward(robot: BasePose, humanoid_xy, cur_delta: float,
                              cfg: RewardConfig = RewardConfig()) -> float:
    if cur_delta <= cfg.orientation_band:
        return facing_dot(robot, humanoid_xy)
    return 0.0


@dataclass
class NavStepState:
    """Snapshot consumed by the social-navigation reward."""

    delta: float
    robot: BasePose
    humanoid_xy: tuple[float, float]


def socnav_step_reward(prev: NavStepState, cur: NavStepState, success: bool,
                       cfg: RewardConfig = RewardConfig()) -> float:
    return (
        cfg.socnav_success_bonus * float(success)
        + socnav_distance_reward(prev.delta, cur.delta, cfg)
        + cfg.socnav_orientation_weight
        * socnav_orientation_reward(cur.robot, cur.humanoid_xy, cur.delta, cfg)
        - cfg.socnav_slack
    )


def socnav_success(window, cfg: RewardConfig = RewardConfig()) -> bool:
    """True iff at least hold_steps *consecutive* entries of
    (delta, facing_dot) stay inside [near, far] while facing."""
    run = 0
    for delta, dot in window:
        if cfg.near_band <= delta <= cfg.far_band and dot > cfg.facing_threshold:
            run += 1
            if run >= cfg.hold_steps:
                return True
        else:
            run = 0
    return False


# -- social rearrangement ---------------------------------------------------


def rearrange_step_reward(events, cfg: RewardConfig = RewardConfig(),
                          success: bool = False) -> float:
    """Task-level reward: success bonus, one-time subgoal bonuses for first
    picks and first at-goal placements, collision penalty, slack."""
    subgoal = any(first for _, _, first in events.picks) or any(
        first for _, _, at_goal, first in events.places if at_goal
    )
    collision = events.robot_humanoid_collision()
    return (
        cfg.rearrange_success_bonus * float(success)
        + cfg.subgoal_bonus * float(subgoal)
        - cfg.agent_collision_penalty * float(collision)
        - cfg.rearrange_slack
    )


def rearrange_terminates(events) -> bool:
    """Training semantics: agent-agent collision ends the episode."""
    return events.robot_humanoid_collision()


# -- navigation skill -------------------------------------------------------


@dataclass
class NavSkillStep:
    delta: float        # path distance robot -> target object
    facing: float       # dot(robot forward, normalized robot->object)
    collision: bool = False


def nav_skill_success(cur: NavSkillStep, cfg: RewardConfig = RewardConfig()) -> bool:
    return cur.delta < cfg.nav_success_distance and cur.facing > cfg.facing_threshold


def nav_skill_reward(prev: NavSkillStep, cur: NavSkillStep,
                     cfg: RewardConfig = RewardConfig()) -> float:
    orientation = cur.facing if cur.delta <= cfg.orientation_band else 0.0
    return (
        cfg.nav_success_bonus * float(nav_skill_success(cur, cfg))
        + (prev.delta - cur.delta)
        + cfg.nav_orientation_weight * orientation
        - cfg.nav_collision_penalty * float(cur.collision)
        - cfg.nav_slack
    )


# -- pick skill --------------------------------------------------------------


@dataclass
class PickSkillStep:
    ee_to_object: float
    ee_to_rest: float
    holding_correct: bool = False
    wrong_pick: bool = False
    dropped: bool = False


def pick_skill_success(cur: PickSkillStep, cfg: RewardConfig = RewardConfig()) -> bool:
    return cur.holding_correct and cur.ee_to_rest < cfg.rest_threshold


def pick_skill_reward(prev: PickSkillStep, cur: PickSkillStep,
                      cfg: RewardConfig = RewardConfig()) -> float:
    """Move term while approaching, retract term once holding, one-time
    success bonus, wrong-pick/drop penalty, slack."""
    if cur.holding_correct:
        shaping = prev.ee_to_rest - cur.ee_to_rest
    else:
        shaping = prev.ee_to_object - cur.ee_to_object
    penalty = cfg.wrong_pick_penalty * float(cur.wrong_pick or cur.dropped)
    return (
        cfg.pick_success_bonus * float(pick_skill_success(cur, cfg))
        + shaping
        - penalty
        - cfg.pick_slack
    )


def pick_skill_terminates(cur: PickSkillStep, cfg: RewardConfig = RewardConfig()) -> bool:
    return cur.wrong_pick or cur.dropped or pick_skill_success(cur, cfg)


# -- place skill --------------------------------------------------------------


@dataclass
class PlaceSkillStep:
    ee_to_target: float
    ee_to_rest: float
    holding: bool = True
    placed_correct: bool = False      # object currently resting at the goal
    placed_event: bool = False        # the placement happened this step
    placed_wrong: bool = False


def place_skill_success(cur: PlaceSkillStep, cfg: RewardConfig = RewardConfig()) -> bool:
    return cur.placed_correct and cur.ee_to_rest < cfg.rest_threshold


def place_skill_reward(prev: PlaceSkillStep, cur: PlaceSkillStep,
                       cfg: RewardConfig = RewardConfig()) -> float:
    if cur.holding:
        shaping = prev.ee_to_target - cur.ee_to_target
    else:
        shaping = prev.ee_to_rest - cur.ee_to_rest
    return (
        cfg.place_success_bonus * float(place_skill_success(cur, cfg))
        + cfg.place_correct_bonus * float(cur.placed_event and cur.placed_correct)
        + shaping
        - cfg.place_slack
    )


def place_skill_terminates(cur: PlaceSkillStep, cfg: RewardConfig = RewardConfig()) -> bool:
    return cur.placed_wrong or place_skill_success(cur, cfg)
