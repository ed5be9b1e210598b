"""Golden reward traces: every piecewise branch and constant, exact to 1e-9."""

import math

import pytest

from tandemsim.engine.world import StepEvents
from tandemsim.kinematics.transforms import BasePose
from tandemsim.tasks.rewards import (
    NavSkillStep,
    NavStepState,
    PickSkillStep,
    PlaceSkillStep,
    RewardConfig,
    facing_dot,
    nav_skill_reward,
    pick_skill_reward,
    pick_skill_terminates,
    place_skill_reward,
    place_skill_terminates,
    rearrange_step_reward,
    rearrange_terminates,
    socnav_distance_reward,
    socnav_orientation_reward,
    socnav_step_reward,
    socnav_success,
)

CFG = RewardConfig()
TOL = 1e-9


def nav_state(delta, bearing=0.0, dist=2.0):
    robot = BasePose(0.0, 0.0, 0.0)
    hum = (dist * math.cos(bearing), dist * math.sin(bearing))
    return NavStepState(delta=delta, robot=robot, humanoid_xy=hum)


# -- social navigation distance reward: all three branches ---------------

def test_socnav_distance_branches():
    # in-band constant
    assert socnav_distance_reward(1.8, 1.5) == pytest.approx(2.0, abs=TOL)
    # far branch: progress toward
    assert socnav_distance_reward(5.0, 4.8) == pytest.approx(0.2, abs=TOL)
    # near branch: moving closer inside 1 m is penalized
    assert socnav_distance_reward(0.9, 0.7) == pytest.approx(-0.2, abs=TOL)
    # near branch boundary: exactly 1.0 belongs to the near branch
    assert socnav_distance_reward(1.2, 1.0) == pytest.approx(-0.2, abs=TOL)
    # in-band boundary: exactly 2.0 is still the constant
    assert socnav_distance_reward(2.4, 2.0) == pytest.approx(2.0, abs=TOL)


def test_socnav_orientation_branches():
    robot = BasePose(0, 0, 0)
    assert socnav_orientation_reward(robot, (2.0, 0.0), 2.0) == pytest.approx(1.0, abs=TOL)
    assert socnav_orientation_reward(robot, (0.0, 2.0), 2.0) == pytest.approx(0.0, abs=TOL)
    assert socnav_orientation_reward(robot, (5.0, 0.0), 5.0) == pytest.approx(0.0, abs=TOL)


def test_socnav_step_reward_golden_trace():
    # 5 steps covering: neutral far, approach far, in-band facing,
    # inside-near penalty, success step
    seq = [
        # (prev_delta, cur_delta, bearing, success, expected)
        (6.0, 6.0, 0.0, False, 0.0 + 0.0 - 0.1),                 # far, no motion, no orient
        (6.0, 5.5, 0.0, False, 0.5 + 0.0 - 0.1),                 # approach beyond orient band
        (2.6, 1.5, 0.0, False, 2.0 + 3.0 * 1.0 - 0.1),          # in band, facing
        (0.9, 0.7, 0.0, False, -0.2 + 3.0 * 1.0 - 0.1),         # pushed out when too близко
        (1.8, 1.5, 0.0, True, 10.0 + 2.0 + 3.0 * 1.0 - 0.1),    # success bonus fires
    ]
    for prev_d, cur_d, bearing, success, expected in seq:
        prev = nav_state(prev_d, dist=max(prev_d, 0.1))
        cur = nav_state(cur_d, bearing=bearing, dist=max(cur_d, 0.1))
        r = socnav_step_reward(prev, cur, success, CFG)
        assert r == pytest.approx(expected, abs=TOL)


def test_socnav_step_values_from_spec_examples():
    # neutral far step, no motion -> -0.1
    assert socnav_step_reward(nav_state(5.0, dist=5.0), nav_state(5.0, dist=5.0),
                              False) == pytest.approx(-0.1, abs=TOL)
    # in-band facing step -> 4.9
    assert socnav_step_reward(nav_state(2.2, dist=2.2), nav_state(1.5, dist=1.5),
                              False) == pytest.approx(4.9, abs=TOL)
    # success step in band, facing -> 14.9
    assert socnav_step_reward(nav_state(1.8, dist=1.8), nav_state(1.5, dist=1.5),
                              True) == pytest.approx(14.9, abs=TOL)


def test_socnav_success_window():
    good = [(1.5, 0.9)] * 400
    assert socnav_success(good)
    assert not socnav_success(good[:399])
    gap = good[:200] + [(3.0, 0.9)] + good[:199]
    assert len(gap) == 400
    assert not socnav_success(gap)  # consecutive semantics
    assert not socnav_success([(1.5, 0.5)] * 400)  # facing must exceed 0.5 strictly


# -- rearrangement task reward ------------------------------------------------

def ev(picks=(), places=(), collisions=()):
    e = StepEvents()
    e.picks = list(picks)
    e.places = list(places)
    e.collisions = list(collisions)
    return e


def test_rearrange_step_reward_golden():
    # plain step
    assert rearrange_step_reward(ev(), CFG) == pytest.approx(-0.005, abs=TOL)
    # first pick of a target object
    r = rearrange_step_reward(ev(picks=[("robot_0", "obj_0", True)]), CFG)
    assert r == pytest.approx(5.0 - 0.005, abs=TOL)
    # repeated pick is not a subgoal
    r = rearrange_step_reward(ev(picks=[("robot_0", "obj_0", False)]), CFG)
    assert r == pytest.approx(-0.005, abs=TOL)
    # first at-goal place
    r = rearrange_step_reward(ev(places=[("human_0", "obj_1", True, True)]), CFG)
    assert r == pytest.approx(5.0 - 0.005, abs=TOL)
    # collision step: -5 and termination flagged
    e = ev(collisions=[("human_0", "robot_0")])
    assert rearrange_step_reward(e, CFG) == pytest.approx(-5.005, abs=TOL)
    assert rearrange_terminates(e)
    # success step
    r = rearrange_step_reward(ev(places=[("robot_0", "obj_1", True, True)]), CFG,
                              success=True)
    assert r == pytest.approx(10.0 + 5.0 - 0.005, abs=TOL)


# -- navigation skill ----------------------------------------------------------

def test_nav_skill_reward_golden():
    far = NavSkillStep(delta=6.0, facing=0.2)
    # plain distant step, no progress: slack only
    assert nav_skill_reward(far, NavSkillStep(6.0, 0.2)) == pytest.approx(-0.01, abs=TOL)
    # progress + orientation active inside the band
    r = nav_skill_reward(NavSkillStep(2.5, 0.8), NavSkillStep(2.3, 0.8))
    assert r == pytest.approx(0.2 + 0.05 * 0.8 - 0.01, abs=TOL)
    # collision penalty
    r = nav_skill_reward(NavSkillStep(6.0, 0.0), NavSkillStep(5.9, 0.0, collision=True))
    assert r == pytest.approx(0.1 - 0.005 - 0.01, abs=TOL)
    # success: within 1.5 facing > 0.5
    cur = NavSkillStep(1.2, 0.9)
    r = nav_skill_reward(NavSkillStep(1.5, 0.9), cur)
    assert r == pytest.approx(10.0 + 0.3 + 0.05 * 0.9 - 0.01, abs=TOL)


# -- pick skill -------------------------------------------------------------------

def test_pick_skill_reward_golden_trace():
    seq = [
        # approach: hand moves 0.1 closer (arm extended: rest distance large)
        (PickSkillStep(0.60, 0.40), PickSkillStep(0.50, 0.50), 0.1 - 0.005, False),
        # grasp step: retract term takes over (rest distance unchanged here)
        (PickSkillStep(0.50, 0.50), PickSkillStep(0.0, 0.50, holding_correct=True),
         0.0 - 0.005, False),
        # retracting: rest distance shrinks but success not yet reached
        (PickSkillStep(0.0, 0.50, holding_correct=True),
         PickSkillStep(0.0, 0.30, holding_correct=True),
         0.2 - 0.005, False),
        # success: holding the right object with the arm retracted under 0.15
        (PickSkillStep(0.0, 0.30, holding_correct=True),
         PickSkillStep(0.0, 0.10, holding_correct=True),
         2.0 + 0.2 - 0.005, True),
    ]
    for prev, cur, expected, terminates in seq:
        assert pick_skill_reward(prev, cur, CFG) == pytest.approx(expected, abs=TOL)
        assert pick_skill_terminates(cur, CFG) == terminates


def test_pick_skill_wrong_object_penalty():
    prev = PickSkillStep(0.3, 0.2)
    cur = PickSkillStep(0.3, 0.2, wrong_pick=True)
    assert pick_skill_reward(prev, cur, CFG) == pytest.approx(-0.5 - 0.005, abs=TOL)
    assert pick_skill_terminates(cur, CFG)
    dropped = PickSkillStep(0.3, 0.2, dropped=True)
    assert pick_skill_reward(prev, dropped, CFG) == pytest.approx(-0.5 - 0.005, abs=TOL)


def test_pick_skill_success_value():
    prev = PickSkillStep(0.0, 0.14, holding_correct=True)
    cur = PickSkillStep(0.0, 0.14, holding_correct=True)
    assert pick_skill_reward(prev, cur, CFG) == pytest.approx(2.0 - 0.005, abs=TOL)


# -- place skill --------------------------------------------------------------------

def test_place_skill_reward_golden_trace():
    seq = [
        # carrying toward the goal: move shaping
        (PlaceSkillStep(1.0, 0.4), PlaceSkillStep(0.8, 0.4), 0.2 - 0.005),
        # placement step: +5 bonus; shaping switches to retract (unchanged here)
        (PlaceSkillStep(0.8, 0.4),
         PlaceSkillStep(0.0, 0.4, holding=False, placed_correct=True, placed_event=True),
         5.0 + 0.0 - 0.005),
        # after placement: retract shaping, no repeated bonus
        (PlaceSkillStep(0.0, 0.4, holding=False, placed_correct=True),
         PlaceSkillStep(0.0, 0.2, holding=False, placed_correct=True),
         0.2 - 0.005),
        # success: retracted under 0.15 with the object placed
        (PlaceSkillStep(0.0, 0.2, holding=False, placed_correct=True),
         PlaceSkillStep(0.0, 0.1, holding=False, placed_correct=True),
         10.0 + 0.1 - 0.005),
    ]
    for prev, cur, expected in seq:
        assert place_skill_reward(prev, cur, CFG) == pytest.approx(expected, abs=TOL)


def test_place_skill_wrong_location_terminates():
    cur = PlaceSkillStep(0.0, 0.4, holding=False, placed_wrong=True)
    assert place_skill_terminates(cur, CFG)


def test_place_skill_success_flag():
    cur = PlaceSkillStep(0.0, 0.1, holding=False, placed_correct=True)
    assert place_skill_terminates(cur, CFG)


def test_facing_dot():
    assert facing_dot(BasePose(0, 0, 0), (3, 0)) == pytest.approx(1.0)
    assert facing_dot(BasePose(0, 0, 0), (0, 3)) == pytest.approx(0.0, abs=TOL)
    assert facing_dot(BasePose(0, 0, math.pi), (3, 0)) == pytest.approx(-1.0)
