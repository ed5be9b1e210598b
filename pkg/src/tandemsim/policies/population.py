"""Collaborator populations: the plan-based families and the 10-member
zero-shot-coordination evaluation population."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .base import Policy
from .rearrange import PlanPopMember

OBJ_A = "obj_0"
OBJ_B = "obj_1"


@dataclass(frozen=True)
class PopulationMember:
    member_id: str
    factory: Callable[[], Policy]


@dataclass(frozen=True)
class Population:
    population_id: str
    members: tuple[PopulationMember, ...]

    def __post_init__(self):
        if len(self.members) < 1:
            raise ValueError("population needs at least one member")

    def sample(self, seed: int) -> PopulationMember:
        """Uniform, seed-deterministic member choice (one per episode)."""
        idx = int(np.random.default_rng(seed).integers(len(self.members)))
        return self.members[idx]

    def by_id(self, member_id: str) -> PopulationMember:
        for m in self.members:
            if m.member_id == member_id:
                return m
        raise KeyError(member_id)


def plan_pop(p: int) -> Population:
    """Plan-based families of size 1..4: same-object / one-each /
    one-or-both / one-both-or-none."""
    if p == 1:
        members = [PopulationMember("plan-a", lambda: PlanPopMember((OBJ_A,)))]
    elif p == 2:
        members = [
            PopulationMember("plan-a", lambda: PlanPopMember((OBJ_A,))),
            PopulationMember("plan-b", lambda: PlanPopMember((OBJ_B,))),
        ]
    elif p == 3:
        members = [
            PopulationMember("plan-a", lambda: PlanPopMember((OBJ_A,))),
            PopulationMember("plan-b", lambda: PlanPopMember((OBJ_B,))),
            PopulationMember("plan-both", lambda: PlanPopMember((OBJ_A, OBJ_B))),
        ]
    elif p == 4:
        members = [
            PopulationMember("plan-a", lambda: PlanPopMember((OBJ_A,))),
            PopulationMember("plan-b", lambda: PlanPopMember((OBJ_B,))),
            PopulationMember("plan-both", lambda: PlanPopMember((OBJ_A, OBJ_B))),
            PopulationMember("plan-none", lambda: PlanPopMember(())),
        ]
    else:
        raise ValueError("plan populations are defined for p in 1..4")
    return Population(f"plan-pop-{p}", tuple(members))


def zsc_population() -> Population:
    """10 evaluation collaborators: the four plan-based members plus six
    scripted diversity members (walk-speed scaled and delayed-start variants)
    standing in for learned checkpoints."""
    members = [
        PopulationMember("plan-both", lambda: PlanPopMember((OBJ_A, OBJ_B))),
        PopulationMember("plan-a", lambda: PlanPopMember((OBJ_A,))),
        PopulationMember("plan-b", lambda: PlanPopMember((OBJ_B,))),
        PopulationMember("plan-none", lambda: PlanPopMember(())),
        PopulationMember("speed-0.50", lambda: PlanPopMember((OBJ_A, OBJ_B), speed=0.50)),
        PopulationMember("speed-0.75", lambda: PlanPopMember((OBJ_A, OBJ_B), speed=0.75)),
        PopulationMember("speed-1.25", lambda: PlanPopMember((OBJ_A, OBJ_B), speed=1.25)),
        PopulationMember("delay-100", lambda: PlanPopMember((OBJ_A, OBJ_B), start_delay=100)),
        PopulationMember("delay-250", lambda: PlanPopMember((OBJ_A, OBJ_B), start_delay=250)),
        PopulationMember("delay-400", lambda: PlanPopMember((OBJ_B, OBJ_A), start_delay=400)),
    ]
    return Population("zsc-pop", tuple(members))
