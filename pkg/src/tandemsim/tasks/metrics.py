"""Episode metrics for both tasks.

Social navigation: finding success S, success weighted by path steps SPS,
following rate F, collision rate CR, backup-yield rate BYR, total distance
TD, post-find following distance FD.

Social rearrangement: success rate SR, relative efficiency RE (percent,
versus the solo humanoid), robot completion ratio RC, collision rate CR,
completion steps TS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .rewards import RewardConfig
from .trace import EpisodeTrace, TERMINAL_COLLISION, TERMINAL_SUCCESS

# Proximity radius for backup/yield accounting and the yield speed cutoff.
BYR_DISTANCE = 1.5
YIELD_SPEED = 0.1


@dataclass
class NavMetrics:
    S: int
    SPS: float
    F: float
    CR: int
    BYR: float
    TD: float
    FD: float | None
    l: int
    p: int | None
    w: int

    def to_dict(self) -> dict:
        return {
            "S": self.S, "SPS": self.SPS, "F": self.F, "CR": self.CR, "BYR": self.BYR,
            "TD": self.TD, "FD": self.FD, "l": self.l, "p": self.p, "w": self.w,
        }


@dataclass
class RearrangeMetrics:
    SR: int
    RE: float              # percent
    RC: float | None       # None for solo episodes
    CR: int
    TS: int
    L_human: int
    L_joint: int

    def to_dict(self) -> dict:
        return {
            "SR": self.SR, "RE": self.RE, "RC": self.RC, "CR": self.CR, "TS": self.TS,
            "L_human": self.L_human, "L_joint": self.L_joint,
        }


def _found(rec, cfg: RewardConfig) -> bool:
    return (
        rec.delta is not None
        and cfg.near_band <= rec.delta <= cfg.far_band
        and rec.facing > cfg.facing_threshold
    )


def compute_nav_metrics(trace: EpisodeTrace, l: int, E: int | None = None,
                        cfg: RewardConfig = RewardConfig()) -> NavMetrics:
    """All social-navigation metrics from one trace and its oracle steps l."""
    if E is None:
        E = trace.spec.max_steps
    records = trace.records
    n = len(records)
    p = None
    for rec in records:
        if _found(rec, cfg):
            p = rec.t
            break
    S = int(p is not None)
    if S:
        if l == 0 and p == 0:
            SPS = 1.0
        else:
            SPS = l / max(l, p) if max(l, p) > 0 else 0.0
    else:
        SPS = 0.0
    w = sum(1 for rec in records if p is not None and rec.t >= p and _found(rec, cfg))
    F = w / max(E - l, w) if (S and max(E - l, w) > 0) else 0.0
    CR = int(trace.terminal_cause == TERMINAL_COLLISION)
    near = [
        rec for rec in records
        if rec.delta is not None and rec.delta < BYR_DISTANCE
    ]
    byr_steps = sum(1 for rec in near if rec.cmd_linear < 0.0 or rec.speed < YIELD_SPEED)
    BYR = byr_steps / n if n else 0.0
    dists = [math.dist(rec.robot_xy, rec.human_xy) for rec in records]
    TD = sum(dists) / n if n else 0.0
    post = [d for rec, d in zip(records, dists) if p is not None and rec.t >= p]
    FD = (sum(post) / len(post)) if post else None
    return NavMetrics(S=S, SPS=SPS, F=F, CR=CR, BYR=BYR, TD=TD, FD=FD, l=l, p=p, w=w)


def compute_rearrange_metrics(trace: EpisodeTrace, L_human: int, E: int | None = None,
                              cfg: RewardConfig = RewardConfig()) -> RearrangeMetrics:
    """Rearrangement metrics. L_human comes from running the same spec with
    the solo humanoid; on failure the joint steps are capped at E, which
    reproduces the relative-efficiency convention (team in half the solo
    steps -> RE = 200%)."""
    if E is None:
        E = trace.spec.max_steps
    success = trace.terminal_cause == TERMINAL_SUCCESS and trace.steps <= E
    SR = int(success)
    L_joint = trace.steps if success else E
    RE = 100.0 * L_human / L_joint
    robot_done = 0
    humanoid_done = 0
    for rec in trace.records:
        for agent_id, _object_id, at_goal, first in rec.places:
            if at_goal and first:
                if agent_id.startswith("robot"):
                    robot_done += 1
                else:
                    humanoid_done += 1
    has_robot = trace.spec.robot_start is not None
    RC = (robot_done / 2.0) if has_robot else None
    CR = int(any(rec.collision for rec in trace.records))
    return RearrangeMetrics(SR=SR, RE=RE, RC=RC, CR=CR, TS=L_joint,
                            L_human=L_human, L_joint=L_joint)
