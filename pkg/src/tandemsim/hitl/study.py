"""Study plans (latin-square ordering) and per-condition metric tables."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ValidationError

SOLO = "solo"


@dataclass
class StudyPlan:
    participants: int
    conditions: tuple
    orderings: tuple          # latin-square rows, cycled over participants
    episodes_per_condition: int = 10

    def __post_init__(self):
        for row in self.orderings:
            if sorted(row) != sorted(self.conditions):
                raise ValidationError("each ordering row must contain every condition once")

    def ordering_for(self, participant_index: int) -> tuple:
        return self.orderings[participant_index % len(self.orderings)]

    def to_dict(self) -> dict:
        return {
            "participants": self.participants,
            "conditions": list(self.conditions),
            "orderings": [list(r) for r in self.orderings],
            "episodes_per_condition": self.episodes_per_condition,
        }

    @staticmethod
    def from_dict(d: dict) -> "StudyPlan":
        return StudyPlan(
            participants=int(d["participants"]),
            conditions=tuple(d["conditions"]),
            orderings=tuple(tuple(r) for r in d["orderings"]),
            episodes_per_condition=int(d.get("episodes_per_condition", 10)),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @staticmethod
    def load(path) -> "StudyPlan":
        return StudyPlan.from_dict(json.loads(Path(path).read_text()))


def make_study_plan(participants: int, conditions, rng=None,
                    episodes_per_condition: int = 10) -> StudyPlan:
    """Cyclic latin-square ordering rows, cycled over participants so each
    ordering is used equally often (balanced when participants % n == 0)."""
    conditions = tuple(conditions)
    n = len(conditions)
    if participants < n:
        raise ValidationError("need at least as many participants as conditions")
    offset = 0
    if rng is not None:
        offset = int(np.random.default_rng(rng).integers(n)) if isinstance(rng, int) else int(rng.integers(n))
    rows = []
    for r in range(n):
        shift = (r + offset) % n
        rows.append(tuple(conditions[(shift + k) % n] for k in range(n)))
    return StudyPlan(participants=participants, conditions=conditions,
                     orderings=tuple(rows), episodes_per_condition=episodes_per_condition)


def _episode_row(rec) -> dict:
    m = rec.metrics
    return {
        "participant": rec.participant,
        "condition": rec.condition,
        "episode": rec.episode_index,
        "success": int(m.get("success", 0)),
        "TS": m.get("TS"),
        "collision": int(m.get("collision", 0)),
        "RC": m.get("RC"),
    }


def study_metrics(recordings, plan: StudyPlan):
    """Per-condition {CR, TS, RC, RE} plus the raw per-episode rows.

    RE is the per-participant ratio of mean solo completion steps to mean
    paired completion steps (x100), averaged over participants; the solo
    condition is 100 by definition. Participants missing any condition are
    excluded with a warning entry.
    """
    rows = [_episode_row(r) for r in recordings]
    participants = sorted({r["participant"] for r in rows})
    warnings = []
    complete = []
    for p in participants:
        have = {r["condition"] for r in rows if r["participant"] == p}
        if set(plan.conditions) <= have:
            complete.append(p)
        else:
            warnings.append(f"participant {p!r} missing conditions {set(plan.conditions) - have}")
    used = [r for r in rows if r["participant"] in complete]

    def mean(xs):
        xs = [x for x in xs if x is not None]
        return sum(xs) / len(xs) if xs else None

    solo_ts = {
        p: mean([r["TS"] for r in used if r["participant"] == p and r["condition"] == SOLO])
        for p in complete
    }
    table = {}
    for cond in plan.conditions:
        sub = [r for r in used if r["condition"] == cond]
        cr = mean([r["collision"] for r in sub])
        ts = mean([r["TS"] for r in sub])
        rc = mean([r["RC"] for r in sub]) if cond != SOLO else None
        if cond == SOLO:
            re = 100.0
        else:
            ratios = []
            for p in complete:
                paired = mean([r["TS"] for r in sub if r["participant"] == p])
                if paired and solo_ts.get(p):
                    ratios.append(100.0 * solo_ts[p] / paired)
            re = mean(ratios)
        table[cond] = {"CR": cr, "TS": ts, "RC": rc, "RE": re, "episodes": len(sub)}
    return table, rows, warnings


def export_study_csv(rows, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    cols = ["participant", "condition", "episode", "success", "TS", "collision", "RC"]
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow(r)
