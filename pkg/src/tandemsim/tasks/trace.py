"""Episode traces: the per-step record every metric is computed from.

File format trace/1: one JSON header line followed by one JSON line per step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import ParseError
from .episodes import EpisodeSpec

TRACE_SCHEMA = "trace/1"

TERMINAL_SUCCESS = "success"
TERMINAL_COLLISION = "collision"
TERMINAL_TIMEOUT = "timeout"


@dataclass
class NavStepRecord:
    t: int
    robot_xy: tuple[float, float]
    robot_heading: float
    human_xy: tuple[float, float]
    cmd_linear: float           # normalized commanded linear velocity
    speed: float                # realized |displacement| / dt, m/s
    delta: float | None         # geodesic robot-humanoid; None = beyond metric bands
    facing: float               # dot(robot forward, unit robot->humanoid)
    collision: bool = False     # robot-humanoid collision event this step

    def to_row(self) -> dict:
        return {
            "t": self.t, "r": [*self.robot_xy, self.robot_heading], "h": list(self.human_xy),
            "cl": self.cmd_linear, "sp": self.speed, "d": self.delta, "f": self.facing,
            "c": int(self.collision),
        }

    @staticmethod
    def from_row(row: dict) -> "NavStepRecord":
        r = row["r"]
        return NavStepRecord(
            t=int(row["t"]), robot_xy=(r[0], r[1]), robot_heading=r[2],
            human_xy=tuple(row["h"]), cmd_linear=row["cl"], speed=row["sp"],
            delta=row["d"], facing=row["f"], collision=bool(row["c"]),
        )


@dataclass
class RearrangeStepRecord:
    t: int
    robot_xy: tuple[float, float] | None
    human_xy: tuple[float, float]
    picks: list = field(default_factory=list)    # (agent_id, object_id, first)
    places: list = field(default_factory=list)   # (agent_id, object_id, at_goal, first)
    collision: bool = False

    def to_row(self) -> dict:
        return {
            "t": self.t,
            "r": None if self.robot_xy is None else list(self.robot_xy),
            "h": list(self.human_xy),
            "pk": [list(p) for p in self.picks],
            "pl": [list(p) for p in self.places],
            "c": int(self.collision),
        }

    @staticmethod
    def from_row(row: dict) -> "RearrangeStepRecord":
        return RearrangeStepRecord(
            t=int(row["t"]),
            robot_xy=None if row["r"] is None else tuple(row["r"]),
            human_xy=tuple(row["h"]),
            picks=[tuple(p) for p in row["pk"]],
            places=[tuple(p) for p in row["pl"]],
            collision=bool(row["c"]),
        )


@dataclass
class EpisodeTrace:
    task: str
    spec: EpisodeSpec
    records: list
    terminal_cause: str
    steps: int
    oracle_steps: int | None = None   # l, when precomputed

    def __post_init__(self):
        if self.terminal_cause not in (TERMINAL_SUCCESS, TERMINAL_COLLISION, TERMINAL_TIMEOUT):
            raise ValueError(f"unknown terminal cause {self.terminal_cause!r}")
        if self.steps > self.spec.max_steps:
            raise ValueError("trace longer than the episode limit")

    def save(self, path):
        with open(path, "w") as f:
            header = {
                "schema": TRACE_SCHEMA,
                "task": self.task,
                "terminal_cause": self.terminal_cause,
                "steps": self.steps,
                "oracle_steps": self.oracle_steps,
                "spec": self.spec.to_dict(),
            }
            f.write(json.dumps(header) + "\n")
            for rec in self.records:
                f.write(json.dumps(rec.to_row()) + "\n")

    @staticmethod
    def load(path) -> "EpisodeTrace":
        with open(path) as f:
            lines = [ln for ln in f.read().splitlines() if ln.strip()]
        if not lines:
            raise ParseError(f"{path}: empty trace file")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: bad header ({exc})") from exc
        if header.get("schema") != TRACE_SCHEMA:
            raise ParseError(f"{path}: expected schema {TRACE_SCHEMA!r}")
        task = header["task"]
        rec_cls = NavStepRecord if task == "socialnav" else RearrangeStepRecord
        records = []
        for i, ln in enumerate(lines[1:], start=2):
            try:
                records.append(rec_cls.from_row(json.loads(ln)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ParseError(f"{path}: bad record on line {i} ({exc})") from exc
        return EpisodeTrace(
            task=task,
            spec=EpisodeSpec.from_dict(header["spec"]),
            records=records,
            terminal_cause=header["terminal_cause"],
            steps=int(header["steps"]),
            oracle_steps=header.get("oracle_steps"),
        )
