"""Episode recordings (rec/1): one header line plus two interleaved
line-delimited streams in a single container file.

Level A records the per-step action commands (enough to re-simulate the
episode bit-exactly from the header seed); level B records full humanoid
joint poses, rigid object poses, and the post-step state hash. A final
"end" line carries terminal metrics. Files are written incrementally and
fsynced on episode end.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParseError
from ..tasks.episodes import EpisodeSpec
from .protocol import action_from_dict, action_to_dict

REC_SCHEMA = "rec/1"


@dataclass
class EpisodeRecording:
    spec: EpisodeSpec
    session: str = ""
    participant: str = ""
    condition: str = "solo"
    episode_index: int = 0
    level_a: list = field(default_factory=list)   # {"t", "actions": {agent: dict}}
    level_b: list = field(default_factory=list)   # {"t", "agents", "objects", "hash"}
    terminal: str | None = None
    metrics: dict = field(default_factory=dict)
    steps: int = 0
    truncated: bool = False

    def header(self) -> dict:
        return {
            "schema": REC_SCHEMA,
            "levels": ["A", "B"],
            "spec": self.spec.to_dict(),
            "session": self.session,
            "participant": self.participant,
            "condition": self.condition,
            "episode_index": self.episode_index,
        }

    @staticmethod
    def load(path) -> "EpisodeRecording":
        with open(path) as f:
            lines = [ln for ln in f.read().splitlines() if ln.strip()]
        if not lines:
            raise ParseError(f"{path}: empty recording")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: bad header ({exc})") from exc
        if header.get("schema") != REC_SCHEMA:
            raise ParseError(f"{path}: expected schema {REC_SCHEMA!r}")
        rec = EpisodeRecording(
            spec=EpisodeSpec.from_dict(header["spec"]),
            session=header.get("session", ""),
            participant=header.get("participant", ""),
            condition=header.get("condition", "solo"),
            episode_index=int(header.get("episode_index", 0)),
        )
        last_valid = 0
        for i, ln in enumerate(lines[1:], start=2):
            try:
                row = json.loads(ln)
                lv = row["lv"]
                if lv == "A":
                    rec.level_a.append(row)
                elif lv == "B":
                    rec.level_b.append(row)
                elif lv == "end":
                    rec.terminal = row["terminal"]
                    rec.metrics = row.get("metrics", {})
                    rec.steps = int(row.get("steps", len(rec.level_b)))
                last_valid = i
            except (json.JSONDecodeError, KeyError):
                rec.truncated = True
                break
        if rec.terminal is None:
            rec.truncated = True
            rec.steps = min(len(rec.level_a), len(rec.level_b))
            # keep only the consistent prefix
            rec.level_a = rec.level_a[: rec.steps]
            rec.level_b = rec.level_b[: rec.steps]
        return rec

    def require_complete(self):
        if self.truncated or self.terminal is None:
            raise ParseError(
                f"recording is truncated after step {self.steps}; "
                "metrics computation rejected"
            )


class RecordingWriter:
    """Incremental rec/1 writer; one per live episode."""

    def __init__(self, path, recording: EpisodeRecording):
        self.path = path
        self.recording = recording
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self._f = open(path, "w")
        self._f.write(json.dumps(recording.header()) + "\n")

    def record_step(self, env, actions: dict, events):
        world = env.world
        t = world.step_index
        row_a = {
            "lv": "A", "t": t,
            "actions": {aid: action_to_dict(a) for aid, a in actions.items()},
        }
        agents = {}
        for aid, a in world.agents.items():
            entry = {"x": a.base.x, "y": a.base.y, "heading": a.base.heading,
                     "holding": a.holding}
            if a.kind == "humanoid" and a.pose is not None:
                entry["root_pos"] = a.pose.root_pos.tolist()
                entry["root_quat"] = a.pose.root_quat.tolist()
                entry["joint_quats"] = a.pose.joint_quats.tolist()
                entry["walk_phase"] = a.walk_phase
            if a.arm_angles is not None:
                entry["arm_angles"] = a.arm_angles.tolist()
            agents[aid] = entry
        row_b = {
            "lv": "B", "t": t,
            "agents": agents,
            "objects": {oid: {"pos": np.asarray(o.position).tolist(), "parent": list(o.parent)}
                        for oid, o in world.objects.items()},
            "hash": f"{env.state_hash():016x}",
        }
        self.recording.level_a.append(row_a)
        self.recording.level_b.append(row_b)
        self._f.write(json.dumps(row_a) + "\n")
        self._f.write(json.dumps(row_b) + "\n")

    def finalize(self, terminal: str, metrics: dict, steps: int):
        self.recording.terminal = terminal
        self.recording.metrics = metrics
        self.recording.steps = steps
        self._f.write(json.dumps({"lv": "end", "terminal": terminal,
                                  "metrics": metrics, "steps": steps}) + "\n")
        self._f.flush()
        os.fsync(self._f.fileno())
        self._f.close()

    def abort(self, reason: str, steps: int):
        self.finalize("aborted", {"reason": reason}, steps)


def resimulate_actions(recording: EpisodeRecording, scene, assets=None, cfg=None):
    """Re-run level A through the engine; yields (t, state_hash_int, env)."""
    from ..engine.sim import Environment

    env = Environment(scene, recording.spec, assets=assets, cfg=cfg)
    for row in recording.level_a:
        actions = {aid: action_from_dict(d) for aid, d in row["actions"].items()}
        actions = {aid: a for aid, a in actions.items() if a is not None}
        env.step(actions)
        yield row["t"], env.state_hash(), env
