"""Wire protocol hitl/1: JSON messages over a WebSocket.

Every message is one JSON object in a single text frame with a "type" field.
docs/protocol.md documents the byte-exact schema; this module is the single
codec used by the server, the headless test driver, and the recordings.
"""

from __future__ import annotations

import json

import numpy as np

from ..engine.world import ArmDelta, BaseVelocity, HumanoidHighLevel, OraclePick, OraclePlace
from ..errors import ProtocolError

PROTOCOL = "hitl/1"

MSG_TYPES = (
    "hello", "hello_ok", "scene", "episode_start", "state", "input",
    "episode_end", "warning", "error", "replay_ctl", "replay_frame", "replay_end",
    "session_end",
)


def encode(msg: dict) -> str:
    return json.dumps(msg, separators=(",", ":"), sort_keys=True)


def decode(raw) -> dict:
    try:
        msg = json.loads(raw)
    except (json.JSONDecodeError, TypeError) as exc:
        raise ProtocolError(f"malformed message: {exc}") from exc
    if not isinstance(msg, dict) or msg.get("type") not in MSG_TYPES:
        raise ProtocolError(f"unknown message type: {msg.get('type') if isinstance(msg, dict) else msg!r}")
    return msg


def action_to_dict(action) -> dict | None:
    if action is None:
        return None
    if isinstance(action, BaseVelocity):
        return {"kind": "base_velocity", "linear": action.linear, "angular": action.angular}
    if isinstance(action, HumanoidHighLevel):
        return {
            "kind": "high_level", "hl": action.kind,
            "target": None if action.target is None else list(action.target),
            "object_id": action.object_id,
            "position": None if action.position is None else list(action.position),
            "speed": action.speed,
            "face": None if action.face is None else list(action.face),
        }
    if isinstance(action, ArmDelta):
        return {"kind": "arm_delta", "deltas": np.asarray(action.deltas).tolist(),
                "grip": bool(action.grip)}
    if isinstance(action, OraclePick):
        return {"kind": "oracle_pick", "object_id": action.object_id, "radius": action.radius}
    if isinstance(action, OraclePlace):
        return {"kind": "oracle_place", "object_id": action.object_id,
                "position": list(action.position), "radius": action.radius}
    raise ProtocolError(f"unserializable action {type(action).__name__}")


def action_from_dict(d: dict | None):
    if d is None:
        return None
    kind = d.get("kind")
    if kind == "base_velocity":
        return BaseVelocity(float(d["linear"]), float(d["angular"]))
    if kind == "high_level":
        return HumanoidHighLevel(
            kind=d["hl"],
            target=None if d.get("target") is None else tuple(d["target"]),
            object_id=d.get("object_id"),
            position=None if d.get("position") is None else tuple(d["position"]),
            speed=float(d.get("speed", 1.0)),
            face=None if d.get("face") is None else tuple(d["face"]),
        )
    if kind == "arm_delta":
        return ArmDelta(np.asarray(d["deltas"], dtype=np.float64), bool(d["grip"]))
    if kind == "oracle_pick":
        return OraclePick(d["object_id"], float(d.get("radius", 1.5)))
    if kind == "oracle_place":
        return OraclePlace(d["object_id"], tuple(d["position"]), float(d.get("radius", 1.5)))
    raise ProtocolError(f"unknown action kind {kind!r}")


def state_message(env, events=None) -> dict:
    """Snapshot of the live world for clients; immutable copy semantics."""
    world = env.world
    agents = {}
    for aid, a in world.agents.items():
        entry = {
            "x": a.base.x, "y": a.base.y, "heading": a.base.heading,
            "kind": a.kind, "holding": a.holding,
        }
        if a.kind == "humanoid" and a.pose is not None:
            entry["hand"] = env.hand_world(aid).tolist()
        agents[aid] = entry
    objects = {}
    for oid, o in world.objects.items():
        objects[oid] = {
            "pos": np.asarray(o.position).tolist(),
            "parent": list(o.parent),
            "at_goal": o.parent[0] == "goal",
        }
    ev = {}
    if events is not None:
        ev = {
            "collisions": [list(c) for c in events.collisions],
            "picks": [list(p) for p in events.picks],
            "places": [list(p) for p in events.places],
            "warnings": [list(n) for n in events.noops],
        }
    return {
        "type": "state",
        "t": world.step_index,
        "agents": agents,
        "objects": objects,
        "events": ev,
        "hash": f"{env.state_hash():016x}",
    }
