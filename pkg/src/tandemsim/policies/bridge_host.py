"""Host a builtin policy behind the bridge/1 protocol (stdio or TCP).

Run as `python -m tandemsim.policies.bridge_host --policy greedy-oracle
--stdio` (or `--port N`). The host rebuilds a lightweight world view from
each obs message, so any builtin high-level policy can serve out-of-process.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys

import numpy as np

from ..fixtures import fixture_scene
from ..kinematics.transforms import BasePose
from ..tasks.episodes import EpisodeSpec


class _ObjectView:
    def __init__(self, d):
        self.position = np.asarray(d["pos"], dtype=np.float64)
        self.parent = tuple(d["parent"])

    def held_by(self):
        return self.parent[1] if self.parent[0] == "held" else None


class _AgentView:
    def __init__(self, aid, d):
        self.agent_id = aid
        self.kind = d["kind"]
        self.base = BasePose(d["x"], d["y"], d["heading"])
        self.holding = d["holding"]


class WorldView:
    """Read-only stand-in for WorldState built from a bridge obs payload."""

    def __init__(self, scene, spec, data):
        self.scene = scene
        self.spec = spec
        self.step_index = data["t"]
        self.agents = {aid: _AgentView(aid, d) for aid, d in data["agents"].items()}
        self.objects = {oid: _ObjectView(d) for oid, d in data["objects"].items()}

    @property
    def robot(self):
        return next((a for a in self.agents.values() if a.kind == "robot"), None)

    @property
    def humanoid(self):
        return next((a for a in self.agents.values() if a.kind == "humanoid"), None)

    def object_goal(self, object_id):
        for o in self.spec.objects:
            if o.object_id == object_id:
                return o
        raise KeyError(object_id)


def serve_stream(rfile, wfile, policy_name: str):
    from ..hitl.protocol import action_to_dict
    from ..evalbench.evaluate import ROBOT_POLICIES

    policy = None
    scene = None
    spec = None
    for line in rfile:
        if not line.strip():
            continue
        msg = json.loads(line)
        mtype = msg.get("type")
        if mtype == "episode_start":
            spec = EpisodeSpec.from_dict(msg["spec"])
            scene = fixture_scene(msg["scene_id"])
            policy = ROBOT_POLICIES[policy_name]()
            policy.reset(scene, spec, None)
            reply = {"type": "ready"}
        elif mtype == "obs":
            view = WorldView(scene, spec, msg["data"])
            action = policy.act(view, None)
            reply = {"type": "act", "action": action_to_dict(action)}
        elif mtype == "episode_end":
            policy = None
            continue
        else:
            reply = {"type": "error", "reason": f"unknown message {mtype!r}"}
        wfile.write(json.dumps(reply, separators=(",", ":")) + "\n")
        wfile.flush()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--policy", default="greedy-oracle")
    ap.add_argument("--stdio", action="store_true")
    ap.add_argument("--port", type=int)
    args = ap.parse_args(argv)
    if args.stdio or not args.port:
        serve_stream(sys.stdin, sys.stdout, args.policy)
        return 0
    srv = socket.create_server(("127.0.0.1", args.port))
    conn, _ = srv.accept()
    with conn:
        rfile = conn.makefile("r", encoding="utf-8")
        wfile = conn.makefile("w", encoding="utf-8")
        serve_stream(rfile, wfile, args.policy)
    return 0


if __name__ == "__main__":
    sys.exit(main())
