"""Bridge for out-of-process policies: line-delimited JSON over a local
socket or a subprocess pipe.

Per step the bridge sends an `obs` message and expects an `act` reply within
the timeout; overruns degrade to a wait action with a warning. Episode
boundaries are delivered as `episode_start`/`episode_end`. The byte-exact
message schema lives in docs/policy-bridge.md (schema id bridge/1).
"""

from __future__ import annotations

import json
import logging
import socket
import subprocess

import numpy as np

from ..errors import BridgeTimeout, ProtocolError
from ..hitl.protocol import action_from_dict
from .base import Policy

log = logging.getLogger(__name__)

BRIDGE_SCHEMA = "bridge/1"
DEFAULT_TIMEOUT = 1.0


def world_summary(world, probe=None) -> dict:
    """JSON-able privileged observation for external high-level policies."""
    agents = {}
    for aid, a in world.agents.items():
        agents[aid] = {"x": a.base.x, "y": a.base.y, "heading": a.base.heading,
                       "kind": a.kind, "holding": a.holding}
    objects = {}
    for oid, o in world.objects.items():
        objects[oid] = {"pos": np.asarray(o.position).tolist(), "parent": list(o.parent),
                        "at_goal": o.parent[0] == "goal"}
    return {
        "t": world.step_index,
        "agents": agents,
        "objects": objects,
        "delta": None if probe is None else probe.delta,
    }


class _LineTransport:
    """Blocking line-delimited JSON over a TCP socket or subprocess stdio."""

    def __init__(self, endpoint: str, timeout: float):
        self.timeout = timeout
        self.proc = None
        self.sock = None
        if endpoint.startswith("tcp://"):
            host, port = endpoint[6:].rsplit(":", 1)
            self.sock = socket.create_connection((host, int(port)), timeout=timeout)
            self._rfile = self.sock.makefile("r", encoding="utf-8")
            self._wfile = self.sock.makefile("w", encoding="utf-8")
        elif endpoint.startswith("cmd:"):
            argv = json.loads(endpoint[4:])
            self.proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
            )
            self._rfile = self.proc.stdout
            self._wfile = self.proc.stdin
        else:
            raise ProtocolError(f"unknown bridge endpoint {endpoint!r} "
                                "(expected tcp://host:port or cmd:[json argv])")

    def send(self, msg: dict):
        self._wfile.write(json.dumps(msg, separators=(",", ":")) + "\n")
        self._wfile.flush()

    def recv(self) -> dict:
        if self.sock is not None:
            self.sock.settimeout(self.timeout)
        try:
            line = self._rfile.readline()
        except (socket.timeout, TimeoutError) as exc:
            raise BridgeTimeout("external policy did not answer in time") from exc
        if not line:
            raise ProtocolError("external policy closed the connection")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed bridge message: {exc}") from exc
        if not isinstance(msg, dict):
            raise ProtocolError("bridge messages must be JSON objects")
        return msg

    def close(self):
        try:
            if self.sock is not None:
                self.sock.close()
            if self.proc is not None:
                self.proc.terminate()
                self.proc.wait(timeout=2)
        except Exception:
            pass


class BridgePolicy(Policy):
    """Robot policy served by an external process speaking bridge/1."""

    agent_id = "robot_0"

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT,
                 strict: bool = False):
        """strict=True raises ProtocolError on malformed replies (episode is
        aborted by the caller); otherwise they degrade to wait + warning."""
        self.endpoint = endpoint
        self.timeout = timeout
        self.strict = strict
        self.transport: _LineTransport | None = None
        self._episode = 0

    def reset(self, scene, spec, world):
        if self.transport is None:
            self.transport = _LineTransport(self.endpoint, self.timeout)
        self._episode += 1
        self.transport.send({
            "type": "episode_start", "schema": BRIDGE_SCHEMA,
            "episode": self._episode, "agent": self.agent_id,
            "scene_id": scene.id, "spec": spec.to_dict(),
        })
        reply = self.transport.recv()
        if reply.get("type") != "ready":
            raise ProtocolError(f"expected ready, got {reply.get('type')!r}")

    def act(self, world, probe=None):
        self.transport.send({
            "type": "obs", "schema": BRIDGE_SCHEMA,
            "data": world_summary(world, probe),
        })
        try:
            reply = self.transport.recv()
        except BridgeTimeout:
            log.warning("bridge timeout; substituting wait")
            return None
        if reply.get("type") != "act" or "action" not in reply:
            if self.strict:
                raise ProtocolError(f"malformed act reply: {reply!r}")
            log.warning("malformed bridge reply; substituting wait")
            return None
        try:
            return action_from_dict(reply["action"])
        except ProtocolError:
            if self.strict:
                raise
            log.warning("unknown bridge action; substituting wait")
            return None

    def episode_end(self, metrics: dict | None = None):
        if self.transport is not None:
            self.transport.send({"type": "episode_end", "schema": BRIDGE_SCHEMA,
                                 "metrics": metrics or {}})

    def close(self):
        if self.transport is not None:
            self.transport.close()
            self.transport = None
