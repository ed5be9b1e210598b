import json
import socket
import sys
import threading

import pytest

from tandemsim.errors import ProtocolError
from tandemsim.evalbench.episodes import generate_rearrange_spec
from tandemsim.evalbench.runner import run_episode
from tandemsim.policies.bridge import BridgePolicy
from tandemsim.policies.rearrange import GreedyOracleRobot, PlanPopMember

HOST_CMD = "cmd:" + json.dumps([
    sys.executable, "-m", "tandemsim.policies.bridge_host", "--policy", "greedy-oracle",
    "--stdio",
])


def _tcp_stub(handler):
    """One-connection TCP server running `handler(rfile, wfile)` on a thread."""
    srv = socket.create_server(("127.0.0.1", 0))
    port = srv.getsockname()[1]

    def run():
        conn, _ = srv.accept()
        with conn:
            handler(conn.makefile("r"), conn.makefile("w"))

    t = threading.Thread(target=run, daemon=True)
    t.start()
    return port


def _echo_wait(rfile, wfile):
    for line in rfile:
        msg = json.loads(line)
        if msg["type"] == "episode_start":
            reply = {"type": "ready"}
        elif msg["type"] == "obs":
            reply = {"type": "act", "action": None}  # wait forever
        else:
            continue
        wfile.write(json.dumps(reply) + "\n")
        wfile.flush()


def _malformed(rfile, wfile):
    for line in rfile:
        msg = json.loads(line)
        if msg["type"] == "episode_start":
            wfile.write(json.dumps({"type": "ready"}) + "\n")
        else:
            wfile.write(json.dumps({"type": "gibberish"}) + "\n")
        wfile.flush()


def test_wait_policy_robot_stands_still(small_scene):
    port = _tcp_stub(_echo_wait)
    spec = generate_rearrange_spec(small_scene, seed=81, max_steps=40)
    policy = BridgePolicy(f"tcp://127.0.0.1:{port}")
    trace = run_episode(small_scene, spec, robot_policy=policy,
                        humanoid_policy=PlanPopMember(()))
    policy.close()
    assert trace.steps == 40
    start = (spec.robot_start.x, spec.robot_start.y)
    assert all(r.robot_xy == start for r in trace.records)


def test_bridge_transparency(small_scene):
    spec = generate_rearrange_spec(small_scene, seed=83)
    ref = run_episode(small_scene, spec, robot_policy=GreedyOracleRobot(),
                      humanoid_policy=PlanPopMember(("obj_0",)))
    policy = BridgePolicy(HOST_CMD)
    out = run_episode(small_scene, spec, robot_policy=policy,
                      humanoid_policy=PlanPopMember(("obj_0",)))
    policy.close()
    assert out.terminal_cause == ref.terminal_cause
    assert out.steps == ref.steps
    assert [r.to_row() for r in out.records] == [r.to_row() for r in ref.records]


def test_malformed_action_raises_in_strict_mode(small_scene):
    port = _tcp_stub(_malformed)
    spec = generate_rearrange_spec(small_scene, seed=85, max_steps=10)
    policy = BridgePolicy(f"tcp://127.0.0.1:{port}", strict=True)
    with pytest.raises(ProtocolError):
        run_episode(small_scene, spec, robot_policy=policy,
                    humanoid_policy=PlanPopMember(()))
    policy.close()


def test_malformed_action_degrades_to_wait(small_scene):
    port = _tcp_stub(_malformed)
    spec = generate_rearrange_spec(small_scene, seed=85, max_steps=10)
    policy = BridgePolicy(f"tcp://127.0.0.1:{port}", strict=False)
    trace = run_episode(small_scene, spec, robot_policy=policy,
                        humanoid_policy=PlanPopMember(()))
    policy.close()
    assert trace.steps == 10
