import asyncio
import json
import math
import os

import numpy as np
import pytest

from tandemsim.errors import ParseError, ValidationError
from tandemsim.fixtures import fixture_scene
from tandemsim.hitl.protocol import action_from_dict, action_to_dict, decode
from tandemsim.hitl.recording import EpisodeRecording, resimulate_actions
from tandemsim.hitl.replay import replay
from tandemsim.hitl.server import HitlServer, ServerConfig
from tandemsim.hitl.study import export_study_csv, make_study_plan, study_metrics


# -- protocol codec ------------------------------------------------------

def test_action_roundtrip():
    from tandemsim.engine.world import ArmDelta, BaseVelocity, HumanoidHighLevel, OraclePick

    for action in [
        None,
        BaseVelocity(0.5, -1.0),
        HumanoidHighLevel.navigate_to((1.0, 2.0), speed=0.75, face=(3.0, 4.0)),
        HumanoidHighLevel.pick("obj_0"),
        HumanoidHighLevel.place("obj_1", (1.0, 2.0, 0.9)),
        ArmDelta(np.linspace(-1, 1, 7), grip=True),
        OraclePick("obj_0"),
    ]:
        d = action_to_dict(action)
        back = action_from_dict(d)
        assert action_to_dict(back) == d


def test_decode_rejects_garbage():
    from tandemsim.errors import ProtocolError

    with pytest.raises(ProtocolError):
        decode("{broken")
    with pytest.raises(ProtocolError):
        decode(json.dumps({"type": "nonsense"}))


# -- live server: paired episode driven by a scripted client -----------------

def drive_episode(port, condition, participant="p0", max_msgs=40000):
    async def run():
        from websockets.asyncio.client import connect

        async with connect(f"ws://127.0.0.1:{port}", max_size=10_000_000) as ws:
            await ws.send(json.dumps({"type": "hello", "protocol": "hitl/1",
                                      "participant": participant,
                                      "condition": condition}))
            assert json.loads(await ws.recv())["type"] == "hello_ok"
            assert json.loads(await ws.recv())["type"] == "scene"
            ep = json.loads(await ws.recv())
            assert ep["type"] == "episode_start"
            goals = ep["goals"]
            current = 0
            tick = 0
            states = 0
            for _ in range(max_msgs):
                msg = json.loads(await ws.recv())
                if msg["type"] == "episode_end":
                    return msg, states
                if msg["type"] != "state":
                    continue
                states += 1
                tick += 1
                # drive the humanoid at whichever goal object remains open
                while current < len(goals) and msg["objects"][goals[current]["object_id"]]["at_goal"]:
                    current += 1
                if current >= len(goals):
                    continue
                g = goals[current]
                obj = msg["objects"][g["object_id"]]
                if obj["parent"][0] == "held" and obj["parent"][1].startswith("robot"):
                    current += 1  # robot took this one; move on
                    continue
                hum = msg["agents"]["human_0"]
                held = obj["parent"] == ["held", "human_0"]
                tgt = g["goal"] if held else obj["pos"]
                d = math.hypot(hum["x"] - tgt[0], hum["y"] - tgt[1])
                if d > 0.72:
                    await ws.send(json.dumps({"type": "input", "click": [tgt[0], tgt[1]]}))
                elif tick % 5 == 0:
                    await ws.send(json.dumps(
                        {"type": "input", "action": "place" if held else "pick"}))
            raise AssertionError("episode did not end")

    return asyncio.run(run())


@pytest.fixture()
def server(tmp_path):
    cfg = ServerConfig(port=0, tick_rate=0.0, episodes=1, scene_id="small_f",
                       recordings_dir=str(tmp_path), condition="paired:greedy-oracle")
    srv = HitlServer(cfg)
    thread, port = srv.start_background()
    yield srv, port, tmp_path
    srv.stop_background()


def test_paired_episode_completes(server):
    srv, port, tmp = server
    end, states = drive_episode(port, "paired:greedy-oracle")
    assert end["terminal"] == "success"
    assert end["metrics"]["success"] == 1
    assert end["metrics"]["RC"] is not None
    recs = sorted(os.listdir(tmp))
    assert len(recs) == 1
    rec = EpisodeRecording.load(os.path.join(tmp, recs[0]))
    assert rec.terminal == "success"
    assert len(rec.level_a) == len(rec.level_b) == rec.steps
    assert rec.metrics == end["metrics"]


def test_recording_resimulation_matches_level_b(server):
    srv, port, tmp = server
    drive_episode(port, "paired:greedy-oracle")
    rec = EpisodeRecording.load(os.path.join(tmp, sorted(os.listdir(tmp))[0]))
    scene = fixture_scene(rec.spec.scene_id)
    for (t, h, _env), row in zip(resimulate_actions(rec, scene), rec.level_b):
        assert row["t"] == t
        assert row["hash"] == f"{h:016x}"


def test_two_sessions_are_isolated(tmp_path):
    cfg = ServerConfig(port=0, tick_rate=0.0, episodes=1, scene_id="small_f",
                       recordings_dir=str(tmp_path))
    srv = HitlServer(cfg)
    _, port = srv.start_background()
    try:
        end1, _ = drive_episode(port, "solo", participant="pa")
        end2, _ = drive_episode(port, "paired:greedy-oracle", participant="pb")
        assert end1["terminal"] == "success"
        assert end2["terminal"] == "success"
        # solo episodes complete slower than assisted ones on the same spec
        assert end1["metrics"]["TS"] >= end2["metrics"]["TS"]
    finally:
        srv.stop_background()


# -- replay -------------------------------------------------------------------

def _make_recording(tmp_path) -> EpisodeRecording:
    cfg = ServerConfig(port=0, tick_rate=0.0, episodes=1, scene_id="small_f",
                       recordings_dir=str(tmp_path))
    srv = HitlServer(cfg)
    _, port = srv.start_background()
    try:
        drive_episode(port, "solo")
    finally:
        srv.stop_background()
    return EpisodeRecording.load(os.path.join(tmp_path, sorted(os.listdir(tmp_path))[0]))


def test_replay_playback_and_resimulate_agree(tmp_path):
    rec = _make_recording(tmp_path)
    playback = list(replay(rec, mode="playback", camera="topdown"))
    resim = list(replay(rec, mode="resimulate", camera="topdown"))
    assert len(playback) == len(resim) == rec.steps
    for a, b in zip(playback, resim):
        assert a["hash"] == b["hash"]
    # egocentric camera carries the robot pose; solo recordings have none
    ego = next(iter(replay(rec, mode="playback", camera="egocentric")))
    assert ego["camera"]["mode"] == "egocentric"


def test_replay_mode_unavailable(tmp_path):
    from tandemsim.errors import ModeUnavailable

    rec = _make_recording(tmp_path)
    rec.level_b = []
    with pytest.raises(ModeUnavailable):
        list(replay(rec, mode="playback"))


def test_truncated_recording_rejected(tmp_path):
    rec_path = None
    rec = _make_recording(tmp_path)
    rec_path = os.path.join(tmp_path, sorted(os.listdir(tmp_path))[0])
    lines = open(rec_path).read().splitlines()
    truncated = tmp_path / "trunc.rec"
    truncated.write_text("\n".join(lines[:20]) + "\n{bad json")
    loaded = EpisodeRecording.load(truncated)
    assert loaded.truncated
    assert loaded.steps <= 9
    with pytest.raises(ParseError):
        loaded.require_complete()


# -- study plans ----------------------------------------------------------------

def test_latin_square_three_conditions():
    plan = make_study_plan(3, ("solo", "a", "b"))
    assert len(plan.orderings) == 3
    for row in plan.orderings:
        assert sorted(row) == sorted(("solo", "a", "b"))
    # cyclic structure
    base = plan.orderings[0]
    for i, row in enumerate(plan.orderings):
        assert row == tuple(base[(i + k) % 3] for k in range(3)) or len(set(plan.orderings)) == 3


def test_latin_square_balanced_over_participants():
    plan = make_study_plan(30, ("solo", "a", "b"))
    counts = {}
    for p in range(30):
        counts[plan.ordering_for(p)] = counts.get(plan.ordering_for(p), 0) + 1
    assert all(c == 10 for c in counts.values())


def test_single_condition_plan():
    plan = make_study_plan(5, ("solo",))
    assert plan.orderings == (("solo",),)


def test_plan_requires_enough_participants():
    with pytest.raises(ValidationError):
        make_study_plan(2, ("solo", "a", "b"))


def _fake_rec(participant, condition, episode, ts, collision=0, rc=None, success=1):
    from tandemsim.tasks.episodes import EpisodeSpec
    from tandemsim.kinematics.transforms import BasePose

    spec = EpisodeSpec(task="rearrange", scene_id="small_f", seed=0,
                       humanoid_start=BasePose(0, 0, 0), humanoid_policy_id="x")
    return EpisodeRecording(spec=spec, participant=participant, condition=condition,
                            episode_index=episode, terminal="success",
                            metrics={"success": success, "TS": ts,
                                     "collision": collision, "RC": rc}, steps=ts)


def test_study_metrics_re_200(tmp_path):
    plan = make_study_plan(3, ("solo", "paired:x"))
    recs = []
    for p in range(3):
        pid = f"p{p}"
        for e in range(4):
            recs.append(_fake_rec(pid, "solo", e, ts=1000))
            recs.append(_fake_rec(pid, "paired:x", e, ts=500, rc=0.5))
    table, rows, warnings = study_metrics(recs, plan)
    assert not warnings
    assert table["solo"]["RE"] == pytest.approx(100.0)
    assert table["paired:x"]["RE"] == pytest.approx(200.0)
    assert table["paired:x"]["RC"] == pytest.approx(0.5)
    assert table["solo"]["RC"] is None
    assert table["solo"]["CR"] == 0.0
    out = tmp_path / "study.csv"
    export_study_csv(rows, out)
    assert out.read_text().count("\n") == len(rows) + 1


def test_study_metrics_excludes_incomplete():
    plan = make_study_plan(2, ("solo", "paired:x"))
    recs = [_fake_rec("p0", "solo", 0, 800), _fake_rec("p0", "paired:x", 0, 400),
            _fake_rec("p1", "solo", 0, 900)]  # p1 missing the paired block
    table, rows, warnings = study_metrics(recs, plan)
    assert warnings and "p1" in warnings[0]
    assert table["paired:x"]["RE"] == pytest.approx(200.0)
