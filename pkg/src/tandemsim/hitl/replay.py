"""Replay of recordings: engine re-simulation or direct pose playback,
with camera-viewpoint metadata attached to every frame."""

from __future__ import annotations

from ..errors import ModeUnavailable
from ..fixtures import fixture_scene
from .recording import EpisodeRecording, resimulate_actions

CAMERAS = ("topdown", "egocentric")


def _camera_meta(camera: str, agents: dict) -> dict:
    if camera == "egocentric":
        robot = next((a for aid, a in agents.items() if aid.startswith("robot")), None)
        pose = None if robot is None else [robot["x"], robot["y"], robot["heading"]]
        return {"mode": "egocentric", "pose": pose}
    return {"mode": "topdown", "pose": None}


def replay(recording: EpisodeRecording, mode: str = "playback",
           camera: str = "topdown", scene=None):
    """Yield frame dicts: {"frame", "t", "agents", "objects", "hash", "camera"}."""
    if camera not in CAMERAS:
        raise ModeUnavailable(f"unknown camera {camera!r}")
    if mode == "playback":
        if not recording.level_b:
            raise ModeUnavailable("recording has no level-B stream")
        for k, row in enumerate(recording.level_b):
            yield {
                "frame": k,
                "t": row["t"],
                "agents": row["agents"],
                "objects": row["objects"],
                "hash": row["hash"],
                "camera": _camera_meta(camera, row["agents"]),
            }
        return
    if mode == "resimulate":
        if not recording.level_a:
            raise ModeUnavailable("recording has no level-A stream")
        if scene is None:
            scene = fixture_scene(recording.spec.scene_id)
        for k, (t, h, env) in enumerate(resimulate_actions(recording, scene)):
            agents = {
                aid: {"x": a.base.x, "y": a.base.y, "heading": a.base.heading,
                      "holding": a.holding}
                for aid, a in env.world.agents.items()
            }
            objects = {oid: {"pos": list(map(float, o.position)), "parent": list(o.parent)}
                       for oid, o in env.world.objects.items()}
            yield {
                "frame": k, "t": t, "agents": agents, "objects": objects,
                "hash": f"{h:016x}", "camera": _camera_meta(camera, agents),
            }
        return
    raise ModeUnavailable(f"unknown replay mode {mode!r}")
