"""Human-in-the-loop teleoperation server.

One WebSocket connection = one session. The server owns all logic: it runs
the simulation loop at the configured tick rate, applies the latest client
input to the humanoid (latest-wins sampling), queries the robot policy
inside the tick, records both abstraction levels, and streams state
snapshots. Sessions are isolated: each runs its own environment and
recording writer; a failure or disconnect aborts only that session.
"""

from __future__ import annotations

import asyncio
import itertools
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..engine.sim import Environment
from ..engine.world import BaseVelocity, HumanoidHighLevel
from ..errors import BindError, ProtocolError
from ..evalbench.episodes import generate_rearrange_spec
from ..fixtures import fixture_scene
from ..geometry import dist2d
from ..kinematics.assets import default_assets
from ..scene import scene_to_dict
from ..tasks.trace import TERMINAL_SUCCESS, TERMINAL_TIMEOUT
from .protocol import PROTOCOL, decode, encode, state_message
from .recording import EpisodeRecording, RecordingWriter
from .replay import replay
from .study import StudyPlan

_session_counter = itertools.count()


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    tick_rate: float = 10.0          # Hz; 0 = unpaced (tests)
    study_plan_path: str | None = None
    recordings_dir: str = "recordings"
    condition: str = "paired:greedy-oracle"
    episodes: int = 10
    scene_id: str = "small_f"
    max_steps: int = 1500
    seed_base: int = 90000


@dataclass
class InputState:
    keys: frozenset = frozenset()
    nav_target: tuple | None = None
    pending_action: str | None = None

    def apply_message(self, msg: dict) -> "InputState":
        keys = self.keys
        nav = self.nav_target
        pending = self.pending_action
        if "keys" in msg:
            keys = frozenset(msg["keys"])
            if keys:
                nav = None
        if msg.get("click") is not None:
            nav = tuple(float(v) for v in msg["click"])
            keys = frozenset()
        if msg.get("action") in ("pick", "place"):
            pending = msg["action"]
        return InputState(keys=keys, nav_target=nav, pending_action=pending)


class Session:
    """Server-side state of one connected participant."""

    def __init__(self, server: "HitlServer", ws, hello: dict):
        self.server = server
        self.ws = ws
        self.session_id = f"s{next(_session_counter)}"
        self.participant = str(hello.get("participant", "anon"))
        self.condition = str(hello.get("condition", server.cfg.condition))
        self.input = InputState()
        self.warnings: list[str] = []
        self._click_cache = None
        self.inbox: list = []
        self.alive = True

    async def send(self, msg: dict):
        await self.ws.send(encode(msg))

    def humanoid_command(self, env: Environment):
        """Latest-wins input sampling -> one humanoid command for this tick."""
        cfg = env.cfg
        inp = self.input
        if inp.pending_action is not None:
            action = inp.pending_action
            self.input = InputState(keys=inp.keys, nav_target=inp.nav_target)
            cmd = self._manip_command(env, action)
            if cmd is not None:
                return cmd
        if inp.nav_target is not None:
            hum = env.world.humanoid
            target, face = self._resolve_click(env, hum, inp.nav_target)
            arrived = dist2d(hum.base.xy, target) <= (0.08 if face else cfg.arrival_tol)
            if arrived and face is not None:
                err = abs((math.atan2(face[1] - hum.base.y, face[0] - hum.base.x)
                           - hum.base.heading + math.pi) % (2 * math.pi) - math.pi)
                arrived = err <= cfg.facing_tol
            if arrived:
                self.input = InputState(keys=inp.keys)
                self._click_cache = None
            else:
                return HumanoidHighLevel.navigate_to(target, face=face)
        lin = (1.0 if "w" in inp.keys else 0.0) - (1.0 if "s" in inp.keys else 0.0)
        ang = (1.0 if "a" in inp.keys else 0.0) - (1.0 if "d" in inp.keys else 0.0)
        if lin or ang:
            return BaseVelocity(lin, ang)
        return HumanoidHighLevel.stand_still()

    def _resolve_click(self, env, hum, click):
        """A click near a task point becomes an approach: stand off at reach
        range facing the point. Resolved once per click (cached), so the
        stand-off point does not drift while walking."""
        if self._click_cache is not None and self._click_cache[0] == click:
            return self._click_cache[1], self._click_cache[2]
        face = None
        target = click
        points = [tuple(o.position[:2]) for o in env.world.objects.values()]
        points += [tuple(p.goal_pos[:2]) for p in env.world.spec.objects]
        near = [p for p in points if dist2d(p, click) < 1.0]
        if near:
            face = min(near, key=lambda p: dist2d(p, click))
            if dist2d(face, click) < 0.45:  # clicked the surface itself: back off
                hx, hy = hum.base.xy
                ux, uy = hx - face[0], hy - face[1]
                n = math.hypot(ux, uy) or 1.0
                target = (face[0] + 0.62 * ux / n, face[1] + 0.62 * uy / n)
        self._click_cache = (click, target, face)
        return target, face

    def _manip_command(self, env: Environment, action: str):
        world = env.world
        hum = world.humanoid
        cache = env.assets.reach_cache
        if action == "pick":
            if hum.holding is not None:
                self.warnings.append("already holding an object")
                return None
            best = None
            for oid, obj in sorted(world.objects.items()):
                if obj.held_by() is not None:
                    continue
                if cache.contains(hum.base.to_body(obj.position)):
                    d = dist2d(hum.base.xy, (obj.position[0], obj.position[1]))
                    if best is None or d < best[0]:
                        best = (d, oid)
            if best is None:
                self.warnings.append("no object within the reach envelope")
                return None
            return HumanoidHighLevel.pick(best[1])
        # place
        if hum.holding is None:
            self.warnings.append("nothing to place")
            return None
        goal = world.object_goal(hum.holding)
        if cache.contains(hum.base.to_body(np.asarray(goal.goal_pos))):
            return HumanoidHighLevel.place(hum.holding, goal.goal_pos)
        for rec in world.scene.receptacles:
            if not rec.open:
                continue
            p = np.asarray(rec.surface_point())
            if cache.contains(hum.base.to_body(p)):
                return HumanoidHighLevel.place(hum.holding, tuple(p))
        self.warnings.append("no placement surface within reach")
        return None


class HitlServer:
    def __init__(self, cfg: ServerConfig):
        self.cfg = cfg
        self.scene = fixture_scene(cfg.scene_id)
        self.assets = default_assets()
        self.plan: StudyPlan | None = None
        if cfg.study_plan_path:
            self.plan = StudyPlan.load(cfg.study_plan_path)
        self._server = None
        self._loop = None
        self.bound_port: int | None = None

    # -- robot policies -------------------------------------------------

    def _robot_policy(self, condition: str):
        if condition == "solo":
            return None
        if condition.startswith("paired:"):
            from ..evalbench.evaluate import ROBOT_POLICIES

            name = condition.split(":", 1)[1]
            if name not in ROBOT_POLICIES:
                raise ProtocolError(f"unknown robot policy {name!r}")
            return ROBOT_POLICIES[name]()
        raise ProtocolError(f"unknown condition {condition!r}")

    # -- session loop -----------------------------------------------------

    async def _handler(self, ws):
        try:
            hello = decode(await ws.recv())
        except Exception:
            await ws.close()
            return
        if hello.get("type") != "hello" or hello.get("protocol") != PROTOCOL:
            await ws.send(encode({"type": "error", "reason": "expected hitl/1 hello"}))
            await ws.close()
            return
        session = Session(self, ws, hello)
        mode = hello.get("mode", "teleop")
        await session.send({
            "type": "hello_ok", "session": session.session_id,
            "condition": session.condition, "tick_rate": self.cfg.tick_rate,
            "episodes": self.cfg.episodes, "protocol": PROTOCOL,
        })
        reader = None
        try:
            if mode == "replay":
                await self._replay_loop(session)
            else:
                reader = asyncio.create_task(self._reader(session))
                await self._teleop_loop(session)
        except Exception:
            # session isolation: swallow per-session failures
            try:
                await ws.close()
            except Exception:
                pass
        finally:
            if reader is not None:
                reader.cancel()

    async def _reader(self, session: Session):
        """Receive loop: client messages land in the session inbox so the
        tick loop can drain them synchronously (latest-wins sampling without
        timing races)."""
        try:
            while True:
                session.inbox.append(await session.ws.recv())
        except Exception:
            session.alive = False

    async def _drain_inputs(self, session: Session):
        """Apply every queued client message (latest wins)."""
        pending, session.inbox = session.inbox, []
        for raw in pending:
            try:
                msg = decode(raw)
            except ProtocolError as exc:
                await session.send({"type": "warning", "reason": str(exc)})
                continue
            if msg["type"] == "input":
                session.input = session.input.apply_message(msg)
            elif msg["type"] == "replay_ctl":
                await session.send({"type": "warning",
                                    "reason": "replay_ctl outside replay mode"})
        return session.alive

    async def _teleop_loop(self, session: Session):
        cfg = self.cfg
        await session.send({"type": "scene", "scene": scene_to_dict(self.scene)})
        tick = (1.0 / cfg.tick_rate) if cfg.tick_rate > 0 else 0.0
        for episode_index in range(cfg.episodes):
            spec = generate_rearrange_spec(
                self.scene, seed=cfg.seed_base + episode_index,
                max_steps=cfg.max_steps, episode_id=f"hitl#{episode_index}",
            )
            if session.condition == "solo":
                spec = spec.solo_variant()
            robot_policy = self._robot_policy(session.condition)
            env = Environment(self.scene, spec, assets=self.assets)
            if robot_policy is not None:
                robot_policy.reset(self.scene, spec, env.world)
            rec = EpisodeRecording(
                spec=spec, session=session.session_id, participant=session.participant,
                condition=session.condition, episode_index=episode_index,
            )
            path = Path(cfg.recordings_dir) / (
                f"{session.participant}_{session.condition.replace(':', '-')}"
                f"_{episode_index:03d}.rec"
            )
            writer = RecordingWriter(path, rec)
            await session.send({
                "type": "episode_start", "episode": episode_index,
                "spec": spec.to_dict(),
                "goals": [{"object_id": o.object_id, "start": list(o.start_pos),
                           "goal": list(o.goal_pos)} for o in spec.objects],
            })
            session.input = InputState()
            collision_seen = False
            robot_done = 0
            terminal = None
            try:
                while True:
                    alive = await self._drain_inputs(session)
                    if not alive:
                        writer.abort("client disconnected", env.world.step_index)
                        return
                    actions = {}
                    hum = env.world.humanoid
                    if hum is not None:
                        cmd = session.humanoid_command(env)
                        if cmd is not None:
                            actions[hum.agent_id] = cmd
                    if robot_policy is not None and env.world.robot is not None:
                        rcmd = robot_policy.act(env.world, None)
                        if rcmd is not None:
                            actions[env.world.robot.agent_id] = rcmd
                    events = env.step(actions)
                    writer.record_step(env, actions, events)
                    collision_seen = collision_seen or events.robot_humanoid_collision()
                    for agent_id, object_id, at_goal, first in events.places:
                        if at_goal and first and agent_id.startswith("robot"):
                            robot_done += 1
                    msg = state_message(env, events)
                    for w in session.warnings:
                        await session.send({"type": "warning", "reason": w})
                    session.warnings.clear()
                    await session.send(msg)
                    if all(o.parent[0] == "goal" for o in env.world.objects.values()):
                        terminal = TERMINAL_SUCCESS
                    elif env.world.step_index >= spec.max_steps:
                        terminal = TERMINAL_TIMEOUT
                    if terminal is not None:
                        break
                    if tick > 0:
                        await asyncio.sleep(tick)
                    else:
                        await asyncio.sleep(0)
            except Exception:
                writer.abort("session error", env.world.step_index)
                raise
            steps = env.world.step_index
            metrics = {
                "success": int(terminal == TERMINAL_SUCCESS),
                "TS": steps if terminal == TERMINAL_SUCCESS else spec.max_steps,
                "collision": int(collision_seen),
                "RC": (robot_done / max(1, len(spec.objects))
                       ) if session.condition != "solo" else None,
                "steps": steps,
            }
            writer.finalize(terminal, metrics, steps)
            await session.send({"type": "episode_end", "episode": episode_index,
                                "terminal": terminal, "metrics": metrics})
        await session.send({"type": "session_end"})

    async def _replay_loop(self, session: Session):
        recording = None
        while True:
            try:
                msg = decode(await session.ws.recv())
            except Exception:
                return
            if msg["type"] != "replay_ctl":
                await session.send({"type": "warning", "reason": "expected replay_ctl"})
                continue
            cmd = msg.get("cmd")
            if cmd == "load":
                recording = EpisodeRecording.load(msg["path"])
                await session.send({"type": "scene", "scene": scene_to_dict(
                    fixture_scene(recording.spec.scene_id))})
                await session.send({"type": "replay_ctl", "cmd": "loaded",
                                    "frames": len(recording.level_b)})
            elif cmd in ("play", "frames"):
                if recording is None:
                    await session.send({"type": "warning", "reason": "no recording loaded"})
                    continue
                mode = msg.get("mode", "playback")
                camera = msg.get("camera", "topdown")
                start = int(msg.get("start", 0))
                end = msg.get("end")
                for frame in replay(recording, mode=mode, camera=camera):
                    if frame["frame"] < start:
                        continue
                    if end is not None and frame["frame"] > int(end):
                        break
                    await session.send({"type": "replay_frame", **frame})
                await session.send({"type": "replay_end"})
            elif cmd == "close":
                return
            else:
                await session.send({"type": "warning", "reason": f"unknown replay cmd {cmd!r}"})

    # -- lifecycle ----------------------------------------------------------

    async def _serve(self, ready: threading.Event | None = None):
        from websockets.asyncio.server import serve

        try:
            async with serve(self._handler, self.cfg.host, self.cfg.port) as server:
                self._server = server
                self.bound_port = server.sockets[0].getsockname()[1] if hasattr(
                    server, "sockets") else self.cfg.port
                if not self.bound_port:
                    sockets = getattr(server, "server", server)
                    self.bound_port = list(sockets.sockets)[0].getsockname()[1]
                if ready is not None:
                    ready.set()
                await asyncio.get_running_loop().create_future()  # run until cancelled
        except OSError as exc:
            if ready is not None:
                ready.set()
            raise BindError(f"cannot bind {self.cfg.host}:{self.cfg.port} ({exc})") from exc

    def run_forever(self):
        asyncio.run(self._serve())

    def start_background(self) -> tuple[threading.Thread, int]:
        """Run the server on a daemon thread; returns (thread, bound port)."""
        ready = threading.Event()
        self._loop = asyncio.new_event_loop()

        def runner():
            asyncio.set_event_loop(self._loop)
            try:
                self._loop.run_until_complete(self._serve(ready))
            except (Exception, asyncio.CancelledError):
                pass

        thread = threading.Thread(target=runner, daemon=True)
        thread.start()
        if not ready.wait(timeout=10):
            raise BindError("server did not start in time")
        if self.bound_port is None:
            raise BindError("server failed to bind")
        return thread, self.bound_port

    def stop_background(self):
        if self._loop is not None:
            self._loop.call_soon_threadsafe(
                lambda: [t.cancel() for t in asyncio.all_tasks(self._loop)]
            )
