"""Batched execution of independent environments.

Each environment is sequentially consistent; batching only partitions work,
so per-env trajectories are bit-identical to standalone execution with the
same seeds. An optional process pool distributes envs across workers for
throughput; determinism is unaffected because no state is shared.
"""

from __future__ import annotations

import multiprocessing as mp

from ..errors import SpecError
from ..kinematics.assets import default_assets
from .sim import Environment
from .world import SimConfig


class VectorEnv:
    """In-process batch of environments with auto-reset."""

    def __init__(self, specs, scene_provider, cfg: SimConfig | None = None,
                 spec_source=None, done_fn=None):
        """specs: initial EpisodeSpec per env. scene_provider: scene_id -> Scene.
        spec_source: callable (env_index, episode_counter) -> EpisodeSpec used
        on auto-reset; defaults to repeating the initial spec. done_fn:
        (env, events) -> bool deciding episode end (default: max_steps)."""
        if len(specs) < 1:
            raise SpecError("vector env needs at least one spec")
        assets = default_assets()
        self.cfg = cfg or SimConfig()
        self._scene_provider = scene_provider
        self._spec_source = spec_source
        self._done_fn = done_fn or (lambda env, ev: env.world.step_index >= env.spec.max_steps)
        self.envs = [
            Environment(scene_provider(s.scene_id), s, assets=assets, cfg=self.cfg)
            for s in specs
        ]
        self._episode_counters = [0] * len(specs)

    @property
    def n_envs(self) -> int:
        return len(self.envs)

    def step(self, actions_batch):
        """actions_batch: one action dict per env. Returns (events, dones)."""
        if len(actions_batch) != self.n_envs:
            raise ValueError("one action dict per environment required")
        events, dones = [], []
        for i, (env, actions) in enumerate(zip(self.envs, actions_batch)):
            ev = env.step(actions)
            done = self._done_fn(env, ev)
            if done:
                self._episode_counters[i] += 1
                if self._spec_source is not None:
                    nxt = self._spec_source(i, self._episode_counters[i])
                else:
                    nxt = env.spec
                env.reset(nxt)
            events.append(ev)
            dones.append(done)
        return events, dones

    def state_hashes(self) -> list[int]:
        return [env.state_hash() for env in self.envs]


def _worker_main(conn, scene_dicts, spec_dicts, cfg):
    import traceback

    try:
        from ..scene import scene_from_dict
        from ..tasks.episodes import EpisodeSpec

        scenes = {d["id"]: scene_from_dict(d) for d in scene_dicts}
        specs = [EpisodeSpec.from_dict(d) for d in spec_dicts]
        vec = VectorEnv(specs, lambda sid: scenes[sid], cfg=cfg)
        while True:
            msg = conn.recv()
            if msg[0] == "close":
                conn.close()
                return
            if msg[0] == "step":
                events, dones = vec.step(msg[1])
                conn.send(("ok", (len(events), dones, vec.state_hashes())))
            elif msg[0] == "rollout":
                # n steps with a locally applied action function (benchmark path)
                import time

                n_steps, policy_name, seed = msg[1], msg[2], msg[3]
                from ..policies.random_actions import make_random_action_fn

                fns = [
                    make_random_action_fn(env, seed + 1000 * k)
                    for k, env in enumerate(vec.envs)
                ]
                t0 = time.perf_counter()
                for _ in range(n_steps):
                    for env, fn in zip(vec.envs, fns):
                        env.step(fn())
                elapsed = time.perf_counter() - t0
                conn.send(("ok", (n_steps * vec.n_envs, elapsed, vec.state_hashes())))
    except BaseException:
        try:
            conn.send(("error", traceback.format_exc()))
        except Exception:
            pass
        raise


class WorkerVectorEnv:
    """Vector env fanned out over processes (one VectorEnv per worker)."""

    def __init__(self, specs, scene_dicts, cfg: SimConfig | None = None, workers: int = 2):
        workers = max(1, min(workers, len(specs)))
        self.cfg = cfg or SimConfig()
        chunks = [list(range(len(specs)))[i::workers] for i in range(workers)]
        self._chunks = [c for c in chunks if c]
        ctx = mp.get_context("fork")
        self._conns = []
        self._procs = []
        for chunk in self._chunks:
            parent, child = ctx.Pipe()
            proc = ctx.Process(
                target=_worker_main,
                args=(child, scene_dicts, [specs[i].to_dict() for i in chunk], self.cfg),
                daemon=True,
            )
            proc.start()
            child.close()
            self._conns.append(parent)
            self._procs.append(proc)
        self.n_envs = len(specs)

    @staticmethod
    def _recv_ok(conn):
        status, payload = conn.recv()
        if status != "ok":
            raise RuntimeError(f"vector-env worker failed:\n{payload}")
        return payload

    def step(self, actions_batch):
        for conn, chunk in zip(self._conns, self._chunks):
            conn.send(("step", [actions_batch[i] for i in chunk]))
        dones = [None] * self.n_envs
        hashes = [None] * self.n_envs
        for conn, chunk in zip(self._conns, self._chunks):
            _, d, hs = self._recv_ok(conn)
            for local, idx in enumerate(chunk):
                dones[idx] = d[local]
                hashes[idx] = hs[local]
        return dones, hashes

    def rollout(self, n_steps: int, seed: int):
        """Timed random-action rollout executed inside each worker.
        Returns (total env-steps, wall time of the slowest worker)."""
        for conn in self._conns:
            conn.send(("rollout", n_steps, "random", seed))
        total = 0
        slowest = 0.0
        for conn in self._conns:
            steps, elapsed, _ = self._recv_ok(conn)
            total += steps
            slowest = max(slowest, elapsed)
        return total, slowest

    def close(self):
        for conn in self._conns:
            try:
                conn.send(("close",))
                conn.close()
            except (BrokenPipeError, OSError):
                pass
        for proc in self._procs:
            proc.join(timeout=5)


def make_vector_env(n: int, spec_source, scene_provider, seed: int = 0,
                    cfg: SimConfig | None = None, done_fn=None) -> VectorEnv:
    """n independent environments drawing initial specs from spec_source(i, 0)."""
    if n < 1:
        raise SpecError("need n >= 1 environments")
    specs = [spec_source(i, 0) for i in range(n)]
    return VectorEnv(specs, scene_provider, cfg=cfg, spec_source=spec_source, done_fn=done_fn)
