"""Command-line surface.

Subcommands: episodes gen, eval run, metrics compute, bench run,
assets build-reach-cache, hitl serve, replay. Exit codes: 0 ok, 1 runtime
failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ParseError, TandemsimError


def _load_toml(path):
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except OSError as exc:
        raise ParseError(f"{path}: cannot read config ({exc})") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: invalid TOML ({exc})") from exc


def _cmd_episodes_gen(args) -> int:
    from .evalbench.episodes import SplitConfig, generate_episodes
    from .evalbench.evaluate import make_scene_provider, EvalConfig
    from .fixtures import TEST_SCENES, TRAIN_SCENES, VAL_SCENES

    split_scenes = {
        "train": TRAIN_SCENES, "val": VAL_SCENES, "test": TEST_SCENES,
    }[args.split]
    split = SplitConfig(task=args.task, scenes=split_scenes,
                        episodes_per_scene=args.episodes_per_scene,
                        seed=args.seed, max_steps=args.max_steps)
    provider = make_scene_provider(EvalConfig())
    specs = generate_episodes(split, provider)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as f:
        for s in specs:
            f.write(json.dumps(s.to_dict()) + "\n")
    print(f"wrote {len(specs)} episodes to {out}")
    return 0


def _cmd_eval_run(args) -> int:
    from .evalbench.evaluate import EvalConfig, evaluate

    kw = {}
    if args.config:
        raw = _load_toml(args.config)
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.get("eval", raw).items()}
    if args.task:
        kw["task"] = args.task
    if args.zsc:
        kw["zsc_mode"] = True
    if args.seed is not None:
        kw["seeds"] = (args.seed,)
    cfg = EvalConfig(**kw)
    done = []
    report = evaluate(cfg, progress=lambda row: done.append(row))
    out = Path(args.out)
    report.save_json(out)
    report.save_csv(out.with_suffix(".csv"))
    agg = report.aggregate()
    print(f"evaluated {len(report.rows)} episode cells -> {out}")
    for k in sorted(agg):
        print(f"  {k}: {agg[k]['mean']:.4g} +/- {agg[k]['std']:.2g}")
    if report.partner_ids:
        print("per-partner matrix:")
        matrix = report.partner_matrix()
        for pid in report.partner_ids + ["average"]:
            cells = " ".join(f"{k}={matrix[pid][k]:.3g}" for k in ("SR", "RE", "CR", "RC")
                             if matrix[pid][k] is not None)
            print(f"  {pid:12s} {cells}")
    return 0


def _cmd_metrics_compute(args) -> int:
    from .evalbench.evaluate import make_scene_provider, EvalConfig
    from .tasks.metrics import compute_nav_metrics, compute_rearrange_metrics
    from .tasks.oracle import oracle_finding_steps
    from .tasks.trace import EpisodeTrace

    trace = EpisodeTrace.load(args.trace)
    provider = make_scene_provider(EvalConfig())
    scene = provider(trace.spec.scene_id)
    if trace.task == "socialnav":
        l = trace.oracle_steps if trace.oracle_steps is not None else \
            oracle_finding_steps(trace.spec, scene)
        m = compute_nav_metrics(trace, l)
    else:
        if args.solo_steps is None:
            from .evalbench.runner import run_episode
            from .policies.rearrange import SoloHumanoid

            solo = run_episode(scene, trace.spec.solo_variant(),
                               humanoid_policy=SoloHumanoid())
            L_human = solo.steps if solo.terminal_cause == "success" else trace.spec.max_steps
        else:
            L_human = args.solo_steps
        m = compute_rearrange_metrics(trace, L_human)
    row = m.to_dict()
    if args.out:
        with open(args.out, "w") as f:
            json.dump(row, f, indent=1, sort_keys=True)
            f.write("\n")
    print(json.dumps(row, sort_keys=True))
    return 0


def _cmd_bench_run(args) -> int:
    from .evalbench.bench import BenchConfig, benchmark

    kw = {}
    if args.config:
        raw = _load_toml(args.config)
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.get("bench", raw).items()}
    if args.envs:
        kw["env_counts"] = tuple(args.envs)
    if args.runs:
        kw["runs"] = args.runs
    cfg = BenchConfig(**kw)
    report = benchmark(cfg, progress=lambda c: print(
        f"  {c.scene_class}/{c.agents}/objs={c.n_objects}/envs={c.n_envs}: "
        f"{c.sps_mean:.0f} +/- {c.sps_stderr or 0:.0f} steps/s"))
    out = Path(args.out)
    report.save_json(out)
    report.save_csv(out.with_suffix(".csv"))
    print(f"benchmark report -> {out}")
    return 0


def _cmd_assets_build(args) -> int:
    from .kinematics.assets import build_reach_cache, reachcache_to_dict, save_json
    from .kinematics.skeleton import default_skeleton

    cache = build_reach_cache(default_skeleton(), spacing=args.spacing)
    save_json(args.out, reachcache_to_dict(cache))
    print(f"reach cache with {len(cache.entries)} entries -> {args.out}")
    return 0


def _cmd_hitl_serve(args) -> int:
    from .hitl.server import HitlServer, ServerConfig

    cfg = ServerConfig(host=args.host, port=args.port, tick_rate=args.tick_rate,
                       study_plan_path=args.study, recordings_dir=args.recordings,
                       condition=args.condition, episodes=args.episodes,
                       scene_id=args.scene)
    server = HitlServer(cfg)
    print(f"hitl server listening on ws://{cfg.host}:{cfg.port}")
    server.run_forever()
    return 0


def _cmd_replay(args) -> int:
    from .hitl.recording import EpisodeRecording
    from .hitl.replay import replay

    rec = EpisodeRecording.load(args.recording)
    frames = list(replay(rec, mode=args.mode, camera=args.camera))
    print(f"replayed {len(frames)} frames in mode={args.mode} camera={args.camera}")
    if args.out:
        with open(args.out, "w") as f:
            for fr in frames:
                f.write(json.dumps(fr) + "\n")
        print(f"frame stream -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tandemsim",
                                description="desk-scale human-robot collaboration simulator")
    sub = p.add_subparsers(dest="group", required=True)

    ep = sub.add_parser("episodes", help="episode dataset tools")
    ep_sub = ep.add_subparsers(dest="cmd", required=True)
    g = ep_sub.add_parser("gen", help="generate seeded episode specs")
    g.add_argument("--task", choices=["socialnav", "rearrange"], default="rearrange")
    g.add_argument("--split", choices=["train", "val", "test"], default="test")
    g.add_argument("--episodes-per-scene", type=int, default=50)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-steps", type=int, default=1500)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_episodes_gen)

    ev = sub.add_parser("eval", help="batch evaluation")
    ev_sub = ev.add_subparsers(dest="cmd", required=True)
    r = ev_sub.add_parser("run", help="run an evaluation")
    r.add_argument("--config", help="TOML config with an [eval] table")
    r.add_argument("--task", choices=["socialnav", "rearrange"])
    r.add_argument("--zsc", action="store_true", help="per-partner ZSC matrix mode")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", required=True)
    r.set_defaults(func=_cmd_eval_run)

    me = sub.add_parser("metrics", help="metric computation")
    me_sub = me.add_subparsers(dest="cmd", required=True)
    c = me_sub.add_parser("compute", help="compute metrics from a trace file")
    c.add_argument("trace")
    c.add_argument("--solo-steps", type=int, help="precomputed solo humanoid steps")
    c.add_argument("--out")
    c.set_defaults(func=_cmd_metrics_compute)

    be = sub.add_parser("bench", help="throughput benchmark")
    be_sub = be.add_subparsers(dest="cmd", required=True)
    b = be_sub.add_parser("run", help="run the FPS benchmark")
    b.add_argument("--config", help="TOML config with a [bench] table")
    b.add_argument("--envs", type=int, nargs="*", help="environment counts to sweep")
    b.add_argument("--runs", type=int)
    b.add_argument("--out", required=True)
    b.set_defaults(func=_cmd_bench_run)

    asr = sub.add_parser("assets", help="asset tools")
    as_sub = asr.add_subparsers(dest="cmd", required=True)
    a = as_sub.add_parser("build-reach-cache", help="regenerate the reach-pose cache")
    a.add_argument("--spacing", type=float, default=0.1)
    a.add_argument("--out", required=True)
    a.set_defaults(func=_cmd_assets_build)

    hi = sub.add_parser("hitl", help="human-in-the-loop service")
    hi_sub = hi.add_subparsers(dest="cmd", required=True)
    s = hi_sub.add_parser("serve", help="run the teleoperation server")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8765)
    s.add_argument("--tick-rate", type=float, default=10.0,
                   help="simulation ticks per second (0 = as fast as possible)")
    s.add_argument("--study", help="study plan JSON")
    s.add_argument("--recordings", default="recordings")
    s.add_argument("--condition", default="paired:greedy-oracle",
                   help="'solo' or 'paired:<policy id>'")
    s.add_argument("--episodes", type=int, default=10)
    s.add_argument("--scene", default="small_f")
    s.set_defaults(func=_cmd_hitl_serve)

    rp = sub.add_parser("replay", help="re-simulate or play back a recording")
    rp.add_argument("--recording", required=True)
    rp.add_argument("--mode", choices=["resimulate", "playback"], default="playback")
    rp.add_argument("--camera", choices=["topdown", "egocentric"], default="topdown")
    rp.add_argument("--out")
    rp.set_defaults(func=_cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TandemsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TypeError, ValueError) as exc:
        print(f"error: bad configuration ({exc})", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
