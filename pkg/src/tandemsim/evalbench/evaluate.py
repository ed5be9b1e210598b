"""Batch evaluation: train-pop and zero-shot-coordination modes."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import SpecError
from ..fixtures import TEST_SCENES, fixture_scene
from ..policies.base import WaitPolicy
from ..policies.population import Population, plan_pop, zsc_population
from ..policies.rearrange import GreedyOracleRobot, SoloHumanoid
from ..policies.socialnav import HeuristicExpertSocnav, ScriptedWaypointWalker
from ..scene import load_scene
from ..tasks.episodes import REARRANGE, SOCIALNAV
from ..tasks.metrics import compute_nav_metrics, compute_rearrange_metrics
from ..tasks.oracle import oracle_finding_steps
from ..tasks.trace import TERMINAL_SUCCESS
from .episodes import SplitConfig, generate_episodes
from .report import MetricsReport
from .runner import run_episode

ROBOT_POLICIES = {
    "heuristic-expert": HeuristicExpertSocnav,
    "greedy-oracle": GreedyOracleRobot,
    "wait": WaitPolicy,
}

POPULATIONS = {
    "plan-pop-1": lambda: plan_pop(1),
    "plan-pop-2": lambda: plan_pop(2),
    "plan-pop-3": lambda: plan_pop(3),
    "plan-pop-4": lambda: plan_pop(4),
    "zsc-pop": zsc_population,
}


@dataclass
class EvalConfig:
    task: str = REARRANGE
    scenes: tuple = TEST_SCENES
    episodes_per_scene: int = 10
    robot_policy: str = "greedy-oracle"
    population: str = "plan-pop-2"
    seeds: tuple = (0, 1, 2)
    max_steps: int = 1500
    zsc_mode: bool = False
    scene_paths: tuple = ()   # optional explicit scene files

    def __post_init__(self):
        if len(self.seeds) < 1:
            raise SpecError("evaluation needs at least one seed")


def make_scene_provider(cfg: EvalConfig):
    loaded = {}
    for p in cfg.scene_paths:
        scene = load_scene(p)
        loaded[scene.id] = scene

    def provider(scene_id: str):
        if scene_id not in loaded:
            loaded[scene_id] = fixture_scene(scene_id)
        return loaded[scene_id]

    return provider


def _solo_steps(scene, spec) -> int:
    solo = run_episode(scene, spec.solo_variant(), humanoid_policy=SoloHumanoid())
    return solo.steps if solo.terminal_cause == TERMINAL_SUCCESS else spec.max_steps


def evaluate(cfg: EvalConfig, progress=None) -> MetricsReport:
    """Run every (episode x seed [x partner]) cell and aggregate.

    Rearrange relative efficiency is measured against a solo run of the same
    spec, cached per episode. ZSC mode runs every population member on every
    episode and reports the per-partner matrix plus the average column."""
    provider = make_scene_provider(cfg)
    population: Population | None = None
    if cfg.task == REARRANGE:
        population = POPULATIONS[cfg.population]()
    report = MetricsReport(
        task=cfg.task,
        config={
            "task": cfg.task, "scenes": list(cfg.scenes),
            "episodes_per_scene": cfg.episodes_per_scene,
            "robot_policy": cfg.robot_policy, "population": cfg.population,
            "seeds": list(cfg.seeds), "max_steps": cfg.max_steps,
            "zsc_mode": cfg.zsc_mode,
        },
        partner_ids=[m.member_id for m in population.members] if (
            population is not None and cfg.zsc_mode) else [],
    )
    solo_cache: dict = {}
    for seed in cfg.seeds:
        split = SplitConfig(task=cfg.task, scenes=tuple(cfg.scenes),
                            episodes_per_scene=cfg.episodes_per_scene,
                            seed=seed, max_steps=cfg.max_steps)
        specs = generate_episodes(split, provider)
        for spec in specs:
            scene = provider(spec.scene_id)
            if cfg.task == SOCIALNAV:
                row = _run_socialnav_cell(cfg, scene, spec)
                row["seed"] = seed
                report.rows.append(row)
                if progress:
                    progress(row)
                continue
            key = (spec.scene_id, spec.seed)
            if key not in solo_cache:
                solo_cache[key] = _solo_steps(scene, spec)
            L_human = solo_cache[key]
            if cfg.zsc_mode:
                members = list(population.members)
            else:
                members = [population.sample(spec.seed)]
            for member in members:
                row = _run_rearrange_cell(cfg, scene, spec, member, L_human)
                row["seed"] = seed
                report.rows.append(row)
                if progress:
                    progress(row)
    return report


def _run_socialnav_cell(cfg, scene, spec) -> dict:
    robot_policy = ROBOT_POLICIES[cfg.robot_policy]()
    trace = run_episode(scene, spec, robot_policy=robot_policy,
                        humanoid_policy=ScriptedWaypointWalker())
    l = oracle_finding_steps(spec, scene)
    m = compute_nav_metrics(trace, l)
    return {
        "episode_id": spec.episode_id, "scene": spec.scene_id,
        "S": m.S, "SPS": m.SPS, "F": m.F, "CR": m.CR, "BYR": m.BYR,
        "TD": m.TD, "FD": m.FD, "l": m.l, "p": m.p, "steps": trace.steps,
        "terminal": trace.terminal_cause,
    }


def _run_rearrange_cell(cfg, scene, spec, member, L_human) -> dict:
    robot_policy = ROBOT_POLICIES[cfg.robot_policy]()
    trace = run_episode(scene, spec, robot_policy=robot_policy,
                        humanoid_policy=member.factory())
    m = compute_rearrange_metrics(trace, L_human)
    return {
        "episode_id": spec.episode_id, "scene": spec.scene_id, "partner": member.member_id,
        "SR": m.SR, "RE": m.RE, "RC": m.RC, "CR": m.CR, "TS": m.TS,
        "L_human": m.L_human, "L_joint": m.L_joint, "terminal": trace.terminal_cause,
    }
