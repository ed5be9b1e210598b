import json

import pytest

from tandemsim.errors import SpecError
from tandemsim.evalbench.bench import BenchConfig
from tandemsim.evalbench.episodes import SplitConfig, generate_episodes
from tandemsim.evalbench.evaluate import EvalConfig, evaluate, make_scene_provider
from tandemsim.evalbench.report import BenchCell, BenchReport, MetricsReport
from tandemsim.fixtures import TEST_SCENES, TRAIN_SCENES, VAL_SCENES


def test_splits_are_disjoint():
    assert not set(TRAIN_SCENES) & set(VAL_SCENES)
    assert not set(TRAIN_SCENES) & set(TEST_SCENES)
    assert not set(VAL_SCENES) & set(TEST_SCENES)


def test_generate_episodes_deterministic():
    provider = make_scene_provider(EvalConfig())
    split = SplitConfig(task="rearrange", scenes=("small_f",), episodes_per_scene=3, seed=5)
    a = [s.to_dict() for s in generate_episodes(split, provider)]
    b = [s.to_dict() for s in generate_episodes(split, provider)]
    assert a == b


def test_generated_rearrange_spec_invariants():
    provider = make_scene_provider(EvalConfig())
    split = SplitConfig(task="rearrange", scenes=("small_f", "small_g"),
                        episodes_per_scene=4, seed=1)
    for spec in generate_episodes(split, provider):
        assert len(spec.objects) == 2
        starts = {o.start_receptacle for o in spec.objects}
        assert len(starts) == 2
        for o in spec.objects:
            assert o.start_receptacle != o.goal_receptacle


def test_eval_report_reproducible(tmp_path):
    cfg = EvalConfig(task="rearrange", scenes=("small_f",), episodes_per_scene=1,
                     seeds=(0,), max_steps=600)
    r1 = evaluate(cfg)
    r2 = evaluate(cfg)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    r1.save_json(p1)
    r2.save_json(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_aggregates_recomputable(tmp_path):
    cfg = EvalConfig(task="rearrange", scenes=("small_f",), episodes_per_scene=2,
                     seeds=(0, 1), max_steps=600)
    rep = evaluate(cfg)
    path = tmp_path / "rep.json"
    rep.save_json(path)
    loaded = MetricsReport.load_json(path)
    assert loaded.aggregate() == rep.aggregate()
    saved = json.loads(path.read_text())
    assert saved["aggregates"] == rep.aggregate()


def test_zsc_matrix_shape():
    cfg = EvalConfig(task="rearrange", scenes=("small_f",), episodes_per_scene=1,
                     seeds=(0,), zsc_mode=True, population="zsc-pop", max_steps=900)
    rep = evaluate(cfg)
    assert len(rep.partner_ids) == 10
    matrix = rep.partner_matrix()
    assert set(matrix.keys()) == set(rep.partner_ids) | {"average"}
    for pid in rep.partner_ids + ["average"]:
        assert set(matrix[pid].keys()) == {"SR", "RE", "CR", "RC"}
    assert len(rep.rows) == 10  # one episode x 10 partners


def test_bench_requires_two_runs():
    with pytest.raises(SpecError):
        BenchConfig(runs=1)


def test_bench_report_roundtrip(tmp_path):
    rep = BenchReport(config={"runs": 2})
    cell = BenchCell("small", 2, "robot", 1, runs=[100.0, 120.0])
    rep.cells.append(cell)
    assert cell.sps_mean == pytest.approx(110.0)
    assert cell.sps_stderr == pytest.approx(10.0)
    rep.save_json(tmp_path / "b.json")
    rep.save_csv(tmp_path / "b.csv")
    loaded = json.loads((tmp_path / "b.json").read_text())
    assert loaded["cells"][0]["sps_mean"] == pytest.approx(110.0)


def test_cli_usage_errors(tmp_path):
    from tandemsim.cli import main

    assert main(["eval", "run", "--config", str(tmp_path / "missing.toml"),
                 "--out", str(tmp_path / "o.json")]) == 2


def test_cli_metrics_compute(tmp_path, small_scene):
    from tandemsim.cli import main
    from tandemsim.evalbench.runner import run_episode
    from tandemsim.evalbench.episodes import generate_socialnav_spec
    from tandemsim.policies.base import WaitPolicy
    from tandemsim.policies.socialnav import ScriptedWaypointWalker

    spec = generate_socialnav_spec(small_scene, seed=3, max_steps=60)
    trace = run_episode(small_scene, spec, robot_policy=WaitPolicy(),
                        humanoid_policy=ScriptedWaypointWalker())
    p = tmp_path / "t.jsonl"
    trace.save(p)
    out = tmp_path / "m.json"
    assert main(["metrics", "compute", str(p), "--out", str(out)]) == 0
    row = json.loads(out.read_text())
    assert set(row) >= {"S", "SPS", "F", "CR", "BYR", "TD"}
