"""Tests for metrics, task sampling, configuration, the pipeline driver, reports and the CLI."""

import csv
import json
import os
from dataclasses import replace

import numpy as np
import pytest

from graph_prompt_cli import main
from prompt_pruning import (PromptPipeline, RunConfig, RunReport, SynthSpec, Variant, compute_metrics,
                            create_config_file, emit_report, load_graph, load_report, load_run_config, load_tasks,
                            run_block_sweep, run_pipeline, run_shot_sweep, sample_tasks, save_tasks, synth_graph,
                            tune_prompts)
from prompt_pruning.errors import ConfigError, ContractError, SpecError, TaskConstructionError
from prompt_pruning.pipeline import PipelineResult


@pytest.fixture
def fast_config(small_graph):
    """Untrained identity encoder and short tuning on the small fixture graph"""
    return RunConfig(pretrain_epochs=0, encoder_init="identity", hidden_dim=small_graph.feature_dim, blocks=4,
                     tune_epochs=4, n_tasks=2, seeds=[0])


@pytest.mark.parametrize("truths, preds, micro, macro", [
    ([0, 1, 2, 0], [0, 1, 2, 0], 1.0, 1.0),
    ([0, 0, 1, 1], [0, 1, 1, 1], 0.75, 0.733333),
    ([0, 0, 1, 1], [1, 1, 1, 1], 0.5, 0.333333),
])
def test_metric_values(truths, preds, micro, macro):
    classes = sorted(set(truths) | set(preds))
    record = compute_metrics(preds, truths, classes)
    assert record.micro_f == pytest.approx(micro, abs=1e-6)
    assert record.macro_f == pytest.approx(macro, abs=1e-6)


def test_majority_predictor_on_imbalanced_data():
    """Micro-F rewards the majority class, Macro-F does not"""
    record = compute_metrics([0] * 10, [0] * 8 + [1] * 2, [0, 1])
    assert record.micro_f == pytest.approx(0.8)
    assert record.macro_f < record.micro_f
    assert record.confusion == [[8, 0], [2, 0]]


def test_absent_class_scores_zero():
    """A class in C that is never seen or predicted drags Macro-F down"""
    record = compute_metrics([0, 1], [0, 1], [0, 1, 2])
    assert record.micro_f == pytest.approx(1.0)
    assert record.macro_f == pytest.approx(2.0 / 3.0)


def test_micro_f_equals_accuracy():
    truths = [0, 1, 2, 2, 1, 0, 0, 2]
    preds = [0, 2, 2, 1, 1, 0, 1, 2]
    accuracy = sum(t == p for t, p in zip(truths, preds)) / len(truths)
    assert compute_metrics(preds, truths, [0, 1, 2]).micro_f == pytest.approx(accuracy)


def test_metric_contracts():
    with pytest.raises(ContractError):
        compute_metrics([0, 3], [0, 1], [0, 1])
    with pytest.raises(ContractError):
        compute_metrics([0], [0, 1], [0, 1])
    with pytest.raises(ContractError):
        compute_metrics([], [], [0, 1])


def test_one_shot_task_layout(small_graph):
    """k = 1 over three classes: three support, three validation, the rest query"""
    task = sample_tasks(small_graph, k=1, n_tasks=1, seed=0)[0]
    assert len(task.support) == 3 and len(task.validation) == 3
    labeled = sum(1 for y in small_graph.labels if y is not None)
    assert len(task.query) == labeled - 6
    assert task.query.nodes.tolist() == sorted(task.query.nodes.tolist())
    assert len(task.importance_data) == 6


def test_task_sampling_is_deterministic(small_graph):
    first = sample_tasks(small_graph, k=2, n_tasks=3, seed=5)
    second = sample_tasks(small_graph, k=2, n_tasks=3, seed=5)
    assert [t.to_dict() for t in first] == [t.to_dict() for t in second]
    assert [t.index for t in first] == [0, 1, 2]
    assert first[0].support.nodes.tolist() != first[1].support.nodes.tolist()


def test_too_many_shots_names_the_class(small_graph):
    """Ten nodes per class cannot supply 2k + 1 = 41"""
    with pytest.raises(TaskConstructionError, match="class"):
        sample_tasks(small_graph, k=20, n_tasks=1, seed=0)


def test_task_file_round_trip(tmp_path, small_graph):
    tasks = sample_tasks(small_graph, k=1, n_tasks=2, seed=1)
    path = str(tmp_path / "tasks.json")
    save_tasks(tasks, path)
    assert [t.to_dict() for t in load_tasks(path)] == [t.to_dict() for t in tasks]

    single = tmp_path / "single.json"
    single.write_text(json.dumps(tasks[1].to_dict()), encoding="utf-8")
    assert load_tasks(str(single))[0].to_dict() == tasks[1].to_dict()


def test_generator_spec_is_validated():
    with pytest.raises(SpecError):
        SynthSpec.from_dict({"colour": "blue"})
    with pytest.raises(SpecError):
        synth_graph(SynthSpec(informative_dims=2, class_count=3), seed=0)


def test_generator_is_seeded(small_spec):
    a, b = synth_graph(small_spec, seed=4), synth_graph(small_spec, seed=4)
    assert (a.edges == b.edges).all() and (a.features == b.features).all()
    assert a.class_names == ("class00", "class01", "class02")


def test_config_file_round_trip(tmp_path):
    path = str(tmp_path / "run_config.json")
    create_config_file(path, RunConfig(variant="wo_r", seeds=[1, 2]))
    config = load_run_config(path)
    assert config.variant_flag is Variant.WO_R
    assert config.seeds == [1, 2]
    assert config.effective_retune_epochs == 50


@pytest.mark.parametrize("overrides", [
    {"variant": "sometimes"},
    {"tau": 0.0},
    {"hidden_dim": 64, "blocks": 7},
    {"seeds": []},
    {"learning_rate": 0.1},
])
def test_invalid_configs_are_rejected(overrides):
    data = RunConfig().to_dict()
    data.update(overrides)
    with pytest.raises(ConfigError):
        RunConfig.from_dict(data)


def test_variant_phase_table():
    assert [v.value for v in Variant if v.prunes] == ["full", "wo_r", "random", "ps_only", "pf_only"]
    assert [v.value for v in Variant if v.retunes] == ["full", "wo_ep", "random", "ps_only", "pf_only"]


def test_full_variant_runs_every_phase(small_graph, fast_config):
    pipeline = PromptPipeline(small_graph, fast_config)
    result = pipeline.run()
    assert len(result.outcomes) == 2
    assert pipeline.phases_run()[:2] == ["pretrain", "tasks"]
    stats = pipeline.get_statistics()["phase_counts"]
    assert stats == {"pretrain": 1, "tasks": 1, "tune": 2, "prune": 2, "retune": 2, "eval": 2}
    for outcome in result.outcomes:
        assert outcome.metrics.parameter_count == outcome.prompts.parameter_count
        assert outcome.importance is not None


def test_wo_ep_never_prunes(small_graph, fast_config):
    pipeline = PromptPipeline(small_graph, replace(fast_config, variant="wo_ep"))
    result = pipeline.run()
    assert "prune" not in pipeline.phases_run()
    assert "retune" in pipeline.phases_run()
    assert all(o.importance is None for o in result.outcomes)
    assert all(o.prompts.is_full for o in result.outcomes)


def test_wo_rep_matches_plain_tuning(small_graph, fast_config):
    """Without pruning or retuning the evaluated prompts are the tuned ones"""
    pipeline = PromptPipeline(small_graph, replace(fast_config, variant="wo_rep"))
    result = pipeline.run()
    ctx = pipeline.contexts[0]
    for outcome in result.outcomes:
        expected = tune_prompts(ctx, outcome.task.support, fast_config.tuning_config(0),
                                validation=outcome.task.validation).prompts
        assert outcome.prompts.same_values(expected)
    assert set(pipeline.phases_run()) == {"pretrain", "tasks", "tune", "eval"}


def test_worker_count_does_not_change_results(small_graph, fast_config):
    serial = run_pipeline(small_graph, fast_config)
    threaded = run_pipeline(small_graph, replace(fast_config, workers=2))
    assert [r.to_dict(include_timing=False) for r in serial.records] == \
        [r.to_dict(include_timing=False) for r in threaded.records]


def test_summary_bytes_are_reproducible(tmp_path, small_graph, fast_config):
    first, second = str(tmp_path / "a"), str(tmp_path / "b")
    emit_report(run_pipeline(small_graph, fast_config), first)
    emit_report(run_pipeline(small_graph, fast_config), second)
    for name in ("summary.json", "tasks.csv", "importance.csv"):
        with open(os.path.join(first, name), "rb") as a, open(os.path.join(second, name), "rb") as b:
            assert a.read() == b.read()


def test_errors_carry_their_phase(small_graph, fast_config):
    """A task that cannot be built fails in the tasks phase"""
    with pytest.raises(TaskConstructionError) as info:
        PromptPipeline(small_graph, replace(fast_config, shots=20)).run()
    assert info.value.phase == "tasks"
    assert str(info.value).startswith("[tasks]")


def test_report_round_trip(tmp_path, small_graph, fast_config):
    result = run_pipeline(small_graph, replace(fast_config, n_tasks=1))
    out = str(tmp_path / "report")
    written = emit_report(result, out)
    assert {os.path.basename(p) for p in written} == {"summary.json", "tasks.csv", "importance.csv",
                                                      "timing.json"}
    loaded = load_report(out)
    assert loaded == RunReport.from_result(result)
    assert loaded.importance[0].masks == result.outcomes[0].importance.masks
    with open(os.path.join(out, "tasks.csv"), encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 1
    assert float(rows[0]["micro_f"]) == pytest.approx(result.records[0].micro_f)


def test_empty_result_is_not_reported(tmp_path, fast_config):
    with pytest.raises(ContractError):
        emit_report(PipelineResult(config=fast_config), str(tmp_path))


def test_block_sweep_rows(small_graph, fast_config):
    rows = run_block_sweep(small_graph, replace(fast_config, n_tasks=1), blocks=(2, 4))
    assert [(r["blocks"], r["block"]) for r in rows] == [(2, 0), (2, 1), (4, 0), (4, 1), (4, 2), (4, 3)]
    assert all(0.0 <= r["kept_fraction"] <= 1.0 for r in rows)


def test_cli_synth_and_tasks(tmp_path, capsys):
    graph_path = str(tmp_path / "g.jsonl")
    assert main(["synth", "--seed", "3", "--out", graph_path]) == 0
    assert load_graph(graph_path).type_count == 4
    tasks_path = str(tmp_path / "tasks.json")
    assert main(["tasks", "--graph", graph_path, "--k", "2", "--n-tasks", "3", "--out", tasks_path]) == 0
    assert len(load_tasks(tasks_path)) == 3
    assert "✅" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, capsys):
    """I/O failures exit 4, validation failures exit 2"""
    assert main(["tasks", "--graph", str(tmp_path / "absent.jsonl"), "--out", str(tmp_path / "t.json")]) == 4
    assert "❌" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"variant": "sometimes"}), encoding="utf-8")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "out")]) == 2


def test_cli_create_config(tmp_path):
    path = str(tmp_path / "cfg.json")
    assert main(["create-config", "--out", path]) == 0
    assert load_run_config(path).to_dict() == RunConfig().to_dict()


def _seed_means(result):
    """Mean micro-F of each seed's tasks, in seed order"""
    by_seed = {}
    for record in result.records:
        by_seed.setdefault(record.seed, []).append(record.micro_f)
    return np.array([np.mean(scores) for _, scores in sorted(by_seed.items())])


@pytest.mark.slow
def test_pruning_variants_on_the_default_generator():
    """Importance pruning with retuning against no pruning, no retuning and random pruning over ten seeds"""
    graph = synth_graph(SynthSpec(), seed=0)
    base = RunConfig(pretrain_epochs=0, encoder_init="identity", hidden_dim=graph.feature_dim, tune_epochs=50,
                     n_tasks=5, seeds=list(range(10)), workers=2)
    means = {v: _seed_means(run_pipeline(graph, replace(base, variant=v)))
             for v in ("full", "wo_rep", "wo_r", "random")}
    assert means["full"].mean() >= means["wo_rep"].mean() - 0.02
    assert means["full"].mean() >= means["wo_r"].mean()
    assert means["random"].var() > means["full"].var()


@pytest.mark.slow
def test_more_shots_do_not_hurt():
    """Mean micro-F never falls by more than one std from k to k + 1"""
    graph = synth_graph(SynthSpec(), seed=1)
    config = RunConfig(pretrain_epochs=0, encoder_init="identity", hidden_dim=graph.feature_dim, tune_epochs=30,
                       n_tasks=10, seeds=[0], workers=2)
    rows = run_shot_sweep(graph, config, shots=(1, 2, 3, 4, 5))
    assert [r["k"] for r in rows] == [1, 2, 3, 4, 5]
    for before, after in zip(rows, rows[1:]):
        spread = max(before["micro_f_std"], after["micro_f_std"])
        assert after["micro_f_mean"] >= before["micro_f_mean"] - spread
