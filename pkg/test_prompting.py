"""Tests for prompted readouts, prototypes, prediction and prompt tuning."""

import math

import numpy as np
import pytest

from prompt_pruning import (LabeledSet, NodeEmbeddings, PromptPair, Prototypes, TuningConfig, build_context,
                            class_prototypes, compute_metrics, downstream_loss, ego_subgraph, load_prompts,
                            predict, predict_nodes, prompted_subgraph_embedding, readout_sum, save_prompts,
                            tune_prompts)
from prompt_pruning import autodiff as ad
from prompt_pruning.errors import DegenerateVectorError, DimensionError, MissingClassError
from prompt_pruning.prompting import PromptLeaves, pair_losses, prompted_embeddings


@pytest.fixture
def isolated_context(graph_factory):
    """Five edgeless nodes: every ego subgraph is the node itself"""
    graph = graph_factory(["a", "b", "a", "b", "a"], [])
    emb = NodeEmbeddings(matrix=[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    return build_context(graph, emb, hops=1)


def _labeled(nodes, labels, classes=(0, 1)):
    return LabeledSet(nodes=nodes, labels=labels, classes=classes)


def test_two_type_prompted_embedding(pair_context):
    """Per-view inner readouts weighted by (1 + p_s)"""
    prompts = PromptPair.from_dense([1.0, 1.0], [0.5, -0.5, 1.0])
    np.testing.assert_allclose(prompted_subgraph_embedding(pair_context, prompts, 0), [2.0, 7.0])


def test_neutral_prompts_count_each_view(small_context, small_graph):
    """P_f = 1, P_s = 0: every ego node is summed once in the full view and once in its type view"""
    neutral = PromptPair.neutral(small_context.hidden_dim, small_context.view_count)
    for v in (0, 7, 31, 45):
        ego = ego_subgraph(small_graph, v, 1).nodes
        expected = 2.0 * readout_sum(small_context.embeddings, ego)
        np.testing.assert_allclose(prompted_subgraph_embedding(small_context, neutral, v), expected, rtol=1e-12)


def test_prompt_dimensions_are_checked(pair_context):
    """Prompts sized for another encoder are refused"""
    with pytest.raises(DimensionError):
        prompted_subgraph_embedding(pair_context, PromptPair.neutral(3, 3), 0)


def test_single_shot_prototype_is_the_support_embedding(small_context, small_task):
    """k = 1 prototypes equal their support node's embedding"""
    prompts = PromptPair.neutral(small_context.hidden_dim, small_context.view_count)
    protos = class_prototypes(small_context, prompts, small_task.support)
    for row, node in zip(protos.vectors, small_task.support.nodes):
        np.testing.assert_allclose(row, prompted_subgraph_embedding(small_context, prompts, int(node)))


def test_prototype_is_class_mean_and_ignores_duplicates(isolated_context):
    """Mean of [1,0] and [0,1] (times two views), unchanged by duplicating support"""
    prompts = PromptPair.neutral(2, 3)
    support = _labeled([0, 1, 4], [0, 0, 1])
    protos = class_prototypes(isolated_context, prompts, support)
    np.testing.assert_allclose(protos.vectors[0], [1.0, 1.0])
    doubled = support.concat(support)
    np.testing.assert_allclose(class_prototypes(isolated_context, prompts, doubled).vectors, protos.vectors)


def test_missing_class_is_rejected(isolated_context):
    """Every declared class needs a support node"""
    with pytest.raises(MissingClassError):
        class_prototypes(isolated_context, PromptPair.neutral(2, 3), _labeled([0, 1], [0, 1], classes=(0, 1, 2)))


def test_predict_examples():
    """Argmax of cosine similarity, lowest id on ties"""
    protos = Prototypes(vectors=np.array([[1.0, 0.0], [0.0, 1.0]]), classes=(0, 1))
    assert predict(np.array([0.0, 3.0]), protos) == 1
    assert predict(np.array([1.0, 1.0]), protos) == 0
    assert predict(np.array([2.0, 1.0]), protos) == 0


def test_predict_ignores_positive_scale():
    """Cosine argmax is invariant to rescaling the query"""
    rng = np.random.default_rng(0)
    protos = Prototypes(vectors=rng.normal(size=(4, 5)), classes=(0, 1, 2, 3))
    for _ in range(20):
        x = rng.normal(size=5)
        assert predict(x, protos) == predict(x * rng.uniform(0.01, 100.0), protos)


def test_zero_feature_prompt_fails_at_similarity(small_context, small_task):
    """A zero P_f zeroes every embedding"""
    zero = PromptPair.from_dense(np.zeros(small_context.hidden_dim), np.zeros(small_context.view_count))
    with pytest.raises(DegenerateVectorError):
        predict_nodes(small_context, zero, small_task.support, small_task.query.nodes)


def test_downstream_loss_known_value(isolated_context):
    """Similarities [1, 0] to two prototypes at tau 1"""
    prompts = PromptPair.neutral(2, 3)
    loss = downstream_loss(isolated_context, prompts, _labeled([0, 1], [0, 1]), _labeled([2], [0]), tau=1.0)
    assert loss.item() == pytest.approx(0.313262, abs=1e-6)


def test_downstream_loss_uniform_similarity(isolated_context):
    """A query equidistant from both prototypes costs ln 2"""
    prompts = PromptPair.neutral(2, 3)
    loss = downstream_loss(isolated_context, prompts, _labeled([0, 1], [0, 1]), _labeled([4, 4], [0, 1]), tau=0.5)
    assert loss.item() == pytest.approx(2 * math.log(2.0))


def test_pair_losses_are_nonnegative(small_context, small_task, tuned_prompts):
    """Cross-entropy never drops below zero"""
    losses = pair_losses(small_context, tuned_prompts, small_task.support, small_task.query, tau=0.5)
    assert np.all(losses.values >= 0.0)


def test_prompt_gradients_match_finite_differences(small_context, small_task):
    """d L_down / d P_f and d L_down / d P_s"""
    rng = np.random.default_rng(1)
    prompts = PromptPair.from_dense(1.0 + 0.3 * rng.normal(size=small_context.hidden_dim),
                                    0.3 * rng.normal(size=small_context.view_count))
    data = small_task.importance_data

    leaves = PromptLeaves.of(prompts, trainable=True)
    loss = downstream_loss(small_context, prompts, small_task.support, data, 0.5, leaves)
    grads = ad.backward(loss)

    def loss_at(feature, semantic):
        candidate = prompts.with_values(feature, semantic)
        return downstream_loss(small_context, candidate, small_task.support, data, 0.5).item()

    numeric_f = ad.central_difference(lambda f: loss_at(f, prompts.semantic.values), prompts.feature.values)
    numeric_s = ad.central_difference(lambda s: loss_at(prompts.feature.values, s), prompts.semantic.values)
    np.testing.assert_allclose(grads[leaves.feature], numeric_f, rtol=1e-4, atol=1e-8)
    np.testing.assert_allclose(grads[leaves.semantic], numeric_s, rtol=1e-4, atol=1e-8)


def test_batched_embeddings_match_single_node(small_context, tuned_prompts):
    """Batch rows equal single-node readouts"""
    nodes = [3, 9, 14]
    batch = prompted_embeddings(small_context, tuned_prompts, nodes).values
    for row, v in zip(batch, nodes):
        np.testing.assert_allclose(row, prompted_subgraph_embedding(small_context, tuned_prompts, v))


def test_zero_epochs_returns_neutral_prompts(small_context, small_task):
    """Tuning starts from P_f = 1, P_s = 0"""
    result = tune_prompts(small_context, small_task.support, TuningConfig(epochs=0))
    neutral = PromptPair.neutral(small_context.hidden_dim, small_context.view_count)
    assert result.prompts.same_values(neutral)
    assert result.best_epoch == 0


def test_tuning_is_deterministic(small_context, small_task):
    """Same seed, identical prompts"""
    config = TuningConfig(epochs=5, seed=2)
    first = tune_prompts(small_context, small_task.support, config, validation=small_task.validation)
    second = tune_prompts(small_context, small_task.support, config, validation=small_task.validation)
    assert first.prompts.same_values(second.prompts)
    assert first.prompts.provenance["seed"] == 2
    assert len(first.prompts.provenance["loss_curve"]) == 5


def test_tuning_loss_trends_down(small_context, small_task):
    """Support loss falls over 50 epochs with at most five upticks"""
    result = tune_prompts(small_context, small_task.support, TuningConfig(epochs=50))
    losses = [h["loss"] for h in result.history[1:]]
    upticks = sum(1 for a, b in zip(losses, losses[1:]) if b > a)
    assert upticks <= 5
    assert losses[-1] < losses[0]


def test_tuning_does_not_hurt_query_accuracy(small_context, small_task):
    """Best-validation prompts score at least as well as the neutral start"""
    neutral = PromptPair.neutral(small_context.hidden_dim, small_context.view_count)
    tuned = tune_prompts(small_context, small_task.support, TuningConfig(epochs=60),
                         validation=small_task.validation).prompts

    def micro(prompts):
        preds = predict_nodes(small_context, prompts, small_task.support, small_task.query.nodes)
        return compute_metrics(preds, small_task.query.labels, small_task.classes).micro_f

    assert micro(tuned) >= micro(neutral) - 0.05


def test_prompt_file_round_trip(tmp_path, tuned_prompts):
    """Values, layout and provenance survive a save and load"""
    path = str(tmp_path / "prompts.json")
    save_prompts(tuned_prompts, path)
    loaded = load_prompts(path)
    assert loaded.same_values(tuned_prompts)
    assert loaded.provenance["epochs"] == tuned_prompts.provenance["epochs"]
