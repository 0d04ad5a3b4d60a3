"""Tests for the GCN encoder, readout and checkpoints."""

import json

import numpy as np
import pytest

from prompt_pruning import (GcnParams, NodeEmbeddings, encode, init_params, load_checkpoint, readout_sum,
                            save_checkpoint)
from prompt_pruning.encoder import normalize_adjacency
from prompt_pruning.errors import CheckpointError, DimensionError, EmptyReadoutError, NodeIndexError


def test_normalized_adjacency_cases(graph_factory):
    """Edgeless graph gives I; one edge gives a uniform 2x2"""
    np.testing.assert_allclose(normalize_adjacency(graph_factory(["a", "b"], [])), np.eye(2))
    np.testing.assert_allclose(normalize_adjacency(graph_factory(["a", "b"], [(0, 1)])), np.full((2, 2), 0.5))


def test_normalized_adjacency_regular_rows(graph_factory):
    """A cycle is 2-regular so every row of the normalised matrix sums to 1"""
    cycle = graph_factory(["a", "b"] * 3, [(i, (i + 1) % 6) for i in range(6)])
    np.testing.assert_allclose(normalize_adjacency(cycle).sum(axis=1), np.ones(6))


def test_encode_edgeless_identity_is_features(graph_factory):
    """Edgeless graph with identity weights returns nonnegative features unchanged"""
    features = np.array([[0.5, 1.0], [2.0, 0.0], [0.0, 3.0]])
    g = graph_factory(["a", "b", "a"], [], features=features)
    params = GcnParams(w1=np.eye(2), w2=np.eye(2))
    np.testing.assert_allclose(encode(g, params).matrix, features)


def test_encode_zero_features(graph_factory):
    """Zero in, zero out"""
    g = graph_factory(["a", "b"], [(0, 1)], features=np.zeros((2, 3)))
    np.testing.assert_array_equal(encode(g, init_params(3, 4, seed=1)).matrix, np.zeros((2, 4)))


def test_encode_single_edge(graph_factory):
    """X = I on one edge gives a uniform 0.5 matrix"""
    g = graph_factory(["a", "b"], [(0, 1)], features=np.eye(2))
    params = GcnParams(w1=np.eye(2), w2=np.eye(2))
    np.testing.assert_allclose(encode(g, params).matrix, np.full((2, 2), 0.5))


def test_encode_rejects_wrong_input_dim(graph_factory):
    """W1 rows must match the feature dimension"""
    g = graph_factory(["a", "b"], [(0, 1)], features=np.eye(2))
    with pytest.raises(DimensionError):
        encode(g, init_params(3, 4))


def test_init_schemes():
    """Glorot is seeded; identity aligns hidden and feature dims"""
    np.testing.assert_array_equal(init_params(5, 4, seed=2).w1, init_params(5, 4, seed=2).w1)
    assert not np.array_equal(init_params(5, 4, seed=2).w1, init_params(5, 4, seed=3).w1)
    identity = init_params(3, 4, scheme="identity")
    np.testing.assert_array_equal(identity.w1, np.eye(3, 4))
    np.testing.assert_array_equal(identity.w2, np.eye(4))


def test_readout_sum():
    """Single row, pair sum and additivity over disjoint sets"""
    emb = NodeEmbeddings(matrix=[[1.0, 2.0], [3.0, 4.0], [5.0, -1.0]])
    np.testing.assert_array_equal(readout_sum(emb, [1]), [3.0, 4.0])
    np.testing.assert_array_equal(readout_sum(emb, [0, 1]), [4.0, 6.0])
    np.testing.assert_array_equal(readout_sum(emb, [0, 1, 2]), readout_sum(emb, [0]) + readout_sum(emb, [1, 2]))


def test_readout_errors():
    """Empty sets and unknown nodes are rejected"""
    emb = NodeEmbeddings(matrix=np.ones((2, 2)))
    with pytest.raises(EmptyReadoutError):
        readout_sum(emb, [])
    with pytest.raises(NodeIndexError):
        readout_sum(emb, [5])


def test_checkpoint_round_trip_is_exact(tmp_path):
    """Float weights survive save and load bit for bit"""
    params = init_params(6, 4, seed=11)
    path = str(tmp_path / "ckpt.json")
    save_checkpoint(params, path, metadata={"seed": 11})
    assert load_checkpoint(path).same_as(params)


def test_checkpoint_format_is_checked(tmp_path):
    """Foreign or truncated files are refused"""
    path = tmp_path / "ckpt.json"
    path.write_text(json.dumps({"format": "other"}), encoding="utf-8")
    with pytest.raises(CheckpointError):
        load_checkpoint(str(path))
    path.write_text("{", encoding="utf-8")
    with pytest.raises(CheckpointError):
        load_checkpoint(str(path))


@pytest.mark.parametrize("seed", range(5))
def test_encode_is_permutation_equivariant(graph_factory, seed):
    """Relabelling the nodes of a random 10-node graph permutes the embedding rows"""
    rng = np.random.default_rng(seed)
    n = 10
    types = ["a", "b"] * (n // 2)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3]
    features = rng.normal(size=(n, 4))
    params = init_params(4, 6, seed=seed)

    perm = rng.permutation(n)               # new node i is old node perm[i]
    inverse = np.argsort(perm)
    original = graph_factory(types, edges, features=features)
    relabelled = graph_factory([types[p] for p in perm],
                               [(int(inverse[s]), int(inverse[d])) for s, d in edges],
                               features=features[perm])
    np.testing.assert_allclose(encode(relabelled, params).matrix, encode(original, params).matrix[perm],
                               rtol=1e-12, atol=1e-12)


def test_checkpoint_errors_are_validation_errors():
    assert CheckpointError.exit_code == 2
    assert issubclass(CheckpointError, ValueError)
