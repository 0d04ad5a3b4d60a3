"""Shared fixtures for the prompt pruning tests."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from prompt_pruning import (HeteroGraph, NodeEmbeddings, SynthSpec, TuningConfig, build_context, encode,
                            init_params, sample_tasks, synth_graph, tune_prompts)

collect_ignore = ["examples", "setup.py"]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance properties")


@pytest.fixture
def graph_factory():
    """Build a HeteroGraph from per-node type names and (src, dst) pairs"""

    def build(node_types, edges, features=None, type_names=("a", "b"), edge_type_names=("link",),
              labels=None, class_names=(), target_type=None):
        ids = [type_names.index(t) for t in node_types]
        rows = [(s, d, 0) for s, d in edges]
        if features is None:
            features = np.eye(len(ids), max(2, len(ids)))
        return HeteroGraph(
            type_names=tuple(type_names),
            edge_type_names=tuple(edge_type_names),
            node_types=np.array(ids),
            edges=np.array(rows, dtype=np.int64).reshape(-1, 3),
            features=features,
            target_type=target_type or type_names[0],
            labels=tuple(labels) if labels is not None else (),
            class_names=tuple(class_names),
        )

    return build


@pytest.fixture
def path_graph(graph_factory):
    """a(t0) - b(t1) - c(t0)"""
    return graph_factory(["a", "b", "a"], [(0, 1), (1, 2)])


@pytest.fixture
def pair_context(graph_factory):
    """Two connected nodes of different types with embeddings [1, 0] and [0, 2]"""
    graph = graph_factory(["a", "b"], [(0, 1)])
    return build_context(graph, NodeEmbeddings(matrix=[[1.0, 0.0], [0.0, 2.0]]), hops=1)


@pytest.fixture(scope="session")
def small_spec():
    return SynthSpec(
        type_names=["paper", "author", "term"],
        nodes_per_type=[30, 12, 8],
        target_type="paper",
        densities=[[0.15, 0.2, 0.15], [0.2, 0.0, 0.0], [0.15, 0.0, 0.0]],
        class_count=3,
        informative_dims=6,
        noise_dims=6,
        informative_types=["paper", "author"],
    )


@pytest.fixture(scope="session")
def small_graph(small_spec):
    return synth_graph(small_spec, seed=0)


@pytest.fixture(scope="session")
def small_context(small_graph):
    """Identity-encoder context: hidden dim j is feature dim j"""
    params = init_params(small_graph.feature_dim, small_graph.feature_dim, scheme="identity")
    return build_context(small_graph, encode(small_graph, params), hops=1)


@pytest.fixture(scope="session")
def small_task(small_graph):
    return sample_tasks(small_graph, k=1, n_tasks=1, seed=0)[0]


@pytest.fixture(scope="session")
def tuned_prompts(small_context, small_task):
    config = TuningConfig(epochs=15, seed=0)
    return tune_prompts(small_context, small_task.support, config, validation=small_task.validation).prompts
