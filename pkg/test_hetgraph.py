"""Tests for graph models, file I/O, template views and ego subgraphs."""

import json

import numpy as np
import pytest

from prompt_pruning import (SynthSpec, apply_template, ego_subgraph, load_graph, save_graph, synth_graph)
from prompt_pruning.errors import (ContractError, GraphParseError, GraphValidationError, HeterogeneityError,
                                   NodeIndexError, PipelineIOError)


def _write_lines(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return str(path)


def _meta(types, edge_types, dim=2, target=None):
    return {"kind": "meta", "types": types, "edge_types": edge_types, "feature_dim": dim,
            "target_type": target or types[0]}


def _node(i, node_type, label=None, dim=2):
    return {"kind": "node", "id": i, "type": node_type, "features": [float(i)] * dim, "label": label}


def test_load_two_type_file(tmp_path):
    """3 nodes of 2 types with 2 edges load with |A|=2, |R|=1"""
    path = _write_lines(tmp_path / "g.jsonl", [
        _meta(["paper", "author"], ["writes"]),
        _node(0, "paper", "db"), _node(1, "author"), _node(2, "paper", "ai"),
        {"kind": "edge", "src": 1, "dst": 0, "type": "writes"},
        {"kind": "edge", "src": 1, "dst": 2, "type": "writes"},
    ])
    g = load_graph(path)
    assert (g.type_count, len(g.edge_type_names), g.node_count, g.edge_count) == (2, 1, 3, 2)
    assert g.class_names == ("ai", "db")
    assert g.labels == (1, None, 0)


def test_homogeneous_file_is_rejected(tmp_path):
    """|A| = |R| = 1 fails the heterogeneity condition"""
    path = _write_lines(tmp_path / "g.jsonl", [
        _meta(["paper"], ["cites"]), _node(0, "paper"), _node(1, "paper"),
        {"kind": "edge", "src": 0, "dst": 1, "type": "cites"},
    ])
    with pytest.raises(HeterogeneityError):
        load_graph(path)


def test_out_of_range_endpoint_is_rejected(tmp_path):
    """Edge endpoint 99 on a 5-node graph"""
    records = [_meta(["a", "b"], ["ab"])] + [_node(i, "a" if i % 2 else "b") for i in range(5)]
    records.append({"kind": "edge", "src": 0, "dst": 99, "type": "ab"})
    with pytest.raises(GraphValidationError, match="99"):
        load_graph(_write_lines(tmp_path / "g.jsonl", records))


def test_parse_errors_carry_line_numbers(tmp_path):
    """Malformed JSON and unknown node types point at their line"""
    path = tmp_path / "g.jsonl"
    path.write_text(json.dumps(_meta(["a", "b"], ["ab"])) + "\n{not json\n", encoding="utf-8")
    with pytest.raises(GraphParseError) as info:
        load_graph(str(path))
    assert info.value.line_number == 2

    bad_type = _write_lines(tmp_path / "h.jsonl", [_meta(["a", "b"], ["ab"]), _node(0, "zzz")])
    with pytest.raises(GraphParseError, match="line 2"):
        load_graph(bad_type)


def test_sparse_node_ids_are_rejected(tmp_path):
    """Node ids must be dense"""
    path = _write_lines(tmp_path / "g.jsonl", [_meta(["a", "b"], ["ab"]), _node(0, "a"), _node(2, "b")])
    with pytest.raises(GraphValidationError):
        load_graph(path)


def test_missing_file_is_io_error(tmp_path):
    """Unreadable paths map to the I/O family"""
    with pytest.raises(PipelineIOError) as info:
        load_graph(str(tmp_path / "absent.jsonl"))
    assert info.value.exit_code == 4


def test_save_and_load_preserve_graph(tmp_path, small_graph):
    """Generated graphs survive a write and read"""
    path = str(tmp_path / "g.jsonl")
    save_graph(small_graph, path)
    loaded = load_graph(path)
    np.testing.assert_array_equal(loaded.node_types, small_graph.node_types)
    np.testing.assert_array_equal(loaded.edges, small_graph.edges)
    np.testing.assert_array_equal(loaded.features, small_graph.features)
    assert loaded.labels == small_graph.labels
    assert loaded.class_names == small_graph.class_names


def test_hand_written_file_is_rewritten_unchanged(tmp_path):
    """Loading then saving a canonical file reproduces it byte for byte"""
    source = _write_lines(tmp_path / "in.jsonl", [
        _meta(["paper", "author", "term"], ["writes", "mentions"], dim=3),
        _node(0, "paper", "db", dim=3), _node(1, "author", dim=3), _node(2, "paper", "ai", dim=3),
        _node(3, "term", dim=3), _node(4, "paper", "db", dim=3),
        {"kind": "edge", "src": 1, "dst": 0, "type": "writes"},
        {"kind": "edge", "src": 1, "dst": 2, "type": "writes"},
        {"kind": "edge", "src": 4, "dst": 3, "type": "mentions"},
    ])
    target = str(tmp_path / "out.jsonl")
    save_graph(load_graph(source), target)
    with open(source, encoding="utf-8") as a, open(target, encoding="utf-8") as b:
        assert a.read() == b.read()
    reloaded = load_graph(target)
    assert reloaded.labels == (1, None, 0, None, 1)
    assert reloaded.edge_count == 3


def test_many_class_labels_survive_a_file_round_trip(tmp_path):
    """Class names sort in generator order past two digits"""
    spec = SynthSpec(type_names=["paper", "author"], nodes_per_type=[240, 10], target_type="paper",
                     densities=[[0.02, 0.05], [0.05, 0.0]], class_count=120, informative_dims=120, noise_dims=0,
                     informative_types=["paper"])
    g = synth_graph(spec, seed=0)
    assert list(g.class_names) == sorted(g.class_names)
    assert g.class_names[100] == "class100"
    path = str(tmp_path / "g.jsonl")
    save_graph(g, path)
    assert load_graph(path).labels == g.labels


def test_acm_shaped_graph_has_four_types():
    """The default generator spec has four node types"""
    g = synth_graph(SynthSpec(nodes_per_type=[40, 20, 12, 8]), seed=1)
    assert g.type_count == 4
    assert len(apply_template(g)) == 5


def test_template_of_path(path_graph):
    """a(t0)-b(t1)-c(t0): full view keeps both edges, typed views keep none"""
    views = apply_template(path_graph)
    assert len(views) == 3
    assert views[0].edge_count == 2
    assert views[1].nodes.tolist() == [0, 2] and views[1].edge_count == 0
    assert views[2].nodes.tolist() == [1] and views[2].edge_count == 0


def test_template_invariants(small_graph):
    """Typed views keep exactly the intra-type edges; remaps are bijections"""
    views = apply_template(small_graph)
    assert len(views) == small_graph.type_count + 1
    assert views[0].edge_count == small_graph.edge_count
    src_t = small_graph.node_types[small_graph.edges[:, 0]]
    dst_t = small_graph.node_types[small_graph.edges[:, 1]]
    for type_id in range(small_graph.type_count):
        view = views[type_id + 1]
        assert view.edge_count == int(np.sum((src_t == type_id) & (dst_t == type_id)))
        assert sorted(view.remap.values()) == list(range(view.node_count))
        assert sorted(view.remap) == view.nodes.tolist()


def test_type_without_intra_edges_has_empty_view(graph_factory):
    """A type with nodes but no same-type edges gives an edgeless view"""
    g = graph_factory(["a", "a", "b", "c"], [(0, 1), (1, 2), (2, 3)], type_names=("a", "b", "c"))
    views = apply_template(g)
    assert views[3].node_count == 1 and views[3].edge_count == 0
    assert views[1].edge_count == 1


def test_ego_subgraph_radii(path_graph, graph_factory):
    """h=0 is the center alone; BFS reaches exactly h hops"""
    assert ego_subgraph(path_graph, 0, 0).nodes.tolist() == [0]
    assert ego_subgraph(path_graph, 0, 1).nodes.tolist() == [0, 1]
    star = graph_factory(["a"] + ["b"] * 5, [(0, i) for i in range(1, 6)])
    ego = ego_subgraph(star, 1, 2)
    assert ego.nodes.tolist() == list(range(6))
    assert 3 in ego


def test_ego_subgraph_contracts(path_graph):
    """Bad centers and negative radii are rejected"""
    with pytest.raises(NodeIndexError):
        ego_subgraph(path_graph, 7, 1)
    with pytest.raises(ContractError):
        ego_subgraph(path_graph, 0, -1)


def test_graph_arrays_are_frozen(path_graph):
    """Validated graphs cannot be edited in place"""
    with pytest.raises(ValueError):
        path_graph.features[0, 0] = 3.0
