"""
Line-oriented JSON graph files.

    {"kind":"meta","types":[...],"edge_types":[...],"feature_dim":d,"target_type":name}
    {"kind":"node","id":int,"type":name,"features":[d floats],"label":name|null}
    {"kind":"edge","src":int,"dst":int,"type":name}

The meta line comes first; node ids are dense 0..n-1.
"""

import json
import logging
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import GraphParseError, GraphValidationError, PipelineIOError
from .graph_models import HeteroGraph

logger = logging.getLogger(__name__)


def _require(record: Dict[str, Any], key: str, line_number: int) -> Any:
    if key not in record:
        raise GraphParseError(f"missing field {key!r}", line_number)
    return record[key]


def load_graph(path: str) -> HeteroGraph:
    """Parse and validate a graph file"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as exc:
        raise PipelineIOError(f"cannot read graph file {path}: {exc}") from exc

    meta: Optional[Dict[str, Any]] = None
    nodes: Dict[int, Dict[str, Any]] = {}
    edges: List[tuple] = []

    for line_number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            record = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphParseError(f"invalid JSON ({exc.msg})", line_number) from exc
        if not isinstance(record, dict):
            raise GraphParseError("record is not a JSON object", line_number)
        kind = _require(record, "kind", line_number)

        if kind == "meta":
            if meta is not None:
                raise GraphParseError("duplicate meta record", line_number)
            if nodes or edges:
                raise GraphParseError("meta record must come first", line_number)
            meta = {
                "types": list(_require(record, "types", line_number)),
                "edge_types": list(_require(record, "edge_types", line_number)),
                "feature_dim": int(_require(record, "feature_dim", line_number)),
                "target_type": _require(record, "target_type", line_number),
            }
            continue

        if meta is None:
            raise GraphParseError("meta record must come first", line_number)

        if kind == "node":
            node_id = _require(record, "id", line_number)
            node_type = _require(record, "type", line_number)
            features = _require(record, "features", line_number)
            if not isinstance(node_id, int) or node_id < 0:
                raise GraphParseError(f"node id must be a non-negative integer, got {node_id!r}", line_number)
            if node_id in nodes:
                raise GraphParseError(f"duplicate node id {node_id}", line_number)
            if node_type not in meta["types"]:
                raise GraphParseError(f"unknown node type {node_type!r}", line_number)
            if not isinstance(features, list) or len(features) != meta["feature_dim"]:
                raise GraphParseError(f"expected {meta['feature_dim']} features", line_number)
            try:
                values = [float(x) for x in features]
            except (TypeError, ValueError) as exc:
                raise GraphParseError("features must be numbers", line_number) from exc
            nodes[node_id] = {"type": meta["types"].index(node_type), "features": values,
                              "label": record.get("label")}
        elif kind == "edge":
            src = _require(record, "src", line_number)
            dst = _require(record, "dst", line_number)
            edge_type = _require(record, "type", line_number)
            if not isinstance(src, int) or not isinstance(dst, int):
                raise GraphParseError("edge endpoints must be integers", line_number)
            if edge_type not in meta["edge_types"]:
                raise GraphParseError(f"unknown edge type {edge_type!r}", line_number)
            edges.append((src, dst, meta["edge_types"].index(edge_type)))
        else:
            raise GraphParseError(f"unknown record kind {kind!r}", line_number)

    if meta is None:
        raise GraphParseError("file has no meta record", 1)

    n = len(nodes)
    if sorted(nodes) != list(range(n)):
        raise GraphValidationError("node ids must be dense 0..n-1")

    class_names = sorted({str(info["label"]) for info in nodes.values() if info["label"] is not None})
    labels = tuple(
        None if nodes[i]["label"] is None else class_names.index(str(nodes[i]["label"]))
        for i in range(n)
    )
    features = np.array([nodes[i]["features"] for i in range(n)], dtype=np.float64).reshape(n, meta["feature_dim"])
    graph = HeteroGraph(
        type_names=tuple(meta["types"]),
        edge_type_names=tuple(meta["edge_types"]),
        node_types=np.array([nodes[i]["type"] for i in range(n)], dtype=np.int64),
        edges=np.array(edges, dtype=np.int64).reshape(-1, 3),
        features=features,
        target_type=meta["target_type"],
        labels=labels,
        class_names=tuple(class_names),
    )
    logger.info("Loaded graph %s: %d nodes, %d edges, %d node types",
                path, graph.node_count, graph.edge_count, graph.type_count)
    return graph


def save_graph(g: HeteroGraph, path: str) -> None:
    """Write a graph in the line-oriented JSON format"""
    lines = [json.dumps({
        "kind": "meta",
        "types": list(g.type_names),
        "edge_types": list(g.edge_type_names),
        "feature_dim": g.feature_dim,
        "target_type": g.target_type,
    })]
    for node in range(g.node_count):
        label = g.labels[node]
        lines.append(json.dumps({
            "kind": "node",
            "id": node,
            "type": g.type_names[g.node_types[node]],
            "features": [float(x) for x in g.features[node]],
            "label": None if label is None else g.class_names[label],
        }))
    for src, dst, etype in g.edges:
        lines.append(json.dumps({
            "kind": "edge",
            "src": int(src),
            "dst": int(dst),
            "type": g.edge_type_names[etype],
        }))
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise PipelineIOError(f"cannot write graph file {path}: {exc}") from exc
    logger.info("Saved graph to %s", path)
