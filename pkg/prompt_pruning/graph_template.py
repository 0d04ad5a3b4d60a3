"""
Graph template decomposition and contextual (ego) subgraphs.

The template turns a heterogeneous graph into |A|+1 homogeneous views: view 0
keeps the whole topology with node types erased, view i (i >= 1) is the
subgraph induced by the nodes of type i-1.
"""

import logging
from collections import deque
from typing import List

import numpy as np

from .errors import ContractError, NodeIndexError
from .graph_models import EgoSubgraph, HeteroGraph, HomogeneousView, SubgraphSet

logger = logging.getLogger(__name__)


def _build_view(index: int, node_type, nodes: np.ndarray, g: HeteroGraph) -> HomogeneousView:
    remap = {int(node): local for local, node in enumerate(nodes)}
    pairs = []
    for src, dst, _ in g.edges:
        if int(src) in remap and int(dst) in remap:
            pairs.append((remap[int(src)], remap[int(dst)]))
    edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    nodes = np.array(nodes, dtype=np.int64)
    nodes.setflags(write=False)
    edges.setflags(write=False)
    return HomogeneousView(index=index, node_type=node_type, nodes=nodes, edges=edges, remap=remap)


def apply_template(g: HeteroGraph) -> SubgraphSet:
    """Split a heterogeneous graph into its type-erased view plus one view per node type"""
    views: List[HomogeneousView] = [_build_view(0, None, np.arange(g.node_count), g)]
    for type_id in range(g.type_count):
        views.append(_build_view(type_id + 1, type_id, g.nodes_of_type(type_id), g))
    logger.debug("Template produced %d views: %s", len(views),
                 [(v.node_count, v.edge_count) for v in views])
    return SubgraphSet(views=tuple(views))


def ego_subgraph(g: HeteroGraph, v: int, hops: int) -> EgoSubgraph:
    """Nodes within `hops` undirected steps of `v` on the full topology"""
    if not 0 <= v < g.node_count:
        raise NodeIndexError(f"node {v} outside 0..{g.node_count - 1}")
    if hops < 0:
        raise ContractError(f"hop radius must be non-negative, got {hops}")
    seen = {int(v)}
    frontier = deque([(int(v), 0)])
    while frontier:
        node, depth = frontier.popleft()
        if depth == hops:
            continue
        for nbr in g.neighbors[node]:
            nbr = int(nbr)
            if nbr not in seen:
                seen.add(nbr)
                frontier.append((nbr, depth + 1))
    nodes = np.array(sorted(seen), dtype=np.int64)
    nodes.setflags(write=False)
    return EgoSubgraph(center=int(v), nodes=nodes, hops=hops)


def ego_membership(g: HeteroGraph, hops: int) -> np.ndarray:
    """(n, n) matrix whose row v marks the nodes of v's ego subgraph"""
    member = np.zeros((g.node_count, g.node_count), dtype=np.float64)
    for v in range(g.node_count):
        member[v, ego_subgraph(g, v, hops).nodes] = 1.0
    return member
