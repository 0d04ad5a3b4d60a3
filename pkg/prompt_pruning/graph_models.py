"""Typed heterogeneous graph container with cached adjacency lookups."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import GraphValidationError, HeterogeneityError


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class HeteroGraph:
    """Typed nodes and edges with a dense feature matrix"""
    type_names: Tuple[str, ...]
    edge_type_names: Tuple[str, ...]
    node_types: np.ndarray          # (n,) type id per node
    edges: np.ndarray               # (m, 3) rows of (src, dst, edge type id)
    features: np.ndarray            # (n, d)
    target_type: str
    labels: Tuple[Optional[int], ...] = ()   # class id per node, None when unlabeled
    class_names: Tuple[str, ...] = ()

    def __post_init__(self):
        node_types = _frozen(np.asarray(self.node_types, dtype=np.int64).reshape(-1))
        edges = _frozen(np.asarray(self.edges, dtype=np.int64).reshape(-1, 3))
        features = _frozen(np.array(self.features, dtype=np.float64, ndmin=2))
        object.__setattr__(self, "node_types", node_types)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "type_names", tuple(self.type_names))
        object.__setattr__(self, "edge_type_names", tuple(self.edge_type_names))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        labels = tuple(self.labels) if self.labels else (None,) * len(node_types)
        object.__setattr__(self, "labels", labels)
        self.validate()

    @property
    def node_count(self) -> int:
        return int(self.node_types.shape[0])

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def type_count(self) -> int:
        return len(self.type_names)

    @property
    def view_count(self) -> int:
        return self.type_count + 1

    @property
    def target_type_id(self) -> int:
        return self.type_names.index(self.target_type)

    def validate(self):
        """Check every structural invariant, raising on the first violation"""
        n = self.node_count
        if len(self.type_names) + len(self.edge_type_names) <= 2:
            raise HeterogeneityError(
                f"|A| + |R| = {len(self.type_names)} + {len(self.edge_type_names)} must exceed 2")
        if len(set(self.type_names)) != len(self.type_names):
            raise GraphValidationError("duplicate node type names")
        if self.target_type not in self.type_names:
            raise GraphValidationError(f"target type {self.target_type!r} is not a declared node type")
        if self.features.shape[0] != n:
            raise GraphValidationError(f"feature matrix has {self.features.shape[0]} rows for {n} nodes")
        if n and (self.node_types.min() < 0 or self.node_types.max() >= self.type_count):
            raise GraphValidationError("node type id outside the declared types")
        if self.edge_count:
            endpoints = self.edges[:, :2]
            if endpoints.min() < 0 or endpoints.max() >= n:
                bad = int(endpoints.max()) if endpoints.max() >= n else int(endpoints.min())
                raise GraphValidationError(f"edge endpoint {bad} outside 0..{n - 1}")
            etypes = self.edges[:, 2]
            if etypes.min() < 0 or etypes.max() >= len(self.edge_type_names):
                raise GraphValidationError("edge type id outside the declared edge types")
        if len(self.labels) != n:
            raise GraphValidationError(f"{len(self.labels)} labels for {n} nodes")
        for node, label in enumerate(self.labels):
            if label is None:
                continue
            if not 0 <= label < len(self.class_names):
                raise GraphValidationError(f"node {node} has unknown class id {label}")
        if not np.all(np.isfinite(self.features)):
            raise GraphValidationError("features contain non-finite values")

    @cached_property
    def neighbors(self) -> Tuple[np.ndarray, ...]:
        """Undirected adjacency lists (sorted, self-loops dropped)"""
        adjacency: List[set] = [set() for _ in range(self.node_count)]
        for src, dst, _ in self.edges:
            if src != dst:
                adjacency[src].add(int(dst))
                adjacency[dst].add(int(src))
        return tuple(_frozen(np.array(sorted(nbrs), dtype=np.int64)) for nbrs in adjacency)

    def nodes_of_type(self, type_id: int) -> np.ndarray:
        return np.flatnonzero(self.node_types == type_id)

    def labeled_nodes(self) -> Dict[int, List[int]]:
        """Labeled target-type node ids grouped by class id"""
        grouped: Dict[int, List[int]] = {c: [] for c in range(len(self.class_names))}
        target = self.target_type_id
        for node, label in enumerate(self.labels):
            if label is not None and self.node_types[node] == target:
                grouped[label].append(node)
        return grouped


@dataclass(frozen=True, eq=False)
class HomogeneousView:
    """One template view: a node subset with its induced edges"""
    index: int
    node_type: Optional[int]        # None for the type-erased full view
    nodes: np.ndarray               # global node ids, ascending
    edges: np.ndarray               # (k, 2) local endpoint pairs
    remap: Dict[int, int] = field(default_factory=dict)   # global id -> local id

    @property
    def node_count(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])


@dataclass(frozen=True, eq=False)
class SubgraphSet:
    """The |A|+1 homogeneous views of a heterogeneous graph"""
    views: Tuple[HomogeneousView, ...]

    def __len__(self) -> int:
        return len(self.views)

    def __getitem__(self, index: int) -> HomogeneousView:
        return self.views[index]

    def membership(self, node_count: int) -> np.ndarray:
        """(n, |A|+1) indicator of which views contain each node"""
        member = np.zeros((node_count, len(self.views)), dtype=np.float64)
        for view in self.views:
            member[view.nodes, view.index] = 1.0
        return member


@dataclass(frozen=True, eq=False)
class EgoSubgraph:
    center: int
    nodes: np.ndarray   # ascending global ids, center included
    hops: int

    def __contains__(self, node: int) -> bool:
        return bool(np.any(self.nodes == node))
