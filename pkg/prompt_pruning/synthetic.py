"""
Planted-partition heterogeneous graph generator.

Every node belongs to one of `class_count` communities. Nodes of types listed
in `informative_types` carry their community in the first
`informative_dims` feature dims (dim i belongs to community i % class_count);
all remaining dims, and every dim of the other types, are zero-mean noise.
Edges between types a and b appear with probability density[a][b] inside a
community and density[a][b] * cross_ratio across communities. Only
target-type nodes are labeled.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List

import numpy as np

from .errors import PipelineIOError, SpecError
from .graph_models import HeteroGraph

logger = logging.getLogger(__name__)


def _default_densities() -> List[List[float]]:
    return [
        [0.04, 0.05, 0.05, 0.03],
        [0.05, 0.00, 0.02, 0.00],
        [0.05, 0.02, 0.00, 0.00],
        [0.03, 0.00, 0.00, 0.00],
    ]


@dataclass
class SynthSpec:
    type_names: List[str] = field(default_factory=lambda: ["paper", "author", "subject", "term"])
    nodes_per_type: List[int] = field(default_factory=lambda: [200, 100, 60, 40])
    target_type: str = "paper"
    densities: List[List[float]] = field(default_factory=_default_densities)
    cross_ratio: float = 0.1
    class_count: int = 3
    informative_dims: int = 16
    noise_dims: int = 48
    informative_types: List[str] = field(default_factory=lambda: ["paper", "author"])
    signal: float = 1.0
    baseline: float = 0.2
    signal_noise: float = 0.2
    noise_scale: float = 0.1

    @property
    def feature_dim(self) -> int:
        return self.informative_dims + self.noise_dims

    @property
    def node_count(self) -> int:
        return int(sum(self.nodes_per_type))

    def validate(self):
        types = len(self.type_names)
        if types < 1 or len(set(self.type_names)) != types:
            raise SpecError("type names must be non-empty and distinct")
        if len(self.nodes_per_type) != types or any(n < 1 for n in self.nodes_per_type):
            raise SpecError("need a positive node count for every type")
        if self.target_type not in self.type_names:
            raise SpecError(f"target type {self.target_type!r} is not among {self.type_names}")
        unknown = set(self.informative_types) - set(self.type_names)
        if unknown:
            raise SpecError(f"informative types {sorted(unknown)} are not declared")
        density = np.asarray(self.densities, dtype=np.float64)
        if density.shape != (types, types):
            raise SpecError(f"density matrix must be {types}x{types}, got {density.shape}")
        if not np.all(np.isfinite(density)) or density.min() < 0 or density.max() > 1:
            raise SpecError("edge densities must lie in [0, 1]")
        if not np.allclose(density, density.T):
            raise SpecError("edge density matrix must be symmetric")
        if not 0.0 <= self.cross_ratio <= 1.0:
            raise SpecError("cross-community ratio must lie in [0, 1]")
        if self.class_count < 2:
            raise SpecError("need at least two classes")
        if self.informative_dims < self.class_count or self.noise_dims < 0:
            raise SpecError("need one informative dim per class and a non-negative noise dim count")
        if min(self.signal_noise, self.noise_scale) < 0:
            raise SpecError("noise scales must be non-negative")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthSpec":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise SpecError(f"unknown generator fields {sorted(extra)}")
        spec = cls(**data)
        spec.validate()
        return spec


def load_synth_spec(path: str) -> SynthSpec:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise PipelineIOError(f"cannot read generator spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"generator spec {path} is not valid JSON: {exc.msg}") from exc
    return SynthSpec.from_dict(data)


def _features(spec: SynthSpec, informative: bool, communities: np.ndarray,
              rng: np.random.Generator) -> np.ndarray:
    count = communities.size
    out = rng.normal(0.0, spec.noise_scale, size=(count, spec.feature_dim))
    if informative:
        owner = np.arange(spec.informative_dims) % spec.class_count
        signal = spec.baseline + spec.signal * (owner[None, :] == communities[:, None])
        out[:, :spec.informative_dims] = signal + rng.normal(0.0, spec.signal_noise,
                                                             size=(count, spec.informative_dims))
    return out


def synth_graph(spec: SynthSpec, seed: int = 0) -> HeteroGraph:
    """Sample a graph from `spec`; the same (spec, seed) always gives the same graph"""
    spec.validate()
    rng = np.random.default_rng(seed)
    density = np.asarray(spec.densities, dtype=np.float64)

    node_types = np.repeat(np.arange(len(spec.type_names)), spec.nodes_per_type)
    communities = np.empty(node_types.size, dtype=np.int64)
    features = np.empty((node_types.size, spec.feature_dim))
    for type_id, name in enumerate(spec.type_names):
        members = np.flatnonzero(node_types == type_id)
        communities[members] = rng.permutation(np.arange(members.size) % spec.class_count)
        features[members] = _features(spec, name in spec.informative_types, communities[members], rng)

    edge_type_names: List[str] = []
    edge_blocks: List[np.ndarray] = []
    for a in range(len(spec.type_names)):
        for b in range(a, len(spec.type_names)):
            if density[a, b] <= 0:
                continue
            etype = len(edge_type_names)
            edge_type_names.append(f"{spec.type_names[a]}-{spec.type_names[b]}")
            left = np.flatnonzero(node_types == a)
            right = np.flatnonzero(node_types == b)
            same = communities[left][:, None] == communities[right][None, :]
            prob = np.where(same, density[a, b], density[a, b] * spec.cross_ratio)
            hits = rng.random(prob.shape) < prob
            if a == b:
                hits = np.triu(hits, k=1)
            src, dst = np.nonzero(hits)
            edge_blocks.append(np.stack([left[src], right[dst], np.full(src.size, etype)], axis=1))
    edges = np.concatenate(edge_blocks) if edge_blocks else np.zeros((0, 3), dtype=np.int64)

    target = spec.type_names.index(spec.target_type)
    labels = tuple(int(c) if t == target else None for t, c in zip(node_types, communities))
    # zero-padded so sorted names keep generator order
    width = max(2, len(str(spec.class_count - 1)))
    graph = HeteroGraph(
        type_names=tuple(spec.type_names),
        edge_type_names=tuple(edge_type_names),
        node_types=node_types,
        edges=edges,
        features=features,
        target_type=spec.target_type,
        labels=labels,
        class_names=tuple(f"class{c:0{width}d}" for c in range(spec.class_count)),
    )
    logger.info("Generated graph: %d nodes, %d edges, %d types, %d feature dims (%d informative)",
                graph.node_count, graph.edge_count, graph.type_count, graph.feature_dim, spec.informative_dims)
    return graph
