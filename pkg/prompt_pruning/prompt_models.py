"""Prompt vectors, masks, labeled sets and importance reports shared by tuning and pruning."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError, DimensionError, PartitionError


def _readonly(values, dtype=np.float64) -> np.ndarray:
    array = np.array(values, dtype=dtype).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class FeaturePrompt:
    """P_f entries that survive pruning, with their positions in the hidden dimension"""
    values: np.ndarray
    dims: np.ndarray
    hidden_dim: int

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        object.__setattr__(self, "dims", _readonly(self.dims, np.int64))
        if self.values.shape != self.dims.shape:
            raise DimensionError(f"{self.values.size} feature prompt values for {self.dims.size} dims")
        if self.dims.size and (self.dims.min() < 0 or self.dims.max() >= self.hidden_dim
                               or np.any(np.diff(self.dims) <= 0)):
            raise DimensionError("feature prompt dims must be ascending positions inside the hidden dimension")

    def dense(self) -> np.ndarray:
        """Full-length vector with pruned positions set to zero"""
        out = np.zeros(self.hidden_dim)
        out[self.dims] = self.values
        return out


@dataclass(frozen=True, eq=False)
class SemanticPrompt:
    """P_s tokens that survive pruning, one per retained template view"""
    values: np.ndarray
    tokens: np.ndarray
    view_count: int

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        object.__setattr__(self, "tokens", _readonly(self.tokens, np.int64))
        if self.values.shape != self.tokens.shape:
            raise DimensionError(f"{self.values.size} semantic prompt values for {self.tokens.size} tokens")
        if self.tokens.size and (self.tokens.min() < 0 or self.tokens.max() >= self.view_count
                                 or np.any(np.diff(self.tokens) <= 0)):
            raise DimensionError("semantic prompt tokens must be ascending view indices")

    def dense(self) -> np.ndarray:
        out = np.zeros(self.view_count)
        out[self.tokens] = self.values
        return out


@dataclass(frozen=True, eq=False)
class PromptPair:
    feature: FeaturePrompt
    semantic: SemanticPrompt
    provenance: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def neutral(cls, hidden_dim: int, view_count: int) -> "PromptPair":
        """P_f = 1, P_s = 0: prompted readouts equal the promptless ones"""
        return cls.from_dense(np.ones(hidden_dim), np.zeros(view_count))

    @classmethod
    def from_dense(cls, feature: Sequence[float], semantic: Sequence[float],
                   provenance: Optional[Dict[str, Any]] = None) -> "PromptPair":
        feature = np.asarray(feature, dtype=np.float64).reshape(-1)
        semantic = np.asarray(semantic, dtype=np.float64).reshape(-1)
        return cls(
            feature=FeaturePrompt(values=feature, dims=np.arange(feature.size), hidden_dim=feature.size),
            semantic=SemanticPrompt(values=semantic, tokens=np.arange(semantic.size), view_count=semantic.size),
            provenance=dict(provenance or {}),
        )

    @property
    def hidden_dim(self) -> int:
        return self.feature.hidden_dim

    @property
    def view_count(self) -> int:
        return self.semantic.view_count

    @property
    def is_full(self) -> bool:
        return self.feature.dims.size == self.hidden_dim and self.semantic.tokens.size == self.view_count

    @property
    def parameter_count(self) -> int:
        """Trainable prompt parameters: surviving dims plus surviving tokens"""
        return int(self.feature.values.size + self.semantic.values.size)

    def with_values(self, feature: np.ndarray, semantic: np.ndarray,
                    provenance: Optional[Dict[str, Any]] = None) -> "PromptPair":
        """Same layout, new trainable values"""
        return PromptPair(
            feature=FeaturePrompt(values=feature, dims=self.feature.dims, hidden_dim=self.hidden_dim),
            semantic=SemanticPrompt(values=semantic, tokens=self.semantic.tokens, view_count=self.view_count),
            provenance=dict(self.provenance if provenance is None else provenance),
        )

    def same_values(self, other: "PromptPair") -> bool:
        return (np.array_equal(self.feature.values, other.feature.values)
                and np.array_equal(self.feature.dims, other.feature.dims)
                and np.array_equal(self.semantic.values, other.semantic.values)
                and np.array_equal(self.semantic.tokens, other.semantic.tokens))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hidden_dim": self.hidden_dim,
            "view_count": self.view_count,
            "feature_dims": [int(d) for d in self.feature.dims],
            "feature": [float(x) for x in self.feature.values],
            "semantic_tokens": [int(t) for t in self.semantic.tokens],
            "semantic": [float(x) for x in self.semantic.values],
            "parameter_count": self.parameter_count,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PromptPair":
        return cls(
            feature=FeaturePrompt(values=data["feature"], dims=data["feature_dims"],
                                  hidden_dim=int(data["hidden_dim"])),
            semantic=SemanticPrompt(values=data["semantic"], tokens=data["semantic_tokens"],
                                    view_count=int(data["view_count"])),
            provenance=dict(data.get("provenance", {})),
        )


@dataclass(frozen=True, eq=False)
class LabeledSet:
    """Node ids paired with class ids, over a declared class set"""
    nodes: np.ndarray
    labels: np.ndarray
    classes: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", _readonly(self.nodes, np.int64))
        object.__setattr__(self, "labels", _readonly(self.labels, np.int64))
        object.__setattr__(self, "classes", tuple(sorted(int(c) for c in self.classes)))
        if self.nodes.shape != self.labels.shape:
            raise ContractError(f"{self.nodes.size} nodes for {self.labels.size} labels")
        unknown = set(self.labels.tolist()) - set(self.classes)
        if unknown:
            raise ContractError(f"labels {sorted(unknown)} are outside the class set {list(self.classes)}")

    def __len__(self) -> int:
        return int(self.nodes.size)

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        return list(zip(self.nodes.tolist(), self.labels.tolist()))

    def class_positions(self) -> np.ndarray:
        """Index of each label within `classes`"""
        lookup = {c: i for i, c in enumerate(self.classes)}
        return np.array([lookup[int(y)] for y in self.labels], dtype=np.int64)

    def concat(self, other: "LabeledSet") -> "LabeledSet":
        if self.classes != other.classes:
            raise ContractError("cannot join labeled sets over different class sets")
        return LabeledSet(nodes=np.concatenate([self.nodes, other.nodes]),
                          labels=np.concatenate([self.labels, other.labels]), classes=self.classes)

    def to_dict(self) -> Dict[str, Any]:
        return {"nodes": self.nodes.tolist(), "labels": self.labels.tolist(), "classes": list(self.classes)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LabeledSet":
        return cls(nodes=data["nodes"], labels=data["labels"], classes=tuple(data["classes"]))


@dataclass(frozen=True, eq=False)
class Prototypes:
    vectors: np.ndarray         # (|C|, d) one row per class
    classes: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.classes)


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """Equal contiguous blocks over the feature prompt dimensions"""
    blocks: int
    dim: int

    def __post_init__(self):
        if self.blocks < 1 or self.dim < 1 or self.dim % self.blocks != 0:
            raise PartitionError(f"{self.blocks} blocks do not evenly divide dimension {self.dim}")

    @property
    def block_size(self) -> int:
        return self.dim // self.blocks

    def ranges(self) -> List[range]:
        size = self.block_size
        return [range(j * size, (j + 1) * size) for j in range(self.blocks)]

    def expander(self) -> np.ndarray:
        """(t, dim) 0/1 matrix broadcasting one value per block onto its dims"""
        out = np.zeros((self.blocks, self.dim))
        for j, span in enumerate(self.ranges()):
            out[j, span.start:span.stop] = 1.0
        return out

    def expand(self, per_block: np.ndarray) -> np.ndarray:
        return np.repeat(np.asarray(per_block, dtype=np.float64), self.block_size)


@dataclass(frozen=True, eq=False)
class MaskState:
    semantic: np.ndarray    # lambda, one 0/1 entry per semantic token
    feature: np.ndarray     # eta, one 0/1 entry per feature block

    def __post_init__(self):
        for name in ("semantic", "feature"):
            array = _readonly(getattr(self, name), np.int64)
            if np.any((array != 0) & (array != 1)):
                raise ContractError(f"{name} mask entries must be 0 or 1")
            object.__setattr__(self, name, array)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MaskState):
            return NotImplemented
        return bool(np.array_equal(self.semantic, other.semantic) and np.array_equal(self.feature, other.feature))

    @classmethod
    def ones(cls, tokens: int, blocks: int) -> "MaskState":
        return cls(semantic=np.ones(tokens, dtype=np.int64), feature=np.ones(blocks, dtype=np.int64))

    @property
    def retained_tokens(self) -> int:
        return int(self.semantic.sum())

    @property
    def retained_blocks(self) -> int:
        return int(self.feature.sum())

    @property
    def all_ones(self) -> bool:
        return bool(self.semantic.all() and self.feature.all())

    def to_dict(self) -> Dict[str, Any]:
        return {"semantic": self.semantic.tolist(), "feature": self.feature.tolist()}


@dataclass
class ImportanceReport:
    semantic_raw: List[float]
    feature_raw: List[float]
    semantic_z: List[float]
    feature_z: List[float]
    delta: float
    beta: float
    blocks: int
    masks: MaskState
    semantic_map: Dict[int, int]
    feature_map: Dict[int, int]
    parameters_before: int
    parameters_after: int
    pair_count: int
    seed: int
    strategy: str = "importance"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "strategy": self.strategy,
            "semantic_raw": self.semantic_raw,
            "feature_raw": self.feature_raw,
            "semantic_z": self.semantic_z,
            "feature_z": self.feature_z,
            "delta": self.delta,
            "beta": self.beta,
            "blocks": self.blocks,
            "masks": self.masks.to_dict(),
            "semantic_map": {str(k): v for k, v in self.semantic_map.items()},
            "feature_map": {str(k): v for k, v in self.feature_map.items()},
            "parameters_before": self.parameters_before,
            "parameters_after": self.parameters_after,
            "pair_count": self.pair_count,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ImportanceReport":
        return cls(
            semantic_raw=list(data["semantic_raw"]),
            feature_raw=list(data["feature_raw"]),
            semantic_z=list(data["semantic_z"]),
            feature_z=list(data["feature_z"]),
            delta=float(data["delta"]),
            beta=float(data["beta"]),
            blocks=int(data["blocks"]),
            masks=MaskState(semantic=data["masks"]["semantic"], feature=data["masks"]["feature"]),
            semantic_map={int(k): int(v) for k, v in data["semantic_map"].items()},
            feature_map={int(k): int(v) for k, v in data["feature_map"].items()},
            parameters_before=int(data["parameters_before"]),
            parameters_after=int(data["parameters_after"]),
            pair_count=int(data["pair_count"]),
            seed=int(data["seed"]),
            strategy=data.get("strategy", "importance"),
        )
