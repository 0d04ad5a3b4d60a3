"""
Two-layer GCN encoder, sum-pooling readout and checkpoint files.

H = Â · ReLU(Â · X · W1) · W2 on the symmetrised full topology. The encoder
is trained only during pre-training; every later phase reads frozen
embeddings.
"""

import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable, Optional, Union

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import (CheckpointError, DimensionError, EmptyReadoutError, GraphValidationError, NodeIndexError,
                     PipelineIOError)
from .graph_models import HeteroGraph, HomogeneousView

logger = logging.getLogger(__name__)

DEFAULT_HIDDEN_DIM = 64
CHECKPOINT_FORMAT = "gcn-checkpoint/1"


class EncoderInit(Enum):
    GLOROT = "glorot"
    IDENTITY = "identity"


@dataclass(frozen=True, eq=False)
class GcnParams:
    w1: np.ndarray      # (d, d_h)
    w2: np.ndarray      # (d_h, d_h)

    def __post_init__(self):
        w1 = np.array(self.w1, dtype=np.float64, ndmin=2)
        w2 = np.array(self.w2, dtype=np.float64, ndmin=2)
        if w1.shape[1] != w2.shape[0] or w2.shape[0] != w2.shape[1]:
            raise DimensionError(f"GCN weights have incompatible shapes {w1.shape} and {w2.shape}")
        if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(w2))):
            raise GraphValidationError("GCN weights contain non-finite entries")
        w1.setflags(write=False)
        w2.setflags(write=False)
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)

    @property
    def input_dim(self) -> int:
        return int(self.w1.shape[0])

    @property
    def hidden_dim(self) -> int:
        return int(self.w2.shape[1])

    def same_as(self, other: "GcnParams") -> bool:
        return np.array_equal(self.w1, other.w1) and np.array_equal(self.w2, other.w2)


@dataclass(frozen=True, eq=False)
class NodeEmbeddings:
    matrix: np.ndarray  # (n, d_h), row v is h_v

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64, ndmin=2)
        if not np.all(np.isfinite(matrix)):
            raise GraphValidationError("node embeddings contain non-finite entries")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def node_count(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def hidden_dim(self) -> int:
        return int(self.matrix.shape[1])


def init_params(input_dim: int, hidden_dim: int = DEFAULT_HIDDEN_DIM,
                seed: int = 0, scheme: Union[EncoderInit, str] = EncoderInit.GLOROT) -> GcnParams:
    """Fresh encoder weights"""
    scheme = EncoderInit(scheme)
    if scheme is EncoderInit.IDENTITY:
        return GcnParams(w1=np.eye(input_dim, hidden_dim), w2=np.eye(hidden_dim))
    rng = np.random.default_rng(seed)
    limit1 = np.sqrt(6.0 / (input_dim + hidden_dim))
    limit2 = np.sqrt(6.0 / (2 * hidden_dim))
    return GcnParams(
        w1=rng.uniform(-limit1, limit1, size=(input_dim, hidden_dim)),
        w2=rng.uniform(-limit2, limit2, size=(hidden_dim, hidden_dim)),
    )


def normalize_adjacency(topology: Union[HeteroGraph, HomogeneousView]) -> np.ndarray:
    """Dense D^-1/2 (A + I) D^-1/2 of the symmetrised topology"""
    n = topology.node_count
    if n < 1:
        raise GraphValidationError("cannot normalise the adjacency of an empty graph")
    adjacency = np.zeros((n, n), dtype=np.float64)
    if topology.edge_count:
        src, dst = topology.edges[:, 0], topology.edges[:, 1]
        adjacency[src, dst] = 1.0
        adjacency[dst, src] = 1.0
    np.fill_diagonal(adjacency, 1.0)
    inv_sqrt = 1.0 / np.sqrt(adjacency.sum(axis=1))
    return adjacency * inv_sqrt[:, None] * inv_sqrt[None, :]


def encode_tensor(adjacency: np.ndarray, features: np.ndarray, w1: Tensor, w2: Tensor) -> Tensor:
    """Differentiable forward pass over weight tensors"""
    if features.shape[1] != w1.shape[0]:
        raise DimensionError(f"feature dim {features.shape[1]} does not match W1 rows {w1.shape[0]}")
    a_hat = ad.constant(adjacency)
    x = ad.constant(features)
    hidden = ad.relu(ad.matmul(a_hat, ad.matmul(x, w1)))
    return ad.matmul(a_hat, ad.matmul(hidden, w2))


def encode(g: HeteroGraph, params: GcnParams, adjacency: Optional[np.ndarray] = None) -> NodeEmbeddings:
    """Node embeddings under frozen weights"""
    if g.feature_dim != params.input_dim:
        raise DimensionError(f"feature dim {g.feature_dim} does not match W1 rows {params.input_dim}")
    a_hat = normalize_adjacency(g) if adjacency is None else adjacency
    out = encode_tensor(a_hat, g.features, ad.constant(params.w1), ad.constant(params.w2))
    return NodeEmbeddings(matrix=out.values)


def readout_sum(emb: Union[NodeEmbeddings, Tensor], nodes: Iterable[int]) -> Union[np.ndarray, Tensor]:
    """Sum of the selected embedding rows"""
    idx = np.array(sorted(set(int(n) for n in nodes)), dtype=np.int64)
    if idx.size == 0:
        raise EmptyReadoutError("readout over an empty node set")
    rows = emb.node_count if isinstance(emb, NodeEmbeddings) else emb.shape[0]
    if idx.min() < 0 or idx.max() >= rows:
        raise NodeIndexError(f"readout node ids must lie in 0..{rows - 1}")
    if isinstance(emb, Tensor):
        return ad.tensor_sum(ad.take(emb, idx), axis=0)
    return emb.matrix[idx].sum(axis=0)


def _encode_array(array: np.ndarray) -> Dict[str, Any]:
    return {"shape": list(array.shape), "values": [float(x) for x in array.reshape(-1)]}


def _decode_array(block: Dict[str, Any]) -> np.ndarray:
    shape = tuple(int(s) for s in block["shape"])
    values = np.array(block["values"], dtype=np.float64)
    if values.size != int(np.prod(shape)):
        raise DimensionError(f"checkpoint block declares shape {shape} but holds {values.size} values")
    return values.reshape(shape)


def save_checkpoint(params: GcnParams, path: str, metadata: Optional[Dict[str, Any]] = None) -> None:
    """Write encoder weights with shape headers"""
    document = {
        "format": CHECKPOINT_FORMAT,
        "hidden_dim": params.hidden_dim,
        "input_dim": params.input_dim,
        "W1": _encode_array(params.w1),
        "W2": _encode_array(params.w2),
        "metadata": metadata or {},
    }
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, indent=2)
    except OSError as exc:
        raise PipelineIOError(f"cannot write checkpoint {path}: {exc}") from exc
    logger.info("Saved checkpoint to %s", path)


def load_checkpoint(path: str) -> GcnParams:
    """Read encoder weights written by save_checkpoint"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except OSError as exc:
        raise PipelineIOError(f"cannot read checkpoint {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint {path} is not valid JSON: {exc.msg}") from exc
    if document.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unsupported checkpoint format {document.get('format')!r}")
    return GcnParams(w1=_decode_array(document["W1"]), w2=_decode_array(document["W2"]))
