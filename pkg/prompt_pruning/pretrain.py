"""
Link-prediction contrastive pre-training.

For a triplet (v, a, b) with (v, a) an edge and (v, b) not, the subgraph
embedding of v should be closer to that of a than to that of b. Subgraph
embeddings are sum readouts of the encoder output over each node's ego
subgraph.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encoder import (EncoderInit, GcnParams, NodeEmbeddings, encode_tensor, init_params,
                      normalize_adjacency)
from .errors import ConfigError, ContractError, NoNegativeError, NumericError, TrainingError
from .graph_models import HeteroGraph
from .graph_template import ego_membership
from .optim import Adam

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Triplet:
    v: int
    a: int   # neighbour of v
    b: int   # non-neighbour of v


@dataclass
class PretrainConfig:
    tau: float = 0.5
    epochs: int = 100
    learning_rate: float = 1e-2
    seed: int = 0
    negatives: int = 1          # triplets drawn per sampled anchor
    hops: int = 1
    triplet_count: int = 256
    holdout_fraction: float = 0.1
    hidden_dim: int = 64
    init: str = EncoderInit.GLOROT.value

    def validate(self):
        if not self.tau > 0:
            raise ConfigError(f"temperature must be positive, got {self.tau}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be non-negative, got {self.epochs}")
        if self.negatives < 1:
            raise ConfigError("need at least one negative per anchor")
        if self.hops < 0:
            raise ConfigError("hop radius must be non-negative")
        if self.triplet_count < 2:
            raise ConfigError("need at least two triplets to hold one out")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ConfigError("holdout fraction must lie in (0, 1)")
        try:
            EncoderInit(self.init)
        except ValueError as exc:
            raise ConfigError(f"unknown encoder init {self.init!r}") from exc


@dataclass
class PretrainResult:
    params: GcnParams
    best_epoch: int
    history: List[Dict[str, Optional[float]]] = field(default_factory=list)


def sample_triplets(g: HeteroGraph, n: int, seed: int, negatives: int = 1) -> List[Triplet]:
    """Draw `n` triplets with uniformly chosen anchors, neighbours and non-neighbours"""
    if g.edge_count == 0:
        raise ContractError("cannot sample triplets from a graph without edges")
    neighbors = g.neighbors
    everyone = np.arange(g.node_count)
    eligible = [v for v in range(g.node_count) if 0 < len(neighbors[v]) < g.node_count - 1]
    if not eligible:
        raise NoNegativeError("every connected node is adjacent to all others; no negatives exist")
    rng = np.random.default_rng(seed)
    triplets: List[Triplet] = []
    while len(triplets) < n:
        v = eligible[int(rng.integers(len(eligible)))]
        nbrs = neighbors[v]
        a = int(nbrs[int(rng.integers(len(nbrs)))])
        candidates = np.setdiff1d(everyone, np.append(nbrs, v), assume_unique=True)
        for _ in range(negatives):
            if len(triplets) == n:
                break
            b = int(candidates[int(rng.integers(len(candidates)))])
            triplets.append(Triplet(v=v, a=a, b=b))
    return triplets


def _triplet_similarities(g: HeteroGraph, emb: Union[Tensor, NodeEmbeddings], triplets: Sequence[Triplet],
                          hops: int, ego: Optional[np.ndarray]) -> Tensor:
    """(m, 2) similarities [sim(s_v, s_a), sim(s_v, s_b)] per triplet"""
    if not triplets:
        raise ContractError("need at least one triplet")
    if ego is None:
        ego = ego_membership(g, hops)
    h = emb if isinstance(emb, Tensor) else ad.constant(emb.matrix)
    involved = sorted({x for t in triplets for x in (t.v, t.a, t.b)})
    position = {node: i for i, node in enumerate(involved)}
    subgraph = ad.matmul(ad.constant(ego[involved]), h)
    left = [position[t.v] for t in triplets for _ in (0, 1)]
    right = [position[x] for t in triplets for x in (t.a, t.b)]
    sims = ad.cosine_sim(ad.take(subgraph, left), ad.take(subgraph, right))
    return ad.reshape(sims, (len(triplets), 2))


def pretrain_loss(g: HeteroGraph, emb: Union[Tensor, NodeEmbeddings], triplets: Sequence[Triplet],
                  tau: float, hops: int = 1, ego: Optional[np.ndarray] = None) -> Tensor:
    """Summed per-triplet negative log ratio of the positive similarity"""
    if not tau > 0:
        raise ContractError(f"temperature must be positive, got {tau}")
    sims = _triplet_similarities(g, emb, triplets, hops, ego)
    logits = ad.scale(sims, 1.0 / tau)
    return ad.tensor_sum(ad.softmax_nll(logits, np.zeros(len(triplets), dtype=np.int64)))


def triplet_accuracy(g: HeteroGraph, emb: Union[Tensor, NodeEmbeddings], triplets: Sequence[Triplet],
                     hops: int = 1, ego: Optional[np.ndarray] = None) -> float:
    """Fraction of triplets with sim(s_v, s_a) > sim(s_v, s_b)"""
    sims = _triplet_similarities(g, emb, triplets, hops, ego).values
    return float(np.mean(sims[:, 0] > sims[:, 1]))


def _split_triplets(triplets: List[Triplet], fraction: float, seed: int) -> Tuple[List[Triplet], List[Triplet]]:
    order = np.random.default_rng([seed, 1]).permutation(len(triplets))
    held = max(1, int(math.ceil(fraction * len(triplets))))
    held = min(held, len(triplets) - 1)
    holdout = [triplets[i] for i in order[:held]]
    train = [triplets[i] for i in order[held:]]
    return train, holdout


def run_pretrain(g: HeteroGraph, config: PretrainConfig,
                 initial: Optional[GcnParams] = None) -> PretrainResult:
    """Train the encoder and keep the weights with the lowest held-out triplet loss"""
    config.validate()
    params = initial or init_params(g.feature_dim, config.hidden_dim, seed=config.seed, scheme=config.init)
    triplets = sample_triplets(g, config.triplet_count, config.seed, config.negatives)
    train, holdout = _split_triplets(triplets, config.holdout_fraction, config.seed)
    adjacency = normalize_adjacency(g)
    ego = ego_membership(g, config.hops)

    def evaluate(candidate: GcnParams, epoch: int) -> Tuple[float, float]:
        h = encode_tensor(adjacency, g.features, ad.constant(candidate.w1), ad.constant(candidate.w2))
        try:
            loss = pretrain_loss(g, h, holdout, config.tau, config.hops, ego).item()
            accuracy = triplet_accuracy(g, h, holdout, config.hops, ego)
        except NumericError as exc:
            raise TrainingError(f"held-out loss diverged ({exc.message})", epoch=epoch) from exc
        if not np.isfinite(loss):
            raise TrainingError("held-out loss diverged", epoch=epoch)
        return loss, accuracy

    best_loss, best_accuracy = evaluate(params, 0)
    best_params, best_epoch = params, 0
    history: List[Dict[str, Optional[float]]] = [
        {"epoch": 0, "loss": None, "heldout_loss": best_loss, "heldout_accuracy": best_accuracy}]
    optimizer = Adam(learning_rate=config.learning_rate)
    weights = {"w1": np.array(params.w1), "w2": np.array(params.w2)}
    logger.info("Pre-training on %d triplets (%d held out) for %d epochs",
                len(train), len(holdout), config.epochs)

    for epoch in range(1, config.epochs + 1):
        w1 = ad.parameter(weights["w1"], name="w1")
        w2 = ad.parameter(weights["w2"], name="w2")
        h = encode_tensor(adjacency, g.features, w1, w2)
        try:
            loss = pretrain_loss(g, h, train, config.tau, config.hops, ego)
        except NumericError as exc:
            raise TrainingError(f"pre-training loss diverged ({exc.message})", epoch=epoch) from exc
        if not np.isfinite(loss.item()):
            raise TrainingError("pre-training loss diverged", epoch=epoch)
        grads = ad.backward(loss)
        weights = optimizer.step(weights, {"w1": grads[w1], "w2": grads[w2]})
        if not all(np.all(np.isfinite(w)) for w in weights.values()):
            raise TrainingError("encoder weights became non-finite", epoch=epoch)
        current = GcnParams(w1=weights["w1"], w2=weights["w2"])
        heldout_loss, heldout_accuracy = evaluate(current, epoch)
        history.append({"epoch": epoch, "loss": loss.item(), "heldout_loss": heldout_loss,
                        "heldout_accuracy": heldout_accuracy})
        logger.debug("pretrain epoch %d loss=%.6f heldout=%.6f acc=%.3f",
                     epoch, loss.item(), heldout_loss, heldout_accuracy)
        if heldout_loss < best_loss:
            best_loss, best_params, best_epoch = heldout_loss, current, epoch

    logger.info("Best pre-training checkpoint at epoch %d (held-out loss %.6f)", best_epoch, best_loss)
    return PretrainResult(params=best_params, best_epoch=best_epoch, history=history)
