"""
Prompt tuning over frozen node embeddings.

For a node v with ego subgraph S, the prompted subgraph embedding is

    s_v = sum_i (1 + p_s^i) * ReadOut({P_f * h_u : u in S restricted to view i})

where view 0 is the type-erased topology and view i >= 1 holds nodes of type
i-1. Because the readout is a sum, per-view readouts of the raw embeddings are
computed once per graph (`PromptContext`) and every forward pass reduces to
a couple of matrix products over them.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encoder import NodeEmbeddings
from .errors import (ContractError, DimensionError, EmptyReadoutError, MissingClassError, NodeIndexError,
                     NumericError, PipelineIOError, TrainingError)
from .graph_models import HeteroGraph, SubgraphSet
from .graph_template import apply_template, ego_membership
from .optim import Adam
from .prompt_models import BlockPartition, LabeledSet, PromptPair, Prototypes

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PromptContext:
    """Frozen per-graph inputs to every prompted forward pass"""
    graph: HeteroGraph
    embeddings: NodeEmbeddings
    hops: int
    template: SubgraphSet
    view_readouts: np.ndarray   # (n, |A|+1, d_h): sum of h_u over S_v restricted to view i
    view_sizes: np.ndarray      # (n, |A|+1): node count of S_v restricted to view i

    @property
    def hidden_dim(self) -> int:
        return self.embeddings.hidden_dim

    @property
    def view_count(self) -> int:
        return len(self.template)


def build_context(g: HeteroGraph, emb: NodeEmbeddings, hops: int = 1) -> PromptContext:
    if emb.node_count != g.node_count:
        raise DimensionError(f"{emb.node_count} embedding rows for {g.node_count} nodes")
    template = apply_template(g)
    member = template.membership(g.node_count)
    ego = ego_membership(g, hops)
    readouts = np.stack([(ego * member[:, i]) @ emb.matrix for i in range(len(template))], axis=1)
    sizes = ego @ member
    readouts.setflags(write=False)
    sizes.setflags(write=False)
    logger.debug("Prompt context: %d nodes, %d views, hops=%d", g.node_count, len(template), hops)
    return PromptContext(graph=g, embeddings=emb, hops=hops, template=template,
                         view_readouts=readouts, view_sizes=sizes)


@dataclass
class PromptLeaves:
    """Tensors fed to one forward pass; masks are optional multiplicative gates"""
    feature: Tensor
    semantic: Tensor
    semantic_mask: Optional[Tensor] = None      # lambda, one entry per semantic token
    feature_mask: Optional[Tensor] = None       # eta, one entry per block
    partition: Optional[BlockPartition] = None

    @classmethod
    def of(cls, prompts: PromptPair, trainable: bool = False) -> "PromptLeaves":
        make = ad.parameter if trainable else ad.constant
        return cls(feature=make(prompts.feature.values, name="P_f"),
                   semantic=make(prompts.semantic.values, name="P_s"))


def prompted_embeddings(ctx: PromptContext, prompts: PromptPair, nodes: Sequence[int],
                        leaves: Optional[PromptLeaves] = None) -> Tensor:
    """(m, kept dims) prompted subgraph embeddings of `nodes`"""
    leaves = leaves or PromptLeaves.of(prompts)
    nodes = np.asarray(nodes, dtype=np.int64).reshape(-1)
    if nodes.size == 0:
        raise EmptyReadoutError("no nodes to embed")
    if nodes.min() < 0 or nodes.max() >= ctx.graph.node_count:
        raise NodeIndexError(f"node ids must lie in 0..{ctx.graph.node_count - 1}")
    if prompts.hidden_dim != ctx.hidden_dim or prompts.view_count != ctx.view_count:
        raise DimensionError(
            f"prompts sized ({prompts.hidden_dim}, {prompts.view_count}) for context "
            f"({ctx.hidden_dim}, {ctx.view_count})")
    empty = np.flatnonzero(ctx.view_sizes[nodes].sum(axis=1) == 0)
    if empty.size:
        raise EmptyReadoutError(f"every view of node {int(nodes[empty[0]])}'s subgraph is empty")

    dims = prompts.feature.dims
    tokens = prompts.semantic.tokens
    views = ctx.view_count
    readouts = ctx.view_readouts[nodes][:, :, dims]             # (m, V, k)
    m, _, kept = readouts.shape
    stacked = readouts.transpose(0, 2, 1).reshape(m * kept, views)

    selector = np.zeros((tokens.size, views))
    selector[np.arange(tokens.size), tokens] = 1.0
    token_values = leaves.semantic
    if leaves.semantic_mask is not None:
        token_values = ad.mul(token_values, leaves.semantic_mask)
    view_weights = ad.add(ad.constant(np.ones((1, views))),
                          ad.matmul(ad.reshape(token_values, (1, tokens.size)), ad.constant(selector)))
    combined = ad.reshape(ad.matmul(ad.constant(stacked), ad.reshape(view_weights, (views, 1))), (m, kept))

    feature_values = leaves.feature
    if leaves.feature_mask is not None:
        partition = leaves.partition or BlockPartition(blocks=leaves.feature_mask.size, dim=kept)
        if partition.dim != kept:
            raise DimensionError(f"block partition covers {partition.dim} dims, prompts keep {kept}")
        gate = ad.matmul(ad.reshape(leaves.feature_mask, (1, partition.blocks)),
                         ad.constant(partition.expander()))
        feature_values = ad.mul(feature_values, ad.reshape(gate, (kept,)))
    return ad.mul(combined, feature_values)


def prompted_subgraph_embedding(ctx: PromptContext, prompts: PromptPair, v: int) -> np.ndarray:
    """s_v for a single node"""
    return prompted_embeddings(ctx, prompts, [v]).values[0].copy()


def _average_matrix(support: LabeledSet) -> np.ndarray:
    positions = support.class_positions()
    averages = np.zeros((len(support.classes), len(support)))
    for c in range(len(support.classes)):
        members = np.flatnonzero(positions == c)
        if members.size == 0:
            raise MissingClassError(f"class {support.classes[c]} has no support node")
        averages[c, members] = 1.0 / members.size
    return averages


def prototype_tensor(ctx: PromptContext, prompts: PromptPair, support: LabeledSet,
                     leaves: Optional[PromptLeaves] = None) -> Tensor:
    """(|C|, kept dims) class means of prompted support embeddings"""
    if len(support) == 0:
        raise MissingClassError("support set is empty")
    averages = _average_matrix(support)
    return ad.matmul(ad.constant(averages), prompted_embeddings(ctx, prompts, support.nodes, leaves))


def class_prototypes(ctx: PromptContext, prompts: PromptPair, support: LabeledSet) -> Prototypes:
    vectors = prototype_tensor(ctx, prompts, support).values
    return Prototypes(vectors=vectors, classes=support.classes)


def predict(s_x: np.ndarray, protos: Prototypes) -> int:
    """Class of the most cosine-similar prototype; ties go to the lowest class id"""
    if len(protos) == 0:
        raise ContractError("no prototypes to compare against")
    s_x = np.asarray(s_x, dtype=np.float64).reshape(1, -1)
    rows = np.repeat(s_x, len(protos), axis=0)
    sims = ad.cosine_sim(ad.constant(rows), ad.constant(protos.vectors)).values
    return int(protos.classes[int(np.argmax(sims))])


def similarity_logits(ctx: PromptContext, prompts: PromptPair, support: LabeledSet, nodes: Sequence[int],
                      leaves: Optional[PromptLeaves] = None) -> Tensor:
    """(m, |C|) cosine similarities between each node and every class prototype"""
    leaves = leaves or PromptLeaves.of(prompts)
    protos = prototype_tensor(ctx, prompts, support, leaves)
    embedded = prompted_embeddings(ctx, prompts, nodes, leaves)
    m = embedded.shape[0]
    classes = protos.shape[0]
    left = ad.take(embedded, np.repeat(np.arange(m), classes))
    right = ad.take(protos, np.tile(np.arange(classes), m))
    return ad.reshape(ad.cosine_sim(left, right), (m, classes))


def predict_nodes(ctx: PromptContext, prompts: PromptPair, support: LabeledSet,
                  nodes: Sequence[int]) -> np.ndarray:
    """Batch form of `predict` over prompted embeddings of `nodes`"""
    sims = similarity_logits(ctx, prompts, support, nodes).values
    return np.array(support.classes, dtype=np.int64)[np.argmax(sims, axis=1)]


def pair_losses(ctx: PromptContext, prompts: PromptPair, support: LabeledSet, data: LabeledSet,
                tau: float, leaves: Optional[PromptLeaves] = None) -> Tensor:
    """Per-pair downstream loss over prototypes built from `support`"""
    if not tau > 0:
        raise ContractError(f"temperature must be positive, got {tau}")
    if len(data) == 0:
        raise ContractError("no labeled pairs to score")
    if data.classes != support.classes:
        raise ContractError("labeled data and support use different class sets")
    sims = similarity_logits(ctx, prompts, support, data.nodes, leaves)
    return ad.softmax_nll(ad.scale(sims, 1.0 / tau), data.class_positions())


def downstream_loss(ctx: PromptContext, prompts: PromptPair, support: LabeledSet, data: LabeledSet,
                    tau: float, leaves: Optional[PromptLeaves] = None) -> Tensor:
    """Summed prototype-similarity cross-entropy over `data`"""
    return ad.tensor_sum(pair_losses(ctx, prompts, support, data, tau, leaves))


@dataclass
class TuningConfig:
    tau: float = 0.5
    epochs: int = 100
    learning_rate: float = 1e-2
    seed: int = 0


@dataclass
class TuningResult:
    prompts: PromptPair
    best_epoch: int
    history: List[Dict[str, Optional[float]]] = field(default_factory=list)


def tune_prompts(ctx: PromptContext, support: LabeledSet, config: TuningConfig,
                 validation: Optional[LabeledSet] = None,
                 initial: Optional[PromptPair] = None) -> TuningResult:
    """Optimise the prompt values on `support`; keep the best-validation prompts"""
    if config.epochs < 0:
        raise ContractError(f"epochs must be non-negative, got {config.epochs}")
    prompts = initial or PromptPair.neutral(ctx.hidden_dim, ctx.view_count)
    check = validation if validation is not None and len(validation) else support

    def validation_loss(candidate: PromptPair) -> float:
        return downstream_loss(ctx, candidate, support, check, config.tau).item()

    best, best_loss, best_epoch = prompts, validation_loss(prompts), 0
    history: List[Dict[str, Optional[float]]] = [{"epoch": 0, "loss": None, "validation_loss": best_loss}]
    optimizer = Adam(learning_rate=config.learning_rate)
    values = {"feature": np.array(prompts.feature.values), "semantic": np.array(prompts.semantic.values)}

    for epoch in range(1, config.epochs + 1):
        current = prompts.with_values(values["feature"], values["semantic"])
        leaves = PromptLeaves.of(current, trainable=True)
        try:
            loss = downstream_loss(ctx, current, support, support, config.tau, leaves)
        except NumericError as exc:
            raise TrainingError(f"prompt loss diverged ({exc.message})", epoch=epoch) from exc
        if not np.isfinite(loss.item()):
            raise TrainingError("prompt loss diverged", epoch=epoch)
        grads = ad.backward(loss)
        values = optimizer.step(values, {"feature": grads[leaves.feature], "semantic": grads[leaves.semantic]})
        updated = prompts.with_values(values["feature"], values["semantic"])
        try:
            current_loss = validation_loss(updated)
        except NumericError as exc:
            raise TrainingError(f"validation loss diverged ({exc.message})", epoch=epoch) from exc
        history.append({"epoch": epoch, "loss": loss.item(), "validation_loss": current_loss})
        logger.debug("tune epoch %d loss=%.6f validation=%.6f", epoch, loss.item(), current_loss)
        if current_loss < best_loss:
            best, best_loss, best_epoch = updated, current_loss, epoch

    best = best.with_values(best.feature.values, best.semantic.values, provenance={
        **prompts.provenance,
        "seed": config.seed,
        "epochs": config.epochs,
        "best_epoch": best_epoch,
        "loss_curve": [h["loss"] for h in history[1:]],
    })
    logger.info("Tuned %d prompt parameters; best validation loss %.6f at epoch %d",
                best.parameter_count, best_loss, best_epoch)
    return TuningResult(prompts=best, best_epoch=best_epoch, history=history)


def save_prompts(prompts: PromptPair, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(prompts.to_dict(), f, indent=2)
    except OSError as exc:
        raise PipelineIOError(f"cannot write prompts {path}: {exc}") from exc


def load_prompts(path: str) -> PromptPair:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise PipelineIOError(f"cannot read prompts {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ContractError(f"prompt file {path} is not valid JSON: {exc.msg}") from exc
    return PromptPair.from_dict(data)
