"""
Importance evaluation, threshold pruning and retuning of graph prompts.

Mask variables enter the forward pass multiplicatively: lambda_i scales
semantic token i and eta_j scales every feature prompt dim of block j. The
importance of a prompt unit is the mean absolute gradient of the per-pair
downstream loss with respect to its mask variable, evaluated at all-ones
masks. Units whose z-scored importance falls below the threshold are dropped
from the prompts altogether, and the survivors are retuned.
"""

import json
import logging
from typing import Dict, Optional, Tuple

import numpy as np

from . import autodiff as ad
from .errors import ContractError, DimensionError, PipelineIOError
from .prompt_models import (BlockPartition, FeaturePrompt, ImportanceReport, LabeledSet, MaskState, PromptPair,
                            SemanticPrompt)
from .prompting import PromptContext, PromptLeaves, TuningConfig, TuningResult, pair_losses, tune_prompts

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 0.6
DEFAULT_BETA = 0.4
DEFAULT_BLOCKS = 16
ZSCORE_FLOOR = 1e-12

STRATEGIES = ("importance", "random")


def _mask_gradients(ctx: PromptContext, prompts: PromptPair, support: LabeledSet, data: LabeledSet,
                    tau: float, partition: BlockPartition) -> Tuple[np.ndarray, np.ndarray]:
    """Per-pair |dL/d lambda| and |dL/d eta| at all-ones masks, shapes (m, tokens) and (m, blocks)"""
    if len(data) == 0:
        raise ContractError("importance needs at least one labeled pair")
    if partition.dim != prompts.feature.dims.size:
        raise DimensionError(
            f"block partition covers {partition.dim} dims, prompts keep {prompts.feature.dims.size}")
    leaves = PromptLeaves.of(prompts)
    leaves.semantic_mask = ad.parameter(np.ones(prompts.semantic.tokens.size), name="lambda")
    leaves.feature_mask = ad.parameter(np.ones(partition.blocks), name="eta")
    leaves.partition = partition
    losses = pair_losses(ctx, prompts, support, data, tau, leaves)

    semantic = np.zeros((len(data), prompts.semantic.tokens.size))
    feature = np.zeros((len(data), partition.blocks))
    for j in range(len(data)):
        grads = ad.backward(ad.tensor_sum(ad.take(losses, [j])))
        semantic[j] = np.abs(grads[leaves.semantic_mask])
        feature[j] = np.abs(grads[leaves.feature_mask])
    return semantic, feature


def semantic_importance(ctx: PromptContext, prompts: PromptPair, support: LabeledSet, data: LabeledSet,
                        tau: float) -> np.ndarray:
    """Mean absolute per-pair gradient of the loss with respect to each semantic mask entry"""
    partition = BlockPartition(blocks=1, dim=prompts.feature.dims.size)
    semantic, _ = _mask_gradients(ctx, prompts, support, data, tau, partition)
    return semantic.mean(axis=0)


def feature_importance(ctx: PromptContext, prompts: PromptPair, support: LabeledSet, data: LabeledSet,
                       tau: float, partition: BlockPartition) -> np.ndarray:
    """Mean absolute per-pair gradient of the loss with respect to each block mask entry"""
    _, feature = _mask_gradients(ctx, prompts, support, data, tau, partition)
    return feature.mean(axis=0)


def zscore(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size == 0:
        raise ContractError("cannot normalise an empty score vector")
    std = scores.std()
    if std < ZSCORE_FLOOR:
        return np.zeros_like(scores)
    return (scores - scores.mean()) / std


def _threshold(z: np.ndarray, cutoff: float, label: str) -> np.ndarray:
    mask = (np.asarray(z) >= cutoff).astype(np.int64)
    if mask.size and not mask.any():
        keep = int(np.argmax(z))
        logger.warning("Every %s entry fell below %.3f; keeping entry %d", label, cutoff, keep)
        mask[keep] = 1
    return mask


def threshold_masks(z_s: np.ndarray, z_f: np.ndarray, delta: float = DEFAULT_DELTA,
                    beta: float = DEFAULT_BETA) -> MaskState:
    """Keep entries whose z-score reaches the threshold; never drop every entry"""
    return MaskState(semantic=_threshold(z_s, delta, "semantic token"),
                     feature=_threshold(z_f, beta, "feature block"))


def random_masks(reference: MaskState, seed: int) -> MaskState:
    """Uniformly chosen masks keeping as many tokens and blocks as `reference`"""
    rng = np.random.default_rng([seed, 2])

    def pick(length: int, kept: int) -> np.ndarray:
        mask = np.zeros(length, dtype=np.int64)
        mask[rng.choice(length, size=kept, replace=False)] = 1
        return mask

    return MaskState(semantic=pick(reference.semantic.size, reference.retained_tokens),
                     feature=pick(reference.feature.size, reference.retained_blocks))


def apply_masks(prompts: PromptPair, masks: MaskState,
                partition: BlockPartition) -> Tuple[PromptPair, Dict[int, int], Dict[int, int]]:
    """Physically drop pruned tokens and dims.

    Returns the compact prompts plus maps from original view index and
    original hidden dim to their position in the compact vectors.
    """
    tokens = prompts.semantic.tokens
    dims = prompts.feature.dims
    if masks.semantic.size != tokens.size:
        raise DimensionError(f"{masks.semantic.size} semantic mask entries for {tokens.size} tokens")
    if masks.feature.size != partition.blocks or partition.dim != dims.size:
        raise DimensionError(
            f"{masks.feature.size} block mask entries for a {partition.blocks}-block partition of {dims.size} dims")
    keep_tokens = np.flatnonzero(masks.semantic)
    keep_dims = np.flatnonzero(partition.expand(masks.feature) > 0)
    compact = PromptPair(
        feature=FeaturePrompt(values=prompts.feature.values[keep_dims], dims=dims[keep_dims],
                              hidden_dim=prompts.hidden_dim),
        semantic=SemanticPrompt(values=prompts.semantic.values[keep_tokens], tokens=tokens[keep_tokens],
                                view_count=prompts.view_count),
        provenance=dict(prompts.provenance),
    )
    semantic_map = {int(tokens[i]): pos for pos, i in enumerate(keep_tokens)}
    feature_map = {int(dims[i]): pos for pos, i in enumerate(keep_dims)}
    return compact, semantic_map, feature_map


def masked_downstream_loss(ctx: PromptContext, prompts: PromptPair, masks: MaskState, partition: BlockPartition,
                           support: LabeledSet, data: LabeledSet, tau: float) -> float:
    """Downstream loss with pruned units zeroed by their masks instead of removed"""
    leaves = PromptLeaves.of(prompts)
    leaves.semantic_mask = ad.constant(masks.semantic.astype(np.float64))
    leaves.feature_mask = ad.constant(masks.feature.astype(np.float64))
    leaves.partition = partition
    return ad.tensor_sum(pair_losses(ctx, prompts, support, data, tau, leaves)).item()


def retune(ctx: PromptContext, pruned: PromptPair, support: LabeledSet, config: TuningConfig,
           validation: Optional[LabeledSet] = None, epochs: Optional[int] = None) -> TuningResult:
    """Continue tuning the surviving prompt entries; defaults to half the tuning epochs"""
    budget = config.epochs // 2 if epochs is None else epochs
    settings = TuningConfig(tau=config.tau, epochs=budget, learning_rate=config.learning_rate, seed=config.seed)
    logger.info("Retuning %d surviving prompt parameters for %d epochs", pruned.parameter_count, budget)
    result = tune_prompts(ctx, support, settings, validation=validation, initial=pruned)
    result.prompts.provenance["phase"] = "retune"
    return result


def evaluate_and_prune(ctx: PromptContext, prompts: PromptPair, support: LabeledSet, data: LabeledSet,
                       tau: float, delta: float = DEFAULT_DELTA, beta: float = DEFAULT_BETA,
                       blocks: int = DEFAULT_BLOCKS, seed: int = 0, prune_semantic: bool = True,
                       prune_feature: bool = True,
                       strategy: str = "importance") -> Tuple[ImportanceReport, PromptPair]:
    """Score every prompt unit, threshold the z-scores and compact the prompts.

    `data` is the distribution the importance expectation runs over; the
    pipeline passes support plus validation pairs. With strategy "random"
    the importance masks only fix how many units survive, and which ones is
    drawn uniformly from `seed`.
    """
    if strategy not in STRATEGIES:
        raise ContractError(f"unknown pruning strategy {strategy!r}")
    partition = BlockPartition(blocks=blocks, dim=prompts.feature.dims.size)
    semantic, feature = _mask_gradients(ctx, prompts, support, data, tau, partition)
    raw_s, raw_f = semantic.mean(axis=0), feature.mean(axis=0)
    z_s, z_f = zscore(raw_s), zscore(raw_f)
    masks = threshold_masks(z_s, z_f, delta, beta)
    masks = MaskState(semantic=masks.semantic if prune_semantic else np.ones_like(masks.semantic),
                      feature=masks.feature if prune_feature else np.ones_like(masks.feature))
    if strategy == "random":
        masks = random_masks(masks, seed)
    pruned, semantic_map, feature_map = apply_masks(prompts, masks, partition)
    pruned.provenance["pruning"] = strategy

    report = ImportanceReport(
        semantic_raw=[float(x) for x in raw_s],
        feature_raw=[float(x) for x in raw_f],
        semantic_z=[float(x) for x in z_s],
        feature_z=[float(x) for x in z_f],
        delta=float(delta),
        beta=float(beta),
        blocks=blocks,
        masks=masks,
        semantic_map=semantic_map,
        feature_map=feature_map,
        parameters_before=prompts.parameter_count,
        parameters_after=pruned.parameter_count,
        pair_count=len(data),
        seed=seed,
        strategy=strategy,
    )
    logger.info("Pruning kept %d/%d semantic tokens and %d/%d feature blocks (%d -> %d parameters)",
                masks.retained_tokens, masks.semantic.size, masks.retained_blocks, masks.feature.size,
                report.parameters_before, report.parameters_after)
    return report, pruned


def save_importance_report(report: ImportanceReport, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, indent=2)
    except OSError as exc:
        raise PipelineIOError(f"cannot write pruning report {path}: {exc}") from exc


def load_importance_report(path: str) -> ImportanceReport:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return ImportanceReport.from_dict(json.load(f))
    except OSError as exc:
        raise PipelineIOError(f"cannot read pruning report {path}: {exc}") from exc
    except (json.JSONDecodeError, KeyError) as exc:
        raise ContractError(f"pruning report {path} is malformed: {exc}") from exc
