"""
End-to-end experiment driver.

For every seed: obtain encoder weights (checkpoint, fresh init, or
pre-training), freeze the embeddings, sample k-shot tasks, then run the
variant's phases on each task and score the query set.
"""

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .encoder import GcnParams, encode, init_params, load_checkpoint
from .errors import PromptPipelineError
from .graph_io import load_graph
from .graph_models import HeteroGraph
from .metrics import MetricsRecord, compute_metrics
from .pretrain import run_pretrain
from .prompt_models import ImportanceReport, PromptPair
from .prompting import PromptContext, build_context, predict_nodes, tune_prompts
from .pruning import evaluate_and_prune, retune
from .run_config import RunConfig, Variant
from .synthetic import SynthSpec, synth_graph
from .tasks import TaskSpec, sample_tasks

logger = logging.getLogger(__name__)

DEFAULT_SHOT_SWEEP = (1, 2, 3, 4, 5)
DEFAULT_BLOCK_SWEEP = (4, 8, 16)


@dataclass
class TaskOutcome:
    task: TaskSpec
    metrics: MetricsRecord
    prompts: PromptPair
    importance: Optional[ImportanceReport] = None


@dataclass
class PipelineResult:
    config: RunConfig
    outcomes: List[TaskOutcome] = field(default_factory=list)

    @property
    def records(self) -> List[MetricsRecord]:
        return [o.metrics for o in self.outcomes]

    @property
    def aggregate(self) -> Dict[str, Any]:
        return aggregate_records(self.records)


def aggregate_records(records: Sequence[MetricsRecord]) -> Dict[str, Any]:
    """Mean and population std of the task metrics, in record order"""
    micro = np.array([r.micro_f for r in records])
    macro = np.array([r.macro_f for r in records])
    params = np.array([r.parameter_count for r in records], dtype=np.float64)
    return {
        "tasks": len(records),
        "micro_f_mean": float(micro.mean()) if micro.size else 0.0,
        "micro_f_std": float(micro.std()) if micro.size else 0.0,
        "macro_f_mean": float(macro.mean()) if macro.size else 0.0,
        "macro_f_std": float(macro.std()) if macro.size else 0.0,
        "parameter_count_mean": float(params.mean()) if params.size else 0.0,
    }


def resolve_graph(config: RunConfig) -> HeteroGraph:
    """The graph file named in the config, or a generated one"""
    if config.graph is not None:
        return load_graph(config.graph)
    return synth_graph(SynthSpec.from_dict(dict(config.synth or {})), seed=config.graph_seed)


class PromptPipeline:
    """Runs one configuration over a graph and records every phase it executes"""

    def __init__(self, graph: HeteroGraph, config: RunConfig,
                 contexts: Optional[Dict[int, PromptContext]] = None):
        config.validate()
        self.graph = graph
        self.config = config
        self.contexts: Dict[int, PromptContext] = {} if contexts is None else contexts
        self.audit_log: List[Tuple[int, Optional[int], str]] = []
        self._lock = threading.Lock()

    @contextmanager
    def _phase(self, name: str, seed: int, task_index: Optional[int] = None,
               timings: Optional[Dict[str, float]] = None) -> Iterator[None]:
        with self._lock:
            self.audit_log.append((seed, task_index, name))
        started = time.perf_counter()
        try:
            yield
        except PromptPipelineError as exc:
            raise exc.with_phase(name)
        finally:
            if timings is not None:
                timings[name] = timings.get(name, 0.0) + time.perf_counter() - started

    def phases_run(self) -> List[str]:
        return [phase for _, _, phase in self.audit_log]

    def encoder_params(self, seed: int) -> GcnParams:
        config = self.config
        with self._phase("pretrain", seed):
            if config.checkpoint is not None:
                return load_checkpoint(config.checkpoint)
            if config.pretrain_epochs == 0:
                return init_params(self.graph.feature_dim, config.hidden_dim, seed=seed,
                                   scheme=config.encoder_init)
            return run_pretrain(self.graph, config.pretrain_config(seed)).params

    def context_for(self, seed: int) -> PromptContext:
        if seed not in self.contexts:
            params = self.encoder_params(seed)
            self.contexts[seed] = build_context(self.graph, encode(self.graph, params), self.config.hops)
        return self.contexts[seed]

    def run_task(self, ctx: PromptContext, task: TaskSpec, seed: int) -> TaskOutcome:
        config = self.config
        variant = config.variant_flag
        tuning = config.tuning_config(seed)
        timings: Dict[str, float] = {}
        importance = None

        with self._phase("tune", seed, task.index, timings):
            prompts = tune_prompts(ctx, task.support, tuning, validation=task.validation).prompts
        if variant.prunes:
            with self._phase("prune", seed, task.index, timings):
                importance, prompts = evaluate_and_prune(
                    ctx, prompts, task.support, task.importance_data, config.tau,
                    delta=config.delta, beta=config.beta, blocks=config.blocks,
                    seed=seed * 10_000 + task.index,
                    prune_semantic=variant is not Variant.PF_ONLY,
                    prune_feature=variant is not Variant.PS_ONLY,
                    strategy="random" if variant is Variant.RANDOM else "importance")
        if variant.retunes:
            with self._phase("retune", seed, task.index, timings):
                prompts = retune(ctx, prompts, task.support, tuning, validation=task.validation,
                                 epochs=config.effective_retune_epochs).prompts
        with self._phase("eval", seed, task.index, timings):
            predictions = predict_nodes(ctx, prompts, task.support, task.query.nodes)
            metrics = compute_metrics(predictions, task.query.labels, task.classes,
                                      parameter_count=prompts.parameter_count)
        metrics.phase_seconds = timings
        metrics.task_index = task.index
        metrics.seed = seed
        logger.debug("seed %d task %d: micro %.4f macro %.4f (%d prompt parameters)",
                     seed, task.index, metrics.micro_f, metrics.macro_f, metrics.parameter_count)
        return TaskOutcome(task=task, metrics=metrics, prompts=prompts, importance=importance)

    def run_tasks(self, ctx: PromptContext, tasks: Sequence[TaskSpec], seed: int) -> List[TaskOutcome]:
        """Run tasks concurrently; outcomes come back in task order"""
        workers = min(self.config.workers, len(tasks))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(lambda t: self.run_task(ctx, t, seed), tasks)
            return list(tqdm(results, total=len(tasks), desc=f"seed {seed}",
                             disable=not self.config.show_progress))

    def run(self) -> PipelineResult:
        config = self.config
        result = PipelineResult(config=config)
        logger.info("Running variant %s over %d seed(s) x %d %d-shot task(s)",
                    config.variant, len(config.seeds), config.n_tasks, config.shots)
        for seed in config.seeds:
            ctx = self.context_for(seed)
            with self._phase("tasks", seed):
                tasks = sample_tasks(self.graph, config.shots, config.n_tasks, seed)
            result.outcomes.extend(self.run_tasks(ctx, tasks, seed))
        summary = result.aggregate
        logger.info("Micro-F %.4f ± %.4f, Macro-F %.4f ± %.4f", summary["micro_f_mean"],
                    summary["micro_f_std"], summary["macro_f_mean"], summary["macro_f_std"])
        return result

    def get_statistics(self) -> Dict[str, Any]:
        counts: Dict[str, int] = {}
        for phase in self.phases_run():
            counts[phase] = counts.get(phase, 0) + 1
        return {"variant": self.config.variant, "phase_counts": counts, "contexts": len(self.contexts)}


def run_pipeline(g: HeteroGraph, config: RunConfig) -> PipelineResult:
    return PromptPipeline(g, config).run()


def run_shot_sweep(g: HeteroGraph, config: RunConfig,
                   shots: Sequence[int] = DEFAULT_SHOT_SWEEP) -> List[Dict[str, Any]]:
    """Aggregate metrics for each shot count, sharing frozen embeddings across the sweep"""
    contexts: Dict[int, PromptContext] = {}
    rows = []
    for k in shots:
        result = PromptPipeline(g, replace(config, shots=k), contexts=contexts).run()
        rows.append({"k": k, **result.aggregate})
    return rows


def run_block_sweep(g: HeteroGraph, config: RunConfig,
                    blocks: Sequence[int] = DEFAULT_BLOCK_SWEEP) -> List[Dict[str, Any]]:
    """Per-block importance and survival rates for each block count"""
    contexts: Dict[int, PromptContext] = {}
    rows = []
    for t in blocks:
        result = PromptPipeline(g, replace(config, blocks=t), contexts=contexts).run()
        reports = [o.importance for o in result.outcomes if o.importance is not None]
        summary = result.aggregate
        for j in range(t):
            rows.append({
                "blocks": t,
                "block": j,
                "importance_mean": float(np.mean([r.feature_raw[j] for r in reports])) if reports else 0.0,
                "z_mean": float(np.mean([r.feature_z[j] for r in reports])) if reports else 0.0,
                "kept_fraction": float(np.mean([r.masks.feature[j] for r in reports])) if reports else 1.0,
                "micro_f_mean": summary["micro_f_mean"],
                "parameter_count_mean": summary["parameter_count_mean"],
            })
    return rows
