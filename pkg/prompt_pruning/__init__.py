"""
Heterogeneous Graph Prompt Pruning

Link-prediction pre-training of a GCN encoder, few-shot prompt tuning over
heterogeneous graph templates, gradient-sensitivity importance pruning of the
prompts, and retuning of the survivors, with a deterministic k-shot
evaluation harness.
"""

from .errors import (PromptPipelineError, ValidationError, GraphParseError, GraphValidationError,
                     HeterogeneityError, DimensionError, ContractError, EmptyReadoutError, MissingClassError,
                     PartitionError, NoNegativeError, TaskConstructionError, SpecError, ConfigError,
                     NodeIndexError, CheckpointError, NumericError, DegenerateVectorError, TrainingError,
                     PipelineIOError)
from .autodiff import Tensor, Function, Tape, backward, central_difference
from .graph_models import HeteroGraph, HomogeneousView, SubgraphSet, EgoSubgraph
from .graph_template import apply_template, ego_subgraph, ego_membership
from .graph_io import load_graph, save_graph
from .encoder import (EncoderInit, GcnParams, NodeEmbeddings, init_params, encode, readout_sum,
                      save_checkpoint, load_checkpoint)
from .pretrain import Triplet, PretrainConfig, PretrainResult, sample_triplets, pretrain_loss, run_pretrain
from .prompt_models import (FeaturePrompt, SemanticPrompt, PromptPair, LabeledSet, Prototypes, BlockPartition,
                            MaskState, ImportanceReport)
from .prompting import (PromptContext, build_context, prompted_subgraph_embedding, class_prototypes, predict,
                        predict_nodes, downstream_loss, TuningConfig, tune_prompts, save_prompts, load_prompts)
from .pruning import (semantic_importance, feature_importance, zscore, threshold_masks, apply_masks,
                      random_masks, masked_downstream_loss, retune, evaluate_and_prune)
from .tasks import TaskSpec, sample_tasks, save_tasks, load_tasks
from .metrics import MetricsRecord, compute_metrics
from .synthetic import SynthSpec, synth_graph, load_synth_spec
from .run_config import Variant, RunConfig, load_run_config, create_config_file
from .pipeline import PromptPipeline, PipelineResult, run_pipeline, run_shot_sweep, run_block_sweep
from .report import RunReport, emit_report, load_report

__version__ = "0.3.0"
__author__ = "Graph Prompt Pruning Team"

__all__ = [
    "PromptPipelineError",
    "ValidationError",
    "GraphParseError",
    "GraphValidationError",
    "HeterogeneityError",
    "DimensionError",
    "ContractError",
    "EmptyReadoutError",
    "MissingClassError",
    "PartitionError",
    "NoNegativeError",
    "TaskConstructionError",
    "SpecError",
    "ConfigError",
    "NodeIndexError",
    "CheckpointError",
    "NumericError",
    "DegenerateVectorError",
    "TrainingError",
    "PipelineIOError",
    "Tensor",
    "Function",
    "Tape",
    "backward",
    "central_difference",
    "HeteroGraph",
    "HomogeneousView",
    "SubgraphSet",
    "EgoSubgraph",
    "apply_template",
    "ego_subgraph",
    "ego_membership",
    "load_graph",
    "save_graph",
    "EncoderInit",
    "GcnParams",
    "NodeEmbeddings",
    "init_params",
    "encode",
    "readout_sum",
    "save_checkpoint",
    "load_checkpoint",
    "Triplet",
    "PretrainConfig",
    "PretrainResult",
    "sample_triplets",
    "pretrain_loss",
    "run_pretrain",
    "FeaturePrompt",
    "SemanticPrompt",
    "PromptPair",
    "LabeledSet",
    "Prototypes",
    "BlockPartition",
    "MaskState",
    "ImportanceReport",
    "PromptContext",
    "build_context",
    "prompted_subgraph_embedding",
    "class_prototypes",
    "predict",
    "predict_nodes",
    "downstream_loss",
    "TuningConfig",
    "tune_prompts",
    "save_prompts",
    "load_prompts",
    "semantic_importance",
    "feature_importance",
    "zscore",
    "threshold_masks",
    "apply_masks",
    "random_masks",
    "masked_downstream_loss",
    "retune",
    "evaluate_and_prune",
    "TaskSpec",
    "sample_tasks",
    "save_tasks",
    "load_tasks",
    "MetricsRecord",
    "compute_metrics",
    "SynthSpec",
    "synth_graph",
    "load_synth_spec",
    "Variant",
    "RunConfig",
    "load_run_config",
    "create_config_file",
    "PromptPipeline",
    "PipelineResult",
    "run_pipeline",
    "run_shot_sweep",
    "run_block_sweep",
    "RunReport",
    "emit_report",
    "load_report",
]
