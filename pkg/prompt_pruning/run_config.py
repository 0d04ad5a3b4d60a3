"""Run configuration: every phase hyperparameter plus the pipeline variant."""

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any, Dict, List, Optional

from .encoder import EncoderInit
from .errors import ConfigError, PipelineIOError
from .pretrain import PretrainConfig
from .prompting import TuningConfig

logger = logging.getLogger(__name__)


class Variant(Enum):
    """Which phases a run executes"""
    FULL = "full"           # tune, importance pruning, retune
    WO_REP = "wo_rep"       # tune only
    WO_R = "wo_r"           # tune, importance pruning
    WO_EP = "wo_ep"         # tune, retune the unpruned prompts
    RANDOM = "random"       # tune, random pruning with matched counts, retune
    PS_ONLY = "ps_only"     # prune semantic tokens only
    PF_ONLY = "pf_only"     # prune feature blocks only

    @property
    def prunes(self) -> bool:
        return self not in (Variant.WO_REP, Variant.WO_EP)

    @property
    def retunes(self) -> bool:
        return self not in (Variant.WO_REP, Variant.WO_R)


@dataclass
class RunConfig:
    variant: str = Variant.FULL.value
    tau: float = 0.5
    pretrain_epochs: int = 100
    pretrain_lr: float = 1e-2
    triplet_count: int = 256
    holdout_fraction: float = 0.1
    negatives: int = 1
    tune_epochs: int = 100
    prompt_lr: float = 1e-2
    retune_epochs: Optional[int] = None
    hops: int = 1
    blocks: int = 16
    delta: float = 0.6
    beta: float = 0.4
    hidden_dim: int = 64
    encoder_init: str = EncoderInit.GLOROT.value
    shots: int = 1
    n_tasks: int = 10
    seeds: List[int] = field(default_factory=lambda: [0])
    workers: int = 1
    graph: Optional[str] = None
    checkpoint: Optional[str] = None
    synth: Optional[Dict[str, Any]] = None
    graph_seed: int = 0
    show_progress: bool = False

    @property
    def variant_flag(self) -> Variant:
        return Variant(self.variant)

    @property
    def effective_retune_epochs(self) -> int:
        return self.tune_epochs // 2 if self.retune_epochs is None else self.retune_epochs

    def validate(self):
        try:
            Variant(self.variant)
        except ValueError as exc:
            choices = ", ".join(v.value for v in Variant)
            raise ConfigError(f"unknown variant {self.variant!r} (choose from {choices})") from exc
        try:
            EncoderInit(self.encoder_init)
        except ValueError as exc:
            raise ConfigError(f"unknown encoder init {self.encoder_init!r}") from exc
        if not self.tau > 0:
            raise ConfigError(f"temperature must be positive, got {self.tau}")
        for name in ("pretrain_epochs", "tune_epochs", "hops"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.retune_epochs is not None and self.retune_epochs < 0:
            raise ConfigError("retune_epochs must be non-negative")
        for name in ("pretrain_lr", "prompt_lr"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("blocks", "hidden_dim", "shots", "n_tasks", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.hidden_dim % self.blocks != 0:
            raise ConfigError(f"{self.blocks} blocks do not evenly divide hidden dim {self.hidden_dim}")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if self.graph is not None and self.synth is not None:
            raise ConfigError("set either graph or synth, not both")

    def pretrain_config(self, seed: int) -> PretrainConfig:
        return PretrainConfig(tau=self.tau, epochs=self.pretrain_epochs, learning_rate=self.pretrain_lr,
                              seed=seed, negatives=self.negatives, hops=self.hops,
                              triplet_count=self.triplet_count, holdout_fraction=self.holdout_fraction,
                              hidden_dim=self.hidden_dim, init=self.encoder_init)

    def tuning_config(self, seed: int) -> TuningConfig:
        return TuningConfig(tau=self.tau, epochs=self.tune_epochs, learning_rate=self.prompt_lr, seed=seed)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            config = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        config.seeds = [int(s) for s in config.seeds]
        config.validate()
        return config


def load_run_config(path: str) -> RunConfig:
    """Read and validate a run configuration file"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise PipelineIOError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return RunConfig.from_dict(data)


def create_config_file(path: str = "run_config.json", config: Optional[RunConfig] = None) -> None:
    """Write a configuration file holding the defaults"""
    document = (config or RunConfig()).to_dict()
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, indent=2)
    except OSError as exc:
        raise PipelineIOError(f"cannot write config {path}: {exc}") from exc
    logger.info("Wrote configuration file %s", path)
