"""k-shot node classification tasks drawn from a graph's labeled target nodes."""

import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, List

import numpy as np

from .errors import ContractError, PipelineIOError, TaskConstructionError
from .graph_models import HeteroGraph
from .prompt_models import LabeledSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TaskSpec:
    """One episode: k support and k validation nodes per class, every other labeled node is query"""
    k: int
    support: LabeledSet
    validation: LabeledSet
    query: LabeledSet
    seed: int
    index: int = 0

    def __post_init__(self):
        for split in ("support", "validation"):
            counts = np.bincount(getattr(self, split).class_positions(), minlength=len(self.classes))
            if np.any(counts != self.k):
                raise TaskConstructionError(f"{split} must hold exactly {self.k} nodes per class")
        seen = [set(s.nodes.tolist()) for s in (self.support, self.validation, self.query)]
        if seen[0] & seen[1] or seen[0] & seen[2] or seen[1] & seen[2]:
            raise TaskConstructionError("task splits overlap")

    @property
    def classes(self):
        return self.support.classes

    @property
    def importance_data(self) -> LabeledSet:
        """Pairs the pruning importance expectation runs over"""
        return self.support.concat(self.validation)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "seed": self.seed,
            "k": self.k,
            "support": self.support.to_dict(),
            "validation": self.validation.to_dict(),
            "query": self.query.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TaskSpec":
        return cls(
            k=int(data["k"]),
            support=LabeledSet.from_dict(data["support"]),
            validation=LabeledSet.from_dict(data["validation"]),
            query=LabeledSet.from_dict(data["query"]),
            seed=int(data["seed"]),
            index=int(data.get("index", 0)),
        )


def sample_task(g: HeteroGraph, k: int, seed: int, index: int = 0) -> TaskSpec:
    if k < 1:
        raise TaskConstructionError(f"shots per class must be positive, got {k}")
    grouped = g.labeled_nodes()
    if len(grouped) < 2:
        raise TaskConstructionError("need at least two classes to build a task")
    rng = np.random.default_rng([seed, index])
    splits: Dict[str, List[tuple]] = {"support": [], "validation": [], "query": []}
    for label in sorted(grouped):
        members = np.array(grouped[label], dtype=np.int64)
        if members.size < 2 * k + 1:
            raise TaskConstructionError(
                f"class {g.class_names[label]!r} has {members.size} labeled nodes, needs {2 * k + 1}")
        order = rng.permutation(members)
        splits["support"] += [(int(v), label) for v in order[:k]]
        splits["validation"] += [(int(v), label) for v in order[k:2 * k]]
        splits["query"] += [(int(v), label) for v in np.sort(order[2 * k:])]

    classes = tuple(sorted(grouped))

    def labeled(pairs: List[tuple]) -> LabeledSet:
        return LabeledSet(nodes=[p[0] for p in pairs], labels=[p[1] for p in pairs], classes=classes)

    return TaskSpec(k=k, support=labeled(splits["support"]), validation=labeled(splits["validation"]),
                    query=labeled(splits["query"]), seed=seed, index=index)


def sample_tasks(g: HeteroGraph, k: int, n_tasks: int, seed: int) -> List[TaskSpec]:
    """Deterministic task list; task i depends only on (seed, i)"""
    if n_tasks < 1:
        raise ContractError(f"need at least one task, got {n_tasks}")
    tasks = [sample_task(g, k, seed, index) for index in range(n_tasks)]
    logger.info("Sampled %d %d-shot tasks (seed %d, %d query nodes each)",
                n_tasks, k, seed, len(tasks[0].query))
    return tasks


def save_tasks(tasks: List[TaskSpec], path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"tasks": [t.to_dict() for t in tasks]}, f, indent=2)
    except OSError as exc:
        raise PipelineIOError(f"cannot write tasks {path}: {exc}") from exc


def load_tasks(path: str) -> List[TaskSpec]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise PipelineIOError(f"cannot read tasks {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ContractError(f"task file {path} is not valid JSON: {exc.msg}") from exc
    if isinstance(data, dict) and "tasks" in data:
        data = data["tasks"]
    elif isinstance(data, dict):
        data = [data]
    return [TaskSpec.from_dict(entry) for entry in data]
