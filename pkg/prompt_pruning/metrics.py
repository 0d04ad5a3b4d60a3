"""Micro-F / Macro-F over a fixed class set (thin sklearn wrappers)."""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix, f1_score

from .errors import ContractError


@dataclass
class MetricsRecord:
    micro_f: float
    macro_f: float
    confusion: List[List[int]]          # rows are true classes, columns predictions, both in class order
    classes: List[int]
    parameter_count: int = 0
    phase_seconds: Dict[str, float] = field(default_factory=dict)
    task_index: Optional[int] = None
    seed: Optional[int] = None

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        data = {
            "task_index": self.task_index,
            "seed": self.seed,
            "micro_f": self.micro_f,
            "macro_f": self.macro_f,
            "parameter_count": self.parameter_count,
            "classes": self.classes,
            "confusion": self.confusion,
        }
        if include_timing:
            data["phase_seconds"] = self.phase_seconds
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricsRecord":
        return cls(
            micro_f=float(data["micro_f"]),
            macro_f=float(data["macro_f"]),
            confusion=[[int(x) for x in row] for row in data["confusion"]],
            classes=[int(c) for c in data["classes"]],
            parameter_count=int(data.get("parameter_count", 0)),
            phase_seconds={k: float(v) for k, v in data.get("phase_seconds", {}).items()},
            task_index=data.get("task_index"),
            seed=data.get("seed"),
        )


def compute_metrics(predictions: Iterable[int], truths: Iterable[int], classes: Sequence[int],
                    parameter_count: int = 0) -> MetricsRecord:
    """Micro-F (accuracy for single-label data) and Macro-F; absent classes score F1 = 0"""
    y_pred = np.asarray(list(predictions), dtype=np.int64)
    y_true = np.asarray(list(truths), dtype=np.int64)
    labels = sorted(int(c) for c in classes)
    if y_pred.shape != y_true.shape:
        raise ContractError(f"{y_pred.size} predictions for {y_true.size} truths")
    if y_true.size == 0:
        raise ContractError("cannot score an empty prediction set")
    if len(labels) == 0:
        raise ContractError("class set is empty")
    outside = (set(y_pred.tolist()) | set(y_true.tolist())) - set(labels)
    if outside:
        raise ContractError(f"labels {sorted(outside)} are outside the class set {labels}")

    micro = float(f1_score(y_true, y_pred, labels=labels, average="micro", zero_division=0))
    macro = float(f1_score(y_true, y_pred, labels=labels, average="macro", zero_division=0))
    cm = confusion_matrix(y_true, y_pred, labels=labels)
    return MetricsRecord(micro_f=micro, macro_f=macro, confusion=cm.astype(int).tolist(), classes=labels,
                         parameter_count=parameter_count)
