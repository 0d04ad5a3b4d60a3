"""
Report files for a pipeline run.

    summary.json     config, aggregate, per-task metrics and pruning reports
    tasks.csv        one row per task
    importance.csv   one row per scored prompt unit per task
    shots.csv        shot sweep rows (when given)
    blocks.csv       block sweep rows (when given)
    timing.json      wall-clock seconds per phase per task

Everything except timing.json is a pure function of the config and seeds.
"""

import csv
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from .errors import ContractError, PipelineIOError
from .metrics import MetricsRecord
from .pipeline import PipelineResult, aggregate_records
from .prompt_models import ImportanceReport

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
TASKS_FILE = "tasks.csv"
IMPORTANCE_FILE = "importance.csv"
SHOTS_FILE = "shots.csv"
BLOCKS_FILE = "blocks.csv"
TIMING_FILE = "timing.json"


@dataclass
class RunReport:
    """The deterministic part of a run, as written to summary.json"""
    config: Dict[str, Any]
    records: List[MetricsRecord]
    importance: List[Optional[ImportanceReport]] = field(default_factory=list)

    @classmethod
    def from_result(cls, result: PipelineResult) -> "RunReport":
        records = [MetricsRecord.from_dict(o.metrics.to_dict(include_timing=False)) for o in result.outcomes]
        return cls(config=result.config.to_dict(), records=records,
                   importance=[o.importance for o in result.outcomes])

    @property
    def aggregate(self) -> Dict[str, Any]:
        return aggregate_records(self.records)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "aggregate": self.aggregate,
            "tasks": [r.to_dict(include_timing=False) for r in self.records],
            "importance": [None if r is None else r.to_dict() for r in self.importance],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunReport":
        return cls(
            config=dict(data["config"]),
            records=[MetricsRecord.from_dict(r) for r in data["tasks"]],
            importance=[None if r is None else ImportanceReport.from_dict(r) for r in data.get("importance", [])],
        )


def _write_csv(path: str, rows: Sequence[Dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()) if rows else [])
        writer.writeheader()
        writer.writerows(rows)


def _importance_rows(report: RunReport) -> List[Dict[str, Any]]:
    rows = []
    for record, imp in zip(report.records, report.importance):
        if imp is None:
            continue
        for kind, raw, z, mask in (("semantic", imp.semantic_raw, imp.semantic_z, imp.masks.semantic),
                                   ("feature", imp.feature_raw, imp.feature_z, imp.masks.feature)):
            for index, (score, norm, kept) in enumerate(zip(raw, z, mask)):
                rows.append({"seed": record.seed, "task_index": record.task_index, "kind": kind,
                             "index": index, "importance": score, "z": norm, "kept": int(kept)})
    return rows


def emit_report(result: PipelineResult, out_dir: str,
                shots: Optional[Sequence[Dict[str, Any]]] = None,
                blocks: Optional[Sequence[Dict[str, Any]]] = None) -> List[str]:
    """Write every report file into `out_dir`; returns the written paths"""
    if not result.outcomes:
        raise ContractError("no task records to report")
    report = RunReport.from_result(result)
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, SUMMARY_FILE)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        written.append(path)

        task_rows = [{"seed": r.seed, "task_index": r.task_index, "micro_f": r.micro_f, "macro_f": r.macro_f,
                      "parameter_count": r.parameter_count} for r in report.records]
        tables = [(TASKS_FILE, task_rows), (IMPORTANCE_FILE, _importance_rows(report))]
        if shots is not None:
            tables.append((SHOTS_FILE, list(shots)))
        if blocks is not None:
            tables.append((BLOCKS_FILE, list(blocks)))
        for name, rows in tables:
            path = os.path.join(out_dir, name)
            _write_csv(path, rows)
            written.append(path)

        path = os.path.join(out_dir, TIMING_FILE)
        with open(path, "w", encoding="utf-8") as f:
            json.dump([{"seed": o.metrics.seed, "task_index": o.metrics.task_index,
                        "phase_seconds": o.metrics.phase_seconds} for o in result.outcomes], f, indent=2)
        written.append(path)
    except OSError as exc:
        raise PipelineIOError(f"cannot write report into {out_dir}: {exc}") from exc
    logger.info("Wrote %d report files to %s", len(written), out_dir)
    return written


def load_report(out_dir: str) -> RunReport:
    path = os.path.join(out_dir, SUMMARY_FILE)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise PipelineIOError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ContractError(f"report {path} is not valid JSON: {exc.msg}") from exc
    return RunReport.from_dict(data)
