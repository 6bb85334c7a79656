"""Benchmark specs, task catalog, run orchestration, and leaderboards.

A benchmark spec carries six elements: task name, scenario, task type,
dataset, model, and metrics. Specs are content-addressed in a file
registry; runs dispatch to the recommendation, completion, or
classification harness by task type and persist their results.
"""

from __future__ import annotations

import html
import io
import csv
import json
import math
import random
import re
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from filelock import FileLock

from . import botdetect, linkpred, tseries
from .errors import (
    AdapterMissingError,
    BenchmarkRunError,
    ChecksumMismatchError,
    EcoperfError,
    SpecValidationError,
    TaskNotImplementedError,
    UnknownSpecError,
)
from .graph import read_edge_list
from .util import canonical_json, json_bytes, sha256_bytes, sha256_file

SCENARIOS = (
    "enterprise_governance",
    "software_development",
    "community_operations",
    "ecosystem_strategy",
)

TASK_TYPES = (
    "regression",
    "classification",
    "recommendation",
    "ranking",
    "network_building",
    "anomaly_detection",
)

# Metric vocabulary per task type; registration rejects anything else.
TASK_TYPE_METRICS = {
    "regression": ("nmse", "nrmse", "nmae"),
    "classification": ("accuracy", "precision", "recall", "f1", "auc"),
    "recommendation": ("auc", "time_s"),
    "ranking": ("rank_correlation", "top_k_overlap"),
    "network_building": ("node_count", "edge_count", "total_weight"),
    "anomaly_detection": ("precision", "recall", "flag_count"),
}

_CHECKSUM_RE = re.compile(r"^sha256:[0-9a-f]{64}$")


@dataclass(frozen=True)
class DatasetRef:
    path: str
    format: str
    checksum: str  # "sha256:<hex>"


@dataclass(frozen=True)
class ModelRef:
    adapter: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BenchmarkSpec:
    """The six-element benchmark descriptor."""

    task_name: str
    scenario: str
    task_type: str
    dataset: DatasetRef
    model: ModelRef
    metrics: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "task_name": self.task_name,
            "scenario": self.scenario,
            "task_type": self.task_type,
            "dataset": {
                "path": self.dataset.path,
                "format": self.dataset.format,
                "checksum": self.dataset.checksum,
            },
            "model": {"adapter": self.model.adapter, "params": dict(self.model.params)},
            "metrics": list(self.metrics),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "BenchmarkSpec":
        dataset = obj.get("dataset") or {}
        model = obj.get("model") or {}
        return cls(
            task_name=str(obj.get("task_name", "")),
            scenario=str(obj.get("scenario", "")),
            task_type=str(obj.get("task_type", "")),
            dataset=DatasetRef(
                path=str(dataset.get("path", "")),
                format=str(dataset.get("format", "")),
                checksum=str(dataset.get("checksum", "")),
            ),
            model=ModelRef(adapter=str(model.get("adapter", "")), params=dict(model.get("params") or {})),
            metrics=tuple(obj.get("metrics") or ()),
        )

    def violations(self) -> list[str]:
        """Every broken six-element rule, reported together."""
        problems = []
        if not self.task_name.strip():
            problems.append("task_name: empty")
        if self.scenario not in SCENARIOS:
            problems.append(f"scenario: {self.scenario!r} not one of {list(SCENARIOS)}")
        if self.task_type not in TASK_TYPES:
            problems.append(f"task_type: {self.task_type!r} not one of {list(TASK_TYPES)}")
        if not self.dataset.path.strip():
            problems.append("dataset.path: empty")
        if not self.dataset.format.strip():
            problems.append("dataset.format: empty")
        if not _CHECKSUM_RE.match(self.dataset.checksum):
            problems.append("dataset.checksum: expected 'sha256:<64 hex digits>'")
        if not self.model.adapter.strip():
            problems.append("model.adapter: empty")
        if not self.metrics:
            problems.append("metrics: empty")
        elif self.task_type in TASK_TYPE_METRICS:
            allowed = set(TASK_TYPE_METRICS[self.task_type])
            for metric in self.metrics:
                if metric not in allowed:
                    problems.append(
                        f"metrics: {metric!r} invalid for {self.task_type}; allowed: {sorted(allowed)}"
                    )
        return problems


def dataset_checksum(path: str | Path) -> str:
    return "sha256:" + sha256_file(path)


# -- task catalog ---------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    key: str
    task_name: str
    data_type: str
    problem_type: str
    scene: str
    research_field: str
    implemented: bool

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "task_name": self.task_name,
            "data_type": self.data_type,
            "problem_type": self.problem_type,
            "scene": self.scene,
            "research_field": self.research_field,
            "implemented": self.implemented,
        }


TASK_CATALOG: tuple[CatalogEntry, ...] = (
    CatalogEntry("behavior_data_completion_prediction", "Behavior Data Completion and Prediction",
                 "time_series", "regression", "enterprise_governance", "data_flow", True),
    CatalogEntry("oss_bot_identification", "OSS Bot Identification and Classification",
                 "time_series", "classification", "software_development", "data_flow", True),
    CatalogEntry("community_sentiment_classification", "Community Sentiment Classification",
                 "text", "classification", "community_operations", "nlp", False),
    CatalogEntry("supply_chain_risk_prediction", "Software Supply Chain Risk Prediction",
                 "time_series", "regression", "ecosystem_strategy", "complex_network", False),
    CatalogEntry("project_influence_ranking", "Project Influence Ranking",
                 "graph_network", "ranking", "community_operations", "complex_network", False),
    CatalogEntry("archived_project_prediction", "Archived Project Prediction",
                 "time_series", "regression", "enterprise_governance", "web_mining", False),
    CatalogEntry("network_metric_prediction", "Network Metric Prediction",
                 "graph_network", "regression", "enterprise_governance", "data_flow", False),
    CatalogEntry("community_anomaly_detection", "Community Anomalous Detection",
                 "time_series", "anomaly_detection", "enterprise_governance", "complex_network", False),
    CatalogEntry("project_recommendation", "Project Recommendation",
                 "graph_network", "recommendation", "community_operations", "recommendation", True),
)


def catalog_entry_for(task_name: str) -> CatalogEntry | None:
    needle = task_name.strip().lower()
    for entry in TASK_CATALOG:
        if needle in (entry.key, entry.task_name.lower()):
            return entry
    return None


# -- registry and runs -----------------------------------------------------------


@dataclass
class RunResult:
    spec_id: str
    task_name: str
    metrics: dict[str, float]
    wall_time_seconds: float
    seed: int
    artifacts: dict[str, str]
    created_at: str

    def to_dict(self) -> dict:
        return {
            "spec_id": self.spec_id,
            "task_name": self.task_name,
            "metrics": self.metrics,
            "wall_time_seconds": self.wall_time_seconds,
            "seed": self.seed,
            "artifacts": self.artifacts,
            "created_at": self.created_at,
        }


class BenchmarkRegistry:
    """Content-addressed spec files plus per-spec run records.

    Layout: ``<root>/specs/<sha256>.json`` and
    ``<root>/runs/<sha256>/<timestamp>.json``. Writes go through a lock
    file; reads are lock-free.
    """

    def __init__(self, root: str | Path, create: bool = True):
        self.root = Path(root)
        self.specs_dir = self.root / "specs"
        self.runs_dir = self.root / "runs"
        if create:
            self.specs_dir.mkdir(parents=True, exist_ok=True)
            self.runs_dir.mkdir(parents=True, exist_ok=True)

    def register(self, spec: BenchmarkSpec) -> str:
        """Validate and persist; identical content returns the existing id."""
        problems = spec.violations()
        if problems:
            raise SpecValidationError(problems)
        payload = canonical_json(spec.to_dict())
        spec_id = sha256_bytes(payload.encode("utf-8"))
        path = self.specs_dir / f"{spec_id}.json"
        with FileLock(str(self.root / ".registry.lock")):
            if not path.exists():
                path.write_text(payload + "\n", "utf-8")
        return spec_id

    def load(self, spec_id: str) -> BenchmarkSpec:
        path = self.specs_dir / f"{spec_id}.json"
        if not path.exists():
            raise UnknownSpecError(f"no spec {spec_id!r}")
        return BenchmarkSpec.from_dict(json.loads(path.read_text("utf-8")))

    def spec_ids(self) -> list[str]:
        return sorted(p.stem for p in self.specs_dir.glob("*.json"))

    def runs(self, spec_id: str) -> list[dict]:
        """Persisted run records for a spec, oldest first."""
        self.load(spec_id)  # 404 semantics for unknown ids
        run_dir = self.runs_dir / spec_id
        if not run_dir.exists():
            return []
        return [json.loads(p.read_text("utf-8")) for p in sorted(run_dir.glob("*.json"))]

    def _persist_run(self, result: RunResult) -> Path:
        run_dir = self.runs_dir / result.spec_id
        run_dir.mkdir(parents=True, exist_ok=True)
        stamp = result.created_at.replace(":", "").replace("-", "")
        path = run_dir / f"{stamp}.json"
        n = 1
        while path.exists():
            path = run_dir / f"{stamp}-{n}.json"
            n += 1
        path.write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8")
        return path

    def run(self, spec_id: str) -> RunResult:
        """Execute a spec through its task-type harness and persist the result.

        Thin orchestration only: metric values equal direct harness calls.
        """
        spec = self.load(spec_id)
        entry = catalog_entry_for(spec.task_name)
        if entry is not None and not entry.implemented:
            raise TaskNotImplementedError(
                f"task {entry.task_name!r} is cataloged but has no harness"
            )
        actual = dataset_checksum(spec.dataset.path)
        if actual != spec.dataset.checksum:
            raise ChecksumMismatchError(
                f"dataset {spec.dataset.path}: checksum {actual} != declared {spec.dataset.checksum}"
            )
        seed = int(spec.model.params.get("seed", 42))
        start = time.perf_counter()
        try:
            if spec.task_type == "recommendation":
                computed = _run_recommendation(spec, seed)
            elif spec.task_type == "regression":
                computed = _run_completion(spec, seed)
            elif spec.task_type == "classification":
                computed = _run_classification(spec, seed)
            else:
                raise TaskNotImplementedError(f"no harness for task type {spec.task_type!r}")
        except (EcoperfError, NotImplementedError) as exc:
            if isinstance(exc, (TaskNotImplementedError, ChecksumMismatchError, AdapterMissingError)):
                raise
            raise BenchmarkRunError(f"spec {spec_id[:12]} ({spec.task_name}): {exc}") from exc
        elapsed = time.perf_counter() - start

        missing = [m for m in spec.metrics if m not in computed]
        if missing:
            raise BenchmarkRunError(f"spec {spec_id[:12]}: harness produced no value for {missing}")
        result = RunResult(
            spec_id=spec_id,
            task_name=spec.task_name,
            metrics={m: computed[m] for m in spec.metrics},
            wall_time_seconds=elapsed,
            seed=seed,
            artifacts={"dataset": spec.dataset.path},
            created_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ"),
        )
        run_file = self._persist_run(result)
        result.artifacts["run_file"] = str(run_file)
        return result


def _require_adapter(task_type: str, adapter: str, known: Iterable[str]) -> None:
    if adapter not in set(known):
        raise AdapterMissingError(
            f"no {task_type} adapter {adapter!r}; registered: {sorted(set(known))}"
        )


def _run_recommendation(spec: BenchmarkSpec, seed: int) -> dict[str, float]:
    params = spec.model.params
    _require_adapter("recommendation", spec.model.adapter, linkpred.SCORERS)
    g = read_edge_list(spec.dataset.path)
    split = linkpred.split_edges(g, float(params.get("test_fraction", 0.1)), seed)
    report = linkpred.evaluate_auc(
        split,
        algo=spec.model.adapter,
        n_comparisons=int(params.get("n_comparisons", 10_000)),
        seed=seed,
        dataset=Path(spec.dataset.path).stem,
    )
    return {"auc": report.auc, "time_s": report.wall_time_seconds}


def _run_completion(spec: BenchmarkSpec, seed: int) -> dict[str, float]:
    params = dict(spec.model.params)
    _require_adapter("regression", spec.model.adapter, tseries.IMPUTERS)
    matrix = tseries.MetricMatrix.from_csv(spec.dataset.path)
    masked, heldout = tseries.apply_mask(
        matrix,
        fraction=float(params.get("mask_fraction", 0.2)),
        seed=seed,
        mode=str(params.get("mask_mode", tseries.MASK_RANDOM)),
    )
    imputer_params = {
        k: int(v) for k, v in params.items() if k in ("period", "k")
    }
    filled = tseries.impute(masked, spec.model.adapter, **imputer_params)
    score = tseries.evaluate_completion(heldout, filled)
    return {"nmse": score.nmse, "nrmse": score.nrmse, "nmae": score.nmae}


CLASSIFIER_ADAPTERS = ("logistic",)


def _run_classification(spec: BenchmarkSpec, seed: int) -> dict[str, float]:
    params = spec.model.params
    _require_adapter("classification", spec.model.adapter, CLASSIFIER_ADAPTERS)
    rows = [r for r in botdetect.read_features_csv(spec.dataset.path) if r.label is not None]
    rng = random.Random(seed)
    order = list(range(len(rows)))
    rng.shuffle(order)
    n_train = max(1, math.floor(float(params.get("train_fraction", 0.7)) * len(rows)))
    train = [rows[i] for i in order[:n_train]]
    test = [rows[i] for i in order[n_train:]] or train
    model = botdetect.train_classifier(
        train,
        epochs=int(params.get("epochs", 500)),
        lr=float(params.get("lr", 0.5)),
        seed=seed,
    )
    report = botdetect.eval_classification(model, test)
    return {
        "accuracy": report.accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "auc": report.auc if report.auc is not None else 0.0,
    }


# -- leaderboards -----------------------------------------------------------------


@dataclass(frozen=True)
class LeaderboardEntry:
    rank: int
    entity: str
    value: float


@dataclass
class Leaderboard:
    """Descending values under competition ranking (ties share a rank)."""

    index_name: str
    context: str
    entries: list[LeaderboardEntry]

    def top(self, n: int) -> "Leaderboard":
        return Leaderboard(self.index_name, self.context, self.entries[:n])

    def to_dict(self) -> dict:
        return {
            "index_name": self.index_name,
            "context": self.context,
            "entries": [
                {"rank": e.rank, "entity": e.entity, "value": e.value} for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Leaderboard":
        return cls(
            index_name=obj["index_name"],
            context=obj["context"],
            entries=[
                LeaderboardEntry(rank=int(e["rank"]), entity=e["entity"], value=float(e["value"]))
                for e in obj["entries"]
            ],
        )


def build_leaderboard(
    results: Iterable[tuple[str, float]], index_name: str, context: str = ""
) -> Leaderboard:
    """Rank (entity, value) pairs; equal values share a rank, next rank skips.

    Input order never matters: rows sort by (-value, entity).
    """
    rows = [(entity, float(value)) for entity, value in results]
    for entity, value in rows:
        if not math.isfinite(value):
            raise ValueError(f"non-finite value for {entity!r}")
    rows.sort(key=lambda r: (-r[1], r[0]))
    entries = []
    rank = 0
    prev_value: float | None = None
    for pos, (entity, value) in enumerate(rows, start=1):
        if prev_value is None or value != prev_value:
            rank = pos
            prev_value = value
        entries.append(LeaderboardEntry(rank=rank, entity=entity, value=value))
    return Leaderboard(index_name=index_name, context=context, entries=entries)


def export_leaderboard(board: Leaderboard, fmt: str) -> bytes:
    """Serialize to json, csv, or a static single-file html table."""
    if fmt == "json":
        return json_bytes(board.to_dict())
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rank", "entity", "value"])
        for e in board.entries:
            writer.writerow([e.rank, e.entity, repr(e.value)])
        return buf.getvalue().encode("utf-8")
    if fmt == "html":
        rows = "\n".join(
            f"      <tr><td>{e.rank}</td><td>{html.escape(e.entity)}</td><td>{e.value!r}</td></tr>"
            for e in board.entries
        )
        title = html.escape(f"{board.index_name} {board.context}".strip())
        doc = (
            "<!DOCTYPE html>\n<html>\n<head>\n"
            f'  <meta charset="utf-8">\n  <title>{title}</title>\n</head>\n<body>\n'
            f"  <h1>{title}</h1>\n  <table border=\"1\">\n"
            "    <thead><tr><th>rank</th><th>entity</th><th>value</th></tr></thead>\n"
            "    <tbody>\n" + (rows + "\n" if rows else "") + "    </tbody>\n  </table>\n</body>\n</html>\n"
        )
        return doc.encode("utf-8")
    raise ValueError(f"unknown export format {fmt!r}")


def parse_leaderboard_json(data: bytes | str) -> Leaderboard:
    obj = json.loads(data)
    return Leaderboard.from_dict(obj)


def parse_leaderboard_csv(data: bytes | str) -> list[LeaderboardEntry]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["rank", "entity", "value"]:
        raise ValueError("unexpected leaderboard csv header")
    return [LeaderboardEntry(rank=int(r[0]), entity=r[1], value=float(r[2])) for r in rows[1:] if r]
