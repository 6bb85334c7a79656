"""Bot-account identification: behavioral features, baseline classifier, metrics.

Seventeen features capture naming cues and behavioral regularity from an
account's event history. The shipped classifier is a standardized logistic
model trained by full-batch gradient descent; evaluation reports the
standard threshold metrics plus exact rank-based AUC.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DegenerateDataError, SingleClassError
from .events import Event, EventStore

LABEL_HUMAN = "Human"
LABEL_BOT = "Bot"
LABELS = (LABEL_HUMAN, LABEL_BOT)

FEATURE_NAMES = (
    "login_contains_bot",
    "total_events",
    "distinct_repos",
    "distinct_event_types",
    "event_type_entropy",
    "median_gap_seconds",
    "stddev_gap_seconds",
    "modal_hour_fraction",
    "modal_weekday_fraction",
    "issue_comment_fraction",
    "pr_open_fraction",
    "pr_merge_fraction",
    "push_fraction",
    "events_per_active_day",
    "max_events_per_day",
    "active_days",
    "longest_equal_gap_run",
)
N_FEATURES = len(FEATURE_NAMES)

# Dataset-builder defaults: accounts worth featurizing at all, and the
# stricter bar for the "active account" subset.
DATASET_MIN_EVENTS = 10
ACTIVE_ACCOUNT_MIN_EVENTS = 100


@dataclass(frozen=True)
class BotDatasetConfig:
    """Account-selection thresholds for building a classification dataset."""

    min_events: int = DATASET_MIN_EVENTS
    active_min_events: int = ACTIVE_ACCOUNT_MIN_EVENTS


def select_logins(
    store: EventStore,
    first: str | None = None,
    last: str | None = None,
    config: BotDatasetConfig = BotDatasetConfig(),
    active_only: bool = False,
) -> list[str]:
    """Logins with enough events in the range to enter the dataset."""
    counts: Counter[str] = Counter()
    for event in store.query_events(first=first, last=last):
        counts[event.actor_login] += 1
    bar = config.active_min_events if active_only else config.min_events
    return sorted(login for login, n in counts.items() if n >= bar)


@dataclass(frozen=True)
class AccountFeatures:
    actor_login: str
    values: tuple[float, ...]
    label: str | None = None

    def __post_init__(self):
        if len(self.values) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} features, got {len(self.values)}")
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError("feature values must be finite")
        if self.label is not None and self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, self.values))


def _entropy(counts: Iterable[int]) -> float:
    total = sum(counts)
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


def _longest_equal_run(gaps: list[int]) -> int:
    best = run = 0
    prev = None
    for gap in gaps:
        run = run + 1 if gap == prev else 1
        prev = gap
        best = max(best, run)
    return best


def features_from_events(actor_login: str, events: list[Event], label: str | None = None) -> AccountFeatures:
    """Compute the 17-feature vector from one account's events."""
    ordered = sorted(events, key=lambda e: (e.created_at, e.event_id))
    n = len(ordered)
    type_counts = Counter(e.event_type for e in ordered)
    gaps = [
        int((b.created_at - a.created_at).total_seconds())
        for a, b in zip(ordered, ordered[1:])
    ]
    day_counts = Counter(e.created_at.date() for e in ordered)
    hour_counts = Counter(e.created_at.hour for e in ordered)
    weekday_counts = Counter(e.created_at.weekday() for e in ordered)

    def frac(event_type: str) -> float:
        return type_counts.get(event_type, 0) / n if n else 0.0

    values = (
        1.0 if "bot" in actor_login.lower() else 0.0,
        float(n),
        float(len({e.repo_name for e in ordered})),
        float(len(type_counts)),
        _entropy(type_counts.values()),
        float(statistics.median(gaps)) if gaps else 0.0,
        float(statistics.pstdev(gaps)) if len(gaps) > 1 else 0.0,
        max(hour_counts.values()) / n if n else 0.0,
        max(weekday_counts.values()) / n if n else 0.0,
        frac("IssueComment"),
        frac("PROpen"),
        frac("PRMerge"),
        frac("Push"),
        n / len(day_counts) if day_counts else 0.0,
        float(max(day_counts.values())) if day_counts else 0.0,
        float(len(day_counts)),
        float(_longest_equal_run(gaps)),
    )
    return AccountFeatures(actor_login=actor_login, values=values, label=label)


def extract_features(
    store: EventStore,
    actor_login: str,
    first: str | None = None,
    last: str | None = None,
    label: str | None = None,
) -> AccountFeatures:
    """Feature vector for one account over a month range (zero events allowed)."""
    events = [e for e in store.query_events(first=first, last=last) if e.actor_login == actor_login]
    return features_from_events(actor_login, events, label=label)


def extract_features_many(
    store: EventStore,
    logins: Iterable[str],
    first: str | None = None,
    last: str | None = None,
    labels: dict[str, str] | None = None,
    min_events: int = 0,
) -> list[AccountFeatures]:
    """One store pass for many accounts; output sorted by login.

    ``min_events`` drops accounts below the dataset-builder threshold.
    """
    wanted = set(logins)
    grouped: dict[str, list[Event]] = {login: [] for login in wanted}
    for event in store.query_events(first=first, last=last):
        if event.actor_login in wanted:
            grouped[event.actor_login].append(event)
    out = []
    for login in sorted(wanted):
        events = grouped[login]
        if len(events) < min_events:
            continue
        label = labels.get(login) if labels else None
        out.append(features_from_events(login, events, label=label))
    return out


# -- classifier ---------------------------------------------------------------


@dataclass
class ClassifierModel:
    """Standardized logistic model: p(Bot) = sigmoid(w . x_std + b)."""

    weights: tuple[float, ...]
    bias: float
    means: tuple[float, ...]
    stds: tuple[float, ...]
    meta: dict = field(default_factory=dict)

    def to_file(self, path: str | Path) -> None:
        payload = {
            "weights": list(self.weights),
            "bias": self.bias,
            "means": list(self.means),
            "stds": list(self.stds),
            "meta": self.meta,
            "feature_names": list(FEATURE_NAMES),
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")

    @classmethod
    def from_file(cls, path: str | Path) -> "ClassifierModel":
        payload = json.loads(Path(path).read_text("utf-8"))
        return cls(
            weights=tuple(payload["weights"]),
            bias=float(payload["bias"]),
            means=tuple(payload["means"]),
            stds=tuple(payload["stds"]),
            meta=payload.get("meta", {}),
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def train_classifier(
    data: list[AccountFeatures],
    epochs: int = 500,
    lr: float = 0.5,
    seed: int = 0,
) -> ClassifierModel:
    """Full-batch gradient descent on logistic loss over standardized features.

    Deterministic: weights start at zero, so constant (zero-variance)
    features keep weight zero. The final training loss lands in the model
    meta.
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs!r}")
    labeled = [f for f in data if f.label is not None]
    if not labeled:
        raise ValueError("no labeled rows")
    y = np.array([1.0 if f.label == LABEL_BOT else 0.0 for f in labeled])
    if y.min() == y.max():
        raise SingleClassError("training data contains a single class")
    x = np.array([f.values for f in labeled], dtype=np.float64)
    if np.all(x == x[0]):
        raise DegenerateDataError("all training rows are identical")

    means = x.mean(axis=0)
    stds = x.std(axis=0)
    stds[stds == 0.0] = 1.0
    xs = (x - means) / stds

    w = np.zeros(N_FEATURES)
    b = 0.0
    n = len(labeled)
    for _ in range(epochs):
        p = _sigmoid(xs @ w + b)
        err = p - y
        w -= lr * (xs.T @ err) / n
        b -= lr * float(err.mean())
    p = np.clip(_sigmoid(xs @ w + b), 1e-12, 1.0 - 1e-12)
    loss = float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    return ClassifierModel(
        weights=tuple(float(v) for v in w),
        bias=b,
        means=tuple(float(v) for v in means),
        stds=tuple(float(v) for v in stds),
        meta={"epochs": epochs, "lr": lr, "seed": seed, "final_loss": loss, "n_rows": n},
    )


def predict_probability(model: ClassifierModel, features: AccountFeatures) -> float:
    x = np.array(features.values, dtype=np.float64)
    xs = (x - np.array(model.means)) / np.array(model.stds)
    return float(_sigmoid(np.array([xs @ np.array(model.weights) + model.bias]))[0])


def predict(model: ClassifierModel, features: AccountFeatures) -> tuple[str, float]:
    """(label, probability); probability exactly 0.5 classifies Bot."""
    p = predict_probability(model, features)
    return (LABEL_BOT if p >= 0.5 else LABEL_HUMAN), p


# -- evaluation ---------------------------------------------------------------


@dataclass
class ClassificationReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "confusion": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
        }


def _rank_auc(labels: list[int], scores: list[float]) -> float:
    """Exact Mann-Whitney AUC with midranks for ties."""
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        midrank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = midrank
        i = j + 1
    rank_sum = sum(r for r, lab in zip(ranks, labels) if lab == 1)
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def classification_metrics(labels: list[str], probabilities: list[float]) -> ClassificationReport:
    """Threshold metrics at 0.5 plus exact rank AUC; Bot is the positive class.

    Raises SingleClassError when only one class is present; the exception
    carries a report with the threshold metrics that remain defined.
    """
    if len(labels) != len(probabilities) or not labels:
        raise ValueError("labels and probabilities must be equal-length and non-empty")
    y = [1 if lab == LABEL_BOT else 0 for lab in labels]
    predicted = [1 if p >= 0.5 else 0 for p in probabilities]
    tp = sum(1 for t, p in zip(y, predicted) if t == 1 and p == 1)
    fp = sum(1 for t, p in zip(y, predicted) if t == 0 and p == 1)
    tn = sum(1 for t, p in zip(y, predicted) if t == 0 and p == 0)
    fn = sum(1 for t, p in zip(y, predicted) if t == 1 and p == 0)
    total = tp + fp + tn + fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / total
    partial = ClassificationReport(
        accuracy=accuracy, precision=precision, recall=recall, f1=f1, auc=None,
        tp=tp, fp=fp, tn=tn, fn=fn,
    )
    n_pos = sum(y)
    if n_pos == 0 or n_pos == len(y):
        raise SingleClassError("AUC undefined: only one class present", report=partial)
    partial.auc = _rank_auc(y, list(probabilities))
    return partial


def eval_classification(model: ClassifierModel, data: list[AccountFeatures]) -> ClassificationReport:
    """Score labeled accounts with the model and report the metric suite."""
    labeled = [f for f in data if f.label is not None]
    if not labeled:
        raise ValueError("no labeled rows to evaluate")
    probs = [predict_probability(model, f) for f in labeled]
    return classification_metrics([f.label for f in labeled], probs)


# -- file formats --------------------------------------------------------------


def write_features_csv(rows: list[AccountFeatures], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["actor_login", *FEATURE_NAMES, "label"])
        for row in rows:
            writer.writerow([row.actor_login, *[repr(v) for v in row.values], row.label or ""])


def read_features_csv(path: str | Path) -> list[AccountFeatures]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    expected = ["actor_login", *FEATURE_NAMES, "label"]
    if not rows or rows[0] != expected:
        raise ValueError(f"{path}: unexpected header")
    out = []
    for row in rows[1:]:
        if not row:
            continue
        out.append(
            AccountFeatures(
                actor_login=row[0],
                values=tuple(float(v) for v in row[1 : 1 + N_FEATURES]),
                label=row[1 + N_FEATURES] or None,
            )
        )
    return out


def read_labels_csv(path: str | Path) -> dict[str, str]:
    """``actor_login,label`` rows; labels must be Human or Bot."""
    labels: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.reader(f):
            if not row or row[0] == "actor_login":
                continue
            login, label = row[0].strip(), row[1].strip()
            if label not in LABELS:
                raise ValueError(f"{path}: bad label {label!r} for {login!r}")
            labels[login] = label
    return labels
