"""Behavior-series completion/prediction harness and streaming anomaly scan.

A MetricMatrix holds one behavioral metric as repos x months with an
observation mask. Completion methods are pluggable through the Imputer
interface; the four shipped imputers are deliberately simple baselines.
"""

from __future__ import annotations

import csv
import math
import random
import statistics
import warnings
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import (
    EmptyMatrixError,
    NothingToMaskError,
    ZeroVarianceError,
)
from .events import EventStore
from .indices import EventWeightConfig, compute_activity, default_weights
from .util import month_range

MASK_RANDOM = "random"
MASK_BLOCK_TAIL = "block_tail"

METRIC_EVENT_COUNT = "event_count"
METRIC_PARTICIPANTS = "participants"
METRIC_WEIGHTED_ACTIVITY = "weighted_activity"
METRICS = (METRIC_EVENT_COUNT, METRIC_PARTICIPANTS, METRIC_WEIGHTED_ACTIVITY)


class ImputeZeroFillWarning(UserWarning):
    """A row had no observed cells and was filled with zeros."""


@dataclass
class MetricMatrix:
    """repos x months metric values with an observation mask.

    Unobserved cells hold NaN and must never be read as data; months are
    contiguous.
    """

    repos: list[str]
    months: list[str]
    values: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.observed = np.asarray(self.observed, dtype=bool)
        shape = (len(self.repos), len(self.months))
        if self.values.shape != shape or self.observed.shape != shape:
            raise ValueError(f"shape mismatch: want {shape}, values {self.values.shape}, observed {self.observed.shape}")
        if self.months and self.months != month_range(self.months[0], self.months[-1]):
            raise ValueError("months must be strictly increasing and gap-free")
        self.values = self.values.copy()
        self.values[~self.observed] = np.nan

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.repos), len(self.months))

    def copy(self) -> "MetricMatrix":
        return MetricMatrix(
            repos=list(self.repos),
            months=list(self.months),
            values=self.values.copy(),
            observed=self.observed.copy(),
        )

    def to_csv(self, path: str | Path) -> None:
        """Header ``repo,<months...>``; unobserved cells are left empty."""
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["repo", *self.months])
            for i, repo in enumerate(self.repos):
                row = [repo]
                for j in range(len(self.months)):
                    row.append(repr(float(self.values[i, j])) if self.observed[i, j] else "")
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path: str | Path) -> "MetricMatrix":
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        if not rows or rows[0][:1] != ["repo"]:
            raise ValueError(f"{path}: expected header starting with 'repo'")
        months = rows[0][1:]
        repos, values, observed = [], [], []
        for row in rows[1:]:
            if not row:
                continue
            repos.append(row[0])
            vals, mask = [], []
            for cell in row[1:]:
                if cell.strip() == "":
                    vals.append(np.nan)
                    mask.append(False)
                else:
                    vals.append(float(cell))
                    mask.append(True)
            values.append(vals)
            observed.append(mask)
        return cls(repos=repos, months=months, values=np.array(values, dtype=np.float64).reshape(len(repos), len(months)), observed=np.array(observed, dtype=bool).reshape(len(repos), len(months)))


def build_metric_matrix(
    store: EventStore,
    repos: list[str],
    first: str,
    last: str,
    metric: str = METRIC_EVENT_COUNT,
    weights: EventWeightConfig | None = None,
) -> MetricMatrix:
    """One metric cell per (repo, month); store-absent months are unobserved."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; known: {METRICS}")
    months = month_range(first, last)
    present = set(store.months)
    values = np.zeros((len(repos), len(months)))
    observed = np.zeros((len(repos), len(months)), dtype=bool)
    for j, month in enumerate(months):
        if month not in present:
            continue
        observed[:, j] = True
        if metric == METRIC_WEIGHTED_ACTIVITY:
            activity = {r.entity: r.value for r in compute_activity(store, month, weights or default_weights())}
            for i, repo in enumerate(repos):
                values[i, j] = activity.get(repo, 0.0)
        else:
            counts = store.monthly_event_counts(month)
            for i, repo in enumerate(repos):
                cell = counts.get(repo)
                if cell is None:
                    values[i, j] = 0.0
                elif metric == METRIC_EVENT_COUNT:
                    values[i, j] = float(cell.log_increment)
                else:
                    values[i, j] = float(cell.participants)
    return MetricMatrix(repos=list(repos), months=months, values=values, observed=observed)


HeldoutCell = tuple[int, int, float]


def apply_mask(
    m: MetricMatrix, fraction: float, seed: int, mode: str = MASK_RANDOM
) -> tuple[MetricMatrix, list[HeldoutCell]]:
    """Hide observed cells and return the ground truth that was hidden.

    ``random`` hides a uniform sample (at least one cell); ``block_tail``
    hides the last ceil(fraction * months) columns, the future-prediction
    case.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0,1), got {fraction!r}")
    cells = [(int(i), int(j)) for i, j in np.argwhere(m.observed)]
    if not cells:
        raise NothingToMaskError("matrix has no observed cells")
    if mode == MASK_RANDOM:
        n_hide = max(1, math.floor(fraction * len(cells)))
        rng = random.Random(seed)
        hidden = sorted(rng.sample(cells, n_hide))
    elif mode == MASK_BLOCK_TAIL:
        n_cols = math.ceil(fraction * len(m.months))
        first_col = len(m.months) - n_cols
        hidden = sorted((i, j) for i, j in cells if j >= first_col)
        if not hidden:
            raise NothingToMaskError("no observed cells in the tail block")
    else:
        raise ValueError(f"unknown mask mode {mode!r}")
    masked = m.copy()
    heldout: list[HeldoutCell] = []
    for i, j in hidden:
        heldout.append((i, j, float(m.values[i, j])))
        masked.observed[i, j] = False
        masked.values[i, j] = np.nan
    return masked, heldout


class Imputer:
    """Completion method interface.

    Subclasses fill every unobserved cell without touching observed ones.
    ``max_iter`` is the shared default iteration budget honored by
    iterative plug-ins; the shipped closed-form baselines ignore it.
    """

    name = "imputer"
    max_iter = 1000

    def impute(self, m: MetricMatrix) -> MetricMatrix:
        raise NotImplementedError

    def _start(self, m: MetricMatrix) -> MetricMatrix:
        if m.values.size == 0:
            raise EmptyMatrixError("matrix has no cells")
        return m.copy()

    @staticmethod
    def _finish(out: MetricMatrix) -> MetricMatrix:
        empty = [out.repos[i] for i in range(len(out.repos)) if not out.observed[i].any()]
        if empty:
            warnings.warn(
                f"rows with no observed cells filled with 0: {', '.join(empty)}",
                ImputeZeroFillWarning,
                stacklevel=3,
            )
        for i in range(len(out.repos)):
            if not out.observed[i].any():
                out.values[i, :] = 0.0
        if np.isnan(out.values).any():
            raise RuntimeError("imputer left unfilled cells")
        out.observed[:, :] = True
        return out


class MeanRowImputer(Imputer):
    """Fill each row's gaps with the row's observed mean."""

    name = "mean_row"

    def impute(self, m: MetricMatrix) -> MetricMatrix:
        out = self._start(m)
        for i in range(len(out.repos)):
            obs = out.observed[i]
            if obs.any():
                fill = float(out.values[i, obs].mean())
                out.values[i, ~obs] = fill
        return self._finish(out)


class LinearInterpImputer(Imputer):
    """Per-row linear interpolation; edges extend the nearest observed value."""

    name = "linear_interp"

    def impute(self, m: MetricMatrix) -> MetricMatrix:
        out = self._start(m)
        cols = np.arange(len(out.months), dtype=np.float64)
        for i in range(len(out.repos)):
            obs = out.observed[i]
            if obs.any():
                out.values[i, ~obs] = np.interp(cols[~obs], cols[obs], out.values[i, obs])
        return self._finish(out)


class SeasonalNaiveImputer(Imputer):
    """Fill from the most recent observed value one or more periods back.

    Falls back to the row's observed mean when no earlier same-phase value
    exists.
    """

    name = "seasonal_naive"

    def __init__(self, period: int = 12):
        if period < 1:
            raise ValueError(f"period must be >= 1, got {period!r}")
        self.period = period

    def impute(self, m: MetricMatrix) -> MetricMatrix:
        out = self._start(m)
        for i in range(len(out.repos)):
            obs = out.observed[i]
            if not obs.any():
                continue
            fallback = float(out.values[i, obs].mean())
            for j in range(len(out.months)):
                if obs[j]:
                    continue
                k = j - self.period
                while k >= 0 and not obs[k]:
                    k -= self.period
                out.values[i, j] = float(out.values[i, k]) if k >= 0 else fallback
        return self._finish(out)


class KNNRowsImputer(Imputer):
    """Fill each gap from the k nearest rows by co-observed Euclidean distance."""

    name = "knn_rows"

    def __init__(self, k: int = 3):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k!r}")
        self.k = k

    def impute(self, m: MetricMatrix) -> MetricMatrix:
        out = self._start(m)
        n = len(out.repos)
        for i in range(n):
            obs_i = out.observed[i]
            missing = [j for j in range(len(out.months)) if not obs_i[j]]
            if not missing or not obs_i.any():
                continue
            # (distance, row) candidates over co-observed cells, nearest first.
            ranked: list[tuple[float, int]] = []
            for r in range(n):
                if r == i:
                    continue
                both = obs_i & out.observed[r]
                if not both.any():
                    continue
                diff = out.values[i, both] - out.values[r, both]
                ranked.append((float(np.sqrt(np.sum(diff * diff))), r))
            ranked.sort()
            fallback = float(out.values[i, obs_i].mean())
            for j in missing:
                donors = [r for _, r in ranked if out.observed[r, j]][: self.k]
                if donors:
                    out.values[i, j] = float(np.mean([out.values[r, j] for r in donors]))
                else:
                    out.values[i, j] = fallback
        return self._finish(out)


IMPUTERS = {
    "mean_row": MeanRowImputer,
    "linear_interp": LinearInterpImputer,
    "seasonal_naive": SeasonalNaiveImputer,
    "knn_rows": KNNRowsImputer,
}


def make_imputer(method: str, **params) -> Imputer:
    try:
        cls = IMPUTERS[method]
    except KeyError:
        raise ValueError(f"unknown imputation method {method!r}; known: {sorted(IMPUTERS)}") from None
    return cls(**params)


def impute(masked: MetricMatrix, method: str, **params) -> MetricMatrix:
    """Fill every unobserved cell with the named method; deterministic."""
    return make_imputer(method, **params).impute(masked)


@dataclass
class CompletionScore:
    """Normalized completion errors over the held-out cells."""

    nmse: float
    nrmse: float
    nmae: float
    n_evaluated: int

    def to_dict(self) -> dict:
        return {
            "nmse": self.nmse,
            "nrmse": self.nrmse,
            "nmae": self.nmae,
            "n_evaluated": self.n_evaluated,
        }


def evaluate_completion(heldout: list[HeldoutCell], predicted: MetricMatrix) -> CompletionScore:
    """NMSE, NRMSE and NMAE of predictions against held-out ground truth.

    Normalizers use deviations from the held-out mean; NRMSE is exactly
    sqrt(NMSE). Constant ground truth has no defined score and raises
    ZeroVarianceError.
    """
    if not heldout:
        raise ValueError("heldout is empty")
    truth = np.array([v for _, _, v in heldout], dtype=np.float64)
    pred = np.array([predicted.values[i, j] for i, j, _ in heldout], dtype=np.float64)
    if np.isnan(pred).any():
        raise ValueError("predicted matrix leaves held-out cells unobserved")
    mean = truth.mean()
    denom_sq = float(np.sum((truth - mean) ** 2))
    if denom_sq == 0.0:
        raise ZeroVarianceError("held-out ground truth is constant; normalized metrics undefined")
    nmse = float(np.sum((pred - truth) ** 2)) / denom_sq
    nmae = float(np.sum(np.abs(pred - truth))) / float(np.sum(np.abs(truth - mean)))
    return CompletionScore(nmse=nmse, nrmse=math.sqrt(nmse), nmae=nmae, n_evaluated=len(heldout))


class Anomaly(NamedTuple):
    month: str
    value: float
    score: float


MAD_SCALE = 1.4826
MAD_EPSILON = 1e-9


class AnomalyDetector:
    """Online robust-z detector over a trailing window.

    z = |value - median(window)| / (1.4826 * MAD(window) + eps), flagged
    when z exceeds the threshold. The first ``window`` points are never
    flagged; memory is O(window).
    """

    def __init__(self, window: int, threshold: float = 3.5):
        if window < 4:
            raise ValueError(f"window must be >= 4, got {window!r}")
        if threshold <= 0:
            raise ValueError(f"threshold must be > 0, got {threshold!r}")
        self.window = window
        self.threshold = threshold
        self._buf: deque[float] = deque(maxlen=window)

    def update(self, month: str, value: float) -> Anomaly | None:
        flagged = None
        if len(self._buf) == self.window:
            med = statistics.median(self._buf)
            mad = statistics.median(abs(x - med) for x in self._buf)
            z = abs(value - med) / (MAD_SCALE * mad + MAD_EPSILON)
            if z > self.threshold:
                flagged = Anomaly(month=month, value=value, score=z)
        self._buf.append(value)
        return flagged


def detect_anomalies(
    stream: Iterable[tuple[str, float]], window: int, threshold: float = 3.5
) -> list[Anomaly]:
    """One-pass anomaly scan of a (month, value) stream."""
    detector = AnomalyDetector(window, threshold)
    out = []
    for month, value in stream:
        hit = detector.update(month, float(value))
        if hit is not None:
            out.append(hit)
    return out


def read_series_csv(path: str | Path) -> Iterator[tuple[str, str, float]]:
    """Rows of a ``repo,month,value`` CSV (header optional)."""
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.reader(f):
            if not row or row[0] == "repo":
                continue
            yield row[0], row[1], float(row[2])
