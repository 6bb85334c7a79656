"""Activity and influence indices over event stores and collaboration graphs.

OpenActivity aggregates weighted per-developer event sums under a square
root; OpenRank is strength-normalized weighted PageRank on the developer-
repository graph. Classic PageRank and degree centrality are provided as
comparison baselines.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyGraphError
from .events import EventStore
from .graph import CollabGraph

OPEN_ACTIVITY = "OpenActivity"
OPEN_RANK = "OpenRank"
PAGE_RANK = "PageRank"
DEGREE_CENTRALITY = "DegreeCentrality"


@dataclass
class EventWeightConfig:
    """Named mapping from event type to collaboration weight.

    Types absent from the mapping weigh zero. Round-trips losslessly through
    its JSON file form.
    """

    name: str
    weights: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for etype, w in self.weights.items():
            if not isinstance(w, (int, float)) or not math.isfinite(w) or w < 0:
                raise ValueError(f"weight for {etype!r} must be finite and >= 0")
        self.weights = {t: float(w) for t, w in self.weights.items()}

    def weight(self, event_type: str) -> float:
        return self.weights.get(event_type, 0.0)

    def to_file(self, path: str | Path) -> None:
        payload = {"name": self.name, "weights": self.weights}
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")

    @classmethod
    def from_file(cls, path: str | Path) -> "EventWeightConfig":
        payload = json.loads(Path(path).read_text("utf-8"))
        return cls(name=payload["name"], weights=payload["weights"])


def default_weights() -> EventWeightConfig:
    """Shipped default weighting; fully overridable via a config file."""
    return EventWeightConfig(
        name="default",
        weights={
            "IssueComment": 1.0,
            "IssueOpen": 2.0,
            "PROpen": 3.0,
            "PRReviewComment": 4.0,
            "PRMerge": 2.0,
        },
    )


@dataclass(frozen=True)
class IndexResult:
    entity: str
    value: float
    month: str
    index_name: str

    def to_dict(self) -> dict:
        return {
            "entity": self.entity,
            "value": self.value,
            "month": self.month,
            "index": self.index_name,
        }


def compute_activity(
    store: EventStore, month: str, weights: EventWeightConfig | None = None
) -> list[IndexResult]:
    """OpenActivity per repo for one month.

    A(repo) = sum over developers of sqrt(sum of that developer's event
    weights on the repo). Repos with no events are omitted; results are
    ordered by (-value, repo_name).
    """
    cfg = weights if weights is not None else default_weights()
    per_pair: dict[tuple[str, int], float] = {}
    repos: set[str] = set()
    for event in store.query_events(first=month, last=month):
        repos.add(event.repo_name)
        key = (event.repo_name, event.actor_id)
        per_pair[key] = per_pair.get(key, 0.0) + cfg.weight(event.event_type)
    totals: dict[str, float] = {repo: 0.0 for repo in repos}
    for (repo, _actor), s in sorted(per_pair.items()):
        totals[repo] += math.sqrt(s)
    results = [
        IndexResult(entity=repo, value=value, month=month, index_name=OPEN_ACTIVITY)
        for repo, value in totals.items()
    ]
    results.sort(key=lambda r: (-r.value, r.entity))
    return results


@dataclass
class RankResult:
    """Scores from a PageRank-style iteration plus convergence metadata."""

    scores: dict[str, float]
    iterations: int
    converged: bool


def _power_iteration(
    incoming: list[list[tuple[int, float]]],
    damping: float,
    tol: float,
    max_iter: int,
    workers: int,
) -> tuple[list[float], int, bool]:
    """Iterate r_i = (1-d)/N + d * sum_j coef_ij * r_j to a fixed point.

    ``incoming[i]`` holds (j, coef) pairs with column sums of coef equal to
    one, so the score vector keeps summing to one. Rows may be partitioned
    across worker threads; each row is always computed by exactly one worker
    with the same inner loop, so results are bit-identical for any worker
    count.
    """
    n = len(incoming)
    base = (1.0 - damping) / n
    r = [1.0 / n] * n
    out = [0.0] * n

    def run_block(lo: int, hi: int) -> float:
        delta = 0.0
        for i in range(lo, hi):
            acc = 0.0
            for j, coef in incoming[i]:
                acc += coef * r[j]
            val = base + damping * acc
            out[i] = val
            d = abs(val - r[i])
            if d > delta:
                delta = d
        return delta

    bounds: list[tuple[int, int]] = []
    if workers > 1:
        step = math.ceil(n / workers)
        bounds = [(lo, min(lo + step, n)) for lo in range(0, n, step)]

    iterations = 0
    converged = False
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while iterations < max_iter:
            iterations += 1
            if pool is not None:
                deltas = list(pool.map(lambda b: run_block(*b), bounds))
                delta = max(deltas)
            else:
                delta = run_block(0, n)
            r, out = out, r
            if delta < tol:
                converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return r, iterations, converged


def _rank(
    g: CollabGraph,
    damping: float,
    tol: float,
    max_iter: int,
    workers: int,
    weighted: bool,
) -> RankResult:
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must be in (0,1), got {damping!r}")
    adj = g.adjacency()
    active = [i for i in range(g.n_nodes) if adj[i]]
    if not active:
        raise EmptyGraphError("graph has no edges")
    compact = {node: k for k, node in enumerate(active)}
    # incoming[i] <- (j, w_ij / strength(j)); uniform weights for PageRank.
    incoming: list[list[tuple[int, float]]] = []
    strengths = g.strengths()
    for node in active:
        row = []
        for j, w in adj[node]:
            if weighted:
                coef = w / strengths[j]
            else:
                coef = 1.0 / len(adj[j])
            row.append((compact[j], coef))
        incoming.append(row)
    r, iterations, converged = _power_iteration(incoming, damping, tol, max_iter, workers)
    scores = {g.name_of(node): r[k] for k, node in enumerate(active)}
    return RankResult(scores=scores, iterations=iterations, converged=converged)


def compute_openrank(
    g: CollabGraph,
    damping: float = 0.85,
    tol: float = 1e-9,
    max_iter: int = 200,
    workers: int = 1,
) -> RankResult:
    """Weighted PageRank over a collaboration graph.

    Returns scores for every non-isolated node (developers and repos alike
    on bipartite graphs); scores sum to one. A run that hits ``max_iter``
    before the L-infinity step change drops below ``tol`` is returned with
    ``converged=False``.
    """
    return _rank(g, damping, tol, max_iter, workers, weighted=True)


def compute_pagerank(
    g: CollabGraph,
    damping: float = 0.85,
    tol: float = 1e-9,
    max_iter: int = 200,
    workers: int = 1,
) -> RankResult:
    """Classic PageRank: the same iteration with uniform edge weights."""
    return _rank(g, damping, tol, max_iter, workers, weighted=False)


def compute_degree_centrality(g: CollabGraph) -> dict[str, float]:
    """deg(n) / (N-1) per node; defined as 0 for a single-node graph."""
    n = g.n_nodes
    if n == 0:
        raise EmptyGraphError("graph has no nodes")
    if n == 1:
        return {g.name_of(0): 0.0}
    return {name: g.degree(name) / (n - 1) for name in g.node_names()}
