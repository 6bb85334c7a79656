"""Read-query payload builders shared by the CLI and the HTTP service.

Both front ends serialize these payloads with util.json_bytes, which is
what makes CLI and HTTP output byte-identical for the same snapshot.
"""

from __future__ import annotations

from .bench import TASK_CATALOG, BenchmarkRegistry, build_leaderboard
from .errors import EcoperfError
from .events import EventStore
from .graph import REPO, build_bipartite
from .indices import (
    DEGREE_CENTRALITY,
    OPEN_ACTIVITY,
    OPEN_RANK,
    PAGE_RANK,
    EventWeightConfig,
    IndexResult,
    compute_activity,
    compute_degree_centrality,
    compute_openrank,
    compute_pagerank,
    default_weights,
)

INDEX_IDS = {
    "activity": OPEN_ACTIVITY,
    "openrank": OPEN_RANK,
    "pagerank": PAGE_RANK,
    "degree": DEGREE_CENTRALITY,
}


def resolve_month(store: EventStore, month: str | None) -> str:
    """Explicit month, or the latest month present in the store."""
    if month:
        return month
    months = store.months
    if not months:
        raise EcoperfError("store has no months; give an explicit month")
    return months[-1]


def catalog_payload() -> list[dict]:
    return [entry.to_dict() for entry in TASK_CATALOG]


def runs_payload(registry: BenchmarkRegistry, spec_id: str) -> list[dict]:
    return registry.runs(spec_id)


def month_graph(store: EventStore, month: str, weights: EventWeightConfig | None = None):
    cfg = weights if weights is not None else default_weights()
    events = store.query_events(first=month, last=month)
    return build_bipartite(events, cfg.weights)


def index_results(
    store: EventStore,
    index_id: str,
    month: str | None,
    weights: EventWeightConfig | None = None,
    entity_kind: str = REPO,
    damping: float = 0.85,
    tol: float = 1e-9,
    max_iter: int = 200,
    workers: int = 1,
    scale: float = 1.0,
) -> list[IndexResult]:
    """IndexResult rows for one month, ordered by (-value, entity)."""
    if index_id not in INDEX_IDS:
        raise KeyError(index_id)
    month = resolve_month(store, month)
    name = INDEX_IDS[index_id]
    if index_id == "activity":
        results = compute_activity(store, month, weights)
        if scale != 1.0:
            results = [
                IndexResult(r.entity, r.value * scale, r.month, r.index_name) for r in results
            ]
        return results
    g = month_graph(store, month, weights)
    if index_id == "degree":
        scores = compute_degree_centrality(g)
    elif index_id == "openrank":
        scores = compute_openrank(g, damping, tol, max_iter, workers).scores
    else:
        scores = compute_pagerank(g, damping, tol, max_iter, workers).scores
    wanted = None if entity_kind == "all" else entity_kind
    results = [
        IndexResult(entity=node, value=value * scale, month=month, index_name=name)
        for node, value in scores.items()
        if wanted is None or g.node_kind(node) == wanted
    ]
    results.sort(key=lambda r: (-r.value, r.entity))
    return results


def index_payload(results: list[IndexResult]) -> list[dict]:
    return [r.to_dict() for r in results]


def leaderboard_payload(
    store: EventStore,
    index_id: str,
    month: str | None,
    top: int | None = None,
    weights: EventWeightConfig | None = None,
    workers: int = 1,
) -> dict:
    """Leaderboard over the month's index values, optionally truncated."""
    month = resolve_month(store, month)
    results = index_results(store, index_id, month, weights, workers=workers)
    board = build_leaderboard(
        [(r.entity, r.value) for r in results], index_name=INDEX_IDS[index_id], context=month
    )
    if top is not None:
        board = board.top(top)
    return board.to_dict()
