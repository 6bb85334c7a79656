"""Link-prediction benchmark: edge splitting, local scorers, sampled AUC.

Scorers use only local neighborhood information. ``ira`` and ``wicra`` are
reserved registry slots without published formulas; they raise until a
caller registers an implementation.
"""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

from .errors import NoAbsentEdgesError, SameNodeError, TooFewEdgesError
from .graph import BIPARTITE, DEV, REPO, CollabGraph

Scorer = Callable[[CollabGraph, str, str], float]


def _common_indices(g: CollabGraph, u: str, v: str) -> tuple[int, int, list[int]]:
    ui, vi = g.index_of(u), g.index_of(v)
    adj = g.adjacency()
    nu = {j for j, _ in adj[ui]}
    nv = {j for j, _ in adj[vi]}
    shared = sorted((nu & nv) - {ui, vi})
    return ui, vi, shared


def score_cn(g: CollabGraph, u: str, v: str) -> float:
    """Common-neighbor count."""
    _, _, shared = _common_indices(g, u, v)
    return float(len(shared))


def score_ra(g: CollabGraph, u: str, v: str) -> float:
    """Resource allocation: sum of 1/deg over common neighbors."""
    _, _, shared = _common_indices(g, u, v)
    adj = g.adjacency()
    total = 0.0
    for z in shared:
        total += 1.0 / len(adj[z])
    return total


def score_wra(g: CollabGraph, u: str, v: str) -> float:
    """Weighted resource allocation: (w(u,z) + w(z,v)) / strength(z), summed."""
    ui, vi, shared = _common_indices(g, u, v)
    adj = g.adjacency()
    strengths = g.strengths()
    wu = {j: w for j, w in adj[ui]}
    wv = {j: w for j, w in adj[vi]}
    total = 0.0
    for z in shared:
        total += (wu[z] + wv[z]) / strengths[z]
    return total


def _undisclosed(name: str) -> Scorer:
    def scorer(g: CollabGraph, u: str, v: str) -> float:
        raise NotImplementedError(
            f"{name}: no published formula; register one with register_scorer({name!r}, fn)"
        )

    return scorer


SCORERS: dict[str, Scorer] = {
    "cn": score_cn,
    "ra": score_ra,
    "wra": score_wra,
    "ira": _undisclosed("ira"),
    "wicra": _undisclosed("wicra"),
}


def register_scorer(name: str, fn: Scorer) -> None:
    SCORERS[name] = fn


def score_pair(g_train: CollabGraph, u: str, v: str, algo: str) -> float:
    """Score one candidate pair with the named algorithm."""
    if u == v:
        raise SameNodeError(f"cannot score {u!r} against itself")
    try:
        scorer = SCORERS[algo]
    except KeyError:
        raise ValueError(f"unknown algorithm {algo!r}; known: {sorted(SCORERS)}") from None
    g_train.index_of(u)
    g_train.index_of(v)
    return scorer(g_train, u, v)


def rank_candidates(
    g_train: CollabGraph, u: str, k: int, algo: str = "ra"
) -> list[tuple[str, float]]:
    """Top-k non-neighbors of u by (-score, node_name).

    On bipartite graphs candidates come from the opposite side only.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k!r}")
    g_train.index_of(u)
    if g_train.kind == BIPARTITE:
        side = REPO if g_train.node_kind(u) == DEV else DEV
        pool = g_train.node_names(side)
    else:
        pool = g_train.node_names()
    taken = set(g_train.neighbors(u))
    taken.add(u)
    scored = [(v, score_pair(g_train, u, v, algo)) for v in pool if v not in taken]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


@dataclass
class EdgeSplit:
    """Train graph plus held-out test edges, reproducible from the seed."""

    train: CollabGraph
    test_edges: list[tuple[str, str, float]]
    seed: int
    test_fraction: float


def split_edges(g: CollabGraph, test_fraction: float, seed: int) -> EdgeSplit:
    """Hold out a uniformly random test_fraction of edges.

    The train count is rounded half-up, so an exact half stays in train;
    at least one edge lands on each side. The train graph keeps every node,
    isolated or not.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0,1), got {test_fraction!r}")
    edges = list(g.edges())
    m = len(edges)
    needed = math.ceil(1.0 / test_fraction)
    if m < needed:
        raise TooFewEdgesError(f"need >= {needed} edges for fraction {test_fraction}, have {m}")
    n_train = math.floor(m * (1.0 - test_fraction) + 0.5)
    n_test = m - n_train
    if n_test < 1:
        n_test = 1
        n_train = m - 1
    rng = random.Random(seed)
    test_idx = set(rng.sample(range(m), n_test))

    train = CollabGraph(g.kind)
    for name in g.node_names():
        train.add_node(name, g.node_kind(name))
    test_edges = []
    for i, (u, v, w) in enumerate(edges):
        if i in test_idx:
            test_edges.append((u, v, w))
        else:
            train.add_edge(u, v, w, u_kind=g.node_kind(u), v_kind=g.node_kind(v))
    return EdgeSplit(train=train, test_edges=test_edges, seed=seed, test_fraction=test_fraction)


@dataclass
class LinkPredReport:
    algo: str
    dataset: str
    auc: float
    wall_time_seconds: float
    n_comparisons: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "algo": self.algo,
            "dataset": self.dataset,
            "auc": self.auc,
            "wall_time_seconds": self.wall_time_seconds,
            "n_comparisons": self.n_comparisons,
            "seed": self.seed,
        }


def _pair_rng(seed: int, index: int) -> random.Random:
    # Counter-based stream: one independent generator per comparison, keyed
    # by (seed, index), so results are independent of scheduling order.
    return random.Random(f"{seed}:{index}")


def _absent_pair_pools(g: CollabGraph) -> tuple[list[str], list[str], int]:
    """Candidate node pools for absent-pair sampling and the pair count.

    Pools are name-sorted so sampling depends only on the node and edge
    sets, not on construction order.
    """
    if g.kind == BIPARTITE:
        left = sorted(g.node_names(DEV))
        right = sorted(g.node_names(REPO))
        return left, right, len(left) * len(right)
    names = sorted(g.node_names())
    return names, names, len(names) * (len(names) - 1) // 2


def sample_comparison_pairs(
    split: EdgeSplit, n_comparisons: int, seed: int
) -> list[tuple[tuple[str, str], tuple[str, str]]]:
    """Draw (test edge, absent pair) comparisons with replacement.

    Absent pairs are rejection-sampled uniform node pairs missing from both
    train and test. Raises NoAbsentEdgesError when no pair is absent.
    """
    if n_comparisons < 1:
        raise ValueError(f"n_comparisons must be >= 1, got {n_comparisons!r}")
    if not split.test_edges:
        raise ValueError("split has no test edges")
    g = split.train
    existing = set()
    for u, v, _ in list(g.edges()) + split.test_edges:
        existing.add((u, v) if u <= v else (v, u))
    left, right, total_pairs = _absent_pair_pools(g)
    if total_pairs - len(existing) <= 0:
        raise NoAbsentEdgesError("every candidate pair is an edge; nothing is absent")

    pairs = []
    for i in range(n_comparisons):
        rng = _pair_rng(seed, i)
        test = split.test_edges[rng.randrange(len(split.test_edges))]
        for _ in range(1_000_000):
            u = left[rng.randrange(len(left))]
            v = right[rng.randrange(len(right))]
            if u == v:
                continue
            key = (u, v) if u <= v else (v, u)
            if key not in existing:
                break
        else:  # pragma: no cover - only reachable on near-complete graphs
            raise NoAbsentEdgesError("rejection sampling failed to find an absent pair")
        pairs.append(((test[0], test[1]), (u, v)))
    return pairs


def evaluate_auc(
    split: EdgeSplit,
    algo: str,
    n_comparisons: int = 10_000,
    seed: int = 0,
    dataset: str = "",
    workers: int = 1,
    measure_time: bool = True,
) -> LinkPredReport:
    """Sampled AUC over (test edge, absent pair) comparisons.

    AUC = (wins + 0.5 * ties) / n, a win being a test edge outscoring the
    absent pair. Wall time covers scoring and comparison only; pass
    ``measure_time=False`` to zero it for byte-reproducible pipelines.
    """
    pairs = sample_comparison_pairs(split, n_comparisons, seed)
    g = split.train
    scorer = SCORERS[algo] if algo in SCORERS else None
    if scorer is None:
        raise ValueError(f"unknown algorithm {algo!r}; known: {sorted(SCORERS)}")

    def count_block(block: list[tuple[tuple[str, str], tuple[str, str]]]) -> tuple[int, int]:
        wins = ties = 0
        for (tu, tv), (au, av) in block:
            st = scorer(g, tu, tv)
            sa = scorer(g, au, av)
            if st > sa:
                wins += 1
            elif st == sa:
                ties += 1
        return wins, ties

    start = time.perf_counter()
    if workers > 1:
        step = math.ceil(len(pairs) / workers)
        blocks = [pairs[lo : lo + step] for lo in range(0, len(pairs), step)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(count_block, blocks))
        wins = sum(c[0] for c in counts)
        ties = sum(c[1] for c in counts)
    else:
        wins, ties = count_block(pairs)
    elapsed = time.perf_counter() - start

    auc = (wins + 0.5 * ties) / n_comparisons
    return LinkPredReport(
        algo=algo,
        dataset=dataset,
        auc=auc,
        wall_time_seconds=elapsed if measure_time else 0.0,
        n_comparisons=n_comparisons,
        seed=seed,
    )
