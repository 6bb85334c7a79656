"""Weighted undirected collaboration graphs and their projections.

Four graph shapes are supported: the developer-repository bipartite graph
built from events, the repo-repo projection through shared contributors,
the repo-repo graph through shared topic tags, and the normalized blend of
the last two.
"""

from __future__ import annotations

import csv
import math
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import EmptyGraphError, KindError, SameNodeError, UnknownNodeError

BIPARTITE = "bipartite"
REPO_RELATION = "repo_relation"
REPO_TOPIC = "repo_topic"
REPO_RELATION_TOPIC = "repo_relation_topic"
KINDS = (BIPARTITE, REPO_RELATION, REPO_TOPIC, REPO_RELATION_TOPIC)

DEV = "dev"
REPO = "repo"
NODE = "node"


class CollabGraph:
    """Undirected weighted graph with dense first-seen node indexing.

    At most one edge per unordered pair, weights strictly positive, no
    self-loops. Node strengths (sum of incident weights) are maintained
    incrementally. Graphs are treated as immutable once built.
    """

    def __init__(self, kind: str):
        if kind not in KINDS:
            raise KindError(f"unknown graph kind {kind!r}")
        self.kind = kind
        self._names: list[str] = []
        self._kinds: list[str] = []
        self._index: dict[str, int] = {}
        self._adj: list[list[tuple[int, float]]] = []
        self._weights: dict[tuple[int, int], float] = {}
        self._strength: list[float] = []
        self._edges: list[tuple[int, int, float]] = []

    # -- construction ------------------------------------------------------

    def add_node(self, name: str, node_kind: str = NODE) -> int:
        idx = self._index.get(name)
        if idx is not None:
            if self._kinds[idx] != node_kind:
                raise KindError(f"node {name!r} already present with kind {self._kinds[idx]!r}")
            return idx
        idx = len(self._names)
        self._index[name] = idx
        self._names.append(name)
        self._kinds.append(node_kind)
        self._adj.append([])
        self._strength.append(0.0)
        return idx

    def add_edge(self, u: str, v: str, weight: float, u_kind: str = NODE, v_kind: str = NODE) -> None:
        if u == v:
            raise SameNodeError(f"self-loop on {u!r}")
        if not (weight > 0.0) or not math.isfinite(weight):
            raise ValueError(f"edge weight must be finite and > 0, got {weight!r}")
        if self.kind == BIPARTITE and u_kind == v_kind:
            raise KindError(f"bipartite graph rejects {u_kind}-{v_kind} edge {u!r}-{v!r}")
        ui = self.add_node(u, u_kind)
        vi = self.add_node(v, v_kind)
        key = (ui, vi) if ui < vi else (vi, ui)
        if key in self._weights:
            raise ValueError(f"duplicate edge {u!r}-{v!r}")
        self._weights[key] = weight
        self._adj[ui].append((vi, weight))
        self._adj[vi].append((ui, weight))
        self._strength[ui] += weight
        self._strength[vi] += weight
        self._edges.append((ui, vi, weight))

    # -- lookups -----------------------------------------------------------

    def _idx(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownNodeError(f"unknown node {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    @property
    def n_nodes(self) -> int:
        return len(self._names)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    def node_names(self, node_kind: str | None = None) -> list[str]:
        if node_kind is None:
            return list(self._names)
        return [n for n, k in zip(self._names, self._kinds) if k == node_kind]

    def node_kind(self, name: str) -> str:
        return self._kinds[self._idx(name)]

    def edges(self) -> Iterator[tuple[str, str, float]]:
        """Edges in insertion order as (u_name, v_name, weight)."""
        for ui, vi, w in self._edges:
            yield self._names[ui], self._names[vi], w

    def weight(self, u: str, v: str) -> float:
        """Symmetric edge weight; 0.0 when the pair is not connected."""
        ui, vi = self._idx(u), self._idx(v)
        key = (ui, vi) if ui < vi else (vi, ui)
        return self._weights.get(key, 0.0)

    def has_edge(self, u: str, v: str) -> bool:
        ui, vi = self._idx(u), self._idx(v)
        key = (ui, vi) if ui < vi else (vi, ui)
        return key in self._weights

    def neighbors(self, name: str) -> list[str]:
        return [self._names[j] for j, _ in self._adj[self._idx(name)]]

    def degree(self, name: str) -> int:
        return len(self._adj[self._idx(name)])

    def strength(self, name: str) -> float:
        """Sum of incident edge weights (cached)."""
        return self._strength[self._idx(name)]

    def common_neighbors(self, u: str, v: str) -> set[str]:
        """Shared neighborhood of two nodes, excluding the nodes themselves."""
        ui, vi = self._idx(u), self._idx(v)
        nu = {j for j, _ in self._adj[ui]}
        nv = {j for j, _ in self._adj[vi]}
        shared = (nu & nv) - {ui, vi}
        return {self._names[j] for j in shared}

    # Integer-indexed accessors used by the scoring and ranking kernels.

    def index_of(self, name: str) -> int:
        return self._idx(name)

    def name_of(self, idx: int) -> str:
        return self._names[idx]

    def adjacency(self) -> list[list[tuple[int, float]]]:
        return self._adj

    def strengths(self) -> list[float]:
        return list(self._strength)


def node_strength(g: CollabGraph, name: str) -> float:
    return g.strength(name)


def common_neighbors(g: CollabGraph, u: str, v: str) -> set[str]:
    return g.common_neighbors(u, v)


# -- builders ---------------------------------------------------------------


def build_bipartite(events: Iterable, weights: Mapping[str, float]) -> CollabGraph:
    """Developer-repository graph with per-pair summed event weights.

    ``weights`` maps event types to nonnegative floats; unmapped types count
    zero and zero-weight pairs are omitted.
    """
    for etype, w in weights.items():
        if not math.isfinite(w) or w < 0:
            raise ValueError(f"weight for {etype!r} must be finite and >= 0")
    acc: dict[tuple[str, str], float] = {}
    order: list[tuple[str, str]] = []
    for event in events:
        pair = (event.actor_login, event.repo_name)
        if pair not in acc:
            acc[pair] = 0.0
            order.append(pair)
        acc[pair] += weights.get(event.event_type, 0.0)
    g = CollabGraph(BIPARTITE)
    for dev, repo in order:
        w = acc[(dev, repo)]
        if w > 0.0:
            g.add_edge(dev, repo, w, u_kind=DEV, v_kind=REPO)
    return g


def project_repo_relation(g: CollabGraph, mode: str = "min") -> CollabGraph:
    """Repo-repo projection through shared developers.

    Two repos connect iff at least one developer contributed to both; the
    edge weight sums, over shared developers, min(w(d,u), w(d,v)) — or the
    product with ``mode='product'``.
    """
    if g.kind != BIPARTITE:
        raise KindError(f"projection needs a bipartite graph, got {g.kind!r}")
    if mode not in ("min", "product"):
        raise ValueError(f"unknown projection mode {mode!r}")
    acc: dict[tuple[int, int], float] = {}
    order: list[tuple[int, int]] = []
    adj = g.adjacency()
    for dev_idx, dev_kind in enumerate(g._kinds):
        if dev_kind != DEV:
            continue
        repos = sorted(adj[dev_idx])
        for (a, wa), (b, wb) in combinations(repos, 2):
            key = (a, b)
            if key not in acc:
                acc[key] = 0.0
                order.append(key)
            acc[key] += min(wa, wb) if mode == "min" else wa * wb
    out = CollabGraph(REPO_RELATION)
    for name in g.node_names(REPO):
        out.add_node(name)
    for a, b in order:
        out.add_edge(g.name_of(a), g.name_of(b), acc[(a, b)])
    return out


def build_repo_topic(topics: Mapping[str, set[str]]) -> CollabGraph:
    """Repo-repo graph weighted by shared-tag count."""
    g = CollabGraph(REPO_TOPIC)
    repos = list(topics)
    for repo in repos:
        g.add_node(repo)
    for i, u in enumerate(repos):
        tu = topics[u]
        for v in repos[i + 1 :]:
            shared = len(tu & topics[v])
            if shared > 0:
                g.add_edge(u, v, float(shared))
    return g


def merge_relation_topic(rel: CollabGraph, top: CollabGraph, alpha: float = 0.5) -> CollabGraph:
    """Convex blend of the max-normalized relation and topic graphs.

    weight = alpha * rel/max(rel) + (1-alpha) * top/max(top); an edge from
    either source survives unless its blended weight is zero.
    """
    if rel.kind != REPO_RELATION:
        raise KindError(f"first input must be {REPO_RELATION!r}, got {rel.kind!r}")
    if top.kind != REPO_TOPIC:
        raise KindError(f"second input must be {REPO_TOPIC!r}, got {top.kind!r}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0,1], got {alpha!r}")
    if rel.n_edges == 0 and top.n_edges == 0:
        raise EmptyGraphError("both inputs are edgeless")
    rel_max = max((w for _, _, w in rel.edges()), default=0.0)
    top_max = max((w for _, _, w in top.edges()), default=0.0)

    blended: dict[tuple[str, str], float] = {}
    order: list[tuple[str, str]] = []

    def _key(u: str, v: str) -> tuple[str, str]:
        return (u, v) if u <= v else (v, u)

    for u, v, w in rel.edges():
        key = _key(u, v)
        blended[key] = alpha * (w / rel_max)
        order.append(key)
    for u, v, w in top.edges():
        key = _key(u, v)
        if key not in blended:
            blended[key] = 0.0
            order.append(key)
        blended[key] += (1.0 - alpha) * (w / top_max)

    out = CollabGraph(REPO_RELATION_TOPIC)
    for name in rel.node_names():
        out.add_node(name)
    for name in top.node_names():
        out.add_node(name)
    for u, v in order:
        w = blended[(u, v)]
        if w > 0.0:
            out.add_edge(u, v, w)
    return out


# -- serialization ------------------------------------------------------------

_EDGE_HEADER = "#kind="


def write_edge_list(g: CollabGraph, path: str | Path) -> None:
    """Tab-separated edge list with a one-line ``#kind=`` header.

    Bipartite rows are written developer-first. Isolated nodes are not
    representable in this format and are dropped.
    """
    lines = [f"{_EDGE_HEADER}{g.kind}"]
    for u, v, w in g.edges():
        if g.kind == BIPARTITE and g.node_kind(u) != DEV:
            u, v = v, u
        lines.append(f"{u}\t{v}\t{w!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_edge_list(path: str | Path) -> CollabGraph:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(_EDGE_HEADER):
        raise ValueError(f"{path}: missing {_EDGE_HEADER!r} header line")
    kind = lines[0][len(_EDGE_HEADER) :].strip()
    g = CollabGraph(kind)
    for ln in lines[1:]:
        parts = ln.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}: bad edge row {ln!r}")
        u, v, w = parts[0], parts[1], float(parts[2])
        if kind == BIPARTITE:
            g.add_edge(u, v, w, u_kind=DEV, v_kind=REPO)
        else:
            g.add_edge(u, v, w)
    return g


def load_repo_topics(path: str | Path) -> dict[str, set[str]]:
    """Read ``repo_name,topic1;topic2;...`` CSV into a normalized mapping.

    Tags are lowercased, trimmed and deduplicated; empty tags are dropped.
    """
    topics: dict[str, set[str]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.reader(f):
            if not row or not row[0].strip():
                continue
            repo = row[0].strip()
            tags = set()
            for cell in row[1:]:
                for tag in cell.split(";"):
                    tag = tag.strip().lower()
                    if tag:
                        tags.add(tag)
            topics[repo] = tags
    return topics


def write_repo_topics(topics: Mapping[str, set[str]], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        for repo in sorted(topics):
            writer.writerow([repo, ";".join(sorted(topics[repo]))])
