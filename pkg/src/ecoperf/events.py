"""Event log parsing and the monthly-partitioned event store.

Input is NDJSON, one GitHub-archive-style object per line::

    {"id":"1","type":"IssueCommentEvent","actor":{"id":7,"login":"alice"},
     "repo":{"id":3,"name":"x/y"},"created_at":"2023-06-01T00:00:00Z"}

Accepted events land in ``<store>/events/YYYY-MM.ndjson`` partitions tracked
by ``<store>/manifest.json``. Ingest is single-writer (lock file); queries
only ever read committed partitions.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator

from filelock import FileLock

from .errors import ManifestCorruptError, ParseError
from .util import atomic_write_bytes, format_utc, json_bytes, month_of, month_range, parse_rfc3339

SCHEMA_VERSION = 1

KNOWN_EVENT_TYPES = frozenset(
    ["IssueOpen", "IssueComment", "PROpen", "PRMerge", "PRReviewComment", "Push", "Star", "Fork"]
)

# Raw wire names -> canonical types. Canonical names map to themselves so a
# persisted partition line re-parses identically. Unknown types pass through
# unmodified (the "Other" case).
_TYPE_ALIASES = {
    "IssuesEvent": "IssueOpen",
    "IssueOpenEvent": "IssueOpen",
    "IssueCommentEvent": "IssueComment",
    "PullRequestEvent": "PROpen",
    "PROpenEvent": "PROpen",
    "PRMergeEvent": "PRMerge",
    "PullRequestReviewCommentEvent": "PRReviewComment",
    "PRReviewCommentEvent": "PRReviewComment",
    "PushEvent": "Push",
    "WatchEvent": "Star",
    "StarEvent": "Star",
    "ForkEvent": "Fork",
}
_TYPE_ALIASES.update({name: name for name in KNOWN_EVENT_TYPES})


@dataclass(frozen=True, slots=True)
class Event:
    """One timestamped actor/repo/type record from an event log."""

    event_id: str
    event_type: str
    actor_id: int
    actor_login: str
    repo_id: int
    repo_name: str
    created_at: datetime  # always UTC, second precision

    @property
    def is_known_type(self) -> bool:
        return self.event_type in KNOWN_EVENT_TYPES

    @property
    def month(self) -> str:
        return month_of(self.created_at)

    def to_line(self) -> str:
        """Canonical NDJSON form used for partition files."""
        obj = {
            "id": self.event_id,
            "type": self.event_type,
            "actor": {"id": self.actor_id, "login": self.actor_login},
            "repo": {"id": self.repo_id, "name": self.repo_name},
            "created_at": format_utc(self.created_at),
        }
        return json_bytes(obj).decode("utf-8")


def canonical_event_type(raw: str) -> str:
    return _TYPE_ALIASES.get(raw, raw)


def _require(obj: dict, key: str, parent: str = "") -> object:
    dotted = f"{parent}.{key}" if parent else key
    if not isinstance(obj, dict) or key not in obj or obj[key] is None:
        raise ParseError("missing_field", dotted)
    return obj[key]


def _positive_int(value: object, field_name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError("bad_value", field_name, f"bad_value: {field_name} must be an integer")
    if value <= 0:
        raise ParseError("bad_value", field_name, f"bad_value: {field_name} must be > 0")
    return value


def parse_event(line: str) -> Event:
    """Parse and validate one NDJSON line into an Event.

    Raises ParseError naming the offending field; unknown event types are
    preserved verbatim.
    """
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError("bad_json", "", f"bad_json: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("bad_json", "", "bad_json: line is not a JSON object")

    event_id = _require(obj, "id")
    if isinstance(event_id, int) and not isinstance(event_id, bool):
        event_id = str(event_id)
    if not isinstance(event_id, str) or not event_id:
        raise ParseError("bad_value", "id", "bad_value: id must be a non-empty string")

    raw_type = _require(obj, "type")
    if not isinstance(raw_type, str) or not raw_type:
        raise ParseError("bad_value", "type", "bad_value: type must be a non-empty string")

    actor = _require(obj, "actor")
    actor_id = _positive_int(_require(actor, "id", "actor"), "actor.id")
    actor_login = _require(actor, "login", "actor")
    if not isinstance(actor_login, str) or not actor_login:
        raise ParseError("bad_value", "actor.login", "bad_value: actor.login must be a non-empty string")

    repo = _require(obj, "repo")
    repo_id = _positive_int(_require(repo, "id", "repo"), "repo.id")
    repo_name = _require(repo, "name", "repo")
    if not isinstance(repo_name, str) or repo_name.count("/") != 1 or repo_name.startswith("/") or repo_name.endswith("/"):
        raise ParseError("bad_repo_name", "repo.name", f"bad_repo_name: {repo_name!r} is not 'owner/name'")

    raw_ts = _require(obj, "created_at")
    try:
        created_at = parse_rfc3339(str(raw_ts))
    except ValueError as exc:
        raise ParseError("bad_timestamp", "created_at", f"bad_timestamp: {exc}") from exc

    return Event(
        event_id=event_id,
        event_type=canonical_event_type(raw_type),
        actor_id=actor_id,
        actor_login=actor_login,
        repo_id=repo_id,
        repo_name=repo_name,
        created_at=created_at,
    )


@dataclass
class IngestReport:
    """Outcome of one ingest batch."""

    accepted: int = 0
    rejected: int = 0
    duplicates: int = 0
    per_month_counts: dict[str, int] = field(default_factory=dict)
    errors: list[tuple[int, str]] = field(default_factory=list)  # (1-based line, message)

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "duplicates": self.duplicates,
            "per_month_counts": dict(sorted(self.per_month_counts.items())),
            "errors": [{"line": n, "message": m} for n, m in self.errors],
        }


@dataclass(frozen=True)
class RepoMonthCounts:
    participants: int
    log_increment: int


class EventStore:
    """Monthly-partitioned NDJSON event store.

    Layout: ``<root>/manifest.json`` plus ``<root>/events/YYYY-MM.ndjson``.
    One writer at a time (lock file); any number of readers once a manifest
    is committed.
    """

    def __init__(self, root: str | Path, create: bool = True):
        self.root = Path(root)
        self.events_dir = self.root / "events"
        self.manifest_path = self.root / "manifest.json"
        if create:
            self.events_dir.mkdir(parents=True, exist_ok=True)
        if self.manifest_path.exists():
            self._manifest = self._load_manifest()
        else:
            self._manifest = {"schema_version": SCHEMA_VERSION, "partitions": []}

    # -- manifest ----------------------------------------------------------

    def _load_manifest(self) -> dict:
        try:
            manifest = json.loads(self.manifest_path.read_text("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ManifestCorruptError(f"unreadable manifest: {exc}") from exc
        partitions = manifest.get("partitions")
        if not isinstance(partitions, list):
            raise ManifestCorruptError("manifest lacks a partition list")
        months = [p.get("month") for p in partitions]
        if months != sorted(months) or len(set(months)) != len(months):
            raise ManifestCorruptError("partition months not unique and sorted")
        for part in partitions:
            path = self.root / part["file"]
            if not path.exists():
                raise ManifestCorruptError(f"missing partition file {part['file']}")
            count = sum(1 for line in path.open("rb") if line.strip())
            if count != part["event_count"]:
                raise ManifestCorruptError(
                    f"partition {part['month']}: manifest says {part['event_count']} events, file has {count}"
                )
        return manifest

    def _write_manifest(self) -> None:
        self._manifest["partitions"].sort(key=lambda p: p["month"])
        data = json.dumps(self._manifest, indent=2, sort_keys=True).encode("utf-8") + b"\n"
        atomic_write_bytes(self.manifest_path, data)

    @property
    def months(self) -> list[str]:
        return [p["month"] for p in self._manifest["partitions"]]

    def partition_counts(self) -> dict[str, int]:
        return {p["month"]: p["event_count"] for p in self._manifest["partitions"]}

    def _partition_path(self, month: str) -> Path:
        return self.events_dir / f"{month}.ndjson"

    def _partition_entry(self, month: str) -> dict | None:
        for part in self._manifest["partitions"]:
            if part["month"] == month:
                return part
        return None

    # -- ingest ------------------------------------------------------------

    def ingest_stream(self, lines: Iterable[str]) -> IngestReport:
        """Append valid events to their monthly partitions.

        Duplicate event ids within a partition are dropped (first write
        wins) and counted; malformed lines are rejected with their 1-based
        line number. The manifest is committed atomically at the end.
        """
        report = IngestReport()
        new_by_month: dict[str, list[Event]] = defaultdict(list)
        seen_ids: dict[str, set[str]] = {}

        with FileLock(str(self.root / ".ingest.lock")):
            for lineno, line in enumerate(lines, start=1):
                if not line.strip():
                    continue
                try:
                    event = parse_event(line)
                except ParseError as exc:
                    report.rejected += 1
                    report.errors.append((lineno, str(exc)))
                    continue
                month = event.month
                if month not in seen_ids:
                    seen_ids[month] = self._existing_ids(month)
                if event.event_id in seen_ids[month]:
                    report.duplicates += 1
                    continue
                seen_ids[month].add(event.event_id)
                new_by_month[month].append(event)
                report.accepted += 1
                report.per_month_counts[month] = report.per_month_counts.get(month, 0) + 1

            for month, events in sorted(new_by_month.items()):
                path = self._partition_path(month)
                with path.open("a", encoding="utf-8") as f:
                    for event in events:
                        f.write(event.to_line() + "\n")
                entry = self._partition_entry(month)
                if entry is None:
                    self._manifest["partitions"].append(
                        {"month": month, "event_count": len(events), "file": f"events/{month}.ndjson"}
                    )
                else:
                    entry["event_count"] += len(events)
            if new_by_month:
                self._write_manifest()
        return report

    def _existing_ids(self, month: str) -> set[str]:
        entry = self._partition_entry(month)
        if entry is None:
            return set()
        ids = set()
        for event in self._read_partition(month):
            ids.add(event.event_id)
        return ids

    # -- queries -----------------------------------------------------------

    def _read_partition(self, month: str) -> Iterator[Event]:
        entry = self._partition_entry(month)
        if entry is None:
            return
        path = self.root / entry["file"]
        read = 0
        with path.open("r", encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                # Trust the committed count; trailing lines belong to an
                # in-flight ingest and are not part of this snapshot.
                if read >= entry["event_count"]:
                    break
                yield parse_event(line)
                read += 1

    def query_events(
        self,
        repo_filter: set[str] | None = None,
        first: str | None = None,
        last: str | None = None,
    ) -> Iterator[Event]:
        """Events in [first, last] months, (created_at, event_id) ascending.

        ``repo_filter`` keeps only the named repositories; months absent
        from the store contribute nothing.
        """
        months = self.months
        if first is not None or last is not None:
            if first is None or last is None:
                raise ValueError("first and last must be given together")
            wanted = set(month_range(first, last))
            months = [m for m in months if m in wanted]
        for month in months:
            batch = list(self._read_partition(month))
            if repo_filter is not None:
                batch = [e for e in batch if e.repo_name in repo_filter]
            batch.sort(key=lambda e: (e.created_at, e.event_id))
            yield from batch

    def monthly_event_counts(
        self, month: str, include_types: set[str] | None = None
    ) -> dict[str, RepoMonthCounts]:
        """Per-repo (participants, log_increment) for one month.

        Participants counts distinct actor ids; log increment counts events.
        ``include_types`` restricts which event types count (all by default).
        """
        actors: dict[str, set[int]] = defaultdict(set)
        counts: Counter[str] = Counter()
        for event in self._read_partition(month):
            if include_types is not None and event.event_type not in include_types:
                continue
            actors[event.repo_name].add(event.actor_id)
            counts[event.repo_name] += 1
        return {
            repo: RepoMonthCounts(participants=len(actors[repo]), log_increment=counts[repo])
            for repo in sorted(counts)
        }
