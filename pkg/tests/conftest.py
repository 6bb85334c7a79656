from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ecoperf.events import EventStore

from fixture_events import event_line


@pytest.fixture
def store(tmp_path) -> EventStore:
    return EventStore(tmp_path / "store")


@pytest.fixture
def small_store(tmp_path) -> EventStore:
    """Three devs on two repos across two months."""
    lines = [
        event_line("1", "IssueCommentEvent", 7, "alice", 3, "x/y", "2023-06-01T00:00:00Z"),
        event_line("2", "IssueCommentEvent", 7, "alice", 3, "x/y", "2023-06-02T10:00:00Z"),
        event_line("3", "IssueCommentEvent", 9, "bob", 3, "x/y", "2023-06-03T12:00:00Z"),
        event_line("4", "PullRequestEvent", 7, "alice", 4, "x/z", "2023-06-04T08:00:00Z"),
        event_line("5", "PushEvent", 11, "carol", 4, "x/z", "2023-07-01T09:00:00Z"),
    ]
    s = EventStore(tmp_path / "small_store")
    s.ingest_stream(lines)
    return s
