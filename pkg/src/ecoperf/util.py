"""Shared helpers: calendar-month arithmetic and canonical serialization.

All JSON emitted for machine consumption goes through :func:`json_bytes` so
the CLI and the HTTP service produce byte-identical payloads.
"""

from __future__ import annotations

import hashlib
import json
import re
from datetime import datetime, timezone
from pathlib import Path

MONTH_RE = re.compile(r"^(\d{4})-(0[1-9]|1[0-2])$")


def is_month(text: str) -> bool:
    return bool(MONTH_RE.match(text))


def parse_month(text: str) -> tuple[int, int]:
    """Parse 'YYYY-MM' into (year, month); raises ValueError on bad input."""
    m = MONTH_RE.match(text)
    if not m:
        raise ValueError(f"not a YYYY-MM month: {text!r}")
    return int(m.group(1)), int(m.group(2))


def month_range(first: str, last: str) -> list[str]:
    """Inclusive, gap-free list of months from first to last."""
    y0, m0 = parse_month(first)
    y1, m1 = parse_month(last)
    if (y0, m0) > (y1, m1):
        raise ValueError(f"month range reversed: {first} > {last}")
    out = []
    y, m = y0, m0
    while (y, m) <= (y1, m1):
        out.append(f"{y:04d}-{m:02d}")
        m += 1
        if m == 13:
            y, m = y + 1, 1
    return out


def next_month(month: str) -> str:
    y, m = parse_month(month)
    m += 1
    if m == 13:
        y, m = y + 1, 1
    return f"{y:04d}-{m:02d}"


def month_of(ts: datetime) -> str:
    return f"{ts.year:04d}-{ts.month:02d}"


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC3339 timestamp into an aware UTC datetime (second precision).

    Fractional seconds are truncated; a timezone designator is required.
    """
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        raise ValueError(f"timestamp lacks a timezone: {text!r}")
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def format_utc(dt: datetime) -> str:
    """Canonical second-precision UTC form: YYYY-MM-DDTHH:MM:SSZ."""
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def json_bytes(obj) -> bytes:
    """Compact, NaN-free UTF-8 JSON; the single wire format for all outputs."""
    return json.dumps(
        obj, ensure_ascii=False, allow_nan=False, separators=(",", ":")
    ).encode("utf-8")


def canonical_json(obj) -> str:
    """Key-sorted compact JSON used for content hashing."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write via a temp file + rename so readers never see a partial file."""
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
