"""Interaction-record ingestion: JSONL parsing, time windows, query filtering.

Input is UTF-8 line-delimited JSON, one post per line:

    {"post_id": "p1", "author_id": "u1", "timestamp": 1580515200,
     "tokens": [["vaccine", "NOUN"], ["works", "VERB"]],
     "repost_of": ["p0", "u0"]}

``repost_of`` is optional; a bare repost may have an empty token list.
Timestamps are UTC epoch seconds. Window labels (e.g. "2020-02") are
calendar months computed in a configurable IANA timezone, default UTC.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable
from zoneinfo import ZoneInfo


class IngestError(Exception):
    """Base class for ingestion failures."""


class EmptyInput(IngestError):
    """The stream produced zero valid records."""


class DuplicatePostId(IngestError):
    """The same post_id appeared on more than one valid line."""


@dataclass(frozen=True, slots=True)
class InteractionRecord:
    """One post: an original or a repost of another author's post."""

    post_id: str
    author_id: str
    timestamp: int
    tokens: tuple[tuple[str, str], ...]
    repost_of: tuple[str, str] | None = None

    @property
    def is_repost(self) -> bool:
        return self.repost_of is not None

    def surfaces(self) -> tuple[str, ...]:
        return tuple(surface for surface, _pos in self.tokens)


@dataclass(frozen=True, slots=True)
class TimeWindow:
    """Half-open interval [start, end) of UTC epoch seconds."""

    start: int
    end: int
    label: str

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError(f"window start must precede end: {self.start} >= {self.end}")

    def contains(self, timestamp: int) -> bool:
        return self.start <= timestamp < self.end


@dataclass(frozen=True, slots=True)
class ParseResult:
    """Valid records in file order plus the count of skipped malformed lines."""

    records: tuple[InteractionRecord, ...]
    malformed: int


_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")
_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")


def month_window(label: str, tz: str = "UTC") -> TimeWindow:
    """Build the calendar-month window for a "YYYY-MM" label in timezone ``tz``."""
    m = _MONTH_RE.match(label)
    if not m:
        raise ValueError(f"not a YYYY-MM month label: {label!r}")
    year, month = int(m.group(1)), int(m.group(2))
    zone = ZoneInfo(tz)
    start = datetime(year, month, 1, tzinfo=zone)
    if month == 12:
        end = datetime(year + 1, 1, 1, tzinfo=zone)
    else:
        end = datetime(year, month + 1, 1, tzinfo=zone)
    return TimeWindow(int(start.timestamp()), int(end.timestamp()), label)


def _parse_instant(text: str, tz: str) -> int:
    if _DATE_RE.match(text):
        d = _DATE_RE.match(text)
        assert d is not None
        return int(datetime(int(d.group(1)), int(d.group(2)), int(d.group(3)),
                            tzinfo=ZoneInfo(tz)).timestamp())
    return int(text)


def parse_window(spec: str, tz: str = "UTC") -> TimeWindow:
    """Parse a window spec: "YYYY-MM" or "start..end" (epoch seconds or YYYY-MM-DD)."""
    if _MONTH_RE.match(spec):
        return month_window(spec, tz)
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return TimeWindow(_parse_instant(lo, tz), _parse_instant(hi, tz), spec)
    raise ValueError(f"window spec must be YYYY-MM or start..end: {spec!r}")


def _record_from_obj(obj: object) -> InteractionRecord | None:
    """Validate one decoded JSON object; None if it does not form a valid record."""
    if not isinstance(obj, dict):
        return None
    post_id = obj.get("post_id")
    author_id = obj.get("author_id")
    timestamp = obj.get("timestamp")
    raw_tokens = obj.get("tokens", [])
    if not isinstance(post_id, str) or not post_id:
        return None
    if not isinstance(author_id, str) or not author_id:
        return None
    if isinstance(timestamp, bool) or not isinstance(timestamp, int):
        return None
    if not isinstance(raw_tokens, list):
        return None
    tokens: list[tuple[str, str]] = []
    for entry in raw_tokens:
        if (not isinstance(entry, (list, tuple)) or len(entry) != 2
                or not isinstance(entry[0], str) or not isinstance(entry[1], str)):
            return None
        tokens.append((entry[0], entry[1]))
    repost_of: tuple[str, str] | None = None
    if "repost_of" in obj and obj["repost_of"] is not None:
        raw = obj["repost_of"]
        if (not isinstance(raw, (list, tuple)) or len(raw) != 2
                or not isinstance(raw[0], str) or not isinstance(raw[1], str)
                or not raw[1]):
            return None
        repost_of = (raw[0], raw[1])
    if not tokens and repost_of is None:
        # only pure reposts may carry an empty token list
        return None
    return InteractionRecord(post_id, author_id, timestamp, tuple(tokens), repost_of)


def parse_records(stream: Iterable[str]) -> ParseResult:
    """Parse line-delimited JSON into records, skipping (and counting) bad lines.

    Raises EmptyInput when no line yields a valid record and DuplicatePostId
    when a post_id repeats among valid lines.
    """
    records: list[InteractionRecord] = []
    seen: set[str] = set()
    malformed = 0
    for line in stream:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            malformed += 1
            continue
        record = _record_from_obj(obj)
        if record is None:
            malformed += 1
            continue
        if record.post_id in seen:
            raise DuplicatePostId(record.post_id)
        seen.add(record.post_id)
        records.append(record)
    if not records:
        raise EmptyInput(f"no valid records ({malformed} malformed lines)")
    return ParseResult(tuple(records), malformed)


def parse_records_file(path: str) -> ParseResult:
    with open(path, encoding="utf-8") as fh:
        return parse_records(fh)


def serialize_records(records: Iterable[InteractionRecord]) -> str:
    """Inverse of parse_records on the defined fields; one JSON object per line."""
    lines = []
    for r in records:
        obj: dict[str, object] = {
            "post_id": r.post_id,
            "author_id": r.author_id,
            "timestamp": r.timestamp,
            "tokens": [list(t) for t in r.tokens],
        }
        if r.repost_of is not None:
            obj["repost_of"] = list(r.repost_of)
        lines.append(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
    return "\n".join(lines) + ("\n" if lines else "")


def filter_window(
    records: Iterable[InteractionRecord],
    window: TimeWindow,
    query: str | None = None,
) -> list[InteractionRecord]:
    """Select records inside the window, optionally matching a query token.

    A record matches the query when the token appears among its surfaces, or
    when it is a repost of a matching record inside the same window (reposts
    inherit the match of their original; bare reposts rarely repeat the
    keyword). Inheritance is resolved to a fixpoint so repost chains stay
    intact.
    """
    in_window = [r for r in records if window.contains(r.timestamp)]
    if query is None:
        return in_window
    kept_ids = {r.post_id for r in in_window if query in r.surfaces()}
    # propagate matches through repost links until stable
    changed = True
    while changed:
        changed = False
        for r in in_window:
            if r.post_id in kept_ids or r.repost_of is None:
                continue
            if r.repost_of[0] in kept_ids:
                kept_ids.add(r.post_id)
                changed = True
    return [r for r in in_window if r.post_id in kept_ids]
