"""Integer-minute time model, interval sequences, and dataset ingestion.

All internal timestamps and durations are integer minutes.  Calendar units
convert by fixed factors (Day = 1440 minutes, Month = 30 days, Year = 365
days); there is no time-zone or calendar-aware arithmetic.
"""

from __future__ import annotations

import csv
import datetime
import re
from dataclasses import dataclass
from typing import NamedTuple

MINUTE = 1
HOUR = 60 * MINUTE
DAY = 24 * HOUR
MONTH = 30 * DAY
YEAR = 365 * DAY

TIME_UNITS = {
    "minute": MINUTE,
    "hour": HOUR,
    "day": DAY,
    "month": MONTH,
    "year": YEAR,
}

_EPOCH = datetime.datetime(1970, 1, 1)
_DURATION_RE = re.compile(r"^([+-]?\d+)\s*([A-Za-z]+)$")


class IngestError(ValueError):
    """Raised for malformed dataset files."""


def parse_time_unit(name: str) -> int:
    """Return the length in minutes of a named time unit ("Day", "Months", ...)."""
    key = name.strip().lower()
    if key.endswith("s") and key[:-1] in TIME_UNITS:
        key = key[:-1]
    if key not in TIME_UNITS:
        raise ValueError(f"unknown time unit {name!r}")
    return TIME_UNITS[key]


def parse_duration(text: str) -> int:
    """Parse a duration like "3 Months" or a bare minute count into minutes."""
    text = text.strip()
    m = _DURATION_RE.match(text)
    if m:
        count, unit = int(m.group(1)), parse_time_unit(m.group(2))
        return count * unit
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"cannot parse duration {text!r}") from None


def parse_timestamp(text: str) -> int:
    """Parse an integer minute count or an ISO-8601 date/datetime into minutes."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        dt = datetime.datetime.fromisoformat(text)
    except ValueError:
        raise ValueError(f"cannot parse timestamp {text!r}") from None
    if dt.tzinfo is not None:
        dt = dt.astimezone(datetime.timezone.utc).replace(tzinfo=None)
    return int((dt - _EPOCH).total_seconds()) // 60


def duration_in_granules(start: int, end: int, granule: int) -> int:
    """Number of granules of size ``granule`` between two timestamps.

    Partial trailing granules count as a full granule (ceiling); the result
    is 0 only when ``start == end``.  Callers must ensure ``start <= end``.
    """
    return -((start - end) // granule)


@dataclass(frozen=True)
class Sample:
    """One time-stamped raw measurement (numeric or symbolic)."""

    time: int
    value: float | str


@dataclass(frozen=True)
class Interval:
    """A labelled time interval carrying a normalized value in [0, 1]."""

    start: int
    end: int
    value: float
    label: str | None = None

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class UnivariateESequence:
    """Time-ordered, non-overlapping intervals of one concept for one entity."""

    concept: str
    intervals: tuple[Interval, ...]

    def __len__(self) -> int:
        return len(self.intervals)


@dataclass(frozen=True)
class MultivariateESequence:
    """The per-concept interval sequences of one entity."""

    entity: str
    sequences: dict[str, UnivariateESequence]


@dataclass
class EventTable:
    """Dense features x granules matrix of normalized values for one entity.

    Cells are ``None`` until interpolation fills them; all rows share
    ``column_count`` columns of ``granularity`` minutes each.
    """

    entity: str
    granularity: int
    column_count: int
    rows: dict[str, list[float | None]]

    def feature_names(self) -> list[str]:
        return sorted(self.rows)


class Event(NamedTuple):
    name: str
    time: int


def _rows(path: str, n_fields: int):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (row[0].lstrip().startswith("#")):
                continue
            if len(row) != n_fields:
                raise IngestError(f"{path}:{lineno}: expected {n_fields} fields, got {len(row)}")
            yield lineno, [f.strip() for f in row]


def load_samples(path: str) -> dict[str, dict[str, list[Sample]]]:
    """Load ``entity_id,concept,timestamp,value`` rows into per-entity sample lists.

    Timestamps may be integer minutes or ISO-8601 dates.  Sample lists are
    sorted by time; duplicate timestamps within one (entity, concept) pair
    are rejected (timestamps must be strictly increasing).
    """
    out: dict[str, dict[str, list[Sample]]] = {}
    for lineno, (entity, concept, ts, raw) in _rows(path, 4):
        try:
            time = parse_timestamp(ts)
        except ValueError as exc:
            raise IngestError(f"{path}:{lineno}: {exc}") from None
        try:
            value: float | str = float(raw)
        except ValueError:
            value = raw
        out.setdefault(entity, {}).setdefault(concept, []).append(Sample(time, value))
    for entity, by_concept in out.items():
        for concept, samples in by_concept.items():
            samples.sort(key=lambda s: s.time)
            for a, b in zip(samples, samples[1:]):
                if a.time == b.time:
                    raise IngestError(
                        f"{path}: duplicate timestamp {a.time} for entity "
                        f"{entity!r}, concept {concept!r}"
                    )
    return out


def load_events(path: str) -> dict[str, list[Event]]:
    """Load ``entity_id,event_name,timestamp`` rows, time-ordered per entity."""
    out: dict[str, list[Event]] = {}
    for lineno, (entity, name, ts) in _rows(path, 3):
        try:
            time = parse_timestamp(ts)
        except ValueError as exc:
            raise IngestError(f"{path}:{lineno}: {exc}") from None
        out.setdefault(entity, []).append(Event(name, time))
    for events in out.values():
        events.sort(key=lambda e: (e.time, e.name))
    return out


def load_labels(path: str) -> dict[str, str]:
    """Load ``entity_id,label`` rows; one label per entity."""
    out: dict[str, str] = {}
    for lineno, (entity, label) in _rows(path, 2):
        if entity in out:
            raise IngestError(f"{path}:{lineno}: duplicate label for entity {entity!r}")
        out[entity] = label
    return out
