"""Granule segmentation, per-granule aggregation, and gap interpolation.

Segmentation tiles the matching scope into fixed-size granules (columns) and
credits every interval to each granule it overlaps with the overlap length;
point intervals contribute a conventional duration of 1 base unit.
Aggregation reduces each non-empty granule to a single value: a value
delegate (mean/median/mode) when all segment durations are equal, otherwise
a duration delegate (maximal total time or longest interval).  Interpolation
fills the remaining empty granules so every row becomes a complete vector.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Sequence

from .scoping import MatchingScope
from .temporal import EventTable, Interval, MultivariateESequence, duration_in_granules

INTERPOLATIONS = ("nearest", "linear", "average", "ibap")

# one aggregated granule: (normalized value, covered duration in base units)
Segment = tuple[float, int]
Bucket = list[Segment]


class EmptyRowError(ValueError):
    """A feature row has no observed value anywhere in the scope."""


@dataclass(frozen=True)
class AggregationConfig:
    """Delegate choices: value delegate for equal durations, else duration delegate."""

    value_delegate: str = "mean"
    duration_delegate: str = "MTT"

    def __post_init__(self):
        if self.value_delegate not in ("mean", "median", "mode"):
            raise ValueError(f"unknown value delegate {self.value_delegate!r}")
        if self.duration_delegate not in ("MTT", "LI"):
            raise ValueError(f"unknown duration delegate {self.duration_delegate!r}")


@dataclass
class SegmentedTable:
    """Sparse precursor of an EventTable: per-feature buckets of segments."""

    entity: str
    granularity: int
    column_count: int
    buckets: dict[str, list[Bucket]]


def segment_sequence(intervals: Sequence[Interval], scope: MatchingScope,
                     granule: int) -> list[Bucket]:
    """Distribute one feature's (already restricted) intervals over granules."""
    n_cols = duration_in_granules(scope.start, scope.end, granule)
    buckets: list[Bucket] = [[] for _ in range(n_cols)]
    for iv in intervals:
        start = max(iv.start, scope.start)
        end = min(iv.end, scope.end)
        if end < start:
            continue
        if end == start:
            col = min((start - scope.start) // granule, n_cols - 1)
            buckets[col].append((iv.value, 1))
            continue
        first = (start - scope.start) // granule
        last = duration_in_granules(scope.start, end, granule) - 1
        for col in range(first, last + 1):
            col_start = scope.start + col * granule
            covered = min(end, col_start + granule) - max(start, col_start)
            if covered > 0:
                buckets[col].append((iv.value, covered))
    return buckets


def segment(mseq: MultivariateESequence, scope: MatchingScope, granule: int) -> SegmentedTable:
    """Segment every feature sequence of an entity into a sparse table."""
    n_cols = duration_in_granules(scope.start, scope.end, granule)
    buckets = {
        name: segment_sequence(seq.intervals, scope, granule)
        for name, seq in mseq.sequences.items()
    }
    return SegmentedTable(mseq.entity, granule, n_cols, buckets)


def _mode(values: Sequence[float]) -> float:
    # ties break toward the value of the earliest segment
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    for v in values:
        if counts[v] == best:
            return v
    raise AssertionError("unreachable")


def aggregate(bucket: Bucket, cfg: AggregationConfig) -> float:
    """Reduce a non-empty granule to its delegate value."""
    if not bucket:
        raise ValueError("cannot aggregate an empty granule")
    durations = {d for _, d in bucket}
    values = [v for v, _ in bucket]
    if len(durations) <= 1:
        if cfg.value_delegate == "mean":
            return statistics.fmean(values)
        if cfg.value_delegate == "median":
            return float(statistics.median(values))
        return _mode(values)
    if cfg.duration_delegate == "MTT":
        totals: dict[float, int] = {}
        for v, d in bucket:
            totals[v] = totals.get(v, 0) + d
        best = max(totals.values())
        # ties break toward the higher normalized value
        return max(v for v, total in totals.items() if total == best)
    # LI: value of the single longest segment; ties break toward the earlier one
    longest = max(d for _, d in bucket)
    for v, d in bucket:
        if d == longest:
            return v
    raise AssertionError("unreachable")


def _neighbor_duration(source_intervals: Sequence[Interval], scope_start: int,
                       granule: int, column: int, side: str) -> int:
    """Duration of the source interval adjacent to a gap (left/right neighbor).

    The neighbor is the interval overlapping the bounding filled column that
    lies nearest the gap; point intervals count as 1 base unit.
    """
    col_start = scope_start + column * granule
    col_end = col_start + granule
    touching = [iv for iv in source_intervals
                if (iv.start < col_end and iv.end > col_start)
                or (iv.start == iv.end and col_start <= iv.start <= col_end)]
    if not touching:
        return 1
    if side == "left":
        chosen = max(touching, key=lambda iv: (iv.end, iv.duration))
    else:
        chosen = min(touching, key=lambda iv: (iv.start, -iv.duration))
    return max(chosen.duration, 1)


def interpolate_row(row: Sequence[float | None], method: str,
                    source_intervals: Sequence[Interval] | None = None,
                    scope_start: int = 0, granule: int = 1) -> list[float]:
    """Fill the empty cells of a row; leading/trailing gaps copy the single neighbor.

    nearest copies the closest filled value (ties go to the earlier column),
    linear interpolates proportionally to column distance, average fills the
    gap with the mean of the two bounding values, and ibap splits the gap
    between the bounding values proportionally to the durations of the
    adjacent source intervals (round-half-up on the left share), which is
    why ibap additionally needs the feature's source intervals.
    """
    if method not in INTERPOLATIONS:
        raise ValueError(f"unknown interpolation method {method!r}")
    filled = [i for i, v in enumerate(row) if v is not None]
    if not filled:
        raise EmptyRowError("feature row has no values inside the scope")
    if method == "ibap" and source_intervals is None:
        raise ValueError("ibap interpolation requires the source intervals")
    out: list[float] = list(row)  # type: ignore[arg-type]

    first, last = filled[0], filled[-1]
    for i in range(first):
        out[i] = row[first]
    for i in range(last + 1, len(row)):
        out[i] = row[last]

    for left, right in zip(filled, filled[1:]):
        gap = right - left - 1
        if gap == 0:
            continue
        lv, rv = row[left], row[right]
        if method == "nearest":
            for c in range(left + 1, right):
                out[c] = lv if (c - left) <= (right - c) else rv
        elif method == "linear":
            for c in range(left + 1, right):
                out[c] = lv + (rv - lv) * (c - left) / (right - left)
        elif method == "average":
            mid = (lv + rv) / 2.0
            for c in range(left + 1, right):
                out[c] = mid
        else:  # ibap
            d_left = _neighbor_duration(source_intervals, scope_start, granule, left, "left")
            d_right = _neighbor_duration(source_intervals, scope_start, granule, right, "right")
            share = int(gap * d_left / (d_left + d_right) + 0.5)  # round half-up
            share = min(max(share, 0), gap)
            for c in range(left + 1, right):
                out[c] = lv if (c - left) <= share else rv
    return out  # type: ignore[return-value]


def build_row(intervals: Sequence[Interval], scope: MatchingScope, granule: int,
              cfg: AggregationConfig, method: str) -> list[float]:
    """Segment, aggregate, and interpolate one feature into a complete row."""
    buckets = segment_sequence(intervals, scope, granule)
    row = [aggregate(b, cfg) if b else None for b in buckets]
    return interpolate_row(row, method, source_intervals=intervals,
                           scope_start=scope.start, granule=granule)


def export_event_table(table: EventTable) -> str:
    """Columnar text dump: a header line, then one line per feature row."""
    lines = [f"entity,{table.entity},granularity,{table.granularity},"
             f"columns,{table.column_count}"]
    for feature in table.feature_names():
        cells = ",".join(f"{v:.10g}" for v in table.rows[feature])
        lines.append(f"{feature},{cells}")
    return "\n".join(lines) + "\n"
