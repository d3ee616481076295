"""Per-entity matching scope: reference-point resolution and interval restriction.

A timeline is either absolute (fixed start/end timestamps) or relative to a
reference event: the chosen instance's aspect timestamp minus the before
period and plus the after period bound the scope.  Restriction keeps an
interval when its start or end falls inside the scope or when it spans the
whole scope, then clips it to the scope boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .temporal import Event, Interval, MultivariateESequence, UnivariateESequence

ASPECTS = ("start_time", "end_time")


class ConfigurationError(ValueError):
    """An experiment or timeline setting is internally inconsistent."""


class EntityExcluded(Exception):
    """The entity cannot participate (e.g. no usable reference event)."""

    def __init__(self, entity: str, reason: str):
        super().__init__(f"{entity}: {reason}")
        self.entity = entity
        self.reason = reason


@dataclass(frozen=True)
class AbsoluteTimeline:
    abs_start: int
    abs_end: int

    def __post_init__(self):
        if not self.abs_start < self.abs_end:
            raise ConfigurationError("absolute timeline start must precede end")


@dataclass(frozen=True)
class RelativeTimeline:
    """Scope anchored at a selected instance of a reference event.

    selection is "first", "last", or a 1-based integer picking the nth
    time-ordered instance; before_period/after_period are non-negative
    minute counts subtracted from / added to the reference timestamp.
    """

    reference_concept: str
    aspect: str = "start_time"
    selection: str | int = "first"
    before_period: int = 0
    after_period: int = 0

    def __post_init__(self):
        if self.aspect not in ASPECTS:
            raise ConfigurationError(f"unknown reference aspect {self.aspect!r}")
        if isinstance(self.selection, int):
            if self.selection < 1:
                raise ConfigurationError("nth selection must be >= 1")
        elif self.selection not in ("first", "last"):
            raise ConfigurationError(f"unknown selection {self.selection!r}")
        if self.before_period < 0 or self.after_period < 0:
            raise ConfigurationError("before/after periods must be >= 0")


TimelineSpec = AbsoluteTimeline | RelativeTimeline


@dataclass(frozen=True)
class MatchingScope:
    """The half-resolved [start, end] window an entity is matched within."""

    start: int
    end: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ConfigurationError(
                f"matching scope [{self.start}, {self.end}] is empty"
            )


def resolve_reference_point(events: Sequence[Event], spec: RelativeTimeline,
                            entity: str = "?") -> int:
    """Timestamp of the selected instance of the reference event.

    Events are point-based at ingestion, so both aspects currently resolve
    to the instance's timestamp.  Raises EntityExcluded when no (or too few)
    instances exist.
    """
    instances = [e for e in events if e.name == spec.reference_concept]
    if not instances:
        raise EntityExcluded(entity, f"no instance of reference {spec.reference_concept!r}")
    if spec.selection == "first":
        return instances[0].time
    if spec.selection == "last":
        return instances[-1].time
    if spec.selection > len(instances):
        raise EntityExcluded(
            entity,
            f"only {len(instances)} instance(s) of {spec.reference_concept!r}, "
            f"need {spec.selection}",
        )
    return instances[spec.selection - 1].time


def compute_matching_scope(spec: TimelineSpec, reference: int | None = None) -> MatchingScope:
    """Resolve a timeline spec (plus reference timestamp, if relative) to a scope."""
    if isinstance(spec, AbsoluteTimeline):
        return MatchingScope(spec.abs_start, spec.abs_end)
    if reference is None:
        raise ConfigurationError("relative timeline requires a resolved reference point")
    return MatchingScope(reference - spec.before_period, reference + spec.after_period)


def restrict(eseq: UnivariateESequence, scope: MatchingScope) -> UnivariateESequence:
    """Keep only intervals touching the scope and clip them to its boundaries."""
    kept = []
    for iv in eseq.intervals:
        inside_start = scope.start <= iv.start <= scope.end
        inside_end = scope.start <= iv.end <= scope.end
        spans = iv.start < scope.start and iv.end > scope.end
        if inside_start or inside_end or spans:
            kept.append(Interval(max(iv.start, scope.start), min(iv.end, scope.end),
                                 iv.value, iv.label))
    return UnivariateESequence(eseq.concept, tuple(kept))


def restrict_multivariate(mseq: MultivariateESequence, scope: MatchingScope) -> MultivariateESequence:
    return MultivariateESequence(
        mseq.entity,
        {name: restrict(seq, scope) for name, seq in mseq.sequences.items()},
    )
