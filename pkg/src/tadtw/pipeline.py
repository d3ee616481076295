"""Per-entity assembly: samples -> sequences -> scoped -> event table.

These helpers chain the abstraction, scoping, and granularity stages for one
entity and one configuration.  Entities that cannot produce a complete table
(no usable reference event, no data for a required concept, or a feature row
with no in-scope values) raise EntityExcluded so drivers can drop them with
a logged reason.
"""

from __future__ import annotations

import logging
from typing import Mapping, Sequence

from .abstraction import RawScaler, abstract_gradient, abstract_state, raw_sequence
from .granularity import AggregationConfig, EmptyRowError, build_row
from .kb import KnowledgeBase
from .scoping import (
    EntityExcluded,
    MatchingScope,
    RelativeTimeline,
    TimelineSpec,
    compute_matching_scope,
    resolve_reference_point,
    restrict,
)
from .temporal import Event, EventTable, Sample, duration_in_granules

log = logging.getLogger(__name__)


def feature_name(concept: str, kind: str) -> str:
    return f"{concept}.{kind}"


def resolve_scope(events: Mapping[str, Sequence[Event]], timeline: TimelineSpec,
                  entity: str) -> MatchingScope:
    """Resolve an entity's matching scope (EntityExcluded if it cannot anchor)."""
    if isinstance(timeline, RelativeTimeline):
        reference = resolve_reference_point(events.get(entity, ()), timeline, entity)
        return compute_matching_scope(timeline, reference)
    return compute_matching_scope(timeline)


def _entity_samples(samples: Mapping[str, Mapping[str, Sequence[Sample]]],
                    entity: str, concept: str) -> Sequence[Sample]:
    concept_samples = samples.get(entity, {}).get(concept)
    if not concept_samples:
        raise EntityExcluded(entity, f"no samples for concept {concept!r}")
    return concept_samples


def abstract_event_table(samples: Mapping[str, Mapping[str, Sequence[Sample]]],
                         kb: KnowledgeBase, entity: str,
                         features: Sequence[tuple[str, str]],
                         scope: MatchingScope, granule: int,
                         interpolation: str, agg: AggregationConfig) -> EventTable:
    """Complete event table for abstract (state/gradient) features of one entity."""
    rows: dict[str, list[float]] = {}
    for concept, kind in features:
        concept_def = kb.concept(concept)
        entity_samples = _entity_samples(samples, entity, concept)
        if kind == "state":
            seq = abstract_state(entity_samples, concept_def)
        elif kind == "gradient":
            seq = abstract_gradient(entity_samples, concept_def)
        else:
            raise ValueError(f"unexpected abstract feature kind {kind!r}")
        scoped = restrict(seq, scope)
        try:
            rows[feature_name(concept, kind)] = build_row(
                scoped.intervals, scope, granule, agg, interpolation)
        except EmptyRowError:
            raise EntityExcluded(
                entity, f"feature {feature_name(concept, kind)!r} has no in-scope values"
            ) from None
    return EventTable(entity, granule,
                      duration_in_granules(scope.start, scope.end, granule), rows)


def raw_scope_points(samples: Mapping[str, Mapping[str, Sequence[Sample]]],
                     entity: str, concepts: Sequence[str],
                     scope: MatchingScope) -> dict[str, list[Sample]]:
    """In-scope raw samples per concept (EntityExcluded when a concept is empty)."""
    points: dict[str, list[Sample]] = {}
    for concept in concepts:
        entity_samples = _entity_samples(samples, entity, concept)
        in_scope = [s for s in entity_samples if scope.start <= s.time <= scope.end]
        if not in_scope:
            raise EntityExcluded(entity, f"no in-scope samples for concept {concept!r}")
        points[concept] = in_scope
    return points


def raw_event_table(points: Mapping[str, Sequence[Sample]],
                    scalers: Mapping[str, RawScaler], entity: str,
                    scope: MatchingScope, granule: int,
                    interpolation: str, agg: AggregationConfig) -> EventTable:
    """Complete event table for all-raw features, normalized by the given scalers."""
    rows: dict[str, list[float]] = {}
    for concept in points:
        seq = raw_sequence(points[concept], concept, scalers[concept])
        rows[feature_name(concept, "raw")] = build_row(
            seq.intervals, scope, granule, agg, interpolation)
    return EventTable(entity, granule,
                      duration_in_granules(scope.start, scope.end, granule), rows)
