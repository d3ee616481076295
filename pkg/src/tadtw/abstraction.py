"""Raw samples to normalized State / Gradient / Raw interval sequences.

State abstraction classifies each sample into its knowledge-base range and
extends it by the concept's persistence (good_before backward, good_after
forward); touching or overlapping extensions of the same state merge, and
overlapping extensions of different states are truncated at the midpoint of
the overlap.  Gradient abstraction labels each consecutive sample pair
INCREASING / DECREASING / SAME against the significant-variation threshold.
All emitted interval values are normalized into [0, 1].
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .kb import ConceptDef, KbError, StateDef, state_for_symbol, state_for_value
from .temporal import Interval, Sample, UnivariateESequence

log = logging.getLogger(__name__)

GRADIENT_DECREASING = "DECREASING"
GRADIENT_SAME = "SAME"
GRADIENT_INCREASING = "INCREASING"
_GRADIENT_ORDER = (GRADIENT_DECREASING, GRADIENT_SAME, GRADIENT_INCREASING)

# representation codes and the feature rows each one contributes per concept
REPRESENTATIONS = ("R", "S", "G", "SG")
REPRESENTATION_KINDS: dict[str, tuple[str, ...]] = {
    "R": ("raw",),
    "S": ("state",),
    "G": ("gradient",),
    "SG": ("state", "gradient"),
}


def normalize_symbolic(state: StateDef, concept: ConceptDef) -> float:
    """Min-max scale a state's ordinal index into [0, 1].

    States are numbered 1..n in their declared low-to-high order, so the
    scaled value is (ordinal - 1) / (n - 1).  Boolean concepts map their two
    states to 0 and 1.  A single-state concept has no defined scale.
    """
    n = len(concept.states)
    if n < 2:
        raise KbError(f"{concept.name}: cannot scale a single-state concept")
    if state not in concept.states:
        raise KbError(f"{concept.name}: state {state.label!r} is not one of its states")
    return (state.ordinal_index - 1) / (n - 1)


def gradient_scale(label: str) -> float:
    """Normalized value of a gradient label (DECREASING 0, SAME 0.5, INCREASING 1)."""
    return _GRADIENT_ORDER.index(label) / (len(_GRADIENT_ORDER) - 1)


def _classify(sample: Sample, concept: ConceptDef) -> StateDef:
    if isinstance(sample.value, str):
        return state_for_symbol(concept, sample.value)
    try:
        return state_for_value(concept, float(sample.value))
    except KbError as exc:
        raise type(exc)(f"{exc} (sample at t={sample.time})") from None


def abstract_state(samples: Sequence[Sample], concept: ConceptDef) -> UnivariateESequence:
    """Build the state interval sequence of one concept for one entity.

    Each classified sample spans [t - good_before, t + good_after]; a single
    left-to-right pass merges equal-state spans that touch or overlap and
    truncates different-state overlaps at the (integer floor) midpoint.
    """
    gb, ga = concept.good_before, concept.good_after
    out: list[Interval] = []
    current: Interval | None = None
    for sample in samples:
        state = _classify(sample, concept)
        nxt = Interval(sample.time - gb, sample.time + ga,
                       normalize_symbolic(state, concept), state.label)
        if current is None:
            current = nxt
        elif nxt.label == current.label and nxt.start <= current.end:
            current = Interval(current.start, max(current.end, nxt.end),
                               current.value, current.label)
        else:
            if nxt.start < current.end:
                mid = (nxt.start + current.end) // 2
                current = Interval(current.start, mid, current.value, current.label)
                nxt = Interval(mid, nxt.end, nxt.value, nxt.label)
            out.append(current)
            current = nxt
    if current is not None:
        out.append(current)
    return UnivariateESequence(concept.name, tuple(out))


def abstract_gradient(samples: Sequence[Sample], concept: ConceptDef) -> UnivariateESequence:
    """Build the gradient interval sequence from consecutive sample pairs.

    The pair (s_i, s_{i+1}) yields one interval [t_i, t_{i+1}] whose label
    depends on delta = v_{i+1} - v_i against the concept's threshold (percent
    thresholds are relative to |v_i|); consecutive equal labels merge.  Fewer
    than two samples give an empty sequence (logged, not an error).
    """
    if len(samples) < 2:
        log.warning("%s: gradient abstraction needs >= 2 samples, got %d",
                    concept.name, len(samples))
        return UnivariateESequence(concept.name, ())
    spec = concept.significant_variation
    out: list[Interval] = []
    for a, b in zip(samples, samples[1:]):
        va, vb = float(a.value), float(b.value)
        delta = vb - va
        threshold = spec.threshold if spec.kind == "absolute" else spec.threshold / 100.0 * abs(va)
        if threshold > 0:
            if delta >= threshold:
                label = GRADIENT_INCREASING
            elif delta <= -threshold:
                label = GRADIENT_DECREASING
            else:
                label = GRADIENT_SAME
        else:
            # percent threshold of a zero base value: fall back to the sign
            label = (GRADIENT_INCREASING if delta > 0
                     else GRADIENT_DECREASING if delta < 0 else GRADIENT_SAME)
        if out and out[-1].label == label:
            out[-1] = Interval(out[-1].start, b.time, out[-1].value, label)
        else:
            out.append(Interval(a.time, b.time, gradient_scale(label), label))
    return UnivariateESequence(concept.name, tuple(out))


@dataclass(frozen=True)
class RawScaler:
    """Frozen z-score + min-max parameters of one concept over a cohort.

    Values are standardised with the population (divide-by-N) formula and
    the resulting z-scores min-max scaled to [0, 1]; held-out values reuse
    the same parameters and clip into [0, 1].  A degenerate scale (zero
    variance) maps everything to 0.5.
    """

    mean: float
    sd: float
    z_min: float
    z_max: float

    @property
    def degenerate(self) -> bool:
        return self.sd == 0.0 or self.z_max <= self.z_min

    def transform(self, value: float) -> float:
        if self.degenerate:
            return 0.5
        z = (value - self.mean) / self.sd
        scaled = (z - self.z_min) / (self.z_max - self.z_min)
        return min(1.0, max(0.0, scaled))


def fit_raw_scaler(values: Iterable[float]) -> RawScaler:
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("cannot fit a scaler on an empty cohort")
    n = len(vals)
    mean = math.fsum(vals) / n
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / n)
    if sd == 0.0:
        return RawScaler(mean, 0.0, 0.0, 0.0)
    zs = [(v - mean) / sd for v in vals]
    return RawScaler(mean, sd, min(zs), max(zs))


def normalize_raw(
    samples_by_entity: Mapping[str, Sequence[Sample]],
) -> tuple[RawScaler, dict[str, list[Sample]]]:
    """Fit a RawScaler on a cohort's values of one concept and apply it.

    Returns the fitted scaler (to be reused on held-out entities) and the
    cohort's samples with normalized values.
    """
    scaler = fit_raw_scaler(
        float(s.value) for entity in sorted(samples_by_entity)
        for s in samples_by_entity[entity]
    )
    normalized = {
        entity: [Sample(s.time, scaler.transform(float(s.value))) for s in samples]
        for entity, samples in samples_by_entity.items()
    }
    return scaler, normalized


def raw_sequence(samples: Sequence[Sample], concept: str, scaler: RawScaler) -> UnivariateESequence:
    """Turn raw samples into point intervals carrying scaler-normalized values."""
    return UnivariateESequence(concept, tuple(
        Interval(s.time, s.time, scaler.transform(float(s.value))) for s in samples
    ))
