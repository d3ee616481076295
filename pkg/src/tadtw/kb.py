"""Declarative per-concept abstraction knowledge: model, file format, validation.

A knowledge base assigns each measured concept its ordered state ranges, the
significant-variation threshold that triggers gradient labels, persistence
durations (good_before / good_after), and default aggregation delegates.

State ranges are half-open ``[low, high)`` and must tile the value axis
contiguously in ascending order; a boundary value always belongs to the
state above it.  The topmost state is treated as closed above at +infinity
when classifying, so classification is total for every value at or above the
lowest declared bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources

from .temporal import parse_duration, parse_time_unit

VALUE_TYPES = ("numeric", "ordinal-symbolic", "boolean")
VALUE_DELEGATES = ("mean", "median", "mode")
DURATION_DELEGATES = ("MTT", "LI")
VARIATION_KINDS = ("absolute", "percent")

# these appear as separators in feature names and config ids
_RESERVED_NAME_CHARS = set("=+|,")

BUNDLED_DOMAINS = ("oncology", "hepatitis", "diabetes")


class KbError(ValueError):
    """Base class for knowledge-base problems."""


class KbParseError(KbError):
    """Syntax error in a KB file; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class KbValidationError(KbError):
    """Semantically invalid knowledge (bad ranges, thresholds, ...)."""


class OutOfRangeError(KbError):
    """Value below the lowest finite state bound of a concept."""


@dataclass(frozen=True)
class StateDef:
    """One ordered state: label plus half-open numeric range [low, high).

    Symbolic (ordinal/boolean) concepts may declare label-only states, in
    which case low and high are None.
    """

    label: str
    low: float | None
    high: float | None
    ordinal_index: int


@dataclass(frozen=True)
class VariationSpec:
    """Significant-variation threshold for gradient abstraction."""

    kind: str  # "absolute" | "percent"
    threshold: float


@dataclass(frozen=True)
class ConceptDef:
    """Complete abstraction knowledge for one concept."""

    name: str
    value_type: str
    states: tuple[StateDef, ...]
    significant_variation: VariationSpec
    good_before: int  # minutes
    good_after: int  # minutes
    value_delegate: str = "mean"
    duration_delegate: str = "MTT"

    def __post_init__(self):
        _validate_concept(self)

    def state_labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.states)


@dataclass(frozen=True)
class KnowledgeBase:
    """Immutable mapping of concept name to ConceptDef."""

    concepts: dict[str, ConceptDef]
    base_granularity: int = 1  # minutes

    def __post_init__(self):
        for name, concept in self.concepts.items():
            if name != concept.name:
                raise KbValidationError(f"concept keyed {name!r} is named {concept.name!r}")

    def concept(self, name: str) -> ConceptDef:
        try:
            return self.concepts[name]
        except KeyError:
            raise KbError(f"unknown concept {name!r}") from None


def _validate_concept(c: ConceptDef) -> None:
    if not c.name or any(ch in _RESERVED_NAME_CHARS or ch.isspace() for ch in c.name):
        raise KbValidationError(f"invalid concept name {c.name!r}")
    if c.value_type not in VALUE_TYPES:
        raise KbValidationError(f"{c.name}: unknown value_type {c.value_type!r}")
    if c.value_delegate not in VALUE_DELEGATES:
        raise KbValidationError(f"{c.name}: unknown value_delegate {c.value_delegate!r}")
    if c.duration_delegate not in DURATION_DELEGATES:
        raise KbValidationError(f"{c.name}: unknown duration_delegate {c.duration_delegate!r}")
    if c.significant_variation.kind not in VARIATION_KINDS:
        raise KbValidationError(f"{c.name}: unknown variation kind")
    if not c.significant_variation.threshold > 0:
        raise KbValidationError(f"{c.name}: variation threshold must be positive")
    if c.good_before < 0 or c.good_after < 0:
        raise KbValidationError(f"{c.name}: persistence durations must be >= 0")
    if not c.states:
        raise KbValidationError(f"{c.name}: concept declares no states")
    if c.value_type == "ordinal-symbolic" and len(c.states) < 2:
        raise KbValidationError(f"{c.name}: ordinal-symbolic concepts need >= 2 states")
    if c.value_type == "boolean" and len(c.states) != 2:
        raise KbValidationError(f"{c.name}: boolean concepts need exactly 2 states")
    seen = set()
    for pos, state in enumerate(c.states):
        if state.label in seen:
            raise KbValidationError(f"{c.name}: duplicate state label {state.label!r}")
        seen.add(state.label)
        if state.ordinal_index != pos + 1:
            raise KbValidationError(
                f"{c.name}: state {state.label!r} has ordinal {state.ordinal_index}, "
                f"expected {pos + 1}"
            )
    ranged = [s for s in c.states if not (s.low is None or s.high is None)]
    if c.value_type == "numeric" and len(ranged) != len(c.states):
        raise KbValidationError(f"{c.name}: numeric concepts need a range on every state")
    if ranged and len(ranged) != len(c.states):
        raise KbValidationError(f"{c.name}: either all or no states may carry ranges")
    for state in ranged:
        if math.isnan(state.low) or math.isnan(state.high) or not state.low < state.high:
            raise KbValidationError(
                f"{c.name}: state {state.label!r} range [{state.low}, {state.high}) is empty"
            )
    for lower, upper in zip(ranged, ranged[1:]):
        if lower.high != upper.low:
            kind = "overlap" if lower.high > upper.low else "gap"
            raise KbValidationError(
                f"{c.name}: {kind} between states {lower.label!r} and {upper.label!r} "
                f"({lower.high} vs {upper.low})"
            )


def state_for_value(concept: ConceptDef, value: float) -> StateDef:
    """Classify a finite numeric value into the unique state owning it.

    Ranges are half-open [low, high); the topmost state is closed above at
    +infinity.  Values below the lowest finite bound raise OutOfRangeError.
    """
    if concept.value_type != "numeric":
        raise KbError(f"{concept.name}: state_for_value requires a numeric concept")
    if not math.isfinite(value):
        raise KbError(f"{concept.name}: cannot classify non-finite value {value!r}")
    states = concept.states
    if value < states[0].low:
        raise OutOfRangeError(
            f"{concept.name}: value {value} below lowest state bound {states[0].low}"
        )
    for state in states[:-1]:
        if state.low <= value < state.high:
            return state
    return states[-1]


def state_for_symbol(concept: ConceptDef, label: str) -> StateDef:
    """Look up a state of a symbolic (ordinal/boolean) concept by its label."""
    for state in concept.states:
        if state.label == label:
            return state
    raise KbError(f"{concept.name}: unknown state label {label!r}")


def _split_state_fields(value: str, line: int) -> tuple[str, float | None, float | None]:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) == 1:
        return parts[0], None, None
    if len(parts) != 3:
        raise KbParseError("state= expects <label> or <label>,<low>,<high>", line)
    label, low_s, high_s = parts
    try:
        low = float(low_s)
        high = float(high_s)
    except ValueError:
        raise KbParseError(f"bad state bounds {low_s!r},{high_s!r}", line) from None
    return label, low, high


def parse_knowledge_base(text: str) -> KnowledgeBase:
    """Parse the line-oriented KB file format into a validated KnowledgeBase.

    Format: an optional top-level ``base_granularity=<unit>`` line, then one
    ``[concept <name>]`` section per concept with ``type=``, repeated
    ``state=<label>,<low>,<high>`` lines (low to high; ``inf``/``-inf``
    allowed), ``variation=<absolute|percent>,<threshold>``,
    ``good_before=/good_after=<n> <unit>``, and optional ``value_delegate=``
    / ``duration_delegate=`` overrides.  ``#`` starts a comment.
    """
    base_granularity = 1
    concepts: dict[str, ConceptDef] = {}
    current: dict | None = None

    def finish(record: dict) -> None:
        name = record["name"]
        line = record["line"]
        if name in concepts:
            raise KbParseError(f"duplicate concept {name!r}", line)
        missing = [k for k in ("type", "variation", "good_before", "good_after")
                   if record.get(k) is None]
        if missing:
            raise KbParseError(f"concept {name!r} missing {', '.join(missing)}", line)
        if not record["states"]:
            raise KbParseError(f"concept {name!r} declares no states", line)
        states = tuple(
            StateDef(label, low, high, ordinal_index=i + 1)
            for i, (label, low, high) in enumerate(record["states"])
        )
        for duration in (record["good_before"], record["good_after"]):
            if duration % base_granularity:
                raise KbValidationError(
                    f"{name}: duration {duration} min is not a whole number of "
                    f"base granules ({base_granularity} min)"
                )
        concepts[name] = ConceptDef(
            name=name,
            value_type=record["type"],
            states=states,
            significant_variation=record["variation"],
            good_before=record["good_before"],
            good_after=record["good_after"],
            value_delegate=record.get("value_delegate") or "mean",
            duration_delegate=record.get("duration_delegate") or "MTT",
        )

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not (line.endswith("]") and line[1:-1].strip().startswith("concept ")):
                raise KbParseError(f"malformed section header {line!r}", lineno)
            if current is not None:
                finish(current)
            name = line[1:-1].strip()[len("concept "):].strip()
            current = {"name": name, "line": lineno, "states": []}
            continue
        if "=" not in line:
            raise KbParseError(f"expected key=value, got {line!r}", lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if current is None:
            if key == "base_granularity":
                base_granularity = parse_time_unit(value)
                continue
            raise KbParseError(f"key {key!r} outside any [concept] section", lineno)
        if key == "type":
            current["type"] = value
        elif key == "state":
            current["states"].append(_split_state_fields(value, lineno))
        elif key == "variation":
            kind, _, threshold = value.partition(",")
            try:
                current["variation"] = VariationSpec(kind.strip(), float(threshold))
            except ValueError:
                raise KbParseError(f"bad variation {value!r}", lineno) from None
        elif key in ("good_before", "good_after"):
            try:
                current[key] = parse_duration(value)
            except ValueError as exc:
                raise KbParseError(str(exc), lineno) from None
        elif key in ("value_delegate", "duration_delegate"):
            current[key] = value
        else:
            raise KbParseError(f"unknown key {key!r}", lineno)

    if current is not None:
        finish(current)
    if not concepts:
        raise KbValidationError("no concepts")
    return KnowledgeBase(concepts=concepts, base_granularity=base_granularity)


def _format_bound(x: float) -> str:
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return f"{x:g}"


def serialize_knowledge_base(kb: KnowledgeBase) -> str:
    """Render a KnowledgeBase back into the KB file format (stable ordering)."""
    unit_names = {1: "Minute", 60: "Hour", 1440: "Day", 43200: "Month", 525600: "Year"}
    lines = [f"base_granularity={unit_names.get(kb.base_granularity, kb.base_granularity)}", ""]
    for name in sorted(kb.concepts):
        c = kb.concepts[name]
        lines.append(f"[concept {name}]")
        lines.append(f"type={c.value_type}")
        for s in c.states:
            if s.low is None:
                lines.append(f"state={s.label}")
            else:
                lines.append(f"state={s.label},{_format_bound(s.low)},{_format_bound(s.high)}")
        v = c.significant_variation
        lines.append(f"variation={v.kind},{v.threshold:g}")
        lines.append(f"good_before={c.good_before}")
        lines.append(f"good_after={c.good_after}")
        lines.append(f"value_delegate={c.value_delegate}")
        lines.append(f"duration_delegate={c.duration_delegate}")
        lines.append("")
    return "\n".join(lines)


def load_knowledge_base(path: str) -> KnowledgeBase:
    with open(path) as fh:
        return parse_knowledge_base(fh.read())


def load_bundled_kb(domain: str) -> KnowledgeBase:
    """Load one of the packaged domain knowledge bases (oncology/hepatitis/diabetes)."""
    if domain not in BUNDLED_DOMAINS:
        raise KbError(f"no bundled knowledge base {domain!r}; have {BUNDLED_DOMAINS}")
    text = resources.files("tadtw.data").joinpath(f"{domain}.kb").read_text()
    return parse_knowledge_base(text)
