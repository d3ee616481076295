"""Reproducible synthetic cohorts with class signal in levels and trends.

Each synthetic concept draws irregularly spaced samples around a per-class
base level plus a per-class linear trend and Gaussian noise, so class
identity is visible to state abstraction (band membership), to gradient
abstraction (trend direction), and to raw matching.  Generation is fully
seeded: the same spec and seed reproduce the same dataset, byte for byte
when written.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .experiments import Dataset
from .kb import ConceptDef, KnowledgeBase, StateDef, VariationSpec, serialize_knowledge_base
from .temporal import DAY, Event, Sample

DEFAULT_CLASSES = ("neg", "pos")


@dataclass(frozen=True)
class SyntheticConcept:
    name: str
    bands: tuple[tuple[str, float, float], ...]  # (label, low, high), low -> high
    variation_threshold: float
    persistence: int  # good_before = good_after, minutes
    class_levels: Mapping[str, float]
    class_trends: Mapping[str, float]  # units per day
    noise_sd: float


@dataclass(frozen=True)
class SyntheticSpec:
    concepts: tuple[SyntheticConcept, ...]
    classes: tuple[str, ...] = DEFAULT_CLASSES
    reference_event: str = "ENROLL"
    scope_days: int = 30
    min_gap_days: int = 1
    max_gap_days: int = 3

    def __post_init__(self):
        if not self.concepts:
            raise ValueError("synthetic spec needs at least one concept")
        if len(self.classes) < 2:
            raise ValueError("synthetic spec needs at least two classes")


_DEFAULT_BANDS = (
    ("LOW", float("-inf"), 10.0),
    ("NORMAL", 10.0, 20.0),
    ("HIGH", 20.0, 30.0),
    ("VERY HIGH", 30.0, float("inf")),
)


def default_spec(noise_sd: float = 1.2) -> SyntheticSpec:
    """Two-concept, two-class separable cohort: a level shift and a trend flip."""
    return SyntheticSpec(concepts=(
        SyntheticConcept(
            name="MARKER-A",
            bands=_DEFAULT_BANDS,
            variation_threshold=2.0,
            persistence=2 * DAY,
            class_levels={"neg": 15.0, "pos": 25.0},
            class_trends={"neg": 0.0, "pos": 0.0},
            noise_sd=noise_sd,
        ),
        SyntheticConcept(
            name="MARKER-B",
            bands=_DEFAULT_BANDS,
            variation_threshold=2.0,
            persistence=2 * DAY,
            class_levels={"neg": 12.0, "pos": 24.0},
            class_trends={"neg": 0.4, "pos": -0.4},
            noise_sd=noise_sd,
        ),
    ))


def _knowledge_base(spec: SyntheticSpec) -> KnowledgeBase:
    concepts = {}
    for sc in spec.concepts:
        states = tuple(StateDef(label, low, high, i + 1)
                       for i, (label, low, high) in enumerate(sc.bands))
        concepts[sc.name] = ConceptDef(
            name=sc.name,
            value_type="numeric",
            states=states,
            significant_variation=VariationSpec("absolute", sc.variation_threshold),
            good_before=sc.persistence,
            good_after=sc.persistence,
        )
    return KnowledgeBase(concepts=concepts)


def generate(spec: SyntheticSpec, n_entities: int, seed: int) -> tuple[Dataset, KnowledgeBase]:
    """Generate a labeled cohort plus its matching knowledge base."""
    rng = np.random.default_rng(seed)
    per_class = n_entities // len(spec.classes)
    remainder = n_entities - per_class * len(spec.classes)
    labels: dict[str, str] = {}
    samples: dict[str, dict[str, list[Sample]]] = {}
    events: dict[str, list[Event]] = {}
    index = 0
    for c, cls in enumerate(sorted(spec.classes)):
        count = per_class + (1 if c < remainder else 0)
        for _ in range(count):
            entity = f"e{index:04d}"
            index += 1
            labels[entity] = cls
            t_ref = int(rng.integers(30, 91)) * DAY
            events[entity] = [Event(spec.reference_event, t_ref)]
            samples[entity] = {}
            horizon = t_ref + (spec.scope_days + 1) * DAY
            for sc in spec.concepts:
                level = sc.class_levels[cls]
                trend = sc.class_trends[cls]
                times: list[int] = []
                t = t_ref - 2 * DAY + int(rng.integers(0, DAY))
                while t <= horizon:
                    times.append(t)
                    t += int(rng.integers(spec.min_gap_days * DAY,
                                          spec.max_gap_days * DAY + 1))
                values = (level
                          + trend * (np.asarray(times) - t_ref) / DAY
                          + rng.normal(0.0, sc.noise_sd, size=len(times)))
                samples[entity][sc.name] = [
                    Sample(time, round(float(v), 4)) for time, v in zip(times, values)
                ]
    return Dataset(samples=samples, events=events, labels=labels), _knowledge_base(spec)


def default_experiment_text(spec: SyntheticSpec) -> str:
    """An experiment file matching the generated cohort's timeline."""
    names = ",".join(sc.name for sc in spec.concepts)
    return (
        "[experiment]\n"
        f"concepts = {names}\n"
        f"max_concepts = {min(3, len(spec.concepts))}\n"
        "granularity = Day\n"
        "interpolations = nearest,linear,average\n"
        "aggregations = MTT,LI\n"
        "bands = sc10,none\n"
        f"positive_label = {sorted(spec.classes)[-1]}\n"
        "\n"
        "[timeline]\n"
        "kind = relative\n"
        f"reference_concept = {spec.reference_event}\n"
        "aspect = start_time\n"
        "selection = first\n"
        "before_period = 0 Days\n"
        f"after_period = {spec.scope_days} Days\n"
    )


def write_dataset(dataset: Dataset, kb: KnowledgeBase, spec: SyntheticSpec,
                  out_dir: str | Path) -> dict[str, Path]:
    """Write data/events/labels CSVs, the KB, and an experiment file (stable bytes)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "data": out / "data.csv",
        "events": out / "events.csv",
        "labels": out / "labels.csv",
        "kb": out / "synthetic.kb",
        "experiment": out / "experiment.cfg",
    }
    with open(paths["data"], "w") as fh:
        for entity in sorted(dataset.samples):
            for concept in sorted(dataset.samples[entity]):
                for s in dataset.samples[entity][concept]:
                    fh.write(f"{entity},{concept},{s.time},{s.value:.4f}\n")
    with open(paths["events"], "w") as fh:
        for entity in sorted(dataset.events):
            for event in dataset.events[entity]:
                fh.write(f"{entity},{event.name},{event.time}\n")
    with open(paths["labels"], "w") as fh:
        for entity in sorted(dataset.labels):
            fh.write(f"{entity},{dataset.labels[entity]}\n")
    paths["kb"].write_text(serialize_knowledge_base(kb))
    paths["experiment"].write_text(default_experiment_text(spec))
    return paths
