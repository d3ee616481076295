"""Experiment grid: configuration enumeration, 10-fold CV, and aggregation.

A configuration fixes the concept subset, a representation per concept (all
raw or all abstract), the interpolation method, the duration delegate, the
warping band, and the neighbor count.  The grid materializes every
combination; its size obeys the closed form

    sum_{k=1..max_concepts} C(C, k) * (3^k + 1)  *  (i * a * w * n)

Runs are deterministic: folds derive from the seed only, distance ties break
on entity ids, and report files are byte-identical for identical inputs
regardless of worker count.
"""

from __future__ import annotations

import json
import logging
import math
import multiprocessing
import random
import time
from collections import Counter
from dataclasses import dataclass
from itertools import combinations, product
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

from .abstraction import REPRESENTATION_KINDS, fit_raw_scaler
from .granularity import AggregationConfig
from .kb import KnowledgeBase
from .metrics import (
    UndefinedMetricError,
    k_values,
    knn_posterior,
    paired_t_test,
    roc_auc,
    youden_optimal,
)
from .pipeline import (
    abstract_event_table,
    raw_event_table,
    raw_scope_points,
    resolve_scope,
)
from .scoping import AbsoluteTimeline, EntityExcluded, RelativeTimeline, TimelineSpec
from .temporal import Event, Sample, parse_duration, parse_time_unit, parse_timestamp
from .warping import (
    BandPolicy,
    KnowledgeBand,
    SakoeChibaPercent,
    Unconstrained,
    dtw_distance_matrixin,
    kb_band_radius,
    table_matrix,
)

log = logging.getLogger(__name__)

ABSTRACT_CODES = ("S", "G", "SG")


class ExperimentError(RuntimeError):
    """A configuration cannot be evaluated on this dataset."""


@dataclass(frozen=True)
class Dataset:
    """Samples, reference events, and class labels of one cohort."""

    samples: dict[str, dict[str, list[Sample]]]
    events: dict[str, list[Event]]
    labels: dict[str, str]

    def entities(self) -> list[str]:
        return sorted(self.labels)


def band_token(band: BandPolicy) -> str:
    if isinstance(band, Unconstrained):
        return "none"
    if isinstance(band, SakoeChibaPercent):
        return f"sc{band.percent:g}"
    return f"kb{band.radius_granules}"


def band_from_token(token: str) -> BandPolicy:
    if token == "none":
        return Unconstrained()
    if token.startswith("sc"):
        return SakoeChibaPercent(float(token[2:]))
    if token.startswith("kb"):
        return KnowledgeBand(int(token[2:]))
    raise ValueError(f"unknown band token {token!r}")


@dataclass(frozen=True)
class MatchConfig:
    """One point of the experiment grid.

    representations holds one code per concept ('R', 'S', 'G', 'SG'); a
    config is either all raw or all abstract, never mixed.
    """

    concepts: tuple[str, ...]
    representations: tuple[str, ...]
    interpolation: str
    duration_delegate: str
    band: BandPolicy
    k: int
    timeline: TimelineSpec
    granularity: int
    value_delegate: str = "mean"

    def __post_init__(self):
        if len(self.concepts) != len(self.representations):
            raise ValueError("one representation per concept required")
        if not self.concepts:
            raise ValueError("need at least one concept")
        codes = set(self.representations)
        if not codes <= {"R", *ABSTRACT_CODES}:
            raise ValueError(f"unknown representation code in {self.representations}")
        if "R" in codes and len(codes) > 1:
            raise ValueError("raw and abstract representations cannot be mixed")
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError(f"k must be a positive odd integer, got {self.k}")

    @property
    def is_raw(self) -> bool:
        return self.representations[0] == "R"

    def features(self) -> list[tuple[str, str, str]]:
        """(feature name, concept, kind) rows this config contributes."""
        out = []
        for concept, code in zip(self.concepts, self.representations):
            for kind in REPRESENTATION_KINDS[code]:
                out.append((f"{concept}.{kind}", concept, kind))
        return out

    def representation_key(self) -> str:
        """Unordered multiset of representation codes, e.g. 'S+SG'."""
        return "+".join(sorted(self.representations))

    def config_id(self) -> str:
        feats = "+".join(f"{c}={r}" for c, r in zip(self.concepts, self.representations))
        return (f"{feats}|i={self.interpolation}|a={self.duration_delegate}"
                f"|w={band_token(self.band)}|k={self.k}")

    def aggregation(self) -> AggregationConfig:
        return AggregationConfig(self.value_delegate, self.duration_delegate)


class ParsedConfigId(NamedTuple):
    concepts: tuple[str, ...]
    representations: tuple[str, ...]
    interpolation: str
    duration_delegate: str
    band_token: str
    k: int

    @property
    def is_raw(self) -> bool:
        return all(r == "R" for r in self.representations)

    def representation_key(self) -> str:
        return "+".join(sorted(self.representations))

    def pairing_coordinate(self) -> tuple:
        """Everything but the representations; raw twins share this."""
        return (self.concepts, self.interpolation, self.duration_delegate,
                self.band_token, self.k)


def parse_config_id(config_id: str) -> ParsedConfigId:
    feats, *settings = config_id.split("|")
    pairs = [f.split("=") for f in feats.split("+")]
    kv = dict(s.split("=", 1) for s in settings)
    return ParsedConfigId(
        concepts=tuple(p[0] for p in pairs),
        representations=tuple(p[1] for p in pairs),
        interpolation=kv["i"],
        duration_delegate=kv["a"],
        band_token=kv["w"],
        k=int(kv["k"]),
    )


def experiment_count(n_concepts: int, max_concepts: int, n_interpolations: int,
                     n_aggregations: int, n_windows: int, n_ks: int) -> int:
    """Closed-form grid size for the given dimension cardinalities."""
    if max_concepts > n_concepts:
        raise ValueError("max_concepts cannot exceed the number of concepts")
    combos = sum(math.comb(n_concepts, k) * (3 ** k + 1)
                 for k in range(1, max_concepts + 1))
    return combos * n_interpolations * n_aggregations * n_windows * n_ks


def enumerate_experiments(concepts: Sequence[str], max_concepts: int,
                          interpolations: Sequence[str], delegates: Sequence[str],
                          band_tokens: Sequence[str], ks: Sequence[int],
                          timeline: TimelineSpec, granularity: int,
                          kb: KnowledgeBase | None = None,
                          value_delegate: str = "mean") -> list[MatchConfig]:
    """Materialize every configuration of the grid in deterministic order.

    Band tokens are "none", "sc<percent>", or "kb"; the knowledge band is
    resolved per concept subset from the KB persistence values.
    """
    names = sorted(concepts)
    configs: list[MatchConfig] = []
    for size in range(1, max_concepts + 1):
        for subset in combinations(names, size):
            bands = []
            for token in band_tokens:
                if token == "kb":
                    if kb is None:
                        raise ValueError("'kb' band token requires a knowledge base")
                    radius = kb_band_radius([kb.concept(c) for c in subset], granularity)
                    bands.append(KnowledgeBand(radius))
                else:
                    bands.append(band_from_token(token))
            rep_options = [("R",) * size, *product(ABSTRACT_CODES, repeat=size)]
            for reps in rep_options:
                for interpolation in interpolations:
                    for delegate in delegates:
                        for band in bands:
                            for k in ks:
                                configs.append(MatchConfig(
                                    subset, reps, interpolation, delegate, band,
                                    k, timeline, granularity, value_delegate))
    return configs


def stratified_folds(labels: Mapping[str, str], n_folds: int, seed: int) -> list[list[str]]:
    """Seeded, class-stratified partition; fold sizes differ by at most one."""
    rng = random.Random(seed)
    folds: list[list[str]] = [[] for _ in range(n_folds)]
    pointer = 0
    for cls in sorted(set(labels.values())):
        members = sorted(e for e in labels if labels[e] == cls)
        rng.shuffle(members)
        for entity in members:
            folds[pointer % n_folds].append(entity)
            pointer += 1
    return [sorted(fold) for fold in folds]


class FoldMetrics(NamedTuple):
    fold: int
    auc: float
    youden_j: float
    sensitivity: float
    specificity: float
    threshold: float


@dataclass
class ExperimentResult:
    """Cross-validated metrics of one configuration."""

    config_id: str
    fold_aucs: tuple[float | None, ...]
    fold_metrics: tuple[FoldMetrics, ...]
    mean_auc: float
    mean_sensitivity: float
    mean_specificity: float
    folds_scored: int
    n_entities: int
    wall_time: float


def run_cv(dataset: Dataset, kb: KnowledgeBase, config: MatchConfig,
           folds: int = 10, seed: int = 0,
           positive_label: str | None = None) -> ExperimentResult:
    """Stratified k-fold cross-validation of one configuration.

    Per fold, raw-value scalers are fitted on the training entities only and
    applied to everyone; each test entity is scored with the positive-class
    KNN posterior over its distances to the training entities.  Folds whose
    test split ends up single-class are excluded from the fold mean with a
    warning; a training split missing a class aborts the configuration.
    """
    start_time = time.monotonic()
    agg = config.aggregation()
    scopes: dict[str, object] = {}
    excluded: dict[str, str] = {}
    for entity in dataset.entities():
        try:
            scopes[entity] = resolve_scope(dataset.events, config.timeline, entity)
        except EntityExcluded as exc:
            excluded[entity] = exc.reason

    tables = {}
    raw_points = {}
    if config.is_raw:
        for entity in sorted(scopes):
            try:
                raw_points[entity] = raw_scope_points(
                    dataset.samples, entity, config.concepts, scopes[entity])
            except EntityExcluded as exc:
                excluded[entity] = exc.reason
        included = sorted(raw_points)
    else:
        feature_specs = [(c, kind) for _, c, kind in config.features()]
        for entity in sorted(scopes):
            try:
                tables[entity] = abstract_event_table(
                    dataset.samples, kb, entity, feature_specs, scopes[entity],
                    config.granularity, config.interpolation, agg)
            except EntityExcluded as exc:
                excluded[entity] = exc.reason
        included = sorted(tables)

    for entity in sorted(excluded):
        log.info("excluded %s: %s", entity, excluded[entity])

    labels = {e: dataset.labels[e] for e in included}
    class_counts = Counter(labels.values())
    if len(class_counts) < 2:
        raise ExperimentError("fewer than two classes remain after exclusions")
    if min(class_counts.values()) < folds:
        raise ExperimentError(
            f"need >= {folds} entities per class after exclusions, have {dict(class_counts)}"
        )
    classes = sorted(class_counts)
    positive = positive_label if positive_label is not None else classes[-1]
    if positive not in class_counts:
        raise ExperimentError(f"positive label {positive!r} absent from the data")

    fold_sets = stratified_folds(labels, folds, seed)
    matrices = {e: table_matrix(tables[e]) for e in included} if not config.is_raw else {}

    fold_aucs: list[float | None] = []
    fold_metrics: list[FoldMetrics] = []
    sens, specs = [], []
    for fold_idx, test_entities in enumerate(fold_sets):
        test_set = set(test_entities)
        train = [e for e in included if e not in test_set]
        train_labels = {e: labels[e] for e in train}
        if len(set(train_labels.values())) < 2:
            raise ExperimentError(f"fold {fold_idx}: a class is absent from training")
        if config.k > len(train):
            raise ExperimentError(f"k={config.k} exceeds training size {len(train)}")

        if config.is_raw:
            scalers = {
                concept: fit_raw_scaler(
                    float(s.value) for e in train for s in raw_points[e][concept])
                for concept in config.concepts
            }
            fold_tables = {
                e: raw_event_table(raw_points[e], scalers, e, scopes[e],
                                   config.granularity, config.interpolation, agg)
                for e in included
            }
            fold_matrices = {e: table_matrix(fold_tables[e]) for e in included}
        else:
            fold_matrices = matrices

        scores, truth = [], []
        for test_entity in sorted(test_entities):
            distances = {
                tr: dtw_distance_matrixin(fold_matrices[test_entity],
                                          fold_matrices[tr], config.band)
                for tr in train
            }
            posterior = knn_posterior(distances, train_labels, config.k)
            scores.append(posterior.get(positive, 0.0))
            truth.append(labels[test_entity] == positive)

        try:
            auc = roc_auc(scores, truth)
            point = youden_optimal(scores, truth)
        except UndefinedMetricError:
            log.warning("%s: fold %d is single-class; excluded from the fold mean",
                        config.config_id(), fold_idx)
            fold_aucs.append(None)
            continue
        fold_aucs.append(auc)
        fold_metrics.append(FoldMetrics(fold_idx, auc, point.j, point.sensitivity,
                                        point.specificity, point.threshold))
        sens.append(point.sensitivity)
        specs.append(point.specificity)

    scored = [a for a in fold_aucs if a is not None]
    if not scored:
        raise ExperimentError("no fold produced a defined AUC")
    return ExperimentResult(
        config_id=config.config_id(),
        fold_aucs=tuple(fold_aucs),
        fold_metrics=tuple(fold_metrics),
        mean_auc=sum(scored) / len(scored),
        mean_sensitivity=sum(sens) / len(sens),
        mean_specificity=sum(specs) / len(specs),
        folds_scored=len(scored),
        n_entities=len(included),
        wall_time=time.monotonic() - start_time,
    )


@dataclass
class GroupSummary:
    """Aggregate of all configs sharing one representation multiset."""

    key: str
    n_configs: int
    mean_auc: float
    variance: float
    aucs: tuple[float, ...]
    t_vs_raw: float | None = None
    p_vs_raw: float | None = None


def aggregate_by_representation(results: Iterable[tuple[str, float]]) -> list[GroupSummary]:
    """Group per-config mean AUCs by representation multiset and test against raw.

    Each abstract config pairs with the raw config sharing its concept
    subset, interpolation, delegate, band, and k (the raw value repeats when
    several orderings of a multiset share the coordinate); the paired t-test
    runs on those vectors.  The grouping key ignores concept order.
    """
    parsed: list[tuple[str, ParsedConfigId, float]] = [
        (cid, parse_config_id(cid), auc) for cid, auc in results
    ]
    parsed.sort(key=lambda item: item[0])
    raw_by_coordinate = {
        p.pairing_coordinate(): auc for _, p, auc in parsed if p.is_raw
    }
    groups: dict[str, list[tuple[ParsedConfigId, float]]] = {}
    for _, p, auc in parsed:
        groups.setdefault(p.representation_key(), []).append((p, auc))

    out = []
    for key in sorted(groups):
        members = groups[key]
        aucs = [auc for _, auc in members]
        mean = sum(aucs) / len(aucs)
        variance = sum((a - mean) ** 2 for a in aucs) / len(aucs)
        summary = GroupSummary(key, len(members), mean, variance, tuple(aucs))
        if not members[0][0].is_raw:
            pairs = [(auc, raw_by_coordinate[p.pairing_coordinate()])
                     for p, auc in members if p.pairing_coordinate() in raw_by_coordinate]
            if len(pairs) >= 2:
                abstract_vec = [a for a, _ in pairs]
                raw_vec = [r for _, r in pairs]
                summary.t_vs_raw, summary.p_vs_raw = paired_t_test(abstract_vec, raw_vec)
        out.append(summary)
    return out


@dataclass
class ExperimentSpec:
    """Parsed experiment file: the grid dimensions and shared settings."""

    concepts: tuple[str, ...]
    max_concepts: int
    timeline: TimelineSpec
    granularity: int
    interpolations: tuple[str, ...] = ("nearest", "linear", "average")
    aggregations: tuple[str, ...] = ("MTT", "LI")
    bands: tuple[str, ...] = ("sc10", "none")
    ks: tuple[int, ...] | None = None
    positive_label: str | None = None
    folds: int = 10


def _parse_granularity(text: str) -> int:
    try:
        return parse_time_unit(text)
    except ValueError:
        return parse_duration(text)


def _parse_timeline(section: Mapping[str, str]) -> TimelineSpec:
    kind = section.get("kind", "relative").strip().lower()
    if kind == "absolute":
        return AbsoluteTimeline(parse_timestamp(section["start"]),
                                parse_timestamp(section["end"]))
    if kind != "relative":
        raise ValueError(f"unknown timeline kind {kind!r}")
    selection_text = section.get("selection", "first").strip().lower()
    selection: str | int = selection_text
    if selection_text not in ("first", "last"):
        selection = int(selection_text)
    return RelativeTimeline(
        reference_concept=section["reference_concept"].strip(),
        aspect=section.get("aspect", "start_time").strip(),
        selection=selection,
        before_period=parse_duration(section.get("before_period", "0")),
        after_period=parse_duration(section.get("after_period", "0")),
    )


def parse_experiment_file(path: str) -> ExperimentSpec:
    """Read the sectioned key=value experiment configuration file."""
    import configparser

    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep keys case-sensitive
    with open(path) as fh:
        parser.read_file(fh)
    exp = parser["experiment"]
    if "timeline" not in parser:
        raise ValueError(f"{path}: missing [timeline] section")
    timeline = _parse_timeline(parser["timeline"])

    def split(key: str, default: str | None = None) -> tuple[str, ...]:
        raw = exp.get(key, default)
        if raw is None:
            raise ValueError(f"{path}: missing {key!r}")
        return tuple(part.strip() for part in raw.split(",") if part.strip())

    concepts = split("concepts")
    ks = None
    if exp.get("ks"):
        ks = tuple(int(x) for x in split("ks"))
    return ExperimentSpec(
        concepts=concepts,
        max_concepts=int(exp.get("max_concepts", str(min(3, len(concepts))))),
        timeline=timeline,
        granularity=_parse_granularity(exp.get("granularity", "Day")),
        interpolations=split("interpolations", "nearest,linear,average"),
        aggregations=split("aggregations", "MTT,LI"),
        bands=split("bands", "sc10,none"),
        ks=ks,
        positive_label=exp.get("positive_label") or None,
        folds=int(exp.get("folds", "10")),
    )


def spec_configs(spec: ExperimentSpec, dataset: Dataset,
                 kb: KnowledgeBase) -> list[MatchConfig]:
    """Materialize the grid of an experiment spec against a dataset."""
    ks = spec.ks if spec.ks is not None else tuple(k_values(len(dataset.labels)))
    return enumerate_experiments(
        spec.concepts, spec.max_concepts, spec.interpolations, spec.aggregations,
        spec.bands, ks, spec.timeline, spec.granularity, kb=kb)


# --- grid runner -----------------------------------------------------------

_WORKER_CTX: dict = {}


def _init_worker(dataset, kb, folds, seed, positive_label):
    _WORKER_CTX.update(dataset=dataset, kb=kb, folds=folds, seed=seed,
                       positive_label=positive_label)


def _run_one(config: MatchConfig) -> dict:
    ctx = _WORKER_CTX
    cid = config.config_id()
    try:
        result = run_cv(ctx["dataset"], ctx["kb"], config, folds=ctx["folds"],
                        seed=ctx["seed"], positive_label=ctx["positive_label"])
    except ExperimentError as exc:
        return {"config_id": cid, "status": "aborted", "reason": str(exc)}
    return {
        "config_id": cid,
        "status": "ok",
        "fold_metrics": [list(fm) for fm in result.fold_metrics],
        "fold_aucs": list(result.fold_aucs),
        "mean_auc": result.mean_auc,
        "mean_sensitivity": result.mean_sensitivity,
        "mean_specificity": result.mean_specificity,
        "folds_scored": result.folds_scored,
        "n_entities": result.n_entities,
        "wall_time": result.wall_time,
    }


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.10g}"


def write_reports(configs: Sequence[MatchConfig], state: Mapping[str, dict],
                  out_dir: Path, canonical_delegate: str) -> None:
    """Write metrics.csv / results.csv / aggregate.csv in enumeration order.

    These files are deterministic for identical inputs; wall times go to
    timing.log only.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_lines = ["config_id,fold,auc,youden_j,sensitivity,specificity,threshold"]
    results_lines = ["config_id,status,folds_scored,mean_auc,mean_sensitivity,"
                     "mean_specificity,raw_duplicate"]
    timing_lines = []
    scored: list[tuple[str, float]] = []
    for config in configs:
        cid = config.config_id()
        row = state[cid]
        raw_dup = "yes" if (config.is_raw
                            and config.duration_delegate != canonical_delegate) else "no"
        if row["status"] != "ok":
            results_lines.append(f"{cid},aborted,0,,,,{raw_dup}")
            continue
        for fm in row["fold_metrics"]:
            fold, auc, j, sens, spec, threshold = fm
            metrics_lines.append(
                f"{cid},{fold},{_fmt(auc)},{_fmt(j)},{_fmt(sens)},{_fmt(spec)},"
                f"{_fmt(threshold)}")
        results_lines.append(
            f"{cid},ok,{row['folds_scored']},{_fmt(row['mean_auc'])},"
            f"{_fmt(row['mean_sensitivity'])},{_fmt(row['mean_specificity'])},{raw_dup}")
        timing_lines.append(f"{cid}\t{row['wall_time']:.3f}")
        scored.append((cid, row["mean_auc"]))

    aggregate_lines = ["representation,n_configs,mean_auc,variance,p_vs_raw"]
    for group in aggregate_by_representation(scored):
        aggregate_lines.append(
            f"{group.key},{group.n_configs},{_fmt(group.mean_auc)},"
            f"{_fmt(group.variance)},{_fmt(group.p_vs_raw)}")

    (out_dir / "metrics.csv").write_text("\n".join(metrics_lines) + "\n")
    (out_dir / "results.csv").write_text("\n".join(results_lines) + "\n")
    (out_dir / "aggregate.csv").write_text("\n".join(aggregate_lines) + "\n")
    (out_dir / "timing.log").write_text("\n".join(timing_lines) + "\n")


def run_grid(dataset: Dataset, kb: KnowledgeBase, spec: ExperimentSpec,
             seed: int, out_dir: str | Path, workers: int = 1,
             resume: bool = False) -> list[MatchConfig]:
    """Run (or resume) the full grid and write the report files.

    Completed configurations checkpoint to state.jsonl; --resume skips them.
    Reports are rewritten from the full state at the end, so byte content is
    independent of worker count and of interruption points.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    configs = spec_configs(spec, dataset, kb)
    ids = [c.config_id() for c in configs]
    if len(set(ids)) != len(ids):
        raise ExperimentError("duplicate config ids in grid")

    state_path = out / "state.jsonl"
    state: dict[str, dict] = {}
    if resume and state_path.exists():
        with open(state_path) as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    state[row["config_id"]] = row
        log.info("resuming: %d of %d configs already done", len(state), len(configs))
    else:
        state_path.write_text("")

    todo = [c for c in configs if c.config_id() not in state]
    init_args = (dataset, kb, spec.folds, seed, spec.positive_label)
    with open(state_path, "a") as fh:
        if workers > 1 and todo:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(workers, initializer=_init_worker, initargs=init_args) as pool:
                for row in pool.imap(_run_one, todo, chunksize=1):
                    state[row["config_id"]] = row
                    fh.write(json.dumps(row) + "\n")
                    fh.flush()
        else:
            _init_worker(*init_args)
            for config in todo:
                row = _run_one(config)
                state[row["config_id"]] = row
                fh.write(json.dumps(row) + "\n")
                fh.flush()

    write_reports(configs, state, out, canonical_delegate=spec.aggregations[0])
    return configs
