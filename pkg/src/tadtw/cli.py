"""Command-line interface: inspect pipeline stages, run experiments, report."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments, synthetic
from .abstraction import abstract_gradient, abstract_state, fit_raw_scaler
from .granularity import export_event_table
from .kb import load_knowledge_base
from .metrics import k_values
from .pipeline import (
    abstract_event_table,
    raw_event_table,
    raw_scope_points,
    resolve_scope,
)
from .scoping import EntityExcluded, restrict
from .temporal import load_events, load_labels, load_samples
from .warping import dtw_cost_matrix, dtw_distance, kb_band_radius

log = logging.getLogger("tadtw")


def _add_dataset_args(parser, labels_required=False, events_required=True):
    parser.add_argument("--kb", required=True, help="knowledge-base file")
    parser.add_argument("--data", required=True, help="entity,concept,timestamp,value file")
    parser.add_argument("--events", required=events_required,
                        help="entity,event_name,timestamp file")
    parser.add_argument("--labels", required=labels_required, help="entity,label file")


def _load_dataset(args) -> experiments.Dataset:
    samples = load_samples(args.data)
    events = load_events(args.events) if getattr(args, "events", None) else {}
    labels = load_labels(args.labels) if getattr(args, "labels", None) else {}
    return experiments.Dataset(samples=samples, events=events, labels=labels)


def _add_config_args(parser):
    parser.add_argument("--config", required=True, help="experiment file (timeline etc.)")
    parser.add_argument("--concepts", required=True, help="comma-separated concept names")
    parser.add_argument("--reps", required=True,
                        help="comma-separated representation codes (R,S,G,SG)")
    parser.add_argument("--interpolation", default="linear",
                        choices=("nearest", "linear", "average", "ibap"))
    parser.add_argument("--aggregation", default="MTT", choices=("MTT", "LI"))
    parser.add_argument("--band", default="sc10", help="none, sc<percent>, or kb")
    parser.add_argument("-k", type=int, default=1, help="neighbor count (odd)")


def _single_config(args, kb) -> tuple[experiments.MatchConfig, experiments.ExperimentSpec]:
    spec = experiments.parse_experiment_file(args.config)
    concepts = tuple(c.strip() for c in args.concepts.split(","))
    reps = tuple(r.strip() for r in args.reps.split(","))
    if args.band == "kb":
        radius = kb_band_radius([kb.concept(c) for c in concepts], spec.granularity)
        band = experiments.KnowledgeBand(radius)
    else:
        band = experiments.band_from_token(args.band)
    config = experiments.MatchConfig(
        concepts=concepts, representations=reps, interpolation=args.interpolation,
        duration_delegate=args.aggregation, band=band, k=args.k,
        timeline=spec.timeline, granularity=spec.granularity)
    return config, spec


def _build_table(dataset, kb, config, entity):
    """One entity's table outside CV: raw scalers fit on the whole cohort."""
    scope = resolve_scope(dataset.events, config.timeline, entity)
    if config.is_raw:
        cohort = sorted(dataset.samples)
        scalers = {}
        for concept in config.concepts:
            values = []
            for other in cohort:
                try:
                    other_scope = resolve_scope(dataset.events, config.timeline, other)
                except EntityExcluded:
                    continue
                values.extend(
                    float(s.value) for s in dataset.samples[other].get(concept, ())
                    if other_scope.start <= s.time <= other_scope.end)
            scalers[concept] = fit_raw_scaler(values)
        points = raw_scope_points(dataset.samples, entity, config.concepts, scope)
        return raw_event_table(points, scalers, entity, scope, config.granularity,
                               config.interpolation, config.aggregation())
    features = [(c, kind) for _, c, kind in config.features()]
    return abstract_event_table(dataset.samples, kb, entity, features, scope,
                                config.granularity, config.interpolation,
                                config.aggregation())


def _cmd_synth(args) -> int:
    spec = synthetic.default_spec(noise_sd=args.noise)
    dataset, kb = synthetic.generate(spec, args.entities, args.seed)
    paths = synthetic.write_dataset(dataset, kb, spec, args.out)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


def _cmd_abstract(args) -> int:
    kb = load_knowledge_base(args.kb)
    dataset = _load_dataset(args)
    concepts = [c.strip() for c in args.concepts.split(",")]
    kinds = [k.strip() for k in args.kinds.split(",")]
    spec = experiments.parse_experiment_file(args.config) if args.config else None
    entities = [args.entity] if args.entity else sorted(dataset.samples)
    for entity in entities:
        scope = None
        if spec is not None:
            try:
                scope = resolve_scope(dataset.events, spec.timeline, entity)
            except EntityExcluded as exc:
                log.warning("%s", exc)
                continue
        for concept in concepts:
            samples = dataset.samples.get(entity, {}).get(concept, [])
            concept_def = kb.concept(concept)
            for kind in kinds:
                seq = (abstract_state(samples, concept_def) if kind == "state"
                       else abstract_gradient(samples, concept_def))
                if scope is not None:
                    seq = restrict(seq, scope)
                for iv in seq.intervals:
                    print(f"{entity},{concept},{kind},{iv.start},{iv.end},"
                          f"{iv.label},{iv.value:.10g}")
    return 0


def _cmd_represent(args) -> int:
    kb = load_knowledge_base(args.kb)
    dataset = _load_dataset(args)
    config, _ = _single_config(args, kb)
    table = _build_table(dataset, kb, config, args.entity)
    sys.stdout.write(export_event_table(table))
    return 0


def _cmd_match(args) -> int:
    kb = load_knowledge_base(args.kb)
    dataset = _load_dataset(args)
    config, _ = _single_config(args, kb)
    table_a = _build_table(dataset, kb, config, args.entity_a)
    table_b = _build_table(dataset, kb, config, args.entity_b)
    distance = dtw_distance(table_a, table_b, config.band)
    print(f"distance,{distance:.10g}")
    if args.matrix:
        for row in dtw_cost_matrix(table_a, table_b, config.band):
            print(",".join(f"{v:.10g}" for v in row))
    return 0


def _cmd_classify(args) -> int:
    kb = load_knowledge_base(args.kb)
    dataset = _load_dataset(args)
    config, spec = _single_config(args, kb)
    result = experiments.run_cv(dataset, kb, config, folds=spec.folds,
                                seed=args.seed, positive_label=spec.positive_label)
    print(f"config,{result.config_id}")
    print(f"entities,{result.n_entities}")
    print(f"mean_auc,{result.mean_auc:.10g}")
    print(f"mean_sensitivity,{result.mean_sensitivity:.10g}")
    print(f"mean_specificity,{result.mean_specificity:.10g}")
    for fm in result.fold_metrics:
        print(f"fold,{fm.fold},auc,{fm.auc:.10g},youden_j,{fm.youden_j:.10g}")
    return 0


def _cmd_grid(args) -> int:
    kb = load_knowledge_base(args.kb)
    dataset = _load_dataset(args)
    spec = experiments.parse_experiment_file(args.config)
    configs = experiments.run_grid(dataset, kb, spec, seed=args.seed,
                                   out_dir=args.out, workers=args.workers,
                                   resume=args.resume)
    print(f"configs,{len(configs)}")
    print(f"reports,{Path(args.out).resolve()}")
    return 0


def _cmd_report(args) -> int:
    per_config: dict[str, list[float]] = {}
    with open(args.metrics) as fh:
        header = fh.readline()
        if not header.startswith("config_id,fold,auc"):
            raise SystemExit(f"{args.metrics}: not a metrics file")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            config_id = ",".join(parts[:-6])
            auc = parts[-5]
            if auc:
                per_config.setdefault(config_id, []).append(float(auc))
    results = [(cid, sum(aucs) / len(aucs)) for cid, aucs in sorted(per_config.items())]
    lines = ["representation,n_configs,mean_auc,variance,p_vs_raw"]
    for group in experiments.aggregate_by_representation(results):
        p = "" if group.p_vs_raw is None else f"{group.p_vs_raw:.10g}"
        lines.append(f"{group.key},{group.n_configs},{group.mean_auc:.10g},"
                     f"{group.variance:.10g},{p}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_kvalues(args) -> int:
    print(",".join(str(k) for k in k_values(args.n)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tadtw",
        description="Temporal-abstraction DTW matching and KNN experiment grids")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic separable cohort")
    p.add_argument("--out", required=True)
    p.add_argument("--entities", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--noise", type=float, default=1.2)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("abstract", help="dump state/gradient interval sequences")
    _add_dataset_args(p, events_required=False)
    p.add_argument("--concepts", required=True)
    p.add_argument("--kinds", default="state,gradient")
    p.add_argument("--entity")
    p.add_argument("--config", help="restrict output to the experiment scope")
    p.set_defaults(func=_cmd_abstract)

    p = sub.add_parser("represent", help="dump one entity's event table")
    _add_dataset_args(p)
    _add_config_args(p)
    p.add_argument("--entity", required=True)
    p.set_defaults(func=_cmd_represent)

    p = sub.add_parser("match", help="distance between two entities")
    _add_dataset_args(p)
    _add_config_args(p)
    p.add_argument("--entity-a", required=True)
    p.add_argument("--entity-b", required=True)
    p.add_argument("--matrix", action="store_true", help="print the cost matrix")
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("classify", help="cross-validate one configuration")
    _add_dataset_args(p, labels_required=True)
    _add_config_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("grid", help="run the full experiment grid")
    _add_dataset_args(p, labels_required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("report", help="aggregate a metrics file by representation")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("kvalues", help="odd neighbor counts for a cohort size")
    p.add_argument("n", type=int)
    p.set_defaults(func=_cmd_kvalues)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
