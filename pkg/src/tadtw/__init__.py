"""Interval-based temporal abstraction and banded DTW matching.

The pipeline turns irregular time-stamped records into normalized interval
sequences (state, gradient, or scaled raw), scopes them to a per-entity
matching window, resamples them onto fixed time granules, and compares
entities with a banded multivariate dynamic-time-warping distance feeding
KNN classification experiments.
"""

from .abstraction import (
    RawScaler,
    abstract_gradient,
    abstract_state,
    fit_raw_scaler,
    gradient_scale,
    normalize_raw,
    normalize_symbolic,
)
from .experiments import (
    Dataset,
    ExperimentError,
    ExperimentResult,
    ExperimentSpec,
    MatchConfig,
    aggregate_by_representation,
    enumerate_experiments,
    experiment_count,
    parse_experiment_file,
    run_cv,
    run_grid,
    stratified_folds,
)
from .granularity import (
    AggregationConfig,
    EmptyRowError,
    aggregate,
    build_row,
    export_event_table,
    interpolate_row,
    segment,
    segment_sequence,
)
from .kb import (
    ConceptDef,
    KbError,
    KbParseError,
    KbValidationError,
    KnowledgeBase,
    OutOfRangeError,
    StateDef,
    VariationSpec,
    load_bundled_kb,
    load_knowledge_base,
    parse_knowledge_base,
    serialize_knowledge_base,
    state_for_symbol,
    state_for_value,
)
from .metrics import (
    UndefinedMetricError,
    k_values,
    knn_posterior,
    nearest_neighbors,
    paired_t_test,
    roc_auc,
    roc_curve,
    youden_optimal,
)
from .scoping import (
    AbsoluteTimeline,
    ConfigurationError,
    EntityExcluded,
    MatchingScope,
    RelativeTimeline,
    compute_matching_scope,
    resolve_reference_point,
    restrict,
    restrict_multivariate,
)
from .synthetic import SyntheticConcept, SyntheticSpec, default_spec, generate
from .temporal import (
    DAY,
    HOUR,
    MINUTE,
    MONTH,
    YEAR,
    Event,
    EventTable,
    IngestError,
    Interval,
    MultivariateESequence,
    Sample,
    UnivariateESequence,
    duration_in_granules,
    load_events,
    load_labels,
    load_samples,
    parse_duration,
    parse_time_unit,
    parse_timestamp,
)
from .warping import (
    InfeasibleBandError,
    KnowledgeBand,
    SakoeChibaPercent,
    Unconstrained,
    dtw_cost_matrix,
    dtw_distance,
    kb_band_radius,
    local_distance,
)

__version__ = "0.1.0"
