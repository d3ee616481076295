import pytest
from hypothesis import given, strategies as st

from tadtw.granularity import (
    AggregationConfig,
    EmptyRowError,
    aggregate,
    build_row,
    export_event_table,
    interpolate_row,
    segment,
    segment_sequence,
)
from tadtw.scoping import MatchingScope
from tadtw.temporal import (
    DAY,
    HOUR,
    EventTable,
    Interval,
    MultivariateESequence,
    UnivariateESequence,
)

MEAN_MTT = AggregationConfig("mean", "MTT")
MEAN_LI = AggregationConfig("mean", "LI")


def test_segment_exact_tiling():
    scope = MatchingScope(0, 3 * DAY)
    buckets = segment_sequence([Interval(0, 3 * DAY, 0.5)], scope, DAY)
    assert buckets == [[(0.5, DAY)], [(0.5, DAY)], [(0.5, DAY)]]


def test_segment_half_coverage():
    # noon to noon covers half of two consecutive days
    scope = MatchingScope(0, 2 * DAY)
    buckets = segment_sequence([Interval(12 * HOUR, DAY + 12 * HOUR, 0.5)], scope, DAY)
    assert buckets == [[(0.5, 12 * HOUR)], [(0.5, 12 * HOUR)]]


def test_segment_empty_sequence():
    scope = MatchingScope(0, 5 * DAY)
    buckets = segment_sequence([], scope, DAY)
    assert buckets == [[]] * 5


def test_segment_points():
    scope = MatchingScope(0, 2 * DAY)
    buckets = segment_sequence([Interval(10, 10, 0.3), Interval(2 * DAY, 2 * DAY, 0.7)],
                               scope, DAY)
    assert buckets[0] == [(0.3, 1)]
    assert buckets[1] == [(0.7, 1)]  # point at the scope end lands in the last column


def test_segment_multivariate_column_count():
    scope = MatchingScope(0, DAY + 1)  # partial trailing granule counts
    mseq = MultivariateESequence("e", {
        "A": UnivariateESequence("A", (Interval(0, DAY, 0.1),)),
        "B": UnivariateESequence("B", ()),
    })
    table = segment(mseq, scope, DAY)
    assert table.column_count == 2
    assert len(table.buckets["A"]) == len(table.buckets["B"]) == 2


@given(st.integers(0, 3) , st.data())
def test_segment_conserves_duration(pad, data):
    granule = data.draw(st.sampled_from([7, 60, 1440]))
    n_cols = data.draw(st.integers(1, 12))
    scope = MatchingScope(pad * granule, pad * granule + n_cols * granule)
    start = data.draw(st.integers(scope.start, scope.end - 1))
    end = data.draw(st.integers(start + 1, scope.end))
    buckets = segment_sequence([Interval(start, end, 0.5)], scope, granule)
    assert sum(d for bucket in buckets for _, d in bucket) == end - start


def test_aggregate_value_based():
    bucket = [(0.2, HOUR), (0.4, HOUR), (0.6, HOUR)]
    assert aggregate(bucket, MEAN_MTT) == pytest.approx(0.4)
    assert aggregate(bucket, AggregationConfig("median", "MTT")) == pytest.approx(0.4)
    assert aggregate([(0.2, 5), (0.2, 5), (0.9, 5)], AggregationConfig("mode", "MTT")) == 0.2
    # mode ties break toward the earliest segment's value
    assert aggregate([(0.9, 5), (0.2, 5)], AggregationConfig("mode", "MTT")) == 0.9


def test_aggregate_duration_based_witness():
    # (HIGH, 5h), (LOW, 3h), (LOW, 3h): MTT picks LOW (6h total), LI picks HIGH
    bucket = [(0.9, 5 * HOUR), (0.1, 3 * HOUR), (0.1, 3 * HOUR)]
    assert aggregate(bucket, MEAN_MTT) == 0.1
    assert aggregate(bucket, MEAN_LI) == 0.9


def test_aggregate_tie_rules():
    # MTT total-duration tie -> higher normalized value
    assert aggregate([(0.2, 5), (0.8, 5), (0.3, 2)], MEAN_MTT) == 0.8
    # LI longest-segment tie -> earlier segment
    assert aggregate([(0.4, 5), (0.9, 5), (0.1, 3)], MEAN_LI) == 0.4


def test_aggregate_single_segment_any_config():
    for cfg in (MEAN_MTT, MEAN_LI, AggregationConfig("median", "LI"),
                AggregationConfig("mode", "MTT")):
        assert aggregate([(0.37, 123)], cfg) == 0.37
    with pytest.raises(ValueError):
        aggregate([], MEAN_MTT)


def test_interpolate_linear():
    row = [0.0, None, None, None, 1.0]
    assert interpolate_row(row, "linear") == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_interpolate_average():
    row = [0.0, None, None, None, 1.0]
    assert interpolate_row(row, "average") == [0.0, 0.5, 0.5, 0.5, 1.0]


def test_interpolate_nearest_tie_prefers_earlier():
    row = [0.2, None, 0.8]
    assert interpolate_row(row, "nearest") == [0.2, 0.2, 0.8]
    row = [0.2, None, None, None, 0.8]
    assert interpolate_row(row, "nearest") == [0.2, 0.2, 0.2, 0.8, 0.8]


def test_interpolate_edges_copy_single_neighbor():
    for method in ("nearest", "linear", "average"):
        assert interpolate_row([None, None, 0.4, None], method) == [0.4, 0.4, 0.4, 0.4]


def test_interpolate_errors():
    with pytest.raises(EmptyRowError):
        interpolate_row([None, None], "linear")
    with pytest.raises(ValueError, match="unknown interpolation"):
        interpolate_row([0.1], "spline")
    with pytest.raises(ValueError, match="source intervals"):
        interpolate_row([0.1, None, 0.2], "ibap")


def test_ibap_two_one_split():
    # 2-day HIGH, 3-day gap, 1-day LOW: gap days go HIGH, HIGH, LOW
    intervals = [Interval(0, 2 * DAY, 0.9, "HIGH"), Interval(5 * DAY, 6 * DAY, 0.1, "LOW")]
    scope = MatchingScope(0, 6 * DAY)
    row = build_row(intervals, scope, DAY, MEAN_MTT, "ibap")
    assert row == [0.9, 0.9, 0.9, 0.9, 0.1, 0.1]


def test_ibap_point_neighbors_count_one_unit():
    # both neighbors are points (duration 1 each): 3-cell gap splits 2 | 1
    # because the left share rounds half up
    intervals = [Interval(0, 0, 0.9), Interval(4 * DAY, 4 * DAY, 0.1)]
    scope = MatchingScope(0, 5 * DAY)
    row = build_row(intervals, scope, DAY, MEAN_MTT, "ibap")
    assert row == [0.9, 0.9, 0.9, 0.1, 0.1]


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 8))
def test_ibap_partition_sums_to_gap(d_left, d_right, gap):
    intervals = [Interval(0, d_left * DAY, 0.9),
                 Interval((d_left + gap) * DAY, (d_left + gap + d_right) * DAY, 0.1)]
    scope = MatchingScope(0, (d_left + gap + d_right) * DAY)
    row = build_row(intervals, scope, DAY, MEAN_MTT, "ibap")
    gap_cells = row[d_left:d_left + gap]
    n_left = sum(1 for v in gap_cells if v == 0.9)
    n_right = sum(1 for v in gap_cells if v == 0.1)
    assert n_left + n_right == gap
    # left block precedes right block
    assert gap_cells == [0.9] * n_left + [0.1] * n_right


@given(st.lists(st.one_of(st.none(), st.floats(0, 1)), min_size=1, max_size=30),
       st.sampled_from(["nearest", "linear", "average"]))
def test_interpolation_stays_within_observed_bounds(row, method):
    filled = [v for v in row if v is not None]
    if not filled:
        with pytest.raises(EmptyRowError):
            interpolate_row(row, method)
        return
    out = interpolate_row(row, method)
    assert len(out) == len(row)
    for v in out:
        assert min(filled) - 1e-12 <= v <= max(filled) + 1e-12


def test_build_row_and_export():
    intervals = [Interval(0, 2 * DAY, 0.4, "NORMAL")]
    scope = MatchingScope(0, 4 * DAY)
    row = build_row(intervals, scope, DAY, MEAN_MTT, "nearest")
    assert row == [0.4, 0.4, 0.4, 0.4]
    table = EventTable("e1", DAY, 4, {"X.state": row})
    text = export_event_table(table)
    lines = text.splitlines()
    assert lines[0] == "entity,e1,granularity,1440,columns,4"
    assert lines[1].startswith("X.state,0.4,")
