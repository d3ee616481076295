import pytest
from hypothesis import given, strategies as st

from tadtw.temporal import (
    DAY,
    HOUR,
    MONTH,
    YEAR,
    IngestError,
    Sample,
    duration_in_granules,
    load_events,
    load_labels,
    load_samples,
    parse_duration,
    parse_time_unit,
    parse_timestamp,
)


def test_time_units():
    assert parse_time_unit("Day") == DAY == 1440
    assert parse_time_unit("months") == MONTH == 30 * DAY
    assert parse_time_unit("Years") == YEAR == 365 * DAY
    assert parse_time_unit("hour") == HOUR
    with pytest.raises(ValueError):
        parse_time_unit("fortnight")


def test_parse_duration():
    assert parse_duration("1 Day") == 1440
    assert parse_duration("3 Months") == 3 * 30 * 1440
    assert parse_duration("2 Years") == 2 * 365 * 1440
    assert parse_duration("20") == 20
    with pytest.raises(ValueError):
        parse_duration("soon")


def test_parse_timestamp():
    assert parse_timestamp("720") == 720
    assert parse_timestamp("1970-01-02") == 1440
    assert parse_timestamp("1970-01-01T01:00") == 60
    with pytest.raises(ValueError):
        parse_timestamp("not-a-time")


def test_duration_in_granules_examples():
    assert duration_in_granules(0, 10 * DAY, DAY) == 10
    assert duration_in_granules(0, 1441, DAY) == 2  # partial granule counts
    assert duration_in_granules(500, 500, DAY) == 0


@given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6),
       st.sampled_from([1, 60, 1440, 43200]))
def test_duration_monotone(start, d1, d2, granule):
    end = start + d1
    assert duration_in_granules(start, end, granule) <= duration_in_granules(
        start, end + d2, granule)
    assert duration_in_granules(start, end + d2, granule) >= duration_in_granules(
        start + min(d2, d1), end + d2, granule)


@given(st.integers(0, 10**5), st.integers(0, 10**5), st.integers(0, 10**5),
       st.sampled_from([7, 60, 1440]))
def test_duration_concatenation(a, d1, d2, granule):
    b, c = a + d1, a + d1 + d2
    total = duration_in_granules(a, c, granule)
    split = duration_in_granules(a, b, granule) + duration_in_granules(b, c, granule)
    assert split >= total
    if (b - a) % granule == 0:
        assert split == total


def test_load_samples(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text(
        "# comment line\n"
        "e1,WBC,2880,4.2\n"
        "e1,WBC,1440,3.9\n"
        "e1,FLAG,1440,TRUE\n"
        "e2,WBC,1970-01-02,5.0\n"
    )
    samples = load_samples(str(path))
    assert [s.time for s in samples["e1"]["WBC"]] == [1440, 2880]
    assert samples["e1"]["FLAG"][0] == Sample(1440, "TRUE")
    assert samples["e2"]["WBC"][0].time == 1440


def test_load_samples_rejects_duplicates(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("e1,WBC,10,1.0\ne1,WBC,10,2.0\n")
    with pytest.raises(IngestError, match="duplicate timestamp"):
        load_samples(str(path))


def test_load_samples_field_count(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("e1,WBC,10\n")
    with pytest.raises(IngestError, match="expected 4 fields"):
        load_samples(str(path))


def test_load_events_sorted(tmp_path):
    path = tmp_path / "events.csv"
    path.write_text("e1,BMT,400\ne1,BMT,100\ne2,BMT,50\n")
    events = load_events(str(path))
    assert [e.time for e in events["e1"]] == [100, 400]


def test_load_labels(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("e1,pos\ne2,neg\n")
    assert load_labels(str(path)) == {"e1": "pos", "e2": "neg"}
    path.write_text("e1,pos\ne1,neg\n")
    with pytest.raises(IngestError, match="duplicate label"):
        load_labels(str(path))
