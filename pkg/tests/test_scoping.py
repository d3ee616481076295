import pytest
from hypothesis import given, strategies as st

from tadtw.scoping import (
    AbsoluteTimeline,
    ConfigurationError,
    EntityExcluded,
    MatchingScope,
    RelativeTimeline,
    compute_matching_scope,
    resolve_reference_point,
    restrict,
)
from tadtw.temporal import DAY, MONTH, YEAR, Event, Interval, UnivariateESequence

BMT_EVENTS = [Event("BMT", 100 * DAY), Event("BMT", 400 * DAY)]


def test_reference_selection():
    spec = RelativeTimeline("BMT", selection="first")
    assert resolve_reference_point(BMT_EVENTS, spec) == 100 * DAY
    assert resolve_reference_point(BMT_EVENTS, RelativeTimeline("BMT", selection="last")) == 400 * DAY
    assert resolve_reference_point(BMT_EVENTS, RelativeTimeline("BMT", selection=2)) == 400 * DAY


def test_reference_exclusions():
    with pytest.raises(EntityExcluded, match="no instance"):
        resolve_reference_point(BMT_EVENTS, RelativeTimeline("DISCHARGE"), entity="p1")
    with pytest.raises(EntityExcluded, match="need 3"):
        resolve_reference_point(BMT_EVENTS, RelativeTimeline("BMT", selection=3), entity="p1")


def test_relative_spec_validation():
    with pytest.raises(ConfigurationError):
        RelativeTimeline("BMT", aspect="middle")
    with pytest.raises(ConfigurationError):
        RelativeTimeline("BMT", selection=0)
    with pytest.raises(ConfigurationError):
        RelativeTimeline("BMT", before_period=-1)


def test_compute_scope_relative():
    # one month before to two years after a day-100 reference
    spec = RelativeTimeline("BMT", before_period=MONTH, after_period=2 * YEAR)
    scope = compute_matching_scope(spec, reference=100 * DAY)
    assert scope == MatchingScope(70 * DAY, 830 * DAY)


def test_compute_scope_degenerate():
    spec = RelativeTimeline("BMT", before_period=0, after_period=0)
    with pytest.raises(ConfigurationError, match="empty"):
        compute_matching_scope(spec, reference=100)
    with pytest.raises(ConfigurationError, match="reference"):
        compute_matching_scope(RelativeTimeline("BMT", after_period=10))


def test_compute_scope_absolute():
    scope = compute_matching_scope(AbsoluteTimeline(0, 30 * DAY))
    assert scope == MatchingScope(0, 30 * DAY)
    with pytest.raises(ConfigurationError):
        AbsoluteTimeline(10, 10)


def _seq(*bounds):
    return UnivariateESequence("X", tuple(Interval(s, e, 0.5, "L") for s, e in bounds))


def test_restrict_examples():
    scope = MatchingScope(10, 20)
    kept = restrict(_seq((5, 12)), scope).intervals
    assert [(iv.start, iv.end) for iv in kept] == [(10, 12)]  # end in scope, clipped
    kept = restrict(_seq((5, 25)), scope).intervals
    assert [(iv.start, iv.end) for iv in kept] == [(10, 20)]  # spans scope, clipped
    assert restrict(_seq((21, 30)), scope).intervals == ()  # fully after


def test_restrict_idempotent_and_matches_overlap():
    scope = MatchingScope(10, 20)
    coords = [5, 8, 10, 12, 15, 18, 20, 22, 25]
    for s in coords:
        for e in coords:
            if e < s:
                continue
            once = restrict(_seq((s, e)), scope)
            twice = restrict(once, scope)
            assert once == twice
            overlaps = s <= scope.end and e >= scope.start
            assert bool(once.intervals) == overlaps


@given(st.integers(0, 100), st.integers(1, 100), st.integers(-50, 150), st.integers(0, 120))
def test_restrict_equals_bruteforce_overlap(start, width, iv_start, iv_len):
    scope = MatchingScope(start, start + width)
    iv_end = iv_start + iv_len
    kept = restrict(_seq((iv_start, iv_end)), scope).intervals
    assert bool(kept) == (iv_start <= scope.end and iv_end >= scope.start)
    for iv in kept:
        assert scope.start <= iv.start <= iv.end <= scope.end
