import math
import random

import numpy as np
import pytest

from oracles import dtw_exhaustive
from tadtw.kb import load_bundled_kb
from tadtw.temporal import DAY, MONTH, EventTable
from tadtw.warping import (
    KnowledgeBand,
    SakoeChibaPercent,
    Unconstrained,
    band_radius,
    dtw_cost_matrix,
    dtw_distance,
    dtw_distance_matrixin,
    kb_band_radius,
    local_distance,
    table_matrix,
)


def _table(entity, rows, granularity=DAY):
    n = len(next(iter(rows.values())))
    return EventTable(entity, granularity, n, rows)


def test_local_distance():
    assert local_distance((0.2, 0.4), (0.5, 0.8)) == pytest.approx(0.25)
    assert local_distance((0.3, 0.7), (0.3, 0.7)) == 0.0
    assert local_distance((0.2,), (0.5,)) == pytest.approx(0.09)
    with pytest.raises(ValueError, match="arity"):
        local_distance((0.1,), (0.1, 0.2))


def test_dtw_identity_is_zero():
    t = _table("a", {"x": [0.1, 0.9, 0.4], "y": [0.2, 0.2, 0.8]})
    assert dtw_distance(t, t, Unconstrained()) == 0.0
    assert dtw_distance(t, t, KnowledgeBand(0)) == 0.0


def test_dtw_warps_around_insertion():
    a = _table("a", {"x": [0.0, 0.0, 1.0]})
    b = _table("b", {"x": [0.0, 1.0]})
    assert dtw_distance(a, b, Unconstrained()) == 0.0


def test_dtw_matches_exhaustive_oracle():
    rng = random.Random(4821)
    for trial in range(120):
        features = 1 if trial % 2 == 0 else 2
        m, n = rng.randint(1, 7), rng.randint(1, 7)
        a = [tuple(rng.random() for _ in range(features)) for _ in range(m)]
        b = [tuple(rng.random() for _ in range(features)) for _ in range(n)]
        got = dtw_distance_matrixin(np.array(a), np.array(b), Unconstrained())
        assert got == pytest.approx(dtw_exhaustive(a, b), abs=1e-12)


def test_dtw_symmetric_unconstrained():
    rng = random.Random(7)
    a = np.array([[rng.random()] for _ in range(6)])
    b = np.array([[rng.random()] for _ in range(6)])
    assert dtw_distance_matrixin(a, b, Unconstrained()) == pytest.approx(
        dtw_distance_matrixin(b, a, Unconstrained()), abs=1e-12)


def test_dtw_feature_permutation_invariance():
    a = _table("a", {"p": [0.1, 0.5], "q": [0.9, 0.2]})
    b = _table("b", {"p": [0.3, 0.4], "q": [0.6, 0.1]})
    a2 = _table("a", {"q": [0.9, 0.2], "p": [0.1, 0.5]})
    b2 = _table("b", {"q": [0.6, 0.1], "p": [0.3, 0.4]})
    assert dtw_distance(a, b) == dtw_distance(a2, b2)


def test_equal_length_radius_zero_is_lockstep():
    rng = random.Random(99)
    a = np.array([[rng.random()] for _ in range(8)])
    b = np.array([[rng.random()] for _ in range(8)])
    lockstep = float(np.sum((a - b) ** 2))
    assert dtw_distance_matrixin(a, b, KnowledgeBand(0)) == pytest.approx(lockstep, abs=1e-12)


def test_band_monotone_and_feasible():
    rng = random.Random(23)
    for _ in range(40):
        m, n = rng.randint(1, 12), rng.randint(1, 12)
        a = np.array([[rng.random()] for _ in range(m)])
        b = np.array([[rng.random()] for _ in range(n)])
        previous = math.inf
        for radius in range(0, max(m, n) + 1):
            d = dtw_distance_matrixin(a, b, KnowledgeBand(radius))
            assert d <= previous
            previous = d
        assert dtw_distance_matrixin(a, b, Unconstrained()) <= previous


def test_band_radius_resolution():
    assert band_radius(Unconstrained(), 30, 30) is None
    assert band_radius(SakoeChibaPercent(10), 30, 25) == 3
    assert band_radius(SakoeChibaPercent(10), 25, 31) == 4  # ceil over longer series
    assert band_radius(KnowledgeBand(5), 30, 30) == 5
    with pytest.raises(ValueError):
        SakoeChibaPercent(0)
    with pytest.raises(ValueError):
        KnowledgeBand(-1)


def test_kb_band_radius():
    oncology = load_bundled_kb("oncology")
    concepts = [oncology.concept(c) for c in ("WBC", "HGB", "PLATELET")]
    assert kb_band_radius(concepts, DAY) == 1

    diabetes = load_bundled_kb("diabetes")
    trio = [diabetes.concept(c) for c in
            ("ALBUMINURIA-U24H-FEMALE", "CREATININE-FEMALE", "HBA1C")]
    assert kb_band_radius(trio, MONTH) == 6
    assert kb_band_radius([diabetes.concept("CREATININE-FEMALE")], MONTH) == 2
    with pytest.raises(ValueError):
        kb_band_radius([], DAY)


def test_cost_matrix_agrees_with_kernel():
    rng = random.Random(5)
    a = _table("a", {"x": [rng.random() for _ in range(6)],
                     "y": [rng.random() for _ in range(6)]})
    b = _table("b", {"x": [rng.random() for _ in range(4)],
                     "y": [rng.random() for _ in range(4)]})
    for band in (Unconstrained(), SakoeChibaPercent(25), KnowledgeBand(1)):
        matrix = dtw_cost_matrix(a, b, band)
        assert matrix[-1, -1] == pytest.approx(dtw_distance(a, b, band), abs=1e-12)
        assert matrix.shape == (6, 4)


def test_compatibility_checks():
    a = _table("a", {"x": [0.1, 0.2]})
    b = _table("b", {"y": [0.1, 0.2]})
    with pytest.raises(ValueError, match="feature sets differ"):
        dtw_distance(a, b)
    c = _table("c", {"x": [0.1, 0.2]}, granularity=MONTH)
    with pytest.raises(ValueError, match="granularity"):
        dtw_distance(a, c)
    incomplete = EventTable("d", DAY, 2, {"x": [0.1, None]})
    with pytest.raises(ValueError, match="missing values"):
        table_matrix(incomplete)
