"""Banded multivariate dynamic-time-warping distance between event tables.

The local distance between two columns is the squared Euclidean distance
summed over features; the accumulated cost follows the plain recurrence
R(i,j) = d(i,j) + min(R(i-1,j), R(i,j-1), R(i-1,j-1)) with R(0,0) = d(0,0),
no step weights, no slope constraint, and no path-length normalization.

Band geometry: a radius-r band is centered on the scaled diagonal through
the corner cells, i = j * (m-1)/(n-1) in 0-based indices, and a cell is
feasible when |i - j*sigma| < r + (sigma+1)/2.  For equal lengths this is
exactly the classic |i-j| <= r constraint (radius 0 = lock-step); for
unequal lengths the (sigma+1)/2 allowance keeps the corner-to-corner
staircase feasible at every radius >= 0, and the band grows monotonically
with r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .kb import ConceptDef
from .temporal import EventTable


class InfeasibleBandError(ValueError):
    """No monotone warping path fits inside the band (unreachable for r >= 0)."""


@dataclass(frozen=True)
class Unconstrained:
    """No warping-window constraint."""


@dataclass(frozen=True)
class SakoeChibaPercent:
    """Band radius as a percentage of the longer series' length."""

    percent: float = 10.0

    def __post_init__(self):
        if not self.percent > 0:
            raise ValueError("band percentage must be positive")


@dataclass(frozen=True)
class KnowledgeBand:
    """Band radius fixed in granules (derived from concept persistence)."""

    radius_granules: int

    def __post_init__(self):
        if self.radius_granules < 0:
            raise ValueError("band radius must be >= 0")


BandPolicy = Unconstrained | SakoeChibaPercent | KnowledgeBand


def band_radius(policy: BandPolicy, m: int, n: int) -> int | None:
    """Resolve a band policy to a radius in granules (None = unconstrained)."""
    if isinstance(policy, Unconstrained):
        return None
    if isinstance(policy, SakoeChibaPercent):
        return math.ceil(policy.percent / 100.0 * max(m, n))
    return policy.radius_granules


def kb_band_radius(concepts: Iterable[ConceptDef], granule: int) -> int:
    """Knowledge-derived band radius: the maximal concept half-life in granules.

    A concept's half-life is max(good_before, good_after); the radius is the
    ceiling of the largest half-life divided by the granule length.
    """
    half_lives = [max(c.good_before, c.good_after) for c in concepts]
    if not half_lives:
        raise ValueError("need at least one concept to derive a band radius")
    return -((-max(half_lives)) // granule)


def local_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Squared Euclidean distance between two equal-arity feature vectors."""
    if len(a) != len(b):
        raise ValueError(f"feature arity mismatch: {len(a)} vs {len(b)}")
    return float(sum((x - y) ** 2 for x, y in zip(a, b)))


@njit(cache=True)
def _accumulate(a, b, sigma, threshold):  # pragma: no cover - compiled
    m, n = a.shape[0], b.shape[0]
    f = a.shape[1]
    prev = np.full(n, np.inf)
    curr = np.full(n, np.inf)
    for i in range(m):
        for j in range(n):
            curr[j] = np.inf
        for j in range(n):
            if abs(i - j * sigma) < threshold:
                d = 0.0
                for c in range(f):
                    diff = a[i, c] - b[j, c]
                    d += diff * diff
                if i == 0 and j == 0:
                    curr[j] = d
                else:
                    best = np.inf
                    if j > 0 and curr[j - 1] < best:
                        best = curr[j - 1]
                    if i > 0:
                        if prev[j] < best:
                            best = prev[j]
                        if j > 0 and prev[j - 1] < best:
                            best = prev[j - 1]
                    curr[j] = d + best
        prev, curr = curr, prev
    return prev[n - 1]


def _band_parameters(m: int, n: int, radius: int | None) -> tuple[float, float]:
    if radius is None or m == 1 or n == 1:
        return 1.0, math.inf
    sigma = (m - 1) / (n - 1)
    return sigma, radius + (sigma + 1.0) / 2.0


def table_matrix(table: EventTable) -> np.ndarray:
    """Columns x features float matrix of a complete event table (sorted features)."""
    features = table.feature_names()
    mat = np.empty((table.column_count, len(features)))
    for k, name in enumerate(features):
        row = table.rows[name]
        if any(v is None for v in row):
            raise ValueError(f"{table.entity}: feature {name!r} has missing values")
        mat[:, k] = row
    return mat


def _check_compatible(a: EventTable, b: EventTable) -> None:
    if a.feature_names() != b.feature_names():
        raise ValueError(
            f"feature sets differ: {a.feature_names()} vs {b.feature_names()}"
        )
    if a.granularity != b.granularity:
        raise ValueError(f"granularity mismatch: {a.granularity} vs {b.granularity}")


def dtw_distance(a: EventTable, b: EventTable, band: BandPolicy = Unconstrained()) -> float:
    """Warping distance between two complete, feature-compatible event tables."""
    _check_compatible(a, b)
    ma, mb = table_matrix(a), table_matrix(b)
    return dtw_distance_matrixin(ma, mb, band)


def dtw_distance_matrixin(ma: np.ndarray, mb: np.ndarray,
                          band: BandPolicy = Unconstrained()) -> float:
    """Warping distance between two columns-x-features float matrices."""
    m, n = ma.shape[0], mb.shape[0]
    radius = band_radius(band, m, n)
    sigma, threshold = _band_parameters(m, n, radius)
    result = _accumulate(np.ascontiguousarray(ma, dtype=np.float64),
                         np.ascontiguousarray(mb, dtype=np.float64),
                         sigma, threshold)
    if math.isinf(result):
        raise InfeasibleBandError(f"no warping path inside band radius {radius}")
    return float(result)


def dtw_cost_matrix(a: EventTable, b: EventTable,
                    band: BandPolicy = Unconstrained()) -> np.ndarray:
    """Full accumulated-cost matrix (+inf outside the band); debugging aid."""
    ma, mb = table_matrix(a), table_matrix(b)
    m, n = ma.shape[0], mb.shape[0]
    radius = band_radius(band, m, n)
    sigma, threshold = _band_parameters(m, n, radius)
    cost = np.full((m, n), np.inf)
    for i in range(m):
        for j in range(n):
            if abs(i - j * sigma) >= threshold:
                continue
            d = float(np.sum((ma[i] - mb[j]) ** 2))
            if i == 0 and j == 0:
                cost[i, j] = d
                continue
            best = math.inf
            if j > 0:
                best = min(best, cost[i, j - 1])
            if i > 0:
                best = min(best, cost[i - 1, j])
                if j > 0:
                    best = min(best, cost[i - 1, j - 1])
            cost[i, j] = d + best
    return cost
