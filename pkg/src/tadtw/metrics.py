"""KNN posteriors and binary classification metrics (ROC/AUC, Youden, paired t).

Scores and labels are aligned sequences; labels are truthy for the positive
class.  AUC is the rank (pair-counting) statistic with ties counted as 1/2,
computed via midranks.  The Youden-optimal operating point maximizes
sensitivity + specificity - 1 over the distinct score thresholds, breaking
ties toward higher sensitivity and then lower threshold.
"""

from __future__ import annotations

import logging
import math
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.special import stdtr

log = logging.getLogger(__name__)


class UndefinedMetricError(ValueError):
    """The metric is undefined for this input (e.g. a single-class fold)."""


class Neighbor(NamedTuple):
    entity: str
    distance: float
    label: str


class YoudenPoint(NamedTuple):
    threshold: float
    sensitivity: float
    specificity: float
    j: float


def k_values(n_total: int) -> list[int]:
    """Odd neighbor counts from 1 up to round-half-up of sqrt(n_total)."""
    if n_total < 1:
        raise ValueError("need at least one entity")
    upper = int(math.floor(math.sqrt(n_total) + 0.5))
    return list(range(1, upper + 1, 2))


def nearest_neighbors(distances: Mapping[str, float], labels: Mapping[str, str],
                      k: int) -> list[Neighbor]:
    """The k nearest labeled entities, distance ties broken by entity id."""
    if k > len(distances):
        raise ValueError(f"k={k} exceeds the {len(distances)} labeled entities")
    ranked = sorted(distances, key=lambda e: (distances[e], e))
    return [Neighbor(e, distances[e], labels[e]) for e in ranked[:k]]


def knn_posterior(distances: Mapping[str, float], labels: Mapping[str, str],
                  k: int) -> dict[str, float]:
    """Class posterior P(C) = (neighbors of class C) / k over the k nearest.

    k must be odd (majority ties are otherwise possible) and no larger than
    the number of labeled entities.  Probabilities cover every class present
    in ``labels`` and sum to 1.
    """
    if k % 2 == 0:
        raise ValueError(f"k must be odd, got {k}")
    neighbors = nearest_neighbors(distances, labels, k)
    posterior = {cls: 0.0 for cls in sorted(set(labels.values()))}
    for nb in neighbors:
        posterior[nb.label] += 1.0 / k
    return posterior


def _check_binary(labels: np.ndarray) -> tuple[int, int]:
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        raise UndefinedMetricError("need at least one positive and one negative")
    return pos, neg


def roc_auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Probability that a random positive outscores a random negative (ties 1/2)."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    pos, neg = _check_binary(y)
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.size, dtype=float)
    sorted_scores = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # midrank, 1-based
        i = j + 1
    rank_sum = float(ranks[y].sum())
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg)


def roc_curve(scores: Sequence[float], labels: Sequence[bool]) -> list[tuple[float, float, float]]:
    """(threshold, sensitivity, specificity) at each distinct score, descending.

    An entity is predicted positive when its score is >= the threshold, so
    sensitivity is non-decreasing as the threshold decreases.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    pos, neg = _check_binary(y)
    order = np.argsort(-s, kind="mergesort")
    curve = []
    tp = fp = 0
    i = 0
    while i < s.size:
        threshold = s[order[i]]
        while i < s.size and s[order[i]] == threshold:
            if y[order[i]]:
                tp += 1
            else:
                fp += 1
            i += 1
        curve.append((float(threshold), tp / pos, (neg - fp) / neg))
    return curve


def youden_optimal(scores: Sequence[float], labels: Sequence[bool]) -> YoudenPoint:
    """Operating point maximizing J = sensitivity + specificity - 1."""
    best: YoudenPoint | None = None
    for threshold, sens, spec in roc_curve(scores, labels):
        j = sens + spec - 1.0
        point = YoudenPoint(threshold, sens, spec, j)
        if best is None or (j, sens, -threshold) > (best.j, best.sensitivity, -best.threshold):
            best = point
    assert best is not None
    return best


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Classic paired t on the differences; two-sided p with n-1 df.

    All-zero differences return (0.0, 1.0); constant nonzero differences
    have zero variance, which drives p to 0 (returned as such and logged).
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape:
        raise ValueError("paired vectors must have equal length")
    n = x.size
    if n < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = x - y
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        log.warning("paired t-test: constant nonzero differences; p -> 0 limit")
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(stdtr(n - 1, -abs(t)))
    return t, p
