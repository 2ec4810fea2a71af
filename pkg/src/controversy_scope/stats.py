"""Correlation and threshold-grouping analysis over subtopic reports.

pearson returns the sample correlation together with a two-tailed p-value
from the exact Student-t transform t = r * sqrt((n-2) / (1-r^2)) with n-2
degrees of freedom, evaluated through the regularized incomplete beta
function; permutation_p estimates the same tail probability by shuffling,
for cross-checking. classify_subtopics applies the report thresholds:
controversy above the score cut, the size split among large subtopics, and
the low-sentiment shortlist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .pipeline import ControversyReport


class StatsError(Exception):
    pass


class LengthMismatch(StatsError):
    pass


class TooFew(StatsError):
    pass


class ZeroVariance(StatsError):
    pass


# --- regularized incomplete beta (for the two-tailed t-test) ----------------

_CF_MAX_ITER = 300
_CF_EPS = 3e-16
_CF_FPMIN = 1e-300


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, modified Lentz scheme."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise StatsError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0,1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def student_t_two_tailed(t: float, df: int) -> float:
    """P(|T| >= t) for the Student t distribution with df degrees of freedom."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def pearson(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Sample Pearson r and its two-tailed p-value under the exact t-test."""
    n = len(xs)
    if n != len(ys):
        raise LengthMismatch(f"lengths differ: {n} vs {len(ys)}")
    if n < 3:
        raise TooFew(f"need at least 3 pairs, got {n}")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    ss_x = sum(d * d for d in dx)
    ss_y = sum(d * d for d in dy)
    if ss_x == 0.0 or ss_y == 0.0:
        raise ZeroVariance("an input has zero variance")
    if all(a == b for a, b in zip(xs, ys)):
        return 1.0, 0.0
    if all(a == -b for a, b in zip(dx, dy)):
        return -1.0, 0.0
    r = sum(a * b for a, b in zip(dx, dy)) / math.sqrt(ss_x * ss_y)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        return r, 0.0
    t = abs(r) * math.sqrt(df / (1.0 - r * r))
    return r, student_t_two_tailed(t, df)


def permutation_p(
    xs: Sequence[float],
    ys: Sequence[float],
    n_rounds: int = 10_000,
    seed: int = 0,
) -> float:
    """Two-tailed permutation p-value for the Pearson coefficient.

    Counts shuffles of ys whose |r| reaches the observed |r|; the +1
    smoothing keeps the estimate strictly positive. Slower than the exact
    t-test but assumption-free, which makes it a useful cross-check.
    """
    r_obs, _ = pearson(xs, ys)
    rng = np.random.default_rng(seed)
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    dx = x - x.mean()
    denom_x = math.sqrt(float(dx @ dx))
    hits = 0
    for _ in range(n_rounds):
        shuffled = rng.permutation(y)
        dy = shuffled - shuffled.mean()
        r = float(dx @ dy) / (denom_x * math.sqrt(float(dy @ dy)))
        if abs(r) >= abs(r_obs) - 1e-12:
            hits += 1
    return (hits + 1) / (n_rounds + 1)


# --- indicator vectors (controversy vs scale and sentiment) -------------------


@dataclass(frozen=True)
class IndicatorVector:
    """(subtopic, window, value) triples for one indicator, unique per cell."""

    pairs: tuple[tuple[str, str, float], ...]

    def __post_init__(self) -> None:
        keys = [(s, w) for s, w, _ in self.pairs]
        if len(keys) != len(set(keys)):
            raise ValueError("duplicate (subtopic, window) pair in indicator")
        for _, _, value in self.pairs:
            if not math.isfinite(value):
                raise ValueError("indicator values must be finite")

    def values(self) -> list[float]:
        return [v for _, _, v in self.pairs]


_INDICATOR_FIELDS = {
    "score": lambda r: r.rwc.score if r.rwc else None,
    "node_count": lambda r: float(r.node_count),
    "sentiment_mean": lambda r: r.sentiment_mean,
    "sentiment_std": lambda r: r.sentiment_std,
}


def indicator_vector(reports: Sequence["ControversyReport"], which: str) -> IndicatorVector:
    """Extract one indicator over the scored cells, keyed by (subtopic, window)."""
    try:
        getter = _INDICATOR_FIELDS[which]
    except KeyError:
        raise ValueError(f"unknown indicator {which!r}") from None
    pairs = []
    for r in reports:
        value = getter(r)
        if value is not None:
            pairs.append((r.subtopic, r.window, float(value)))
    return IndicatorVector(tuple(pairs))


def correlate_indicators(
    reports: Sequence["ControversyReport"],
) -> dict[str, tuple[float, float]]:
    """Pearson (r, p) of the controversy score against scale and sentiment.

    Only cells where both the score and the compared indicator exist enter
    each correlation.
    """
    out: dict[str, tuple[float, float]] = {}
    score = {(s, w): v for s, w, v in indicator_vector(reports, "score").pairs}
    for which in ("node_count", "sentiment_mean", "sentiment_std"):
        other = indicator_vector(reports, which)
        xs = []
        ys = []
        for s, w, v in other.pairs:
            if (s, w) in score:
                xs.append(score[(s, w)])
                ys.append(v)
        out[which] = pearson(xs, ys)
    return out


# --- threshold grouping ------------------------------------------------------


@dataclass(frozen=True)
class ClassifiedReports:
    """The three report views; each view partitions its input reports.

    high/low/undersized partition all reports by the score threshold;
    large_high/large_low partition the scored reports at or above the size
    threshold; low_sentiment lists reports whose sentiment mean falls below
    the sentiment threshold.
    """

    high: tuple["ControversyReport", ...]
    low: tuple["ControversyReport", ...]
    undersized: tuple["ControversyReport", ...]
    large_high: tuple["ControversyReport", ...]
    large_low: tuple["ControversyReport", ...]
    low_sentiment: tuple["ControversyReport", ...] = field(default=())


def classify_subtopics(
    reports: Sequence["ControversyReport"],
    score_thresh: float = 0.3,
    size_thresh: int = 10_000,
    senti_thresh: float = -0.5,
) -> ClassifiedReports:
    """Group reports: score strictly above the cut counts as high controversy."""
    high: list[ControversyReport] = []
    low: list[ControversyReport] = []
    undersized: list[ControversyReport] = []
    large_high: list[ControversyReport] = []
    large_low: list[ControversyReport] = []
    low_sentiment: list[ControversyReport] = []
    for report in reports:
        if report.rwc is None:
            undersized.append(report)
        elif report.rwc.score > score_thresh:
            high.append(report)
            if report.node_count >= size_thresh:
                large_high.append(report)
        else:
            low.append(report)
            if report.node_count >= size_thresh:
                large_low.append(report)
        if report.sentiment_mean is not None and report.sentiment_mean < senti_thresh:
            low_sentiment.append(report)
    return ClassifiedReports(
        tuple(high),
        tuple(low),
        tuple(undersized),
        tuple(large_high),
        tuple(large_low),
        tuple(low_sentiment),
    )
