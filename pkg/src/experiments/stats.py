"""
Descriptive statistics and the paired Wilcoxon signed-rank test
"""

import math
from typing import Sequence

import numpy as np
from scipy import stats

from .models import Alternative, StatisticsError, StatSummary, WilcoxonResult

EXACT_MAX_N = 25
MIN_PAIRS = 5


def summarize(values: Sequence[float]) -> StatSummary:
    """Mean, median (midpoint for even counts) and population std."""
    data = np.asarray(values, dtype=np.float64)
    if data.size == 0:
        raise StatisticsError("Cannot summarize an empty sample")
    if not np.isfinite(data).all():
        raise StatisticsError("Sample contains non-finite values")
    return StatSummary(
        mean=float(data.mean()),
        median=float(np.median(data)),
        std=float(data.std(ddof=0)),
        count=int(data.size),
    )


def _exact_null_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """
    counts[s] = number of sign assignments whose doubled positive-rank sum
    is s. Ranks are doubled so tied (half-integer) ranks stay integral.
    """
    counts = np.zeros(int(doubled_ranks.sum()) + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:counts.size - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(
    a: Sequence[float],
    b: Sequence[float],
    alternative: Alternative = "two-sided",
) -> WilcoxonResult:
    """
    Paired test on d = a - b. Zero differences are discarded, tied |d| get
    average ranks. The null distribution is exact for up to 25 pairs and the
    tie-corrected normal approximation beyond.

    ``less`` tests whether a tends to be smaller than b.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise StatisticsError(f"Paired samples must be equal-length vectors, got {a.shape} and {b.shape}")
    if alternative not in ("less", "greater", "two-sided"):
        raise StatisticsError(f"Unknown alternative '{alternative}'")
    diffs = a - b
    if not np.isfinite(diffs).all():
        raise StatisticsError("Samples contain non-finite values")
    diffs = diffs[diffs != 0.0]
    n = diffs.size
    if n < MIN_PAIRS:
        raise StatisticsError(f"Need at least {MIN_PAIRS} nonzero differences, got {n}")

    ranks = stats.rankdata(np.abs(diffs), method="average")
    w_plus = float(ranks[diffs > 0].sum())
    w_minus = float(ranks[diffs < 0].sum())

    exact = n <= EXACT_MAX_N
    if exact:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        counts = _exact_null_counts(doubled)
        total = 2.0 ** n
        observed = int(round(2.0 * w_plus))
        p_less = counts[:observed + 1].sum() / total
        p_greater = counts[observed:].sum() / total
    else:
        _, tie_counts = np.unique(np.abs(diffs), return_counts=True)
        mean = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
        z = (w_plus - mean) / math.sqrt(var)
        p_less = float(stats.norm.cdf(z))
        p_greater = float(stats.norm.sf(z))

    if alternative == "less":
        statistic, p_value = w_plus, p_less
    elif alternative == "greater":
        statistic, p_value = w_plus, p_greater
    else:
        statistic, p_value = min(w_plus, w_minus), min(1.0, 2.0 * min(p_less, p_greater))
    return WilcoxonResult(
        statistic=statistic,
        p_value=float(min(1.0, max(0.0, p_value))),
        alternative=alternative,
        n_effective=n,
        exact=exact,
    )
