"""Small-sample paired tests: exact Wilcoxon signed-rank and Spearman correlation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

EXACT = "exact-enumeration"
T_APPROX = "t-approximation"


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class StatTestResult:
    statistic: float
    p_value: float
    method: str
    n: int
    degenerate: bool = False


def midranks(values) -> np.ndarray:
    """1-based ranks with ties sharing the average of their positions."""
    x = np.asarray(values, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=np.float64)
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _paired(x, y, min_n):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise StatsError(f"samples must be equal-length 1D sequences, got {x.shape} and {y.shape}")
    if len(x) < min_n:
        raise StatsError(f"need at least {min_n} pairs, got {len(x)}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise StatsError("samples contain non-finite values")
    return x, y


def signed_rank_distribution(doubled_ranks) -> np.ndarray:
    """Counts of each attainable positive-rank sum (in doubled units) over all 2^m sign patterns."""
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(x, y) -> StatTestResult:
    """Two-sided exact Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped, tied absolute differences get midranks,
    and the statistic is the sum of ranks of positive differences. The
    p-value counts sign patterns exactly (no normal approximation).
    """
    x, y = _paired(x, y, 2)
    d = x - y
    d = d[d != 0]
    m = len(d)
    if m == 0:
        return StatTestResult(0.0, 1.0, EXACT, len(x), degenerate=True)
    ranks = midranks(np.abs(d))
    doubled = [int(round(2 * r)) for r in ranks]
    w2 = sum(r for r, di in zip(doubled, d) if di > 0)
    counts = signed_rank_distribution(doubled)
    lower = int(sum(counts[: w2 + 1]))
    upper = int(sum(counts[w2:]))
    p = min(1.0, 2 * min(lower, upper) / 2**m)
    return StatTestResult(w2 / 2, p, EXACT, len(x))


def t_two_sided_p(t: float, df: int) -> float:
    """Two-sided tail of Student's t via the regularized incomplete beta function."""
    if math.isinf(t):
        return 0.0
    return float(betainc(df / 2, 0.5, df / (df + t * t)))


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    return float(np.dot(a, b) / math.sqrt(np.dot(a, a) * np.dot(b, b)))


def spearman(x, y, method: str = T_APPROX) -> StatTestResult:
    """Spearman rank correlation with a two-sided p-value.

    ``method="t-approximation"`` (default) refers
    ``rho * sqrt((n - 2) / (1 - rho^2))`` to Student's t with ``n - 2``
    degrees of freedom. ``method="exact-enumeration"`` permutes the ranks of
    ``y`` over all ``n!`` orderings (n <= 8).
    """
    x, y = _paired(x, y, 3)
    n = len(x)
    rx, ry = midranks(x), midranks(y)
    if rx.std() == 0 or ry.std() == 0:
        raise StatsError("zero rank variance: correlation undefined")
    rho = max(-1.0, min(1.0, _pearson(rx, ry)))
    if method == T_APPROX:
        if abs(rho) == 1.0:
            return StatTestResult(rho, 0.0, T_APPROX, n)
        t = rho * math.sqrt((n - 2) / (1 - rho * rho))
        return StatTestResult(rho, t_two_sided_p(t, n - 2), T_APPROX, n)
    if method == EXACT:
        if n > 8:
            raise StatsError("exact permutation p-value is limited to n <= 8")
        hits = 0
        total = 0
        for perm in itertools.permutations(ry):
            total += 1
            if abs(_pearson(rx, np.asarray(perm))) >= abs(rho) - 1e-12:
                hits += 1
        return StatTestResult(rho, hits / total, EXACT, n)
    raise StatsError(f"unknown method {method!r}")
