"""Mann-Kendall, Kruskal-Wallis and Jensen-Shannon, with the tail functions they need.

Only the standard library and numpy are used: the normal tail comes from
``math.erfc`` and the chi-square tail from a regularized upper incomplete
gamma function (power series below ``a + 1``, Lentz continued fraction
above).  Both are accurate to well under 1e-10 absolute on the ranges the
tests exercise.
"""
import enum
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .exceptions import (DimensionMismatch, DomainError, EmptyGroup, LengthError, NotNormalized,
                         TooFewGroups)

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def normal_sf(z):
    """P(Z > z) for a standard normal variable."""
    z = float(z)
    if math.isnan(z):
        raise DomainError("normal_sf of NaN")
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _gamma_p_series(a, x):
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_fraction(a, x):
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_q(a, x):
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0 or x < 0:
        raise DomainError(f"gamma_q needs a > 0 and x >= 0, got a={a}, x={x}")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_p_series(a, x))
    return min(1.0, _gamma_q_fraction(a, x))


def chi2_sf(x, df):
    """Survival function of the chi-square distribution with ``df`` degrees of freedom."""
    x = float(x)
    if math.isnan(x) or x < 0:
        raise DomainError(f"chi2_sf needs x >= 0, got {x}")
    if df <= 0 or int(df) != df:
        raise DomainError(f"chi2_sf needs a positive integer df, got {df}")
    return gamma_q(df / 2.0, x / 2.0)


class TrendDirection(str, enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    NO_TREND = "no trend"


@dataclass(frozen=True)
class MannKendallResult:
    s_statistic: int
    variance: float
    z: float
    p_value: float
    direction: TrendDirection


def _tie_sizes(values):
    return [t for t in Counter(values).values() if t > 1]


def mann_kendall(sequence, alpha=0.05):
    """Two-sided Mann-Kendall trend test with tie-corrected variance.

    ``direction`` reports the sign of S when the test is significant at
    ``alpha`` and ``NO_TREND`` otherwise.
    """
    x = np.asarray(sequence, dtype=float)
    n = len(x)
    if n < 4:
        raise LengthError(f"Mann-Kendall needs at least 4 values, got {n}")
    diffs = x[None, :] - x[:, None]
    s = int(np.sign(diffs[np.triu_indices(n, k=1)]).sum())

    var = n * (n - 1) * (2 * n + 5)
    for t in _tie_sizes(x.tolist()):
        var -= t * (t - 1) * (2 * t + 5)
    var = var / 18.0

    if var <= 0:
        return MannKendallResult(s, 0.0, 0.0, 1.0, TrendDirection.NO_TREND)
    if s > 0:
        z = (s - 1) / math.sqrt(var)
    elif s < 0:
        z = (s + 1) / math.sqrt(var)
    else:
        z = 0.0
    p = min(1.0, 2.0 * normal_sf(abs(z)))
    if p < alpha and z > 0:
        direction = TrendDirection.INCREASING
    elif p < alpha and z < 0:
        direction = TrendDirection.DECREASING
    else:
        direction = TrendDirection.NO_TREND
    return MannKendallResult(s, var, z, p, direction)


def jensen_shannon_divergence(p, q, tol=1e-9):
    """Base-2 Jensen-Shannon divergence between two probability vectors, in [0, 1]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.ndim != 1 or p.shape != q.shape or len(p) == 0:
        raise DimensionMismatch(f"shapes {p.shape} and {q.shape} differ or are empty")
    for name, v in (("p", p), ("q", q)):
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise NotNormalized(f"{name} has negative or non-finite entries")
        if abs(v.sum() - 1.0) > tol:
            raise NotNormalized(f"{name} sums to {v.sum()!r}")
    m = 0.5 * (p + q)

    def kl(a):
        nz = a > 0
        return float(np.sum(a[nz] * np.log2(a[nz] / m[nz])))

    js = 0.5 * kl(p) + 0.5 * kl(q)
    return min(1.0, max(0.0, js))


@dataclass(frozen=True)
class KruskalWallisResult:
    h_statistic: float
    degrees_of_freedom: int
    p_value: float


def rankdata(values):
    """Mid-ranks (1-based), ties receive the average of their positions."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=float)
    sorted_x = x[order]
    i = 0
    n = len(x)
    while i < n:
        j = i
        while j + 1 < n and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def kruskal_wallis(groups):
    """Kruskal-Wallis H test with mid-ranks and tie correction."""
    groups = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(groups) < 2:
        raise TooFewGroups(f"Kruskal-Wallis needs at least 2 groups, got {len(groups)}")
    if any(len(g) == 0 for g in groups):
        raise EmptyGroup("Kruskal-Wallis groups must be nonempty")
    pooled = np.concatenate(groups)
    n = len(pooled)
    if n < 3:
        raise TooFewGroups(f"Kruskal-Wallis needs at least 3 observations, got {n}")
    ranks = rankdata(pooled)
    h = 0.0
    start = 0
    for g in groups:
        r = ranks[start:start + len(g)].sum()
        h += r * r / len(g)
        start += len(g)
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    ties = sum(t ** 3 - t for t in _tie_sizes(pooled.tolist()))
    correction = 1.0 - ties / (n ** 3 - n)
    df = len(groups) - 1
    if correction <= 0:
        return KruskalWallisResult(0.0, df, 1.0)
    h = float(max(0.0, h / correction))
    return KruskalWallisResult(h, df, chi2_sf(h, df))
