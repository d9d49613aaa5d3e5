"""Insight patterns, their scoring functions and thresholds."""
import enum
from dataclasses import dataclass, field
from typing import Optional

from .exceptions import (AllZero, DomainError, NegativeValues, NotCount, TooFewGroups, ZeroSum,
                         ZeroTotal)
from .stats import jensen_shannon_divergence, mann_kendall
from .table import Agg, ColumnKind, cell_sort_key

OV_CAP = 1e9
MIN_TREND_GROUPS = 5
MIN_GROUPS = 2


class Pattern(str, enum.Enum):
    TREND = "Trend"
    OUTSTANDING_VALUE = "OutstandingValue"
    ATTRIBUTION = "Attribution"
    DISTRIBUTION_DIFFERENCE = "DistributionDifference"


PATTERN_ORDER = {p: i for i, p in enumerate(Pattern)}


class Context(str, enum.Enum):
    BASIC_INSIGHT = "BasicInsight"
    SUBSPACE_SEARCH = "SubspaceSearch"


@dataclass(frozen=True)
class Thresholds:
    trend: float = 0.95
    outstanding_value: float = 1.4
    attribution: float = 0.5
    distribution_difference: float = 0.2

    def __post_init__(self):
        for name in ("trend", "outstanding_value", "attribution", "distribution_difference"):
            if not getattr(self, name) > 0:
                raise ValueError(f"threshold {name} must be positive")

    def for_pattern(self, pattern):
        return {
            Pattern.TREND: self.trend,
            Pattern.OUTSTANDING_VALUE: self.outstanding_value,
            Pattern.ATTRIBUTION: self.attribution,
            Pattern.DISTRIBUTION_DIFFERENCE: self.distribution_difference,
        }[Pattern(pattern)]


DEFAULT_THRESHOLDS = Thresholds()


@dataclass(frozen=True)
class PatternScore:
    pattern: Pattern
    raw: float
    normalized: float
    passes: bool
    detail: dict = field(default_factory=dict, compare=False)


def applicable_patterns(breakdown_kind, measure, context):
    kind = ColumnKind(breakdown_kind)
    context = Context(context)
    patterns = {Pattern.OUTSTANDING_VALUE, Pattern.ATTRIBUTION}
    if kind.orderable:
        patterns.add(Pattern.TREND)
    if measure.agg is Agg.COUNT and context is Context.SUBSPACE_SEARCH:
        patterns.add(Pattern.DISTRIBUTION_DIFFERENCE)
    return patterns


def normalize_score(pattern, raw):
    """Map a raw score into [0, 1], monotone in ``raw``."""
    pattern = Pattern(pattern)
    if pattern is Pattern.OUTSTANDING_VALUE:
        if raw < 1.0:
            raise DomainError(f"outstanding-value ratio must be >= 1, got {raw}")
        return 1.0 - 1.0 / raw
    if not 0.0 <= raw <= 1.0:
        raise DomainError(f"{pattern.value} score must lie in [0, 1], got {raw}")
    return float(raw)


def _make(pattern, raw, thresholds, detail):
    threshold = (thresholds or DEFAULT_THRESHOLDS).for_pattern(pattern)
    return PatternScore(pattern, raw, normalize_score(pattern, raw), raw > threshold, detail)


def score_trend(view, thresholds=None):
    if len(view) < MIN_TREND_GROUPS:
        raise TooFewGroups(f"trend needs {MIN_TREND_GROUPS} groups, view has {len(view)}")
    ordered = sorted(view.groups, key=lambda kv: cell_sort_key(kv[0]))
    mk = mann_kendall([v for _, v in ordered])
    raw = 1.0 - mk.p_value
    if mk.s_statistic > 0:
        direction = "increasing"
    elif mk.s_statistic < 0:
        direction = "decreasing"
    else:
        direction = "no trend"
    return _make(Pattern.TREND, raw, thresholds,
                 {"direction": direction, "p_value": mk.p_value, "s_statistic": mk.s_statistic})


def score_outstanding_value(view, thresholds=None):
    if len(view) < MIN_GROUPS:
        raise TooFewGroups(f"outstanding value needs {MIN_GROUPS} groups, view has {len(view)}")
    ranked = sorted(view.groups, key=lambda kv: (-abs(kv[1]), cell_sort_key(kv[0])))
    (top_key, top_value), (_, second_value) = ranked[0], ranked[1]
    a, b = abs(top_value), abs(second_value)
    if a == 0:
        raise AllZero("every group value is zero")
    raw = OV_CAP if b == 0 else min(a / b, OV_CAP)
    return _make(Pattern.OUTSTANDING_VALUE, raw, thresholds,
                 {"top_key": top_key, "top_value": top_value, "second_value": second_value,
                  "negative": top_value < 0})


def score_attribution(view, thresholds=None):
    if len(view) < MIN_GROUPS:
        raise TooFewGroups(f"attribution needs {MIN_GROUPS} groups, view has {len(view)}")
    values = view.values
    if any(v < 0 for v in values):
        raise NegativeValues("attribution is undefined for negative group values")
    total = float(sum(values))
    if total <= 0:
        raise ZeroSum("group values sum to zero")
    top_key, top_value = min(view.groups, key=lambda kv: (-kv[1], cell_sort_key(kv[0])))
    raw = top_value / total
    return _make(Pattern.ATTRIBUTION, raw, thresholds, {"top_key": top_key, "top_value": top_value,
                                                        "total": total})


def align_distributions(initial, final):
    """Union-aligned probability vectors of two COUNT views (zero-filled)."""
    for v in (initial, final):
        if v.measure.agg is not Agg.COUNT:
            raise NotCount(f"distribution difference needs COUNT views, got {v.measure}")
    a = dict(initial.groups)
    b = dict(final.groups)
    keys = sorted(set(a) | set(b), key=cell_sort_key)
    ta = float(sum(a.values()))
    tb = float(sum(b.values()))
    if ta <= 0 or tb <= 0:
        raise ZeroTotal("both views need a positive total count")
    return keys, [a.get(k, 0) / ta for k in keys], [b.get(k, 0) / tb for k in keys]


def score_distribution_difference(initial, final, thresholds=None):
    keys, p, q = align_distributions(initial, final)
    raw = jensen_shannon_divergence(p, q)
    return _make(Pattern.DISTRIBUTION_DIFFERENCE, raw, thresholds,
                 {"keys": keys, "initial": p, "final": q})


def score_view(pattern, view, initial=None, thresholds=None) -> Optional[PatternScore]:
    """Score ``view`` under ``pattern``; ``None`` when the view violates the pattern's preconditions."""
    pattern = Pattern(pattern)
    try:
        if pattern is Pattern.TREND:
            return score_trend(view, thresholds)
        if pattern is Pattern.OUTSTANDING_VALUE:
            return score_outstanding_value(view, thresholds)
        if pattern is Pattern.ATTRIBUTION:
            return score_attribution(view, thresholds)
        if initial is None:
            raise ValueError("distribution difference needs an initial view")
        return score_distribution_difference(initial, view, thresholds)
    except (TooFewGroups, AllZero, NegativeValues, ZeroSum, ZeroTotal, NotCount):
        return None
