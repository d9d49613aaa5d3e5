"""Insights for one card: the unfiltered view first, then a subspace search per pattern."""
import hashlib
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

from .charts import ChartDoc, bar_chart, pie_comparison, scatter_with_trend
from .exceptions import InsightMinerError
from .patterns import (DEFAULT_THRESHOLDS, PATTERN_ORDER, Context, Pattern, applicable_patterns,
                       score_view)
from .search import SearchParams, beam_search
from .table import EMPTY, Subspace, View, compute_view

logger = logging.getLogger(__name__)

DEFAULT_INSIGHT_CAP = 10


def derive_seed(seed, *parts):
    """Stable 64-bit seed from a base seed and any labels (stage name, card index, ...)."""
    text = ":".join(str(p) for p in (seed,) + parts)
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "big")


@dataclass(frozen=True)
class Insight:
    card: object
    breakdown: str
    measure: object
    subspace: Subspace
    pattern: Pattern
    raw_score: float
    normalized_score: float
    view: View
    detail: dict = field(default_factory=dict, compare=False)
    baseline: Optional[View] = None
    baseline_subspace: Optional[Subspace] = None
    narrative: str = ""
    chart: Optional[ChartDoc] = field(default=None, compare=False)

    @property
    def identity(self):
        return (self.breakdown, str(self.measure), self.subspace.key, self.pattern.value)


def _finish(insight):
    insight = replace(insight, narrative=render_text(insight))
    return replace(insight, chart=render_chart(insight))


def _from_score(card, subspace, result, view, baseline=None, baseline_subspace=None):
    return _finish(Insight(card, card.breakdown, card.measure, subspace, result.pattern, result.raw,
                           result.normalized, view, dict(result.detail), baseline, baseline_subspace))


def basic_insight(dataset, card, thresholds=None):
    """Insights visible in the unfiltered view of ``card``, one per passing pattern."""
    thresholds = thresholds or DEFAULT_THRESHOLDS
    view = compute_view(dataset, EMPTY, card.breakdown, card.measure)
    kind = dataset.column(card.breakdown).kind
    out = []
    for pattern in sorted(applicable_patterns(kind, card.measure, Context.BASIC_INSIGHT), key=PATTERN_ORDER.get):
        result = score_view(pattern, view, thresholds=thresholds)
        if result is not None and result.passes:
            out.append(_from_score(card, EMPTY, result, view))
    return out


def deeper_insights(dataset, card, params=None, llm_candidates=(), thresholds=None, diagnostics=None):
    """Insights found by searching filter subspaces, for every applicable pattern.

    A pattern whose search fails is logged and skipped; the others still run.
    """
    params = params or SearchParams()
    thresholds = thresholds or DEFAULT_THRESHOLDS
    kind = dataset.column(card.breakdown).kind
    perspective = (card.breakdown, card.measure)
    out = []
    for pattern in sorted(applicable_patterns(kind, card.measure, Context.SUBSPACE_SEARCH), key=PATTERN_ORDER.get):
        pattern_params = replace(params, seed=derive_seed(params.seed, pattern.value))
        try:
            beam = beam_search(dataset, EMPTY, perspective, pattern, pattern_params, llm_candidates, thresholds)
        except InsightMinerError as exc:
            logger.warning("search for %s on %r failed: %s", pattern.value, card.question, exc)
            if diagnostics is not None:
                diagnostics.append(f"{pattern.value} search failed for {card.question!r}: {exc}")
            continue
        for item in beam:
            if not item.subspace or item.result is None or not item.result.passes:
                continue
            parent = None
            if item.baseline is not None:
                parent = _parent_of(item)
            out.append(_from_score(card, item.subspace, item.result, item.view, item.baseline, parent))
    return out


def _parent_of(item):
    # the baseline of a distribution-difference candidate is the view of its parent
    filters = item.subspace.filters
    return Subspace(filters[:-1])


def mine_card(dataset, card, params=None, llm_candidates=(), thresholds=None, cap=DEFAULT_INSIGHT_CAP,
              diagnostics=None):
    """Basic and deeper insights for one card, de-duplicated and capped by normalized score."""
    found = basic_insight(dataset, card, thresholds) + deeper_insights(
        dataset, card, params, llm_candidates, thresholds, diagnostics)
    unique = {}
    for ins in found:
        unique.setdefault(ins.identity, ins)
    ranked = sorted(unique.values(),
                    key=lambda i: (-i.normalized_score, len(i.subspace), PATTERN_ORDER[i.pattern], i.subspace.key))
    if cap is not None:
        ranked = ranked[:cap]
    return sorted(ranked, key=lambda i: (PATTERN_ORDER[i.pattern], -i.normalized_score, i.subspace.key))


def _where(subspace):
    return " and ".join(f"{c} = {v}" for c, v in subspace.filters)


def _scope(subspace):
    return f"For {_where(subspace)}" if subspace else "Across all rows"


def _fmt(x):
    return format(float(x), ".4g")


def render_text(insight):
    """One-sentence description of ``insight`` from a fixed template per pattern."""
    b, m, d = insight.breakdown, insight.measure, insight.detail
    scope = _scope(insight.subspace)
    if insight.pattern is Pattern.TREND:
        direction = d.get("direction", "no trend")
        article = "an" if direction == "increasing" else "a"
        return (f"{scope}, {m} shows {article} {direction} trend across {b} "
                f"(confidence {insight.raw_score:.4f}).")
    if insight.pattern is Pattern.OUTSTANDING_VALUE:
        sign = "negative " if d.get("negative") else ""
        return (f"{scope}, {b} = {d.get('top_key')} has an outstanding {sign}{m} of {_fmt(d.get('top_value'))}, "
                f"{insight.raw_score:.2f} times the next largest magnitude ({_fmt(d.get('second_value'))}).")
    if insight.pattern is Pattern.ATTRIBUTION:
        pct = 100.0 * insight.raw_score
        return (f"{scope}, {b} = {d.get('top_key')} accounts for {pct:.0f}% of the total {m} "
                f"({_fmt(d.get('top_value'))} of {_fmt(d.get('total'))}).")
    before = _where(insight.baseline_subspace) if insight.baseline_subspace else "all rows"
    return (f"{scope}, the distribution of {m} across {b} differs from {before} "
            f"(Jensen-Shannon divergence {insight.raw_score:.3f}).")


def _title(insight):
    title = f"{insight.measure} by {insight.breakdown}"
    if insight.subspace:
        title += f" where {_where(insight.subspace)}"
    return title


def render_chart(insight):
    """Chart for ``insight``: trend as scatter with fitted line, OV and attribution as bars, DD as two pies."""
    view = insight.view
    title = _title(insight)
    keys, values = view.keys, view.values
    y_title = str(insight.measure)
    if insight.pattern is Pattern.TREND:
        numeric_x = all(isinstance(k, (int, float)) for k in keys)
        return scatter_with_trend(title, keys, values, insight.breakdown, y_title, numeric_x=numeric_x)
    if insight.pattern is Pattern.OUTSTANDING_VALUE:
        return bar_chart(title, keys, values, insight.breakdown, y_title)
    if insight.pattern is Pattern.ATTRIBUTION:
        total = sum(values)
        labels = [f"{100.0 * v / total:.1f}%" for v in values]
        return bar_chart(title, keys, values, insight.breakdown, y_title, value_labels=labels)
    d = insight.detail
    before = _where(insight.baseline_subspace) if insight.baseline_subspace else "all rows"
    return pie_comparison(title, d["keys"], d["initial"], d["final"], before_title=before,
                          after_title=_where(insight.subspace) or "all rows")
