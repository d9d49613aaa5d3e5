"""Question-guided automated exploratory data analysis.

Generate analysis questions (Insight Cards) for a table, then mine insights
for each card: trend, outstanding value, attribution and distribution
difference patterns, found in the whole table and in filtered subspaces
located by beam search.
"""
from .estimators import InsightMiner, OnlyStatsCards, QuestionGenerator
from .patterns import Pattern, PatternScore, Thresholds, applicable_patterns, normalize_score
from .pipeline import Insight, basic_insight, deeper_insights, mine_card, render_chart, render_text
from .questions import InsightCard, QUGenParams, onlystats_cards, run_qugen
from .search import ScoredSubspace, SearchParams, beam_search
from .stats import chi2_sf, jensen_shannon_divergence, kruskal_wallis, mann_kendall, normal_sf
from .table import (Agg, Column, ColumnKind, Dataset, Measure, Subspace, View, apply_subspace, compute_view,
                    infer_column_kind, load_csv)

__version__ = "0.1.0"

__all__ = [
    "Agg", "Column", "ColumnKind", "Dataset", "Insight", "InsightCard", "InsightMiner", "Measure",
    "OnlyStatsCards", "Pattern", "PatternScore", "QUGenParams", "QuestionGenerator", "ScoredSubspace",
    "SearchParams", "Subspace", "Thresholds", "View", "applicable_patterns", "apply_subspace",
    "basic_insight", "beam_search", "chi2_sf", "compute_view", "deeper_insights", "infer_column_kind",
    "jensen_shannon_divergence", "kruskal_wallis", "load_csv", "mann_kendall", "mine_card",
    "normal_sf", "normalize_score", "onlystats_cards", "render_chart", "render_text", "run_qugen",
]
