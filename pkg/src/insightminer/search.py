"""Beam search over filter subspaces.

Each beam member is expanded by sampling a filter column (LLM-suggested
columns share a fixed probability mass) and then a value of that column,
weighted by ``log(1 + frequency)``.  Sampling draws one uniform variate per
choice from a seeded PCG64 generator and inverts the cumulative weights, so
a seed reproduces the same search on every platform.
"""
import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from itertools import accumulate
from typing import Optional

import numpy as np

from .exceptions import AllNull, EmptyAvailable, InapplicablePattern, NoAvailableColumns
from .patterns import Context, Pattern, PatternScore, applicable_patterns, score_view
from .table import (EMPTY, ColumnKind, Subspace, View, _compute_view, cell_sort_key, check_measure,
                    subspace_mask)

FILTER_KINDS = (ColumnKind.CATEGORICAL, ColumnKind.ORDINAL)
NEG_INF = float("-inf")


@dataclass(frozen=True)
class SearchParams:
    beam_width: int = 100
    exp_factor: int = 100
    max_depth: int = 1
    w_llm: float = 0.5
    seed: int = 0
    exhaustive: bool = False

    def __post_init__(self):
        for name in ("beam_width", "exp_factor", "max_depth"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not 0.0 <= self.w_llm <= 1.0:
            raise ValueError("w_llm must lie in [0, 1]")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class ScoredSubspace:
    subspace: Subspace
    score: float
    view: View
    baseline: Optional[View] = None
    result: Optional[PatternScore] = None


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_index(weights, rng):
    """Inverse-CDF draw of an index from nonnegative ``weights``."""
    cum = list(accumulate(weights))
    u = rng.random() * cum[-1]
    return min(bisect_right(cum, u), len(cum) - 1)


def column_weights(available, llm_candidates, w_llm):
    """Sampling probabilities over ``available``, in the same order."""
    available = list(available)
    if not available:
        raise EmptyAvailable("no columns available to sample")
    if not 0.0 <= w_llm <= 1.0:
        raise ValueError("w_llm must lie in [0, 1]")
    favoured = [c for c in available if c in set(llm_candidates)]
    rest = [c for c in available if c not in set(llm_candidates)]
    if not favoured or not rest:
        return [1.0 / len(available)] * len(available)
    hi = w_llm / len(favoured)
    lo = (1.0 - w_llm) / len(rest)
    chosen = set(favoured)
    return [hi if c in chosen else lo for c in available]


def _log_weights(counts):
    logs = [math.log1p(n) for n in counts]
    total = sum(logs)
    return [x / total for x in logs]


def value_weights(column_cells):
    """``[(value, probability)]`` over distinct non-null cells, P proportional to ln(1 + count)."""
    counts = Counter(c for c in column_cells if c is not None)
    if not counts:
        raise AllNull("column has no non-null values")
    values = sorted(counts, key=cell_sort_key)
    return list(zip(values, _log_weights([counts[v] for v in values])))


def filterable_columns(dataset, subspace, breakdown, measure):
    used = subspace.columns | {breakdown}
    if measure.column is not None:
        used.add(measure.column)
    return [c.name for c in dataset.columns if c.kind in FILTER_KINDS and c.name not in used]


def _present_levels(col, mask):
    counts = np.bincount(col.codes[mask & (col.codes >= 0)], minlength=len(col.levels))
    idx = np.flatnonzero(counts)
    return idx, counts[idx]


def _available(dataset, subspace, perspective, mask):
    breakdown, measure = perspective
    names = filterable_columns(dataset, subspace, breakdown, measure)
    return [n for n in names if len(_present_levels(dataset.column(n), mask)[0])]


def expand(subspace, dataset, perspective, llm_candidates, params, rng, mask=None):
    """Add one sampled ``(column, value)`` filter to ``subspace``.

    Values are drawn from the rows the parent subspace already selects, so
    the new filter never yields an empty subset.
    """
    if mask is None:
        mask = subspace_mask(dataset, subspace)
    available = _available(dataset, subspace, perspective, mask)
    if not available:
        raise NoAvailableColumns(f"no filterable column left for {subspace}")
    col_name = available[sample_index(column_weights(available, llm_candidates or (), params.w_llm), rng)]
    col = dataset.column(col_name)
    idx, counts = _present_levels(col, mask)
    pick = idx[sample_index(_log_weights(counts.tolist()), rng)]
    return subspace.add(col_name, col.levels[pick])


def children(subspace, dataset, perspective, mask=None):
    """Every one-filter extension of ``subspace``, in canonical order."""
    if mask is None:
        mask = subspace_mask(dataset, subspace)
    out = []
    for col_name in sorted(_available(dataset, subspace, perspective, mask)):
        col = dataset.column(col_name)
        idx, _ = _present_levels(col, mask)
        out.extend(subspace.add(col_name, col.levels[i]) for i in idx)
    return out


def _rank_key(item):
    return (-item.score, item.subspace.key)


def beam_search(dataset, initial, perspective, pattern, params=None, llm_candidates=(), thresholds=None):
    """Return the top ``beam_width`` subspaces for ``pattern``, best first.

    Candidates whose views break the pattern's preconditions are discarded.
    The initial subspace always seeds the beam; for distribution difference
    it scores 0 because it is compared with itself.  Each candidate of a
    distribution-difference search is compared with the view of the parent
    it was expanded from; when a subspace is reached from several parents
    the best score is kept.
    """
    params = params or SearchParams()
    pattern = Pattern(pattern)
    initial = initial if initial is not None else EMPTY
    breakdown, measure = perspective
    bcol = check_measure(dataset, breakdown, measure)
    if pattern not in applicable_patterns(bcol.kind, measure, Context.SUBSPACE_SEARCH):
        raise InapplicablePattern(f"{pattern.value} does not apply to ({breakdown}, {measure})")
    is_dd = pattern is Pattern.DISTRIBUTION_DIFFERENCE
    rng = make_rng(params.seed)
    masks = {}
    views = {}

    def mask_of(s):
        if s.key not in masks:
            masks[s.key] = subspace_mask(dataset, s)
        return masks[s.key]

    def view_of(s):
        if s.key not in views:
            views[s.key] = _compute_view(dataset, mask_of(s), bcol, measure)
        return views[s.key]

    def scored(s, parent=None):
        view = view_of(s)
        baseline = view_of(parent) if is_dd else None
        result = score_view(pattern, view, baseline, thresholds)
        if result is None:
            return None
        return ScoredSubspace(s, result.raw, view, baseline, result)

    first = scored(initial, initial) if is_dd else scored(initial)
    if first is None:
        first = ScoredSubspace(initial, NEG_INF, view_of(initial))
    beam = [first]

    for _ in range(params.max_depth):
        pool = {item.subspace.key: item for item in beam}
        for member in beam:
            parent = member.subspace
            pmask = mask_of(parent)
            if params.exhaustive:
                batch = children(parent, dataset, perspective, pmask)
            else:
                try:
                    batch = [expand(parent, dataset, perspective, llm_candidates, params, rng, pmask)
                             for _ in range(params.exp_factor)]
                except NoAvailableColumns:
                    continue
            seen = set()
            for child in batch:
                if child.key in seen:
                    continue
                seen.add(child.key)
                item = scored(child, parent)
                if item is None:
                    continue
                prev = pool.get(child.key)
                if prev is None or item.score > prev.score:
                    pool[child.key] = item
        beam = sorted(pool.values(), key=_rank_key)[: params.beam_width]
    return beam
