"""Independent reference computations for the tests.

The group-by here is plain Python over the raw cell tuples, so it shares no
code with the numpy aggregation in the package; the search oracle reuses the
pattern scorers, which have their own fixed-point tests.  The statistical
references use O(n^2) pair counts, direct mid-ranks and mpmath tails.
"""
import json
import math
import xml.etree.ElementTree as ET
from collections import Counter, defaultdict

import mpmath

from insightminer.patterns import Pattern, score_view
from insightminer.table import Agg, ColumnKind, View

mpmath.mp.dps = 50

FILTERABLE = (ColumnKind.CATEGORICAL, ColumnKind.ORDINAL)


def canonical_key(filters):
    return json.dumps(sorted([c, v] for c, v in filters), ensure_ascii=False)


def rows_where(dataset, filters):
    cols = {c: dataset[c].values for c, _ in filters}
    return [i for i in range(dataset.row_count) if all(cols[c][i] == v for c, v in filters)]


def group_by(dataset, rows, breakdown, measure):
    b = dataset[breakdown].values
    m = dataset[measure.column].values if measure.column else None
    cells = defaultdict(list)
    for i in rows:
        if b[i] is None:
            continue
        cells[b[i]].append(None if m is None else m[i])
    groups = {}
    for key, xs in cells.items():
        present = [x for x in xs if x is not None]
        if measure.agg is Agg.COUNT:
            groups[key] = len(xs) if m is None else len(present)
        elif not present:
            continue
        elif measure.agg is Agg.SUM:
            groups[key] = math.fsum(present)
        elif measure.agg is Agg.MEAN:
            groups[key] = math.fsum(present) / len(present)
        elif measure.agg is Agg.MIN:
            groups[key] = min(present)
        else:
            groups[key] = max(present)
    return View(breakdown, measure, tuple(sorted(groups.items(), key=lambda kv: str(kv[0]))),
                dataset[breakdown].kind)


def one_filter_children(dataset, filters, breakdown, measure):
    used = {c for c, _ in filters} | {breakdown, measure.column}
    rows = rows_where(dataset, filters)
    out = []
    for col in dataset.columns:
        if col.kind not in FILTERABLE or col.name in used:
            continue
        for value in sorted({col.values[i] for i in rows if col.values[i] is not None}, key=str):
            out.append(tuple(filters) + ((col.name, value),))
    return out


def brute_force_search(dataset, breakdown, measure, pattern, max_depth=1, beam_width=10 ** 9, thresholds=None):
    """Exhaustive level-by-level search; returns ``[(key, score)]`` best first."""
    pattern = Pattern(pattern)
    is_dd = pattern is Pattern.DISTRIBUTION_DIFFERENCE

    def score(filters, parent):
        view = group_by(dataset, rows_where(dataset, filters), breakdown, measure)
        base = group_by(dataset, rows_where(dataset, parent), breakdown, measure) if is_dd else None
        r = score_view(pattern, view, base, thresholds)
        return None if r is None else r.raw

    first = score((), ())
    beam = {canonical_key(()): ((), float("-inf") if first is None else first)}
    for _ in range(max_depth):
        pool = dict(beam)
        for parent, _ in beam.values():
            for child in one_filter_children(dataset, parent, breakdown, measure):
                s = score(child, parent)
                if s is None:
                    continue
                key = canonical_key(child)
                if key not in pool or s > pool[key][1]:
                    pool[key] = (child, s)
        ranked = sorted(pool.items(), key=lambda kv: (-kv[1][1], kv[0]))[:beam_width]
        beam = dict(ranked)
    return [(key, s) for key, (_, s) in sorted(beam.items(), key=lambda kv: (-kv[1][1], kv[0]))]


SVG_NS = "{http://www.w3.org/2000/svg}"
EXPECTED_CHART = {
    Pattern.TREND: "ScatterWithTrendLine",
    Pattern.OUTSTANDING_VALUE: "Bar",
    Pattern.ATTRIBUTION: "Bar",
    Pattern.DISTRIBUTION_DIFFERENCE: "PieComparison",
}


def chart_problems(insight):
    """Reasons the chart of ``insight`` is off; an empty list means it conforms."""
    problems = []
    if insight.chart.kind.value != EXPECTED_CHART[insight.pattern]:
        problems.append(f"{insight.pattern.value} drawn as {insight.chart.kind.value}")
    try:
        root = ET.fromstring(insight.chart.rendered)
    except ET.ParseError as exc:
        return problems + [f"SVG does not parse: {exc}"]
    if root.tag != SVG_NS + "svg":
        problems.append(f"root element is {root.tag}")
    n = len(insight.view)
    if insight.pattern is Pattern.TREND:
        points = [e for e in root.iter(SVG_NS + "circle") if e.get("class") == "point"]
        lines = list(root.iter(SVG_NS + "line"))
        if len(points) != n or len(lines) != 1:
            problems.append(f"scatter has {len(points)} points and {len(lines)} lines for {n} groups")
    elif insight.pattern is Pattern.DISTRIBUTION_DIFFERENCE:
        pies = [e for e in root.iter(SVG_NS + "g") if e.get("class") == "pie"]
        if len(pies) != 2:
            problems.append(f"{len(pies)} pies")
    else:
        bars = [e for e in root.iter(SVG_NS + "rect") if e.get("class") == "bar"]
        if len(bars) != n:
            problems.append(f"{len(bars)} bars for {n} groups")
    return problems


def ref_mann_kendall(xs):
    n = len(xs)
    s = 0
    for i in range(n):
        for j in range(i + 1, n):
            s += (xs[j] > xs[i]) - (xs[j] < xs[i])
    var = mpmath.mpf(n * (n - 1) * (2 * n + 5))
    for t in Counter(xs).values():
        var -= t * (t - 1) * (2 * t + 5)
    var /= 18
    if var == 0:
        return s, 0.0, 1.0
    z = (s - 1) / mpmath.sqrt(var) if s > 0 else (s + 1) / mpmath.sqrt(var) if s < 0 else mpmath.mpf(0)
    p = mpmath.erfc(abs(z) / mpmath.sqrt(2))
    return s, float(var), float(min(p, 1))


def ref_ranks(xs):
    # rank = (#strictly smaller) + (#equal + 1) / 2
    return [sum(y < x for y in xs) + (sum(y == x for y in xs) + 1) / 2 for x in xs]


def ref_kruskal(groups):
    pooled = [x for g in groups for x in g]
    n = len(pooled)
    ranks = ref_ranks(pooled)
    h, i = mpmath.mpf(0), 0
    for g in groups:
        r = sum(ranks[i:i + len(g)])
        h += mpmath.mpf(r) ** 2 / len(g)
        i += len(g)
    h = 12 * h / (n * (n + 1)) - 3 * (n + 1)
    c = 1 - mpmath.mpf(sum(t ** 3 - t for t in Counter(pooled).values())) / (n ** 3 - n)
    h /= c
    df = len(groups) - 1
    return float(h), float(mpmath.gammainc(df / 2, h / 2, mpmath.inf, regularized=True))


def with_ties(rng, n):
    pool = [rng.randint(0, max(1, n // 3)) for _ in range(max(1, n // 4))]
    return [rng.choice(pool) if rng.random() < 0.4 else round(rng.uniform(-50, 50), 1) for _ in range(n)]
