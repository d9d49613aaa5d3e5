"""Insight Card generation.

Cards come either from an iterative LLM loop (prompt, parse, then relevance,
duplicate and triviality filters, with earlier survivors fed back as
in-context examples) or from the statistics-only baseline that ranks
(breakdown, measure) pairs by a Kruskal-Wallis association test.
"""
import json
import logging
import random
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import IncompatibleMeasure, InsightMinerError, NoEligiblePairs, ProviderError, UnknownColumn
from .providers import cosine_similarity
from .stats import kruskal_wallis
from .table import EMPTY, Agg, ColumnKind, Measure, cell_sort_key, compute_view

logger = logging.getLogger(__name__)

ONLYSTATS = "OnlyStats"
ONLYSTATS_MAX_GROUPS = 50
BREAKDOWN_KINDS = (ColumnKind.CATEGORICAL, ColumnKind.ORDINAL, ColumnKind.TEMPORAL)
MEASURE_KINDS = (ColumnKind.NUMERIC, ColumnKind.ORDINAL)
_CARD_KEYS = ("question", "reason", "breakdown", "measure")


@dataclass(frozen=True)
class InsightCard:
    question: str
    reason: str
    breakdown: str
    measure: Measure
    origin: Union[int, str] = 0

    def __post_init__(self):
        if not self.question.strip() or not self.reason.strip():
            raise ValueError("question and reason must be nonempty")

    def to_dict(self):
        return {"question": self.question, "reason": self.reason, "breakdown": self.breakdown,
                "measure": str(self.measure), "origin": self.origin}

    @classmethod
    def from_dict(cls, data, origin=None):
        measure = data["measure"]
        if not isinstance(measure, Measure):
            measure = Measure.parse(measure)
        return cls(str(data["question"]).strip(), str(data["reason"]).strip(), str(data["breakdown"]).strip(),
                   measure, data.get("origin", 0) if origin is None else origin)


@dataclass(frozen=True)
class QUGenParams:
    iterations: int = 10
    samples_per_iteration: int = 3
    temperature: float = 1.1
    in_context_examples: int = 6
    relevance_threshold: float = 0.2
    dedup_threshold: float = 0.85

    def __post_init__(self):
        if self.iterations < 1 or self.samples_per_iteration < 1:
            raise ValueError("iterations and samples_per_iteration must be positive")
        if self.in_context_examples < 0:
            raise ValueError("in_context_examples must be nonnegative")
        for name in ("relevance_threshold", "dedup_threshold"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [-1, 1]")


class CardList(list):
    """A list of cards that also carries per-stage counts and diagnostics."""

    def __init__(self, cards=(), stage_counts=None, diagnostics=None):
        super().__init__(cards)
        self.stage_counts = dict(stage_counts or {})
        self.diagnostics = list(diagnostics or [])


def schema_text(dataset, descriptions=True):
    lines = []
    for col in dataset.columns:
        line = f"- {col.name} ({col.kind.value})"
        if descriptions and col.description:
            line += f": {col.description}"
        lines.append(line)
    return "\n".join(lines)


def relevance_text(dataset):
    """Short text the questions are compared with: table name and column names."""
    return " ".join([dataset.name] + dataset.column_names)


TASK_OBJECTIVE = (
    "You are a data analyst exploring a table. Propose insightful analysis questions "
    "that can be answered by grouping the table on one column (the breakdown) and "
    "aggregating another (the measure)."
)

CARD_FORMAT = """Write each Insight Card as one JSON object with exactly these keys:
{"question": "<analysis question>",
 "reason": "<why this question is worth asking>",
 "breakdown": "<column to group by>",
 "measure": "<AGG(column) with AGG one of COUNT, SUM, MEAN, MIN, MAX; or COUNT()>"}
Think about the reason first, then the question, then pick the breakdown and measure.
Return several cards, each as a separate JSON object, and nothing else."""


def format_card(card):
    return json.dumps({k: v for k, v in card.to_dict().items() if k != "origin"}, ensure_ascii=False)


def build_qugen_prompt(dataset, stats_summary, examples):
    parts = [
        "# Task\n" + TASK_OBJECTIVE,
        "# Insight Card format\n" + CARD_FORMAT,
        f"# Table schema\nTable: {dataset.name}" + (f"\nDescription: {dataset.description}"
                                                 if dataset.description else "") + "\n" + schema_text(dataset),
        "# Key statistics\n" + (stats_summary or "(none)"),
        "\n".join(["# Example Insight Cards"] + [format_card(c) for c in examples]),
        "# Your Insight Cards",
    ]
    return "\n\n".join(parts) + "\n"


def _fmt(x):
    return format(float(x), ".6g")


def template_summary(dataset):
    lines = [f"The table has {dataset.row_count} rows and {len(dataset.columns)} columns."]
    if dataset.row_count == 0:
        return lines[0]
    for col in dataset.columns:
        cells = [v for v in col.values if v is not None]
        if not cells:
            lines.append(f"- {col.name}: all values missing")
            continue
        if col.kind in MEASURE_KINDS and col.is_number_valued:
            arr = col.numeric[~np.isnan(col.numeric)]
            lines.append(f"- {col.name}: min {_fmt(arr.min())}, mean {_fmt(arr.mean())}, max {_fmt(arr.max())}")
            continue
        counts = {}
        for v in cells:
            counts[v] = counts.get(v, 0) + 1
        top = min(counts, key=lambda v: (-counts[v], cell_sort_key(v)))
        line = f"- {col.name}: {len(counts)} distinct values; most frequent: {top}"
        if col.kind is ColumnKind.TEMPORAL:
            lo, hi = col.levels[0], col.levels[-1]
            line += f"; range {lo} to {hi}"
        lines.append(line)
    return "\n".join(lines)


STATS_PROMPT = """You are preparing a short statistical briefing about a table.
Table: {name}
{schema}

Ask up to {n} basic statistical questions about this table. Each question must be
answerable by grouping on one column and aggregating another. Answer with a JSON
list of objects with keys "question", "breakdown" and "measure" (AGG(column) with
AGG one of COUNT, SUM, MEAN, MIN, MAX, or COUNT()), and nothing else."""


def _answer_stat_question(dataset, breakdown, measure, top=5):
    view = compute_view(dataset, EMPTY, breakdown, measure)
    shown = ", ".join(f"{k}: {_fmt(v)}" for k, v in view.groups[:top])
    more = f" (and {len(view) - top} more groups)" if len(view) > top else ""
    return f"{measure} by {breakdown} is {shown}{more}."


def nl_stats_summary(dataset, llm=None, max_questions=5):
    """Natural-language key statistics for the prompt.

    The template part is always present.  With an ``llm``, the model also
    proposes basic questions that are answered by computing the matching
    group-by view; unanswerable questions are skipped.
    """
    summary = template_summary(dataset)
    if llm is None or dataset.row_count == 0:
        return summary
    prompt = STATS_PROMPT.format(name=dataset.name, schema=schema_text(dataset), n=max_questions)
    response = llm.complete(prompt, temperature=0.0, samples=1)[0]
    answers = []
    for obj in _json_objects(response):
        if not isinstance(obj, dict) or len(answers) >= max_questions:
            continue
        try:
            measure = Measure.parse(obj["measure"])
            answer = _answer_stat_question(dataset, str(obj["breakdown"]), measure)
        except (KeyError, ValueError, InsightMinerError) as exc:
            logger.debug("skipping statistics question %r: %s", obj, exc)
            continue
        question = str(obj.get("question", "")).strip()
        answers.append(f"- {question} {answer}" if question else f"- {answer}")
    if answers:
        summary += "\n" + "\n".join(answers)
    return summary


def _json_objects(text):
    """Yield every JSON value that starts with ``{`` and decodes cleanly."""
    for obj, _ in _scan_json(text):
        if obj is not None:
            yield obj


def _scan_json(text):
    decoder = json.JSONDecoder()
    i = 0
    while True:
        i = text.find("{", i)
        if i < 0:
            return
        try:
            obj, end = decoder.raw_decode(text, i)
        except json.JSONDecodeError as exc:
            yield None, f"malformed JSON block at offset {i}: {exc.msg}"
            i = _skip_block(text, i)
            continue
        yield obj, None
        i = end


def _skip_block(text, start):
    # move past a malformed block: to its matching brace, else the next line
    depth = 0
    for j in range(start, len(text)):
        if text[j] == "{":
            depth += 1
        elif text[j] == "}":
            depth -= 1
            if depth == 0:
                return j + 1
    nl = text.find("\n", start)
    return len(text) if nl < 0 else nl + 1


def parse_insight_cards(response, origin=0, diagnostics=None):
    """Extract every well-formed card object from an LLM response.

    Malformed blocks are skipped; a message for each is appended to
    ``diagnostics`` when a list is given and logged at debug level.
    """
    cards = []
    if not response:
        return cards

    def note(msg):
        logger.debug(msg)
        if diagnostics is not None:
            diagnostics.append(msg)

    for obj, error in _scan_json(response):
        if error:
            note(error)
            continue
        if not isinstance(obj, dict):
            note("JSON block is not an object")
            continue
        fields = {str(k).strip().lower(): v for k, v in obj.items()}
        missing = [k for k in _CARD_KEYS if k not in fields]
        if missing:
            note(f"card block missing keys {missing}")
            continue
        try:
            cards.append(InsightCard.from_dict(fields, origin=origin))
        except (ValueError, TypeError) as exc:
            note(f"invalid card block: {exc}")
    return cards


def _columns_exist(card, dataset):
    return card.breakdown in dataset and (card.measure.column is None or card.measure.column in dataset)


def filter_relevance(cards, dataset, embedder, threshold, diagnostics=None):
    """Keep cards whose columns exist and whose question is similar enough to the schema."""
    reference = embedder.embed(relevance_text(dataset))
    kept = []
    for card in cards:
        if not _columns_exist(card, dataset):
            if diagnostics is not None:
                diagnostics.append(f"unknown column in card {card.question!r}")
            continue
        if threshold <= -1.0 or cosine_similarity(embedder.embed(card.question), reference) >= threshold:
            kept.append(card)
    return kept


def dedup_cards(cards, embedder, threshold, against=()):
    """Greedy keep-first removal of near-duplicate questions.

    ``against`` holds already accepted cards that new cards are also
    compared with; they are not part of the output.
    """
    retained_text = {c.question for c in against}
    retained_vecs = [embedder.embed(c.question) for c in against]
    kept = []
    for card in cards:
        if card.question in retained_text:
            continue
        vec = embedder.embed(card.question)
        if any(cosine_similarity(vec, r) >= threshold for r in retained_vecs):
            continue
        kept.append(card)
        retained_text.add(card.question)
        retained_vecs.append(vec)
    return kept


def triviality_filter(cards, dataset, diagnostics=None):
    """Drop cards whose unfiltered view has at most one group."""
    kept = []
    for card in cards:
        try:
            view = compute_view(dataset, EMPTY, card.breakdown, card.measure)
        except (UnknownColumn, IncompatibleMeasure) as exc:
            if diagnostics is not None:
                diagnostics.append(f"dropping card {card.question!r}: {exc}")
            continue
        if len(view) > 1:
            kept.append(card)
    return kept


STAGES = ("parsed", "after_relevance", "after_dedup", "after_triviality")


def run_qugen(dataset, llm, embedder, params=None, seed=0, stats_summary=None):
    """Iteratively generate, filter and accumulate Insight Cards.

    A provider failure abandons only the iteration it happens in.  The
    returned :class:`CardList` records stage counts summed over iterations.
    """
    params = params or QUGenParams()
    rng = random.Random(seed)
    if stats_summary is None:
        stats_summary = template_summary(dataset)
    pool = []
    counts = dict.fromkeys(STAGES, 0)
    counts["failed_iterations"] = 0
    diagnostics = []
    for it in range(params.iterations):
        k = min(params.in_context_examples, len(pool))
        examples = rng.sample(pool, k) if k else []
        prompt = build_qugen_prompt(dataset, stats_summary, examples)
        try:
            responses = llm.complete(prompt, temperature=params.temperature,
                                     samples=params.samples_per_iteration)
            batch = []
            for response in responses:
                batch.extend(parse_insight_cards(response, origin=it, diagnostics=diagnostics))
            counts["parsed"] += len(batch)
            batch = filter_relevance(batch, dataset, embedder, params.relevance_threshold, diagnostics)
            counts["after_relevance"] += len(batch)
            batch = dedup_cards(batch, embedder, params.dedup_threshold, against=pool)
            counts["after_dedup"] += len(batch)
        except ProviderError as exc:
            logger.warning("iteration %d failed: %s", it, exc)
            diagnostics.append(f"iteration {it} failed: {exc}")
            counts["failed_iterations"] += 1
            continue
        batch = triviality_filter(batch, dataset, diagnostics)
        counts["after_triviality"] += len(batch)
        pool.extend(batch)
    return CardList(pool, counts, diagnostics)


@dataclass(frozen=True)
class Association:
    breakdown: str
    measure: Measure
    h_statistic: float
    p_value: float


def rank_associations(dataset, max_groups=ONLYSTATS_MAX_GROUPS):
    """Kruskal-Wallis association of every eligible (breakdown, numeric column) pair, strongest first.

    Each breakdown also gets one COUNT entry carrying its strongest
    association, ranked right after that pair.
    """
    breakdowns = [c for c in dataset.columns
                  if c.kind in BREAKDOWN_KINDS and 2 <= len(c.levels) <= max_groups]
    measures = [c for c in dataset.columns if c.kind in MEASURE_KINDS and c.is_number_valued]
    ranked = []
    for b in breakdowns:
        best = None
        for c in measures:
            if c.name == b.name:
                continue
            ok = (b.codes >= 0) & ~np.isnan(c.numeric)
            codes = b.codes[ok]
            vals = c.numeric[ok]
            groups = [vals[codes == i] for i in np.unique(codes)]
            try:
                res = kruskal_wallis(groups)
            except InsightMinerError:
                continue
            assoc = Association(b.name, Measure(Agg.MEAN, c.name), res.h_statistic, res.p_value)
            ranked.append((assoc, 0))
            if best is None or (res.p_value, -res.h_statistic) < (best.p_value, -best.h_statistic):
                best = assoc
        if best is not None:
            ranked.append((Association(b.name, Measure(Agg.COUNT), best.h_statistic, best.p_value), 1))
    ranked.sort(key=lambda item: (item[0].p_value, -item[0].h_statistic, item[1], item[0].breakdown,
                                  str(item[0].measure)))
    return [a for a, _ in ranked]


def _onlystats_card(assoc):
    b = assoc.breakdown
    if assoc.measure.agg is Agg.COUNT:
        question = f"How are records distributed across {b}?"
        reason = f"{b} is strongly associated with other columns (Kruskal-Wallis p={assoc.p_value:.3g})."
    else:
        c = assoc.measure.column
        question = f"How does {c} vary across {b}?"
        reason = (f"The distribution of {c} differs across {b} groups "
                  f"(Kruskal-Wallis H={assoc.h_statistic:.4g}, p={assoc.p_value:.3g}).")
    return InsightCard(question, reason, b, assoc.measure, ONLYSTATS)


def onlystats_cards(dataset, k=20, seed=None, max_groups=ONLYSTATS_MAX_GROUPS):
    """Top ``k`` (breakdown, measure) cards ranked by Kruskal-Wallis p-value.

    Every eligible breakdown is tested, so ``seed`` does not influence the
    result; it is accepted for interface symmetry with :func:`run_qugen`.
    """
    if k <= 0:
        return CardList([], {"eligible_pairs": 0})
    ranked = rank_associations(dataset, max_groups)
    if not ranked:
        raise NoEligiblePairs("no categorical/ordinal breakdown with a numeric measure to test")
    out = CardList([_onlystats_card(a) for a in ranked[:k]], {"eligible_pairs": len(ranked)})
    out.associations = ranked[:k]
    return out


FILTER_PROMPT = """Table: {name}
{schema}

We analyse {measure} broken down by {breakdown}. Which other columns would be the most
meaningful to filter on to find interesting subsets? Answer with a JSON list of column
names and nothing else."""


def suggest_filter_columns(llm, dataset, breakdown, measure):
    """Ask the LLM for candidate filter columns; unknown names are ignored."""
    prompt = FILTER_PROMPT.format(name=dataset.name, schema=schema_text(dataset), measure=measure,
                                  breakdown=breakdown)
    response = llm.complete(prompt, temperature=0.0, samples=1)[0]
    names = []
    match = re.search(r"\[.*?\]", response, re.S)
    if match:
        try:
            names = [str(x) for x in json.loads(match.group(0))]
        except json.JSONDecodeError:
            names = []
    if not names:
        names = [t.strip().strip("\"'`") for t in re.split(r"[,\n]", response)]
    return {n for n in names if n in dataset and n != breakdown and n != measure.column}
