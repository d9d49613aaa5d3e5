"""scikit-learn style estimators wrapping card generation and insight mining.

The estimators follow the usual conventions: hyper-parameters are plain
constructor arguments (so ``get_params``/``set_params``/``clone`` work),
``fit`` returns ``self`` and learned state lives in trailing-underscore
attributes.

>>> miner = InsightMiner(card_source="onlystats", random_state=7)  # doctest: +SKIP
>>> miner.fit("sales.csv").insights_[:3]                           # doctest: +SKIP
"""
import logging
import time

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ProviderError
from .patterns import Thresholds
from .pipeline import DEFAULT_INSIGHT_CAP, derive_seed, mine_card
from .providers import HashingEmbedder
from .questions import (CardList, QUGenParams, nl_stats_summary, onlystats_cards, run_qugen,
                        suggest_filter_columns)
from .search import SearchParams
from .validation import check_dataset, valid_cards

logger = logging.getLogger(__name__)


class OnlyStatsCards(TransformerMixin, BaseEstimator):
    """Cards for the ``top_k`` breakdown/measure pairs with the strongest Kruskal-Wallis association."""

    def __init__(self, top_k=20, max_groups=50):
        self.top_k = top_k
        self.max_groups = max_groups

    def fit(self, X, y=None):
        dataset = check_dataset(X)
        self.cards_ = onlystats_cards(dataset, self.top_k, max_groups=self.max_groups)
        self.associations_ = getattr(self.cards_, "associations", [])
        return self

    def transform(self, X):
        return onlystats_cards(check_dataset(X), self.top_k, max_groups=self.max_groups)


class QuestionGenerator(TransformerMixin, BaseEstimator):
    """Iterative LLM question generation with relevance, duplicate and triviality filters."""

    def __init__(self, llm=None, embedder=None, iterations=10, samples_per_iteration=3, temperature=1.1,
                 in_context_examples=6, relevance_threshold=0.2, dedup_threshold=0.85, llm_stats=False,
                 random_state=0):
        self.llm = llm
        self.embedder = embedder
        self.iterations = iterations
        self.samples_per_iteration = samples_per_iteration
        self.temperature = temperature
        self.in_context_examples = in_context_examples
        self.relevance_threshold = relevance_threshold
        self.dedup_threshold = dedup_threshold
        self.llm_stats = llm_stats
        self.random_state = random_state

    def _params(self):
        return QUGenParams(self.iterations, self.samples_per_iteration, self.temperature,
                           self.in_context_examples, self.relevance_threshold, self.dedup_threshold)

    def fit(self, X, y=None):
        if self.llm is None:
            raise ValueError("QuestionGenerator needs an llm provider")
        dataset = check_dataset(X)
        embedder = self.embedder if self.embedder is not None else HashingEmbedder()
        summary = nl_stats_summary(dataset, self.llm if self.llm_stats else None)
        self.stats_summary_ = summary
        self.cards_ = run_qugen(dataset, self.llm, embedder, self._params(),
                                seed=derive_seed(self.random_state or 0, "qugen"), stats_summary=summary)
        self.stage_counts_ = dict(self.cards_.stage_counts)
        self.diagnostics_ = list(self.cards_.diagnostics)
        return self

    def transform(self, X):
        """The fitted cards; ``X`` is ignored (generation is not repeated)."""
        check_is_fitted(self, "cards_")
        return list(self.cards_)


class InsightMiner(BaseEstimator):
    """Generate Insight Cards for a table and mine scored insights for each.

    Parameters
    ----------
    card_source : {"onlystats", "quis"}
        Where cards come from: the Kruskal-Wallis baseline or the LLM loop.
    cards : list of InsightCard, optional
        Use these cards instead of generating any.
    llm, embedder : providers
        ``llm`` is required for ``card_source="quis"``; it also proposes
        filter columns for the subspace search when given.  The embedder
        defaults to :class:`~insightminer.providers.HashingEmbedder`.
    beam_width, exp_factor, max_depth, w_llm : search settings
    trend_threshold, ov_threshold, attribution_threshold, dd_threshold : float
        Pattern thresholds; a score must be strictly greater to count.
    insight_cap : int
        Maximum insights kept per card, best normalized score first.
    random_state : int
        Base seed; every stage derives its own seed from it.

    Attributes
    ----------
    dataset_, cards_, insights_ (list of ``(card_index, Insight)``),
    stage_counts_, timings_ms_, diagnostics_
    """

    def __init__(self, card_source="quis", cards=None, llm=None, embedder=None, top_k=20,
                 iterations=10, samples_per_iteration=3, temperature=1.1, in_context_examples=6,
                 relevance_threshold=0.2, dedup_threshold=0.85, llm_stats=False,
                 beam_width=100, exp_factor=100, max_depth=1, w_llm=0.5,
                 trend_threshold=0.95, ov_threshold=1.4, attribution_threshold=0.5, dd_threshold=0.2,
                 insight_cap=DEFAULT_INSIGHT_CAP, random_state=0):
        self.card_source = card_source
        self.cards = cards
        self.llm = llm
        self.embedder = embedder
        self.top_k = top_k
        self.iterations = iterations
        self.samples_per_iteration = samples_per_iteration
        self.temperature = temperature
        self.in_context_examples = in_context_examples
        self.relevance_threshold = relevance_threshold
        self.dedup_threshold = dedup_threshold
        self.llm_stats = llm_stats
        self.beam_width = beam_width
        self.exp_factor = exp_factor
        self.max_depth = max_depth
        self.w_llm = w_llm
        self.trend_threshold = trend_threshold
        self.ov_threshold = ov_threshold
        self.attribution_threshold = attribution_threshold
        self.dd_threshold = dd_threshold
        self.insight_cap = insight_cap
        self.random_state = random_state

    @property
    def thresholds(self):
        return Thresholds(self.trend_threshold, self.ov_threshold, self.attribution_threshold, self.dd_threshold)

    def _search_params(self, card_index):
        return SearchParams(self.beam_width, self.exp_factor, self.max_depth, self.w_llm,
                            derive_seed(self.random_state or 0, "search", card_index))

    def _generate_cards(self, dataset):
        if self.cards is not None:
            cards = CardList(valid_cards(dataset, self.cards))
            cards.stage_counts = {"provided": len(self.cards), "valid": len(cards)}
            return cards
        if self.card_source == "onlystats":
            return onlystats_cards(dataset, self.top_k)
        if self.card_source == "quis":
            gen = QuestionGenerator(self.llm, self.embedder, self.iterations, self.samples_per_iteration,
                                    self.temperature, self.in_context_examples, self.relevance_threshold,
                                    self.dedup_threshold, self.llm_stats, self.random_state)
            gen.fit(dataset)
            return gen.cards_
        raise ValueError(f"unknown card_source {self.card_source!r}")

    def _candidates(self, dataset, card):
        if self.llm is None:
            return set()
        try:
            return suggest_filter_columns(self.llm, dataset, card.breakdown, card.measure)
        except ProviderError as exc:
            logger.info("no filter-column suggestions for %r: %s", card.question, exc)
            return set()

    def _mine(self, dataset, cards, diagnostics):
        insights = []
        for idx, card in enumerate(cards):
            found = mine_card(dataset, card, self._search_params(idx), self._candidates(dataset, card),
                              self.thresholds, self.insight_cap, diagnostics)
            insights.extend((idx, ins) for ins in found)
        return insights

    def fit(self, X, y=None):
        timings = {}
        t0 = time.perf_counter()
        self.dataset_ = check_dataset(X)
        timings["load"] = (time.perf_counter() - t0) * 1000.0

        t0 = time.perf_counter()
        self.cards_ = self._generate_cards(self.dataset_)
        timings["cards"] = (time.perf_counter() - t0) * 1000.0
        self.diagnostics_ = list(getattr(self.cards_, "diagnostics", []))

        t0 = time.perf_counter()
        self.insights_ = self._mine(self.dataset_, self.cards_, self.diagnostics_)
        timings["insights"] = (time.perf_counter() - t0) * 1000.0

        counts = dict(getattr(self.cards_, "stage_counts", {}))
        counts["cards"] = len(self.cards_)
        counts["basic_insights"] = sum(1 for _, i in self.insights_ if not i.subspace)
        counts["deeper_insights"] = sum(1 for _, i in self.insights_ if i.subspace)
        self.stage_counts_ = counts
        self.timings_ms_ = timings
        return self

    def transform(self, X):
        """Mine the fitted cards on another table with a compatible schema."""
        check_is_fitted(self, "cards_")
        dataset = check_dataset(X)
        return self._mine(dataset, valid_cards(dataset, self.cards_), [])

    def score(self, X=None, y=None):
        """Average normalized insight score in [0, 1] (0 when nothing was found)."""
        insights = self.insights_ if X is None else self.transform(X)
        if not insights:
            return 0.0
        return sum(i.normalized_score for _, i in insights) / len(insights)
