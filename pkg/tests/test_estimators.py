import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from insightminer.estimators import InsightMiner, OnlyStatsCards, QuestionGenerator
from insightminer.exceptions import UnknownColumn
from insightminer.providers import ReplayProvider
from insightminer.questions import InsightCard
from insightminer.table import Measure
from insightminer.validation import check_dataset
from stubs import EXPECTED_SURVIVORS, mixture_responses, staff_dataset
from synthetic import sales_dataset, sales_table, write_csv


@pytest.fixture(scope="module")
def sales():
    return sales_dataset(1500, seed=2)


def test_get_params_and_clone():
    miner = InsightMiner(card_source="onlystats", beam_width=7, random_state=3)
    params = miner.get_params()
    assert params["beam_width"] == 7 and params["card_source"] == "onlystats"
    twin = clone(miner)
    assert twin.get_params() == params and twin is not miner
    miner.set_params(top_k=4)
    assert miner.top_k == 4


def test_onlystats_fit_deterministic(sales):
    a = InsightMiner(card_source="onlystats", top_k=5, random_state=1).fit(sales)
    b = InsightMiner(card_source="onlystats", top_k=5, random_state=1).fit(sales)
    assert len(a.cards_) == 5
    assert [(i, x.identity, x.raw_score) for i, x in a.insights_] == [(i, x.identity, x.raw_score)
                                                                       for i, x in b.insights_]
    assert a.stage_counts_["basic_insights"] + a.stage_counts_["deeper_insights"] == len(a.insights_)
    assert 0.0 <= a.score() <= 1.0


def test_transform_on_new_table(sales):
    miner = InsightMiner(card_source="onlystats", top_k=3).fit(sales)
    other = sales_dataset(800, seed=9)
    assert all(0 <= idx < 3 for idx, _ in miner.transform(other))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        InsightMiner().transform(staff_dataset())


def test_provided_cards_validated(sales):
    good = InsightCard("q?", "r", "Channel", Measure.parse("MEAN(Profit)"))
    bad = InsightCard("q2?", "r", "Nope", Measure.parse("COUNT()"))
    miner = InsightMiner(cards=[good, bad]).fit(sales)
    assert miner.cards_ == [good]
    assert miner.stage_counts_["provided"] == 2


def test_question_generator():
    d = staff_dataset()
    gen = QuestionGenerator(ReplayProvider(mixture_responses()), iterations=2).fit(d)
    assert [c.question for c in gen.transform(d)] == EXPECTED_SURVIVORS
    assert gen.stats_summary_.startswith("The table has 40 rows")
    with pytest.raises(ValueError):
        QuestionGenerator().fit(staff_dataset())


def test_onlystats_transformer(sales):
    cards = OnlyStatsCards(top_k=3).fit_transform(sales)
    assert len(cards) == 3 and all(c.origin == "OnlyStats" for c in cards)


def test_llm_cards_with_failed_filter_suggestion():
    # the replay runs out when filter columns are requested; mining still goes ahead
    miner = InsightMiner(card_source="quis", llm=ReplayProvider(mixture_responses()), iterations=2)
    miner.fit(staff_dataset())
    assert len(miner.cards_) == 3


class TestCheckDataset:
    def test_path_and_dict(self, tmp_path):
        path = write_csv(tmp_path / "s.csv", sales_table(50))
        assert check_dataset(path).row_count == 50
        assert check_dataset(str(path)).name == "s"
        assert check_dataset({"a": [1, 2]}, name="d").name == "d"

    def test_dataframe(self):
        pd = pytest.importorskip("pandas")
        d = check_dataset(pd.DataFrame({"a": [1, None], "b": ["x", "y"]}))
        assert d["a"].values == (1, None)

    def test_rejects_other(self):
        with pytest.raises(TypeError):
            check_dataset(42)

    def test_unknown_card_column(self):
        from insightminer.validation import check_card
        with pytest.raises(UnknownColumn):
            check_card(staff_dataset(), InsightCard("q", "r", "nope", Measure.parse("COUNT()")))
