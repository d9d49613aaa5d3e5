import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from insightminer.exceptions import AllZero, DomainError, NegativeValues, NotCount, TooFewGroups, ZeroSum
from insightminer.patterns import (OV_CAP, Context, Pattern, Thresholds, applicable_patterns, normalize_score,
                                   score_attribution, score_distribution_difference, score_outstanding_value,
                                   score_trend, score_view)
from insightminer.table import Agg, ColumnKind, Measure, View

SUM = Measure(Agg.SUM, "x")
COUNT = Measure(Agg.COUNT)


def view(values, keys=None, measure=SUM, kind=ColumnKind.CATEGORICAL):
    keys = keys if keys is not None else [f"k{i}" for i in range(len(values))]
    return View("b", measure, tuple(zip(keys, values)), kind)


def series(values):
    return view(values, keys=list(range(2000, 2000 + len(values))), kind=ColumnKind.TEMPORAL)


class TestOutstandingValue:
    def test_fixed_point(self):
        r = score_outstanding_value(view([10, 5, 2]))
        assert r.raw == 2.0
        assert r.normalized == 0.5
        assert r.passes
        assert r.detail["top_key"] == "k0"

    def test_by_magnitude(self):
        r = score_outstanding_value(view([3, -9, 2]))
        assert r.raw == 3.0 and r.detail["negative"]

    def test_second_zero_capped(self):
        assert score_outstanding_value(view([4, 0, 0])).raw == OV_CAP

    def test_errors(self):
        with pytest.raises(AllZero):
            score_outstanding_value(view([0, 0]))
        with pytest.raises(TooFewGroups):
            score_outstanding_value(view([5]))

    def test_threshold_strict(self):
        assert not score_outstanding_value(view([14, 10])).passes
        assert score_outstanding_value(view([14.01, 10])).passes


class TestAttribution:
    def test_fixed_point(self):
        r = score_attribution(view([6, 2, 2]))
        assert r.raw == 0.6 and r.passes
        assert r.detail == {"top_key": "k0", "top_value": 6, "total": 10.0}

    def test_exactly_half_fails(self):
        assert not score_attribution(view([5, 3, 2])).passes

    def test_errors(self):
        with pytest.raises(NegativeValues):
            score_attribution(view([5, -1]))
        with pytest.raises(ZeroSum):
            score_attribution(view([0, 0]))


class TestTrend:
    def test_monotone(self):
        r = score_trend(series(range(1, 11)))
        assert r.raw == pytest.approx(0.99991696929667355, abs=1e-12)
        assert r.detail["direction"] == "increasing"
        assert r.passes

    def test_orders_by_key(self):
        shuffled = view([5, 1, 4, 2, 3], keys=[2005, 2001, 2004, 2002, 2003], kind=ColumnKind.TEMPORAL)
        assert score_trend(shuffled).detail["s_statistic"] == 10

    def test_flat(self):
        r = score_trend(series([4, 4, 4, 4, 4]))
        assert r.raw == 0.0 and not r.passes

    def test_needs_five_groups(self):
        with pytest.raises(TooFewGroups):
            score_trend(series([1, 2, 3, 4]))


class TestDistributionDifference:
    def test_fixed_point(self):
        a = view([75, 25], measure=COUNT)
        b = view([25, 75], measure=COUNT)
        assert score_distribution_difference(a, b).raw == pytest.approx(0.18872187554086714, abs=1e-12)

    def test_union_alignment(self):
        a = view([10, 10], keys=["x", "y"], measure=COUNT)
        b = view([10], keys=["z"], measure=COUNT)
        r = score_distribution_difference(a, b)
        assert r.detail["keys"] == ["x", "y", "z"]
        assert r.raw == pytest.approx(1.0, abs=1e-12)

    def test_needs_count(self):
        with pytest.raises(NotCount):
            score_distribution_difference(view([1, 2]), view([2, 1]))


class TestApplicability:
    def test_categorical_no_trend(self):
        assert applicable_patterns("Categorical", SUM, Context.BASIC_INSIGHT) == {
            Pattern.OUTSTANDING_VALUE, Pattern.ATTRIBUTION}

    def test_dd_only_count_in_search(self):
        assert Pattern.DISTRIBUTION_DIFFERENCE in applicable_patterns("Temporal", COUNT, Context.SUBSPACE_SEARCH)
        assert Pattern.DISTRIBUTION_DIFFERENCE not in applicable_patterns("Temporal", COUNT, Context.BASIC_INSIGHT)
        assert Pattern.DISTRIBUTION_DIFFERENCE not in applicable_patterns("Ordinal", SUM, Context.SUBSPACE_SEARCH)
        assert Pattern.TREND in applicable_patterns("Ordinal", SUM, Context.SUBSPACE_SEARCH)

    def test_score_view_returns_none_on_precondition(self):
        assert score_view(Pattern.ATTRIBUTION, view([-1, 3])) is None
        assert score_view(Pattern.TREND, series([1, 2])) is None

    def test_normalize(self):
        assert normalize_score(Pattern.OUTSTANDING_VALUE, 4.0) == 0.75
        with pytest.raises(DomainError):
            normalize_score(Pattern.OUTSTANDING_VALUE, 0.5)
        with pytest.raises(DomainError):
            normalize_score(Pattern.ATTRIBUTION, 1.5)

    def test_custom_thresholds(self):
        assert not score_attribution(view([6, 2, 2]), Thresholds(attribution=0.6)).passes
        with pytest.raises(ValueError):
            Thresholds(trend=0)


positive = st.lists(st.floats(0.01, 1e4, allow_nan=False), min_size=2, max_size=12)


@settings(max_examples=100, deadline=None)
@given(positive, st.floats(0.1, 100))
def test_scale_invariance(values, c):
    for fn in (score_outstanding_value, score_attribution):
        assert fn(view(values)).raw == pytest.approx(fn(view([c * v for v in values])).raw, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(positive, st.randoms(use_true_random=False))
def test_permutation_invariance(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    for fn in (score_outstanding_value, score_attribution):
        assert fn(view(values)).raw == pytest.approx(fn(view(shuffled)).raw, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=2, max_size=8), st.lists(st.integers(1, 50), min_size=2, max_size=8))
def test_dd_symmetric(a, b):
    assume(len(a) == len(b))
    va, vb = view(a, measure=COUNT), view(b, measure=COUNT)
    assert score_distribution_difference(va, vb).raw == pytest.approx(
        score_distribution_difference(vb, va).raw, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(positive)
def test_normalized_in_unit_interval(values):
    for fn in (score_outstanding_value, score_attribution):
        r = fn(view(values))
        assert 0.0 <= r.normalized <= 1.0
