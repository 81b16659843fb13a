from collections import Counter
from fractions import Fraction

import pytest

from src.config.settings import settings
from src.measures.measure import (
    BernoulliMeasure,
    IntervalUniformMeasure,
    MarkovMeasure,
    MixtureMeasure,
    PointMassMeasure,
    TableMeasure,
    UniformMeasure,
    evaluate,
    sample,
    total_variation_at_depth,
    validate_additivity,
)
from src.measures.words import PeriodicSequence, partition
from src.utils.errors import (
    DepthBudgetExceeded,
    NullConditioningError,
    PreconditionError,
)
from tests.oracles import interval_mass

MARKOV = MarkovMeasure(
    Fraction(1, 2), [[Fraction(3, 4), Fraction(1, 4)], [Fraction(1, 2), Fraction(1, 2)]]
)

SHIPPED = [
    UniformMeasure(),
    BernoulliMeasure(Fraction(1, 3)),
    BernoulliMeasure(Fraction(0)),
    MARKOV,
    PointMassMeasure(PeriodicSequence("1", "0")),
    PointMassMeasure(PeriodicSequence("", "10")),
    IntervalUniformMeasure(Fraction(2, 3), Fraction(1)),
    IntervalUniformMeasure(Fraction(1, 5), Fraction(3, 7)),
    MixtureMeasure(
        [Fraction(1, 4), Fraction(3, 4)], [UniformMeasure(), BernoulliMeasure(Fraction(1, 10))]
    ),
]


def test_bernoulli_mass():
    assert BernoulliMeasure(Fraction(1, 3)).mass("101") == Fraction(2, 27)
    assert BernoulliMeasure(Fraction(1, 3)).mass("") == 1


def test_uniform_mass():
    assert evaluate(UniformMeasure(), "0110") == Fraction(1, 16)


def test_markov_mass_and_next_bit():
    assert MARKOV.mass("011") == Fraction(1, 2) * Fraction(1, 4) * Fraction(1, 2)
    assert MARKOV.next_bit_probability("") == Fraction(1, 2)
    assert MARKOV.next_bit_probability("10") == Fraction(1, 4)
    assert MARKOV.next_bit_probability("01") == MARKOV.mass("011") / MARKOV.mass("01")


def test_point_mass():
    m = PointMassMeasure(PeriodicSequence("1", "0"))
    assert m.mass("1000") == 1
    assert m.mass("11") == 0
    assert m.next_bit_probability("10") == 0
    with pytest.raises(NullConditioningError):
        m.next_bit_probability("11")


def test_interval_uniform_matches_interval_oracle():
    lower, upper = Fraction(1, 5), Fraction(3, 7)
    m = IntervalUniformMeasure(lower, upper)
    for x in partition(6):
        assert m.mass(x) == interval_mass(x, lower, upper) / (upper - lower)
    assert IntervalUniformMeasure(Fraction(1, 3), Fraction(1)).mass("0") == Fraction(1, 4)


def test_interval_uniform_rejects_empty_interval():
    with pytest.raises(PreconditionError):
        IntervalUniformMeasure(Fraction(1, 2), Fraction(1, 2))


def test_mixture_exchangeability_follows_components():
    assert SHIPPED[-1].exchangeable
    assert not MixtureMeasure([Fraction(1)], [MARKOV]).exchangeable


@pytest.mark.parametrize("measure", SHIPPED, ids=lambda m: type(m).__name__)
def test_shipped_measures_are_additive_at_depth_8(measure):
    report = validate_additivity(measure, 8)
    assert report.ok
    assert report.checked == 2**8 - 1


def test_table_negative_control():
    table = TableMeasure({"": Fraction(1), "0": Fraction(1, 2), "1": Fraction(1, 3)})
    report = validate_additivity(table, 1)
    assert not report.ok
    assert report.violations[0].word == ""
    assert report.violations[0].children_sum == Fraction(5, 6)


def test_table_negative_masses_are_reported():
    table = TableMeasure({"": Fraction(1), "0": Fraction(3, 2), "1": Fraction(-1, 2)})
    report = validate_additivity(table, 1)
    assert report.negative_words == ["1"]
    assert not report.violations


def test_table_without_entry_fails_loudly():
    table = TableMeasure({"": Fraction(1), "0": Fraction(1, 2), "1": Fraction(1, 2)})
    with pytest.raises(PreconditionError):
        validate_additivity(table, 2)


def test_evaluate_enforces_depth_budget(monkeypatch):
    monkeypatch.setattr(settings, "depth_budget", 3)
    with pytest.raises(DepthBudgetExceeded):
        evaluate(UniformMeasure(), "0000")


class TestTotalVariation:
    def test_bernoulli_depth_one(self):
        p, q = BernoulliMeasure(Fraction(1, 4)), BernoulliMeasure(Fraction(3, 4))
        assert total_variation_at_depth(p, q, 1) == Fraction(1, 2)
        assert total_variation_at_depth(p, q, 0) == 0

    def test_point_mass_against_uniform(self):
        p = PointMassMeasure(PeriodicSequence("", "0"))
        for n in range(8):
            assert total_variation_at_depth(p, UniformMeasure(), n) == 1 - Fraction(1, 2**n)

    def test_disjoint_intervals(self):
        p = IntervalUniformMeasure(Fraction(0), Fraction(1, 2))
        q = IntervalUniformMeasure(Fraction(1, 2), Fraction(1))
        assert total_variation_at_depth(p, q, 1) == 1
        assert total_variation_at_depth(p, q, 0) == 0

    @pytest.mark.parametrize("n", range(0, 9))
    def test_aggregation_matches_tree_descent(self, n):
        p, q = BernoulliMeasure(Fraction(2, 7)), SHIPPED[-1]
        assert total_variation_at_depth(p, q, n, aggregate=True) == total_variation_at_depth(
            p, q, n, aggregate=False
        )

    def test_aggregation_needs_exchangeable_measures(self):
        with pytest.raises(PreconditionError):
            total_variation_at_depth(MARKOV, UniformMeasure(), 3, aggregate=True)

    def test_aggregation_has_its_own_limit(self):
        p, q = BernoulliMeasure(Fraction(1, 3)), BernoulliMeasure(Fraction(1, 2))
        assert 0 < total_variation_at_depth(p, q, 100) < 1


class TestSampling:
    def test_same_seed_same_word(self):
        m = BernoulliMeasure(Fraction(1, 3))
        assert sample(m, 300, seed=11) == sample(m, 300, seed=11)
        assert sample(m, 300, seed=11) != sample(m, 300, seed=12)

    def test_degenerate_measures(self):
        assert sample(BernoulliMeasure(Fraction(0)), 20, seed=1) == "0" * 20
        assert sample(PointMassMeasure(PeriodicSequence("1", "01")), 7, seed=3) == "1010101"

    def test_frequency_of_fair_coin(self):
        word = sample(UniformMeasure(), 4000, seed=2024)
        assert 1800 < word.count("1") < 2200

    def test_sampled_words_have_positive_mass(self):
        m = IntervalUniformMeasure(Fraction(1, 3), Fraction(2, 5))
        for seed in range(20):
            assert m.mass(sample(m, 12, seed)) > 0

    def test_length_limit(self, monkeypatch):
        monkeypatch.setattr(settings, "sample_length_limit", 10)
        with pytest.raises(DepthBudgetExceeded):
            sample(UniformMeasure(), 11, seed=0)

    def test_negative_length_is_rejected(self):
        with pytest.raises(PreconditionError):
            sample(UniformMeasure(), -1, seed=0)
        assert sample(UniformMeasure(), 0, seed=0) == ""

    def test_depth_three_frequencies_match_the_masses(self):
        m = BernoulliMeasure(Fraction(1, 3))
        draws = 100_000
        counts = Counter(sample(m, 3, seed) for seed in range(draws))
        for w in partition(3):
            assert abs(Fraction(counts[w], draws) - m.mass(w)) < Fraction(5, 1000), w

    def test_fair_coin_seed_seven_is_frozen(self):
        word = sample(BernoulliMeasure(Fraction(1, 2)), 10_000, seed=7)
        assert 4700 <= word.count("1") <= 5300
        assert word.count("1") == 5074
