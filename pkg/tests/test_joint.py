from fractions import Fraction

import pytest
from pydantic import ValidationError

from src.config.settings import settings
from src.measures.joint import (
    BetaBernoulliJoint,
    ProductJoint,
    evaluate2,
    validate_joint_additivity,
    verify_construction_clauses,
    verify_counterexample,
    y_tail_limit,
    y_tail_mass,
)
from src.measures.measure import BernoulliMeasure, IntervalUniformMeasure, UniformMeasure
from src.measures.words import PeriodicSequence, cylinder_interval, dyadic_value, partition
from src.models.specs import CounterexampleSpec
from src.utils.errors import (
    DepthBudgetExceeded,
    InsufficientApproximantsError,
    NullConditioningError,
)
from tests.oracles import beta_integral, interval_mass, words_up_to


class TestBetaBernoulli:
    def test_matches_polynomial_oracle(self, beta):
        for y in words_up_to(3):
            interval = cylinder_interval(y)
            for x in words_up_to(5):
                ones = x.count("1")
                expected = beta_integral(ones, len(x) - ones, interval.lower, interval.upper)
                assert beta.mass2(x, y) == expected, (x, y)

    def test_known_values(self, beta):
        assert beta.mass2("11", "1") == Fraction(7, 24)
        assert beta.mass2("1", "") == Fraction(1, 2)
        assert beta.mass2("10", "") == Fraction(1, 6)
        assert beta.mass2("", "01") == Fraction(1, 4)

    def test_long_walk_matches_oracle(self):
        # the memo is filled along a sampling-like path before the far query
        joint = BetaBernoulliJoint()
        x = ""
        for bit in "1101001110" * 4:
            joint.mass2(x + "1", "1")
            x += bit
            joint.mass2(x, "1")
        ones = x.count("1")
        assert joint.mass2(x, "1") == beta_integral(ones, len(x) - ones, Fraction(1, 2), Fraction(1))
        assert joint.mass2("0" * 30, "01") == beta_integral(0, 30, Fraction(1, 4), Fraction(1, 2))

    def test_integral_tables_are_bounded(self, monkeypatch):
        monkeypatch.setattr(settings, "beta_table_cache_size", 4)
        joint = BetaBernoulliJoint()
        for y in words_up_to(4):
            interval = cylinder_interval(y)
            assert joint.mass2("110", y) == beta_integral(2, 1, interval.lower, interval.upper)
        assert joint._table.cache_info().currsize == 4
        # evicted tables are rebuilt on demand
        assert joint.mass2("110", "") == Fraction(1, 12)

    def test_limit_conditional_is_bernoulli_of_the_limit(self, beta):
        limit = beta.limit_conditional(PeriodicSequence("", "10"))
        assert isinstance(limit, BernoulliMeasure)
        assert limit.theta == Fraction(2, 3)


class TestProduct:
    def test_mass_factorizes(self):
        joint = ProductJoint(BernoulliMeasure(Fraction(1, 3)), UniformMeasure())
        assert joint.mass2("1", "00") == Fraction(1, 12)
        assert joint.limit_conditional(PeriodicSequence("", "1")) is joint.p

    def test_evaluate2_checks_depth(self, product_uniform, monkeypatch):
        monkeypatch.setattr(settings, "depth_budget", 2)
        with pytest.raises(DepthBudgetExceeded):
            evaluate2(product_uniform, "0", "000")


class TestCounterexample:
    def test_tail_marginal(self, counterexample5, spec5):
        for k in range(0, spec5.size + 2):
            expected = Fraction(1) if k == 0 else 1 - dyadic_value("10" * (k - 1))
            assert counterexample5.mass2("", "1" * k) == expected
            assert y_tail_mass(spec5, k) == expected
        assert y_tail_limit(spec5) == Fraction(1, 3)

    def test_x_marginal_is_uniform(self, counterexample5):
        for x in words_up_to(10):
            assert counterexample5.mass2(x, "") == Fraction(1, 2 ** len(x))

    def test_atoms_carry_their_bands(self, counterexample5, spec5):
        cuts = spec5.cutoffs
        for i in range(1, spec5.size + 1):
            for x in partition(4):
                expected = interval_mass(x, cuts[i - 1], cuts[i])
                assert counterexample5.mass2(x, "1" * i + "0") == expected
                assert counterexample5.mass2(x, "1" * i + "000") == expected
                assert counterexample5.mass2(x, "1" * i + "01") == 0

    def test_cylinders_outside_the_atoms_are_null(self, counterexample5):
        assert counterexample5.mass2("", "0") == 0
        assert counterexample5.mass2("", "01") == 0
        assert counterexample5.mass2("1", "1011") == 0

    def test_unknown_atoms_raise_only_when_needed(self, counterexample5):
        # up to 1^{I+1} every unknown atom lies inside the y-cylinder
        assert counterexample5.mass2("", "1" * 6) == 1 - dyadic_value("10" * 5)
        with pytest.raises(InsufficientApproximantsError):
            counterexample5.mass2("", "1" * 7)
        with pytest.raises(InsufficientApproximantsError):
            counterexample5.mass2("", "1" * 6 + "0")
        # x lies away from (r(a_I), alpha): nothing unknown is touched
        assert counterexample5.mass2("0", "1" * 9) == 0
        assert counterexample5.mass2("11", "1" * 9) == Fraction(1, 4)
        assert counterexample5.mass2("0", "1" * 6 + "0") == 0

    def test_limit_conditionals(self, counterexample5, spec5):
        top = counterexample5.limit_conditional(PeriodicSequence("", "1"))
        assert isinstance(top, IntervalUniformMeasure)
        assert (top.interval.lower, top.interval.upper) == (Fraction(2, 3), Fraction(1))
        band = counterexample5.limit_conditional(PeriodicSequence("11", "0"))
        assert (band.interval.lower, band.interval.upper) == (spec5.cutoffs[1], spec5.cutoffs[2])
        with pytest.raises(NullConditioningError):
            counterexample5.limit_conditional(PeriodicSequence("0", "0"))
        with pytest.raises(NullConditioningError):
            counterexample5.limit_conditional(PeriodicSequence("", "10"))
        with pytest.raises(InsufficientApproximantsError):
            counterexample5.limit_conditional(PeriodicSequence("1" * 6, "0"))

    def test_verification_report(self, spec5):
        report = verify_counterexample(spec5)
        assert report.ok
        assert [row.k for row in report.tail] == list(range(1, 7))
        assert report.tail_limit == Fraction(1, 3)
        assert report.clauses_checked > 0

    def test_clause_check_counts(self, spec5):
        checked, failures = verify_construction_clauses(spec5, 2, 4)
        assert not failures
        assert checked >= 16 * 2 * 3

    @pytest.mark.parametrize(
        "approximants, alpha",
        [
            (["11", "10"], "7/8"),  # decreasing
            (["00", "01"], "2/3"),  # r(a_1) = 0
            (["10", "1010"], "5/8"),  # alpha below r(a_I)
            (["10"], "1"),  # alpha not below 1
            ([], "1/2"),
            (["1x"], "2/3"),
        ],
    )
    def test_spec_validation(self, approximants, alpha):
        with pytest.raises(ValidationError):
            CounterexampleSpec(approximants=approximants, alpha=alpha)


@pytest.mark.parametrize("name", ["product", "beta", "counterexample"])
def test_joint_additivity_at_depth_8(name, product_uniform, beta, counterexample8):
    joint = {"product": product_uniform, "beta": beta, "counterexample": counterexample8}[name]
    report = validate_joint_additivity(joint, 8)
    assert report.ok, report.violations[:3]
    assert report.root_mass == 1


def test_joint_additivity_flags_a_broken_joint():
    class Broken(ProductJoint):
        def mass2(self, x, y):
            value = super().mass2(x, y)
            return value * 2 if x == "01" and y == "" else value

    report = validate_joint_additivity(Broken(UniformMeasure(), UniformMeasure()), 3)
    assert not report.ok
    assert {(v.x, v.y, v.axis) for v in report.violations} >= {("0", "", "x"), ("01", "", "y")}
