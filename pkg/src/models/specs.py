"""
JSON schemas for model, joint, test and pool specifications.

Rationals travel as "p/q" strings. Every document may carry
``"schema_version": "1"``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Annotated, Dict, List, Literal, Union

from pydantic import ConfigDict, Field, field_validator, model_validator

from src.measures.words import check_word, dyadic_value
from src.utils.rationals import ExactModel, Rational

SCHEMA_VERSION = "1"


class SpecModel(ExactModel):
    """Base for input documents: strict about unknown keys."""

    model_config = ConfigDict(
        arbitrary_types_allowed=True, frozen=True, extra="forbid"
    )

    schema_version: Literal["1"] = SCHEMA_VERSION


def _unit(value: Fraction, name: str) -> Fraction:
    if not 0 <= value <= 1:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


class BernoulliSpec(SpecModel):
    type: Literal["bernoulli"] = "bernoulli"
    theta: Rational

    @field_validator("theta")
    @classmethod
    def _theta_in_unit(cls, value: Fraction) -> Fraction:
        return _unit(value, "theta")


class UniformSpec(SpecModel):
    type: Literal["uniform"] = "uniform"


class MarkovSpec(SpecModel):
    """First-order chain: ``initial`` = P(first bit 1), ``transitions[i][j]`` = P(j | i)."""

    type: Literal["markov"] = "markov"
    initial: Rational
    transitions: List[List[Rational]]

    @field_validator("initial")
    @classmethod
    def _initial_in_unit(cls, value: Fraction) -> Fraction:
        return _unit(value, "initial")

    @field_validator("transitions")
    @classmethod
    def _stochastic(cls, rows: List[List[Fraction]]) -> List[List[Fraction]]:
        if len(rows) != 2 or any(len(row) != 2 for row in rows):
            raise ValueError("transitions must be a 2x2 matrix")
        for i, row in enumerate(rows):
            if any(p < 0 for p in row) or sum(row) != 1:
                raise ValueError(f"transition row {i} must be nonnegative and sum to 1")
        return rows


class PointMassSpec(SpecModel):
    """Point mass on the eventually periodic sequence head·repeat^∞."""

    type: Literal["pointmass"] = "pointmass"
    head: str = ""
    repeat: str

    @field_validator("head", "repeat")
    @classmethod
    def _binary(cls, value: str) -> str:
        return check_word(value)

    @field_validator("repeat")
    @classmethod
    def _nonempty(cls, value: str) -> str:
        if not value:
            raise ValueError("repeat must be nonempty")
        return value


class IntervalSpec(SpecModel):
    """Uniform measure restricted to [lower, upper) and renormalized."""

    type: Literal["interval"] = "interval"
    lower: Rational
    upper: Rational

    @model_validator(mode="after")
    def _ordered(self) -> "IntervalSpec":
        if not 0 <= self.lower < self.upper <= 1:
            raise ValueError("interval needs 0 <= lower < upper <= 1")
        return self


class TableSpec(SpecModel):
    """Explicit cylinder masses for every word up to some depth."""

    type: Literal["table"] = "table"
    masses: Dict[str, Rational]

    @field_validator("masses")
    @classmethod
    def _words(cls, masses: Dict[str, Fraction]) -> Dict[str, Fraction]:
        for word in masses:
            check_word(word)
        if "" not in masses:
            raise ValueError("table must give the mass of the empty word")
        return masses


class MixtureSpec(SpecModel):
    type: Literal["mixture"] = "mixture"
    weights: List[Rational]
    components: List["ModelSpec"]

    @model_validator(mode="after")
    def _convex(self) -> "MixtureSpec":
        if not self.components or len(self.weights) != len(self.components):
            raise ValueError("mixture needs one weight per component")
        if any(w <= 0 for w in self.weights) or sum(self.weights) != 1:
            raise ValueError("mixture weights must be positive and sum to 1")
        return self


ModelSpec = Annotated[
    Union[
        BernoulliSpec,
        UniformSpec,
        MarkovSpec,
        PointMassSpec,
        IntervalSpec,
        TableSpec,
        MixtureSpec,
    ],
    Field(discriminator="type"),
]

MixtureSpec.model_rebuild()


class ProductJointSpec(SpecModel):
    type: Literal["product"] = "product"
    x: ModelSpec
    y: ModelSpec


class BetaBernoulliJointSpec(SpecModel):
    type: Literal["beta_bernoulli"] = "beta_bernoulli"


class CounterexampleSpec(SpecModel):
    """
    Approximants a_1..a_I with 0 < r(a_1) < ... < r(a_I) < alpha < 1.

    alpha is the limit the approximants converge to; it is supplied so that
    the 1^∞ tail can be evaluated exactly.
    """

    type: Literal["counterexample"] = "counterexample"
    approximants: List[str]
    alpha: Rational

    @field_validator("approximants")
    @classmethod
    def _words(cls, words: List[str]) -> List[str]:
        if not words:
            raise ValueError("at least one approximant is required")
        for word in words:
            check_word(word)
        return words

    @model_validator(mode="after")
    def _monotone(self) -> "CounterexampleSpec":
        cuts = self.cutoffs
        for i in range(1, len(cuts)):
            if not cuts[i - 1] < cuts[i]:
                raise ValueError(
                    f"approximants must satisfy r(a_{i - 1}) < r(a_{i}) with r(a_0) = 0"
                )
        if not cuts[-1] < self.alpha < 1:
            raise ValueError("alpha must satisfy r(a_I) < alpha < 1")
        return self

    @property
    def cutoffs(self) -> List[Fraction]:
        """[r(a_0) = 0, r(a_1), ..., r(a_I)]."""
        return [Fraction(0)] + [dyadic_value(a) for a in self.approximants]

    @property
    def size(self) -> int:
        """I, the number of approximants."""
        return len(self.approximants)

    @property
    def max_length(self) -> int:
        return max(len(a) for a in self.approximants)


JointSpec = Annotated[
    Union[ProductJointSpec, BetaBernoulliJointSpec, CounterexampleSpec],
    Field(discriminator="type"),
]


class FiniteTestSpec(SpecModel):
    """Finite test: level index -> words."""

    levels: Dict[int, List[str]]

    @field_validator("levels")
    @classmethod
    def _levels(cls, levels: Dict[int, List[str]]) -> Dict[int, List[str]]:
        if sorted(levels) != list(range(1, len(levels) + 1)):
            raise ValueError("levels must be numbered 1..N without gaps")
        for words in levels.values():
            for word in words:
                check_word(word)
        return levels


class PoolEntry(ExactModel):
    weight: Rational
    model: ModelSpec


class PoolSpec(SpecModel):
    """Finite reference mixture for deficiency computations."""

    entries: List[PoolEntry]

    @model_validator(mode="after")
    def _convex(self) -> "PoolSpec":
        weights = [entry.weight for entry in self.entries]
        if not weights or any(w <= 0 for w in weights) or sum(weights) != 1:
            raise ValueError("pool weights must be positive and sum to 1")
        return self
