"""
Conditioning, marginalization and posteriors on cylinder events.

P(x|y) := P(Δ(x) × Δ(y)) / P(Ω × Δ(y)). The conditional given a whole
sequence y^∞ is only ever approached through its prefixes (the martingale
sequence), except where a joint supplies an exact limit evaluator.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Dict, List

from pydantic import BaseModel

from src.measures.joint import JointMeasure
from src.measures.measure import CylinderMeasure
from src.measures.words import EMPTY, PeriodicSequence, Word, check_word, ensure_depth, iter_partition
from src.utils.errors import NullConditioningError
from src.utils.logger import get_logger
from src.utils.rationals import ExactModel

logger = get_logger(__name__)


class SliceDescriptor(ExactModel):
    """Describes a measure derived from a joint."""

    kind: str
    joint: Dict[str, Any]
    given: str = ""


class MarginalX(CylinderMeasure):
    """P_X(x) = mass2(x, λ)."""

    def __init__(self, joint: JointMeasure) -> None:
        self.joint = joint
        self.exchangeable = joint.exchangeable_x

    def mass(self, x: Word) -> Fraction:
        return self.joint.mass2(x, EMPTY)

    @property
    def descriptor(self) -> BaseModel:
        return SliceDescriptor(kind="marginal_x", joint=self.joint.describe())


class MarginalY(CylinderMeasure):
    """P_Y(y) = mass2(λ, y)."""

    def __init__(self, joint: JointMeasure) -> None:
        self.joint = joint

    def mass(self, y: Word) -> Fraction:
        return self.joint.mass2(EMPTY, y)

    @property
    def descriptor(self) -> BaseModel:
        return SliceDescriptor(kind="marginal_y", joint=self.joint.describe())


class ConditionalSlice(CylinderMeasure):
    """P(·|y) on X for a parameter cylinder y of positive mass."""

    def __init__(self, joint: JointMeasure, given_y: Word) -> None:
        self.joint = joint
        self.given_y = given_y
        self.normalizer = joint.mass2(EMPTY, given_y)
        if self.normalizer <= 0:
            raise NullConditioningError(
                f"Conditioning on null cylinder y={given_y!r}"
            )
        self.exchangeable = joint.exchangeable_x

    def mass(self, x: Word) -> Fraction:
        return self.joint.mass2(x, self.given_y) / self.normalizer

    @property
    def descriptor(self) -> BaseModel:
        return SliceDescriptor(
            kind="conditional", joint=self.joint.describe(), given=self.given_y
        )


class PosteriorSlice(CylinderMeasure):
    """P(·|x) on Y for an observation cylinder x of positive mass."""

    def __init__(self, joint: JointMeasure, given_x: Word) -> None:
        self.joint = joint
        self.given_x = given_x
        self.normalizer = joint.mass2(given_x, EMPTY)
        if self.normalizer <= 0:
            raise NullConditioningError(
                f"Conditioning on null cylinder x={given_x!r}"
            )

    def mass(self, y: Word) -> Fraction:
        return self.joint.mass2(self.given_x, y) / self.normalizer

    @property
    def descriptor(self) -> BaseModel:
        return SliceDescriptor(
            kind="posterior", joint=self.joint.describe(), given=self.given_x
        )


def marginal_x(joint: JointMeasure) -> CylinderMeasure:
    return MarginalX(joint)


def marginal_y(joint: JointMeasure) -> CylinderMeasure:
    return MarginalY(joint)


def conditional(joint: JointMeasure, y: Word) -> ConditionalSlice:
    """
    Condition the joint on the parameter cylinder Δ(y).

    Args:
        joint (JointMeasure): The joint.
        y (Word): Parameter cylinder with positive Y-marginal mass.

    Returns:
        ConditionalSlice: The normalized slice; conditional(J, λ) is P_X.

    Raises:
        NullConditioningError: If P_Y(Δ(y)) = 0.
    """
    check_word(y)
    return ConditionalSlice(joint, y)


def posterior(joint: JointMeasure, x: Word) -> PosteriorSlice:
    """Posterior on Y after observing the cylinder Δ(x)."""
    check_word(x)
    return PosteriorSlice(joint, x)


def martingale_sequence(
    joint: JointMeasure, x: Word, y_target: PeriodicSequence, n_max: int
) -> List[Fraction]:
    """
    P(x | y_target[:i]) for i = 0..n_max.

    Entry 0 is P_X(x); the sequence approaches P(x|y^∞) where that limit
    exists. No extrapolation is attempted.

    Args:
        joint (JointMeasure): The joint.
        x (Word): The observation cylinder.
        y_target (PeriodicSequence): The parameter sequence approached.
        n_max (int): Longest prefix used.

    Returns:
        List[Fraction]: n_max + 1 exact conditional probabilities.
    """
    check_word(x)
    ensure_depth(max(n_max, len(x)))
    values = []
    for i in range(n_max + 1):
        values.append(ConditionalSlice(joint, y_target.prefix(i)).mass(x))
    logger.debug(f"Martingale sequence for x={x!r} along {y_target}: {len(values)} entries")
    return values


def limit_conditional(joint: JointMeasure, y_target: PeriodicSequence) -> CylinderMeasure:
    """
    Exact P(·|y^∞) where the joint has a closed form.

    This is the limit of :func:`martingale_sequence` for the families that
    ship; it is labeled as a closed-form evaluator, not derived from the
    sequence.
    """
    return joint.limit_conditional(y_target)


def mixture_residual(joint: JointMeasure, x: Word, n: int) -> Fraction:
    """
    P_X(x) − Σ_{|y|=n} mass2(x, y).

    This is the finite-depth form of P_X = ∫ P(·|y^∞) dP_Y and is exactly zero
    for every additive joint.

    Args:
        joint (JointMeasure): The joint.
        x (Word): The observation cylinder.
        n (int): Depth of the parameter partition.

    Returns:
        Fraction: The residual.
    """
    check_word(x)
    ensure_depth(max(n, len(x)))
    total = sum((joint.mass2(x, y) for y in iter_partition(n)), Fraction(0))
    return joint.mass2(x, EMPTY) - total


def map_estimate(joint: JointMeasure, x: Word, k: int) -> Word:
    """
    Maximum-a-posteriori parameter cylinder of length k.

    Ties go to the lexicographically least word. Normalization is skipped
    since it does not move the argmax.

    Args:
        joint (JointMeasure): The joint.
        x (Word): The observation cylinder, of positive mass.
        k (int): Length of the estimated parameter word.

    Returns:
        Word: argmax_{|y|=k} mass2(x, y).
    """
    check_word(x)
    ensure_depth(k)
    if joint.mass2(x, EMPTY) <= 0:
        raise NullConditioningError(f"Conditioning on null cylinder x={x!r}")
    best, best_mass = EMPTY, Fraction(-1)
    for y in iter_partition(k):
        value = joint.mass2(x, y)
        if value > best_mass:
            best, best_mass = y, value
    return best


def posterior_along(
    joint: JointMeasure, x_target: PeriodicSequence, y: Word, n_max: int
) -> List[Fraction]:
    """
    P(y | x_target[:i]) for i = 0..n_max.

    Along prefixes of alpha in the counterexample joint this reaches 1 for
    y = 1^k, the posterior collapsing onto 1^∞.
    """
    check_word(y)
    ensure_depth(max(n_max, len(y)))
    return [PosteriorSlice(joint, x_target.prefix(i)).mass(y) for i in range(n_max + 1)]
