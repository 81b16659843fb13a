"""
Exactly evaluable probability measures on {0,1}^∞.

A measure is given by its cylinder masses ``mass(x) = P(Δ(x))``; every value
is a ``Fraction``. Families: Bernoulli (and its uniform alias), first-order
Markov, point masses on eventually periodic sequences, uniform restricted to
an interval, explicit tables and finite mixtures.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from fractions import Fraction
from math import comb
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from src.config.settings import settings
from src.measures.words import (
    EMPTY,
    DyadicInterval,
    PeriodicSequence,
    Word,
    check_word,
    cylinder_interval,
    ensure_depth,
    iter_partition,
)
from src.models.specs import (
    BernoulliSpec,
    IntervalSpec,
    MarkovSpec,
    MixtureSpec,
    PointMassSpec,
    TableSpec,
    UniformSpec,
)
from src.utils.errors import DepthBudgetExceeded, NullConditioningError, PreconditionError
from src.utils.logger import get_logger
from src.utils.rationals import ExactModel, Rational

logger = get_logger(__name__)


class CylinderMeasure(ABC):
    """
    A probability on {0,1}^∞ evaluated exactly on cylinders.

    Subclasses implement ``mass`` without budget checks; callers outside this
    package go through :func:`evaluate`. A measure is *exchangeable* when the
    mass of a word depends only on its length and number of ones.
    """

    exchangeable: bool = False

    @abstractmethod
    def mass(self, x: Word) -> Fraction:
        """Return P(Δ(x))."""

    @property
    @abstractmethod
    def descriptor(self) -> BaseModel:
        """Tagged specification of this measure."""

    def next_bit_probability(self, prefix: Word) -> Fraction:
        """
        P(next bit is 1 | prefix).

        Args:
            prefix (Word): A word of positive mass.

        Returns:
            Fraction: mass(prefix·1) / mass(prefix).
        """
        total = self.mass(prefix)
        if total == 0:
            raise NullConditioningError(f"Conditioning on null cylinder {prefix!r}")
        return self.mass(prefix + "1") / total

    def describe(self) -> Dict[str, Any]:
        return self.descriptor.model_dump(mode="json", exclude={"schema_version"})


class BernoulliMeasure(CylinderMeasure):
    """i.i.d. bits with P(1) = theta."""

    exchangeable = True

    def __init__(self, theta: Fraction) -> None:
        if not 0 <= theta <= 1:
            raise PreconditionError(f"theta must lie in [0, 1], got {theta}")
        self.theta = Fraction(theta)

    def mass(self, x: Word) -> Fraction:
        ones = x.count("1")
        return self.theta**ones * (1 - self.theta) ** (len(x) - ones)

    def next_bit_probability(self, prefix: Word) -> Fraction:
        return self.theta

    @property
    def descriptor(self) -> BaseModel:
        return BernoulliSpec(theta=self.theta)


class UniformMeasure(BernoulliMeasure):
    """The uniform (fair-coin) measure; Bernoulli(1/2)."""

    def __init__(self) -> None:
        super().__init__(Fraction(1, 2))

    def mass(self, x: Word) -> Fraction:
        return Fraction(1, 1 << len(x))

    @property
    def descriptor(self) -> BaseModel:
        return UniformSpec()


class MarkovMeasure(CylinderMeasure):
    """First-order Markov chain on bits."""

    def __init__(self, initial: Fraction, transitions: Sequence[Sequence[Fraction]]) -> None:
        self.initial = Fraction(initial)
        self.transitions = [[Fraction(p) for p in row] for row in transitions]

    def mass(self, x: Word) -> Fraction:
        if not x:
            return Fraction(1)
        result = self.initial if x[0] == "1" else 1 - self.initial
        for prev, cur in zip(x, x[1:]):
            result *= self.transitions[int(prev)][int(cur)]
        return result

    def next_bit_probability(self, prefix: Word) -> Fraction:
        if not prefix:
            return self.initial
        return self.transitions[int(prefix[-1])][1]

    @property
    def descriptor(self) -> BaseModel:
        return MarkovSpec(initial=self.initial, transitions=self.transitions)


class PointMassMeasure(CylinderMeasure):
    """Dirac measure on an eventually periodic sequence, e.g. 1^i0^∞ or 1^∞."""

    def __init__(self, sequence: PeriodicSequence) -> None:
        self.sequence = sequence

    def mass(self, x: Word) -> Fraction:
        return Fraction(1) if self.sequence.extends(x) else Fraction(0)

    def next_bit_probability(self, prefix: Word) -> Fraction:
        if not self.sequence.extends(prefix):
            raise NullConditioningError(f"Conditioning on null cylinder {prefix!r}")
        return Fraction(int(self.sequence.bit(len(prefix))))

    @property
    def descriptor(self) -> BaseModel:
        return PointMassSpec(head=self.sequence.head, repeat=self.sequence.repeat)


class IntervalUniformMeasure(CylinderMeasure):
    """Uniform measure restricted to [lower, upper), renormalized."""

    def __init__(self, lower: Fraction, upper: Fraction) -> None:
        if not 0 <= lower < upper <= 1:
            raise PreconditionError(f"Empty or invalid interval [{lower}, {upper})")
        self.interval = DyadicInterval(Fraction(lower), Fraction(upper))

    def mass(self, x: Word) -> Fraction:
        return cylinder_interval(x).intersection_length(self.interval) / self.interval.length

    @property
    def descriptor(self) -> BaseModel:
        return IntervalSpec(lower=self.interval.lower, upper=self.interval.upper)


class TableMeasure(CylinderMeasure):
    """
    Explicit mass table.

    Nothing is checked at construction; :func:`validate_additivity` is how a
    table is vetted.
    """

    def __init__(self, masses: Dict[Word, Fraction]) -> None:
        self.masses = {check_word(w): Fraction(m) for w, m in masses.items()}
        self.depth = max(len(w) for w in self.masses) if self.masses else 0

    def mass(self, x: Word) -> Fraction:
        try:
            return self.masses[x]
        except KeyError:
            raise PreconditionError(f"Table has no entry for word {x!r}") from None

    @property
    def descriptor(self) -> BaseModel:
        return TableSpec(masses=dict(sorted(self.masses.items(), key=lambda kv: (len(kv[0]), kv[0]))))


class MixtureMeasure(CylinderMeasure):
    """Finite convex combination of measures."""

    def __init__(self, weights: Sequence[Fraction], components: Sequence[CylinderMeasure]) -> None:
        if len(weights) != len(components) or not components:
            raise PreconditionError("A mixture needs one weight per component")
        if any(w <= 0 for w in weights) or sum(weights) != 1:
            raise PreconditionError("Mixture weights must be positive and sum to 1")
        self.weights = [Fraction(w) for w in weights]
        self.components = list(components)
        self.exchangeable = all(c.exchangeable for c in self.components)

    def mass(self, x: Word) -> Fraction:
        return sum(
            (w * c.mass(x) for w, c in zip(self.weights, self.components)),
            Fraction(0),
        )

    @property
    def descriptor(self) -> BaseModel:
        return MixtureSpec(
            weights=self.weights,
            components=[c.descriptor for c in self.components],
        )


def evaluate(m: CylinderMeasure, x: Word) -> Fraction:
    """
    Exact cylinder mass with input and depth checks.

    Args:
        m (CylinderMeasure): The measure.
        x (Word): The cylinder index.

    Returns:
        Fraction: P(Δ(x)).
    """
    check_word(x)
    ensure_depth(len(x))
    return m.mass(x)


class AdditivityViolation(ExactModel):
    word: str
    mass: Rational
    children_sum: Rational


class AdditivityReport(ExactModel):
    measure: Dict[str, Any]
    depth: int
    root_mass: Rational
    checked: int
    violations: List[AdditivityViolation]
    negative_words: List[str]

    @property
    def ok(self) -> bool:
        return self.root_mass == 1 and not self.violations and not self.negative_words


def validate_additivity(m: CylinderMeasure, depth: int) -> AdditivityReport:
    """
    Check mass(λ) = 1, nonnegativity and mass(x) = mass(x0) + mass(x1) for |x| < depth.

    Args:
        m (CylinderMeasure): The measure under test.
        depth (int): Words up to this length are evaluated.

    Returns:
        AdditivityReport: Every violation found, in lexicographic order.
    """
    ensure_depth(depth)
    violations: List[AdditivityViolation] = []
    negative: List[str] = []
    checked = 0
    root = m.mass(EMPTY)
    if root < 0:
        negative.append(EMPTY)
    for n in range(depth):
        for x in iter_partition(n):
            parent = m.mass(x)
            left, right = m.mass(x + "0"), m.mass(x + "1")
            negative.extend(w for w, v in ((x + "0", left), (x + "1", right)) if v < 0)
            if parent != left + right:
                violations.append(
                    AdditivityViolation(word=x, mass=parent, children_sum=left + right)
                )
            checked += 1
    if violations or negative or root != 1:
        logger.warning(
            f"Additivity check failed: {len(violations)} violations, "
            f"{len(negative)} negative masses, root mass {root}"
        )
    return AdditivityReport(
        measure=m.describe(),
        depth=depth,
        root_mass=root,
        checked=checked,
        violations=violations,
        negative_words=negative,
    )


def total_variation_at_depth(
    p: CylinderMeasure,
    q: CylinderMeasure,
    n: int,
    aggregate: Optional[bool] = None,
) -> Fraction:
    """
    TV_n(p, q) = (1/2) Σ_{|x|=n} |p(x) − q(x)|.

    Exchangeable pairs are summed by number of ones in O(n); everything else
    descends the cylinder tree, adding a whole subtree's mass at once where
    one side vanishes.

    Args:
        p (CylinderMeasure): First measure.
        q (CylinderMeasure): Second measure.
        n (int): Depth.
        aggregate (Optional[bool]): Force (True) or forbid (False) count aggregation;
            by default it is used whenever both measures are exchangeable.

    Returns:
        Fraction: A value in [0, 1] for genuine probability measures.
    """
    if aggregate is None:
        aggregate = p.exchangeable and q.exchangeable
    if aggregate:
        if not (p.exchangeable and q.exchangeable):
            raise PreconditionError("Count aggregation needs two exchangeable measures")
        ensure_depth(n, settings.exchangeable_depth_limit)
        total = Fraction(0)
        for k in range(n + 1):
            word = "1" * k + "0" * (n - k)
            total += comb(n, k) * abs(p.mass(word) - q.mass(word))
        return total / 2

    ensure_depth(n)
    total = Fraction(0)
    stack = [(EMPTY, p.mass(EMPTY), q.mass(EMPTY))]
    while stack:
        x, px, qx = stack.pop()
        if px == 0 and qx == 0:
            continue
        if len(x) == n or px == 0 or qx == 0:
            total += abs(px - qx)
            continue
        for bit in "10":
            child = x + bit
            stack.append((child, p.mass(child), q.mass(child)))
    return total / 2


class _ThresholdStream:
    """Uniform variates revealed 32 bits at a time from a seeded generator."""

    _BATCH = 4096

    def __init__(self, seed: int) -> None:
        self._rng = np.random.default_rng(seed)
        self._buffer: List[int] = []

    def _chunk(self) -> int:
        if not self._buffer:
            self._buffer = [int(v) for v in self._rng.integers(0, 1 << 32, size=self._BATCH)][::-1]
        return self._buffer.pop()

    def below(self, p: Fraction) -> bool:
        """Return True with probability exactly p (U < p for a lazily drawn U)."""
        if p <= 0:
            return False
        if p >= 1:
            return True
        acc, bits = 0, 0
        while True:
            acc = (acc << 32) | self._chunk()
            bits += 32
            scaled = p.numerator << bits
            if (acc + 1) * p.denominator <= scaled:
                return True
            if acc * p.denominator >= scaled:
                return False


def sample(m: CylinderMeasure, length: int, seed: int) -> Word:
    """
    Draw a word of the given length from m.

    Bit i is 1 with probability exactly mass(prefix·1)/mass(prefix); the
    comparison against the generator stream is done in exact arithmetic.

    Args:
        m (CylinderMeasure): The measure to sample from.
        length (int): Number of bits.
        seed (int): Seed for ``numpy.random.default_rng``.

    Returns:
        Word: The sampled word; identical for identical seeds.

    Raises:
        PreconditionError: If length is negative.
        DepthBudgetExceeded: If length exceeds settings.sample_length_limit.
    """
    if length < 0:
        raise PreconditionError(f"Sample length must be non-negative, got {length}")
    if length > settings.sample_length_limit:
        raise DepthBudgetExceeded(
            f"Sample length {length} exceeds the limit {settings.sample_length_limit}"
        )
    stream = _ThresholdStream(seed)
    word = EMPTY
    for _ in range(length):
        word += "1" if stream.below(m.next_bit_probability(word)) else "0"
    return word
