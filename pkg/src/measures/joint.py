"""
Joint measures on {0,1}^∞ × {0,1}^∞ evaluated on product cylinders.

Three families ship: the product of two measures, the Beta–Bernoulli joint
(parameter θ encoded by the y-bits, uniform prior, Bernoulli(θ) data), and the
counterexample measure built from approximants a_1..a_I of a limit alpha.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Tuple

from pydantic import BaseModel

from src.config.settings import settings
from src.measures.measure import (
    BernoulliMeasure,
    CylinderMeasure,
    IntervalUniformMeasure,
)
from src.measures.words import (
    EMPTY,
    DyadicInterval,
    PeriodicSequence,
    Word,
    check_word,
    cylinder_interval,
    ensure_depth,
    is_prefix,
    iter_partition,
    partition,
    strict_below,
)
from src.models.specs import BetaBernoulliJointSpec, CounterexampleSpec, ProductJointSpec
from src.utils.errors import (
    InsufficientApproximantsError,
    NullConditioningError,
    PreconditionError,
)
from src.utils.logger import get_logger
from src.utils.rationals import ExactModel, Rational

logger = get_logger(__name__)


class JointMeasure(ABC):
    """A probability on the product space, exact on product cylinders."""

    # mass2(x, y) depends on x only through (#1(x), l(x)) for every y
    exchangeable_x: bool = False

    @abstractmethod
    def mass2(self, x: Word, y: Word) -> Fraction:
        """Return P(Δ(x) × Δ(y))."""

    @property
    @abstractmethod
    def descriptor(self) -> BaseModel:
        """Tagged specification of this joint."""

    def limit_conditional(self, y_target: PeriodicSequence) -> CylinderMeasure:
        """
        Closed form of P(·|y^∞) where one is known.

        Raises:
            PreconditionError: When this joint has no closed form.
        """
        raise PreconditionError(
            f"No closed-form limit conditional for {type(self).__name__}"
        )

    def describe(self) -> Dict[str, Any]:
        return self.descriptor.model_dump(mode="json", exclude={"schema_version"})


class ProductJoint(JointMeasure):
    """P = p × q; every conditional on Y equals p."""

    def __init__(self, p: CylinderMeasure, q: CylinderMeasure) -> None:
        self.p = p
        self.q = q
        self.exchangeable_x = p.exchangeable

    def mass2(self, x: Word, y: Word) -> Fraction:
        return self.p.mass(x) * self.q.mass(y)

    def limit_conditional(self, y_target: PeriodicSequence) -> CylinderMeasure:
        return self.p

    @property
    def descriptor(self) -> BaseModel:
        return ProductJointSpec(x=self.p.descriptor, y=self.q.descriptor)


class _BetaIntegrals:
    """
    Memoized I(a, b) = ∫_lo^hi θ^a (1−θ)^b dθ on one interval.

    Uses I(a+1, b) = ((a+1)·I(a, b) − [θ^{a+1}(1−θ)^{b+1}]_lo^hi) / (a+b+2)
    and I(a, b) = I(a+1, b) + I(a, b+1), so a path through (a, b) space, as
    walked by sequential sampling, costs O(1) per step.
    """

    def __init__(self, lower: Fraction, upper: Fraction) -> None:
        self.lower = lower
        self.upper = upper
        self._memo: Dict[Tuple[int, int], Fraction] = {}

    def _boundary(self, a: int, b: int) -> Fraction:
        hi, lo = self.upper, self.lower
        return hi**a * (1 - hi) ** b - lo**a * (1 - lo) ** b

    def get(self, a: int, b: int) -> Fraction:
        memo = self._memo
        if (a, b) in memo:
            return memo[(a, b)]
        pending: List[int] = []
        cur = a
        while True:
            if (cur, b) in memo:
                value = memo[(cur, b)]
                break
            if b > 0 and (cur, b - 1) in memo and (cur + 1, b - 1) in memo:
                value = memo[(cur, b - 1)] - memo[(cur + 1, b - 1)]
                memo[(cur, b)] = value
                break
            if cur == 0:
                value = ((1 - self.lower) ** (b + 1) - (1 - self.upper) ** (b + 1)) / (b + 1)
                memo[(0, b)] = value
                break
            pending.append(cur)
            cur -= 1
        for step in reversed(pending):
            # value holds I(step - 1, b)
            value = (step * value - self._boundary(step, b + 1)) / (step + b + 1)
            memo[(step, b)] = value
        return value


class BetaBernoulliJoint(JointMeasure):
    """
    mass2(x, y) = ∫_{Δ(y)} θ^{#1(x)} (1−θ)^{#0(x)} dθ.

    The prior on θ is uniform and θ is read off the dyadic interval of y.
    Integral tables are kept for the most recently used
    ``settings.beta_table_cache_size`` parameter words.
    """

    exchangeable_x = True

    def __init__(self) -> None:
        self._table = lru_cache(maxsize=settings.beta_table_cache_size)(self._build_table)

    @staticmethod
    def _build_table(y: Word) -> _BetaIntegrals:
        interval = cylinder_interval(y)
        return _BetaIntegrals(interval.lower, interval.upper)

    def mass2(self, x: Word, y: Word) -> Fraction:
        ones = x.count("1")
        return self._table(y).get(ones, len(x) - ones)

    def limit_conditional(self, y_target: PeriodicSequence) -> CylinderMeasure:
        return BernoulliMeasure(y_target.value())

    @property
    def descriptor(self) -> BaseModel:
        return BetaBernoulliJointSpec()


class CounterexampleJoint(JointMeasure):
    """
    Σ_i (uniform on B_i) ⊗ δ(1^i0^∞) + (uniform on [alpha, 1)) ⊗ δ(1^∞),

    with B_1 = [0, r(a_1)) and B_i = [r(a_{i−1}), r(a_i)). The X-marginal is
    uniform. Atoms with index beyond I live in [r(a_I), alpha) with unknown
    boundaries; evaluations that need them raise
    InsufficientApproximantsError.
    """

    def __init__(self, spec: CounterexampleSpec) -> None:
        self.spec = spec
        self.cuts = spec.cutoffs
        self.alpha = spec.alpha
        self.size = spec.size

    def band(self, i: int) -> DyadicInterval:
        """B_i for 1 ≤ i ≤ I."""
        return DyadicInterval(self.cuts[i - 1], self.cuts[i])

    def _unknown_region_hit(self, x_interval: DyadicInterval, y: Word) -> None:
        if x_interval.meets_open(self.cuts[-1], self.alpha):
            raise InsufficientApproximantsError(
                f"Evaluating y={y!r} needs approximants beyond a_{self.size}"
            )

    def mass2(self, x: Word, y: Word) -> Fraction:
        x_interval = cylinder_interval(x)
        if not y:
            return x_interval.length
        ones = len(y) - len(y.lstrip("1"))
        if ones == len(y):
            # Δ(1^m) holds every atom 1^i0^∞ with i ≥ m, plus 1^∞
            if ones <= self.size + 1:
                tail = DyadicInterval(self.cuts[ones - 1], Fraction(1))
                return x_interval.intersection_length(tail)
            self._unknown_region_hit(x_interval, y)
            return x_interval.intersection_length(DyadicInterval(self.alpha, Fraction(1)))
        # y = 1^i 0 z holds at most the atom 1^i0^∞, and only when z is all zeros
        if ones == 0 or "1" in y[ones + 1 :]:
            return Fraction(0)
        if ones <= self.size:
            return x_interval.intersection_length(self.band(ones))
        self._unknown_region_hit(x_interval, y)
        return Fraction(0)

    def limit_conditional(self, y_target: PeriodicSequence) -> CylinderMeasure:
        head, repeat = y_target.head, y_target.repeat
        if set(repeat) == {"1"} and set(head) <= {"1"}:
            return IntervalUniformMeasure(self.alpha, Fraction(1))
        if set(repeat) == {"0"}:
            ones = len(head) - len(head.lstrip("1"))
            if ones > 0 and set(head[ones:]) <= {"0"}:
                if ones > self.size:
                    raise InsufficientApproximantsError(
                        f"Atom 1^{ones}0^inf needs approximants beyond a_{self.size}"
                    )
                band = self.band(ones)
                return IntervalUniformMeasure(band.lower, band.upper)
        raise NullConditioningError(f"{y_target} is not an atom of the parameter marginal")

    @property
    def descriptor(self) -> BaseModel:
        return self.spec


def product_joint(p: CylinderMeasure, q: CylinderMeasure) -> JointMeasure:
    """Product joint p × q."""
    return ProductJoint(p, q)


def beta_bernoulli_joint() -> JointMeasure:
    """Beta–Bernoulli joint with uniform prior."""
    return BetaBernoulliJoint()


def counterexample_joint(spec: CounterexampleSpec) -> JointMeasure:
    """The counterexample joint for the given approximants and limit."""
    return CounterexampleJoint(spec)


def evaluate2(joint: JointMeasure, x: Word, y: Word) -> Fraction:
    """mass2 with input and depth checks."""
    check_word(x)
    check_word(y)
    ensure_depth(max(len(x), len(y)))
    return joint.mass2(x, y)


def y_tail_mass(spec: CounterexampleSpec, k: int) -> Fraction:
    """
    P_Y(Δ(1^k)) = 1 − r(a_{k−1}), with r(a_0) = 0.

    Args:
        spec (CounterexampleSpec): The construction parameters.
        k (int): 0 ≤ k ≤ I + 1.

    Returns:
        Fraction: The exact Y-marginal mass of Δ(1^k).
    """
    if not 0 <= k <= spec.size + 1:
        raise PreconditionError(f"k must lie in [0, {spec.size + 1}], got {k}")
    if k == 0:
        return Fraction(1)
    return 1 - spec.cutoffs[k - 1]


def y_tail_limit(spec: CounterexampleSpec) -> Fraction:
    """P_Y({1^∞}) = 1 − alpha."""
    return 1 - spec.alpha


class JointViolation(ExactModel):
    x: str
    y: str
    axis: str
    mass: Rational
    children_sum: Rational


class JointAdditivityReport(ExactModel):
    joint: Dict[str, Any]
    depth: int
    root_mass: Rational
    checked: int
    violations: List[JointViolation]
    negative_pairs: List[Tuple[str, str]]

    @property
    def ok(self) -> bool:
        return self.root_mass == 1 and not self.violations and not self.negative_pairs


def validate_joint_additivity(joint: JointMeasure, depth: int) -> JointAdditivityReport:
    """
    Check additivity in both coordinates for all |x|, |y| < depth.

    Args:
        joint (JointMeasure): The joint under test.
        depth (int): Children up to this length are evaluated.

    Returns:
        JointAdditivityReport: Every violation, in lexicographic order.
    """
    ensure_depth(depth)
    violations: List[JointViolation] = []
    negative: List[Tuple[str, str]] = []
    checked = 0
    words = [w for n in range(depth) for w in iter_partition(n)]
    for x in words:
        for y in words:
            value = joint.mass2(x, y)
            if value < 0:
                negative.append((x, y))
            x_split = joint.mass2(x + "0", y) + joint.mass2(x + "1", y)
            y_split = joint.mass2(x, y + "0") + joint.mass2(x, y + "1")
            if value != x_split:
                violations.append(
                    JointViolation(x=x, y=y, axis="x", mass=value, children_sum=x_split)
                )
            if value != y_split:
                violations.append(
                    JointViolation(x=x, y=y, axis="y", mass=value, children_sum=y_split)
                )
            checked += 1
    root = joint.mass2(EMPTY, EMPTY)
    if violations or negative or root != 1:
        logger.warning(
            f"Joint additivity failed: {len(violations)} violations, root mass {root}"
        )
    return JointAdditivityReport(
        joint=joint.describe(),
        depth=depth,
        root_mass=root,
        checked=checked,
        violations=violations,
        negative_pairs=negative,
    )


class TailRow(ExactModel):
    k: int
    mass: Rational
    expected: Rational


class ClauseFailure(ExactModel):
    clause: str
    i: int
    x: str
    value: Rational
    expected: Rational


class CounterexampleVerification(ExactModel):
    spec: Dict[str, Any]
    tail: List[TailRow]
    tail_limit: Rational
    x_marginal_depth: int
    x_marginal_uniform: bool
    clause_depth: int
    clauses_checked: int
    clause_failures: List[ClauseFailure]

    @property
    def ok(self) -> bool:
        return (
            all(row.mass == row.expected for row in self.tail)
            and self.x_marginal_uniform
            and not self.clause_failures
        )


def _prefix_mass_in(words: frozenset[Word], x: Word) -> Fraction:
    """P_X(Ã ∩ Δ(x)) under the uniform measure, Ã the union of ``words``' cylinders."""
    total = Fraction(0)
    for s in words:
        if is_prefix(s, x) or is_prefix(x, s):
            total += Fraction(1, 1 << max(len(s), len(x)))
    return total


def verify_construction_clauses(
    spec: CounterexampleSpec, i_max: int, depth: int
) -> Tuple[int, List[ClauseFailure]]:
    """
    Check the three defining clauses of the construction against mass2.

    For each i ≤ i_max and each x of length ``depth``:
    (a) mass2(x, 1^i0^k) = P_X(B_i ∩ Δ(x)) for k = 1, 2, 3, the cylinder 1^i0
        holding the single atom 1^i0^∞;
    (b) mass2(x, 1^{i−1}0) = 0 when Δ(x) lies outside Ã_i;
    (c) mass2(x, 1^i) = P_X(Δ(x)) when Δ(x) lies outside Ã_i.
    The sets Ã_i are built from the words A_i = strict_below(a_i), not from
    interval arithmetic.

    Args:
        spec (CounterexampleSpec): The construction parameters.
        i_max (int): Highest clause index, at most I.
        depth (int): Length of the x words.

    Returns:
        Tuple[int, List[ClauseFailure]]: Number of checks and the failures.
    """
    if not 1 <= i_max <= spec.size:
        raise PreconditionError(f"i_max must lie in [1, {spec.size}], got {i_max}")
    joint = CounterexampleJoint(spec)
    below = [frozenset()] + [strict_below(a) for a in spec.approximants[:i_max]]
    failures: List[ClauseFailure] = []
    checked = 0
    for x in partition(depth):
        width = Fraction(1, 1 << len(x))
        inside = [_prefix_mass_in(words, x) for words in below]
        for i in range(1, i_max + 1):
            expected = inside[i] - inside[i - 1]
            for k in (1, 2, 3):
                value = joint.mass2(x, "1" * i + "0" * k)
                checked += 1
                if value != expected:
                    failures.append(
                        ClauseFailure(clause="a", i=i, x=x, value=value, expected=expected)
                    )
            if inside[i] == 0:
                checks = (
                    ("b", joint.mass2(x, "1" * (i - 1) + "0"), Fraction(0)),
                    ("c", joint.mass2(x, "1" * i), width),
                )
                for clause, value, target in checks:
                    checked += 1
                    if value != target:
                        failures.append(
                            ClauseFailure(clause=clause, i=i, x=x, value=value, expected=target)
                        )
    return checked, failures


def verify_counterexample(
    spec: CounterexampleSpec, marginal_depth: int = 10, clause_depth: int = 6
) -> CounterexampleVerification:
    """
    Tabulate P_Y(Δ(1^k)) for k = 1..I+1 against 1 − r(a_{k−1}), check the
    X-marginal is uniform and verify the construction clauses.

    Args:
        spec (CounterexampleSpec): The construction parameters.
        marginal_depth (int): Depth of the uniform X-marginal check.
        clause_depth (int): Depth of the clause checks.

    Returns:
        CounterexampleVerification: The full table and verdicts.
    """
    joint = CounterexampleJoint(spec)
    tail = [
        TailRow(k=k, mass=joint.mass2(EMPTY, "1" * k), expected=y_tail_mass(spec, k))
        for k in range(1, spec.size + 2)
    ]
    uniform = all(
        joint.mass2(x, EMPTY) == Fraction(1, 1 << len(x))
        for n in range(marginal_depth + 1)
        for x in iter_partition(n)
    )
    checked, failures = verify_construction_clauses(spec, spec.size, clause_depth)
    logger.info(
        f"Counterexample verified: {len(tail)} tail rows, {checked} clause checks, "
        f"{len(failures)} failures"
    )
    return CounterexampleVerification(
        spec=joint.describe(),
        tail=tail,
        tail_limit=y_tail_limit(spec),
        x_marginal_depth=marginal_depth,
        x_marginal_uniform=uniform,
        clause_depth=clause_depth,
        clauses_checked=checked,
        clause_failures=failures,
    )
