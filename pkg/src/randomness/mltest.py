"""
Finite Martin-Löf tests and finite randomness surrogates.

A finite test is a nested family of antichains U_1 ⊇ U_2 ⊇ ... (as cylinder
unions) with P(Ũ_n) < 2^{-n}. Everything here is a certificate that is checked
in full; enumerable tests are out of reach by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, List, Literal, Optional, Sequence, Tuple

from src.inference.bayes import conditional
from src.measures.joint import CounterexampleJoint, JointMeasure
from src.measures.measure import CylinderMeasure, IntervalUniformMeasure, MixtureMeasure
from src.measures.words import (
    EMPTY,
    PeriodicSequence,
    Word,
    check_word,
    covers,
    cylinder_union_normalize,
    ensure_depth,
    expansion_prefix,
    is_prefix,
    iter_partition,
)
from src.models.specs import CounterexampleSpec, FiniteTestSpec
from src.utils.errors import (
    CantorBayesError,
    HypothesisViolation,
    NullConditioningError,
    PreconditionError,
)
from src.utils.logger import get_logger
from src.utils.rationals import ExactModel, Rational

logger = get_logger(__name__)

Pair = Tuple[Word, Word]

DEFICIENCY_RESOLUTION = 10**6


@dataclass(frozen=True)
class FiniteTest:
    """Levels 1..N, each an antichain of words."""

    levels: Dict[int, FrozenSet[Word]]

    def __post_init__(self) -> None:
        if sorted(self.levels) != list(range(1, len(self.levels) + 1)):
            raise PreconditionError("Test levels must be numbered 1..N without gaps")
        normalized = {n: cylinder_union_normalize(ws) for n, ws in self.levels.items()}
        object.__setattr__(self, "levels", normalized)

    @classmethod
    def from_spec(cls, spec: FiniteTestSpec) -> "FiniteTest":
        return cls({n: frozenset(words) for n, words in spec.levels.items()})

    def to_spec(self) -> FiniteTestSpec:
        return FiniteTestSpec(
            levels={n: sorted(ws, key=lambda w: (len(w), w)) for n, ws in sorted(self.levels.items())}
        )

    @property
    def max_level(self) -> int:
        return len(self.levels)

    @property
    def depth(self) -> int:
        """Longest word in any level."""
        return max((len(w) for ws in self.levels.values() for w in ws), default=0)


@dataclass(frozen=True)
class ProductFiniteTest:
    """Levels 1..N of word pairs (x, y), each pair the product cylinder Δ(x) × Δ(y)."""

    levels: Dict[int, FrozenSet[Pair]] = field(default_factory=dict)

    @property
    def max_level(self) -> int:
        return len(self.levels)


class LevelCheck(ExactModel):
    level: int
    size: int
    mass: Rational
    bound: Rational
    within_bound: bool


class LevelViolation(ExactModel):
    level: int
    kind: Literal["mass", "nesting"]
    detail: str


class FiniteTestReport(ExactModel):
    reference: Dict[str, Any]
    max_level: int
    levels: List[LevelCheck]
    nested: bool
    first_violation: Optional[LevelViolation]

    @property
    def ok(self) -> bool:
        return self.first_violation is None


def _level_mass(P: CylinderMeasure, words: Iterable[Word]) -> Fraction:
    # antichain: the cylinders are disjoint
    return sum((P.mass(w) for w in words), Fraction(0))


def validate_test(T: FiniteTest, P: CylinderMeasure) -> FiniteTestReport:
    """
    Check P(Ũ_n) < 2^{-n} and Ũ_{n+1} ⊆ Ũ_n exactly.

    Args:
        T (FiniteTest): The test.
        P (CylinderMeasure): Reference measure.

    Returns:
        FiniteTestReport: Per-level masses and the first violation, if any,
        in level order (mass of level n before nesting of level n+1 into n).
    """
    ensure_depth(T.depth)
    checks: List[LevelCheck] = []
    violations: List[LevelViolation] = []
    nested = True
    for n in range(1, T.max_level + 1):
        mass = _level_mass(P, T.levels[n])
        bound = Fraction(1, 1 << n)
        checks.append(
            LevelCheck(level=n, size=len(T.levels[n]), mass=mass, bound=bound, within_bound=mass < bound)
        )
        if mass >= bound:
            violations.append(
                LevelViolation(level=n, kind="mass", detail=f"P(U_{n}) = {mass} is not below {bound}")
            )
        if n > 1:
            outside = sorted(w for w in T.levels[n] if not covers(T.levels[n - 1], w))
            if outside:
                nested = False
                violations.append(
                    LevelViolation(
                        level=n,
                        kind="nesting",
                        detail=f"{outside[0]!r} in level {n} is not covered by level {n - 1}",
                    )
                )
    if violations:
        logger.warning(f"Test validation failed at level {violations[0].level} ({violations[0].kind})")
    return FiniteTestReport(
        reference=P.describe(),
        max_level=T.max_level,
        levels=checks,
        nested=nested,
        first_violation=violations[0] if violations else None,
    )


def indicator_sum(T: FiniteTest, x: Word) -> int:
    """
    Number of levels n with Δ(x) ⊆ Ũ_n.

    Args:
        T (FiniteTest): The test.
        x (Word): A word at least as long as every word of T.

    Returns:
        int: A count in [0, N].
    """
    check_word(x)
    if len(x) < T.depth:
        raise PreconditionError(
            f"Membership of {x!r} is undecided: the test has words of length {T.depth}"
        )
    return sum(1 for ws in T.levels.values() if any(is_prefix(u, x) for u in ws))


def hypothesis_sum(T: FiniteTest, P: CylinderMeasure) -> Fraction:
    """Σ_n P(Ũ_n); with P = P(·|y) this is the finite form of the transfer hypothesis."""
    return sum((_level_mass(P, ws) for ws in T.levels.values()), Fraction(0))


def transfer_test(T: FiniteTest, J: JointMeasure, y: Word, M: int, k_max: int) -> FiniteTest:
    """
    Turn a test for the X-marginal into a test for the conditional P(·|y).

    V_k is the set of depth-d words (d the longest word of T) whose indicator
    sum exceeds M·2^k. By Markov's inequality P(Ṽ_k | y) ≤ Σ_n P(Ũ_n | y) / (M·2^k) < 2^{-k}.

    Args:
        T (FiniteTest): A test valid for the X-marginal of J.
        J (JointMeasure): The joint.
        y (Word): Conditioning cylinder of positive mass.
        M (int): Positive bound on Σ_n P(Ũ_n | y).
        k_max (int): Number of levels of the transferred test.

    Returns:
        FiniteTest: Levels 1..k_max; levels may be empty.

    Raises:
        HypothesisViolation: If Σ_n P(Ũ_n | y) > M.
    """
    if M < 1 or k_max < 1:
        raise PreconditionError("M and k_max must be positive")
    check_word(y)
    cond = conditional(J, y)
    total = hypothesis_sum(T, cond)
    if total > M:
        raise HypothesisViolation(f"Sum of conditional level masses {total} exceeds M = {M}")
    depth = T.depth
    ensure_depth(depth)
    counts = {x: indicator_sum(T, x) for x in iter_partition(depth)}
    levels = {
        k: frozenset(x for x, c in counts.items() if c > M * (1 << k)) for k in range(1, k_max + 1)
    }
    logger.info(
        f"Transferred test to y={y!r}: hypothesis sum {total}, "
        f"level sizes {[len(levels[k]) for k in sorted(levels)]}"
    )
    return FiniteTest(levels)


class TransferReport(ExactModel):
    joint: Dict[str, Any]
    y: str
    M: int
    hypothesis_sum: Rational
    depth: int
    test: FiniteTestSpec
    markov_bounds: List[Rational]
    validation: FiniteTestReport

    @property
    def ok(self) -> bool:
        return self.validation.ok and all(
            check.mass <= bound for check, bound in zip(self.validation.levels, self.markov_bounds)
        )


def transfer_report(T: FiniteTest, J: JointMeasure, y: Word, M: int, k_max: int) -> TransferReport:
    """Transfer a test and validate the result against P(·|y)."""
    transferred = transfer_test(T, J, y, M, k_max)
    cond = conditional(J, y)
    total = hypothesis_sum(T, cond)
    return TransferReport(
        joint=J.describe(),
        y=y,
        M=M,
        hypothesis_sum=total,
        depth=T.depth,
        test=transferred.to_spec(),
        markov_bounds=[total / (M * (1 << k)) for k in range(1, k_max + 1)],
        validation=validate_test(transferred, cond),
    )


def counterexample_test_level(spec: CounterexampleSpec, n: int, m: int) -> FrozenSet[Word]:
    """
    Depth-m words s with r(s) < r(a_I) + 1/n.

    This truncates the covering set of the construction to the supplied
    approximants. The union is [0, t) with t < r(a_I) + 1/n + 2^{-m}, so its
    mass under the 1^∞ limit conditional (uniform on [alpha, 1)) is below
    (1/n + 2^{-m})/(1 − alpha).

    Args:
        spec (CounterexampleSpec): The construction parameters.
        n (int): Level parameter, n ≥ 1.
        m (int): Word depth, at least the longest approximant.

    Returns:
        FrozenSet[Word]: The level, an initial segment of the depth-m words.
    """
    if n < 1:
        raise PreconditionError(f"n must be positive, got {n}")
    if m < spec.max_length:
        raise PreconditionError(
            f"Depth {m} is below the longest approximant length {spec.max_length}"
        )
    ensure_depth(m)
    threshold = (spec.cutoffs[-1] + Fraction(1, n)) * (1 << m)
    count = min(math.ceil(threshold), 1 << m)
    return frozenset(format(i, f"0{m}b") for i in range(count))


def level_bound(spec: CounterexampleSpec, n: int, m: int) -> Fraction:
    """(1/n + 2^{-m}) / (1 − alpha)."""
    return (Fraction(1, n) + Fraction(1, 1 << m)) / (1 - spec.alpha)


class CounterexampleLevel(ExactModel):
    n: int
    depth: int
    size: int
    limit_mass: Rational
    bound: Rational
    within_bound: bool
    alpha_prefix: str
    alpha_prefix_member: bool


def describe_counterexample_level(spec: CounterexampleSpec, n: int, m: int) -> CounterexampleLevel:
    """Mass of one level under the 1^∞ limit conditional, with its bound and alpha-prefix membership."""
    words = counterexample_test_level(spec, n, m)
    limit = IntervalUniformMeasure(spec.alpha, Fraction(1))
    mass = _level_mass(limit, words)
    bound = level_bound(spec, n, m)
    prefix = expansion_prefix(spec.alpha, m)
    return CounterexampleLevel(
        n=n,
        depth=m,
        size=len(words),
        limit_mass=mass,
        bound=bound,
        within_bound=mass < bound,
        alpha_prefix=prefix,
        alpha_prefix_member=prefix in words,
    )


def level_parameter(spec: CounterexampleSpec, j: int) -> int:
    """n_j = ceil(2^{j+1} / (1 − alpha)), so that 1/(n_j (1 − alpha)) ≤ 2^{-j-1}."""
    return math.ceil(Fraction(1 << (j + 1)) / (1 - spec.alpha))


def counterexample_test(spec: CounterexampleSpec, max_level: int, m: int) -> FiniteTest:
    """
    Levels j ↦ U_{n_j} at depth m, j = 1..max_level, with n_j from :func:`level_parameter`.

    Under the 1^∞ limit conditional level j has mass below
    2^{-j-1} + 2^{-m}/(1 − alpha), hence below 2^{-j} once
    2^{-m} ≤ (1 − alpha)·2^{-j-1}. Every level contains the depth-m prefix of alpha.
    """
    if max_level < 1:
        raise PreconditionError(f"max_level must be positive, got {max_level}")
    return FiniteTest(
        {
            j: counterexample_test_level(spec, level_parameter(spec, j), m)
            for j in range(1, max_level + 1)
        }
    )


class CounterexampleTestReport(ExactModel):
    spec: Dict[str, Any]
    depth: int
    levels: List[CounterexampleLevel]
    validation: FiniteTestReport


def counterexample_test_report(
    spec: CounterexampleSpec, max_level: int, m: int
) -> CounterexampleTestReport:
    """Build the counterexample test and validate it against the 1^∞ limit conditional."""
    T = counterexample_test(spec, max_level, m)
    limit = CounterexampleJoint(spec).limit_conditional(PeriodicSequence("", "1"))
    return CounterexampleTestReport(
        spec=spec.model_dump(mode="json", exclude={"schema_version"}),
        depth=m,
        levels=[
            describe_counterexample_level(spec, level_parameter(spec, j), m)
            for j in range(1, max_level + 1)
        ],
        validation=validate_test(T, limit),
    )


def diagonal_test(n: int) -> FrozenSet[Pair]:
    """
    The diagonal at depth n: {(x, x) : l(x) = n}.

    Its mass under the uniform product is exactly 2^{-n}.
    """
    ensure_depth(n)
    return frozenset((x, x) for x in iter_partition(n))


def diagonal_family(max_level: int) -> ProductFiniteTest:
    """A valid product test covering the diagonal: level n is the diagonal at depth n+1."""
    if max_level < 1:
        raise PreconditionError(f"max_level must be positive, got {max_level}")
    return ProductFiniteTest({n: diagonal_test(n + 1) for n in range(1, max_level + 1)})


def _relevant(pairs: Iterable[Pair], x: Word, y: Word) -> List[Pair]:
    return [
        (px, py)
        for px, py in pairs
        if (is_prefix(px, x) or is_prefix(x, px)) and (is_prefix(py, y) or is_prefix(y, py))
    ]


def _split(pairs: Sequence[Pair], x: Word, y: Word) -> List[Pair]:
    # refine along the coordinate that some pair still constrains
    if any(len(px) > len(x) for px, _ in pairs):
        return [(x + "0", y), (x + "1", y)]
    return [(x, y + "0"), (x, y + "1")]


def product_union_mass(J: JointMeasure, pairs: Iterable[Pair], x: Word = EMPTY, y: Word = EMPTY) -> Fraction:
    """
    Exact J-mass of (Δ(x) × Δ(y)) ∩ ∪ Δ(px) × Δ(py).

    Overlapping product cylinders are made disjoint by recursive splitting.
    """
    pool = _relevant(pairs, x, y)
    if not pool:
        return Fraction(0)
    if any(is_prefix(px, x) and is_prefix(py, y) for px, py in pool):
        return J.mass2(x, y)
    return sum((product_union_mass(J, pool, cx, cy) for cx, cy in _split(pool, x, y)), Fraction(0))


def product_covers(pairs: Iterable[Pair], x: Word, y: Word) -> bool:
    """Decide Δ(x) × Δ(y) ⊆ ∪ Δ(px) × Δ(py) exactly."""
    pool = _relevant(pairs, x, y)
    if not pool:
        return False
    if any(is_prefix(px, x) and is_prefix(py, y) for px, py in pool):
        return True
    return all(product_covers(pool, cx, cy) for cx, cy in _split(pool, x, y))


def validate_product_test(T: ProductFiniteTest, J: JointMeasure) -> FiniteTestReport:
    """Product-space counterpart of :func:`validate_test`."""
    checks: List[LevelCheck] = []
    violations: List[LevelViolation] = []
    nested = True
    for n in range(1, T.max_level + 1):
        pairs = T.levels[n]
        ensure_depth(max((max(len(px), len(py)) for px, py in pairs), default=0))
        mass = product_union_mass(J, pairs)
        bound = Fraction(1, 1 << n)
        checks.append(
            LevelCheck(level=n, size=len(pairs), mass=mass, bound=bound, within_bound=mass < bound)
        )
        if mass >= bound:
            violations.append(
                LevelViolation(level=n, kind="mass", detail=f"P(U_{n}) = {mass} is not below {bound}")
            )
        if n > 1:
            outside = sorted(p for p in pairs if not product_covers(T.levels[n - 1], *p))
            if outside:
                nested = False
                violations.append(
                    LevelViolation(
                        level=n,
                        kind="nesting",
                        detail=f"{outside[0]!r} in level {n} is not covered by level {n - 1}",
                    )
                )
    return FiniteTestReport(
        reference=J.describe(),
        max_level=T.max_level,
        levels=checks,
        nested=nested,
        first_violation=violations[0] if violations else None,
    )


def product_section(level: Iterable[Pair], y: Word) -> FrozenSet[Word]:
    """
    The y-section {x : (x, y') in the level with y' ⊑ y}.

    Args:
        level (Iterable[Pair]): One level of a product test.
        y (Word): A word deciding every y-coordinate it meets.

    Returns:
        FrozenSet[Word]: An antichain whose cylinders form the section of every y^∞ extending y.
    """
    check_word(y)
    section = []
    for px, py in level:
        if is_prefix(py, y):
            section.append(px)
        elif is_prefix(y, py):
            raise PreconditionError(f"Section at {y!r} is undecided by the pair ({px!r}, {py!r})")
    return cylinder_union_normalize(section)


class DeficiencyResult(ExactModel):
    x_length: int
    value: Optional[Rational]
    kind: Literal["finite", "+inf", "-inf"]
    statement: str


def deficiency(
    x: Word,
    P: CylinderMeasure,
    pool: Sequence[CylinderMeasure],
    weights: Sequence[Fraction],
) -> DeficiencyResult:
    """
    log2(Q(x) / P(x)) for the pool mixture Q, rounded to 10^-6.

    Large positive values flag x as atypical for P relative to the pool. The
    value is a finite surrogate and certifies nothing about randomness.

    Args:
        x (Word): The observation.
        P (CylinderMeasure): Reference measure.
        pool (Sequence[CylinderMeasure]): Alternatives.
        weights (Sequence[Fraction]): Positive weights summing to 1.

    Returns:
        DeficiencyResult: The value, or an infinite kind when a mass vanishes.
    """
    check_word(x)
    mixture = MixtureMeasure(weights, pool)
    statement = f"at depth {len(x)} against pool of {len(pool)} measures"
    p_mass = P.mass(x)
    q_mass = mixture.mass(x)
    if p_mass == 0:
        return DeficiencyResult(x_length=len(x), value=None, kind="+inf", statement=statement)
    if q_mass == 0:
        return DeficiencyResult(x_length=len(x), value=None, kind="-inf", statement=statement)
    ratio = q_mass / p_mass
    if ratio == 1:
        value = Fraction(0)
    else:
        bits = math.log2(ratio.numerator) - math.log2(ratio.denominator)
        value = Fraction(round(bits * DEFICIENCY_RESOLUTION), DEFICIENCY_RESOLUTION)
    return DeficiencyResult(x_length=len(x), value=value, kind="finite", statement=statement)


class DeficiencyRow(ExactModel):
    reference: str
    prefix_length: Optional[int]
    result: DeficiencyResult


def deficiency_profile(
    J: JointMeasure,
    x: Word,
    y_target: PeriodicSequence,
    n_max: int,
    pool: Sequence[CylinderMeasure],
    weights: Sequence[Fraction],
) -> List[DeficiencyRow]:
    """
    Deficiency of x relative to P(·|y_target[:i]) for i = 0..n_max, followed by
    the exact limit conditional when the joint has one.
    """
    ensure_depth(n_max)
    rows = []
    for i in range(n_max + 1):
        prefix = y_target.prefix(i)
        rows.append(
            DeficiencyRow(
                reference=f"P(.|{prefix})",
                prefix_length=i,
                result=deficiency(x, conditional(J, prefix), pool, weights),
            )
        )
    try:
        limit = J.limit_conditional(y_target)
    except (PreconditionError, NullConditioningError) as e:
        logger.info(f"No limit row for {y_target}: {e}")
    except CantorBayesError as e:
        logger.warning(f"Limit conditional unavailable for {y_target}: {e}")
    else:
        rows.append(
            DeficiencyRow(
                reference=f"P(.|{y_target})",
                prefix_length=None,
                result=deficiency(x, limit, pool, weights),
            )
        )
    return rows
