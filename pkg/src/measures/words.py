"""
Finite binary words and the dyadic-interval view of cylinders.

A word is a ``str`` over ``"01"``; the empty string is the empty word.
Words are never packed into dyadic rationals because distinct words can share
a left endpoint ("1" and "10" both start at 1/2).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional

from src.config.settings import settings
from src.utils.errors import DepthBudgetExceeded, PreconditionError, SchemaError

Word = str

EMPTY: Word = ""


def check_word(s: object) -> Word:
    """
    Validate that ``s`` is a binary word.

    Args:
        s (object): Candidate word.

    Returns:
        Word: The same string.

    Raises:
        SchemaError: If ``s`` is not a string over {0, 1}.
    """
    if not isinstance(s, str) or s.strip("01"):
        raise SchemaError(f"Not a binary word: {s!r}")
    return s


def ensure_depth(n: int, limit: Optional[int] = None) -> None:
    """Fail loudly when ``n`` exceeds the depth budget."""
    limit = settings.depth_budget if limit is None else limit
    if n < 0:
        raise PreconditionError(f"Depth must be nonnegative, got {n}")
    if n > limit:
        raise DepthBudgetExceeded(f"Depth {n} exceeds the depth budget {limit}")


def is_prefix(a: Word, b: Word) -> bool:
    """Return True when ``a`` ⊑ ``b``."""
    return b.startswith(a)


def dyadic_value(s: Word) -> Fraction:
    """
    Return r(s) = Σ 2^{-i} s_i exactly.

    Args:
        s (Word): The word.

    Returns:
        Fraction: The left endpoint of the cylinder's dyadic interval.
    """
    if not s:
        return Fraction(0)
    return Fraction(int(s, 2), 1 << len(s))


@dataclass(frozen=True, slots=True)
class DyadicInterval:
    """Half-open interval [lower, upper) with rational endpoints in [0, 1]."""

    lower: Fraction
    upper: Fraction

    def __post_init__(self) -> None:
        if not (0 <= self.lower <= self.upper <= 1):
            raise PreconditionError(
                f"Invalid interval [{self.lower}, {self.upper}) in [0, 1]"
            )

    @property
    def length(self) -> Fraction:
        return self.upper - self.lower

    def intersection_length(self, other: "DyadicInterval") -> Fraction:
        """Lebesgue measure of the intersection with ``other``."""
        lo = max(self.lower, other.lower)
        hi = min(self.upper, other.upper)
        return hi - lo if hi > lo else Fraction(0)

    def meets_open(self, lower: Fraction, upper: Fraction) -> bool:
        """True when the intersection with (lower, upper) has positive length."""
        return min(self.upper, upper) > max(self.lower, lower)

    def contains(self, other: "DyadicInterval") -> bool:
        return self.lower <= other.lower and other.upper <= self.upper


def cylinder_interval(s: Word) -> DyadicInterval:
    """Map Δ(s) to [r(s), r(s) + 2^{-l(s)})."""
    lower = dyadic_value(s)
    return DyadicInterval(lower, lower + Fraction(1, 1 << len(s)))


def strict_below(a: Word) -> frozenset[Word]:
    """
    Return A = {s : l(s) = l(a), r(s) < r(a)}.

    The cylinders of the result tile [0, r(a)) exactly, and the result has
    r(a)·2^{l(a)} elements.

    Args:
        a (Word): A nonempty word.

    Returns:
        frozenset[Word]: The words strictly below ``a`` at its own length.

    Raises:
        SchemaError: If ``a`` is empty.
    """
    check_word(a)
    if not a:
        raise SchemaError("strict_below needs a nonempty word")
    ensure_depth(len(a))
    width = len(a)
    return frozenset(format(i, f"0{width}b") for i in range(int(a, 2)))


def iter_partition(n: int) -> Iterator[Word]:
    """Yield all 2^n words of length n in lexicographic order."""
    ensure_depth(n)
    if n == 0:
        yield EMPTY
        return
    for i in range(1 << n):
        yield format(i, f"0{n}b")


def partition(n: int) -> List[Word]:
    """
    Return all 2^n words of length n in lexicographic order.

    Args:
        n (int): Word length, at most the depth budget.

    Returns:
        List[Word]: The exhaustive, duplicate-free list.
    """
    return list(iter_partition(n))


def cylinder_union_normalize(ws: Iterable[Word]) -> frozenset[Word]:
    """
    Drop every word that has a proper prefix in the set.

    The result is an antichain with the same cylinder union. Sibling pairs are
    left alone, so {"00", "01", "10"} comes back unchanged.

    Args:
        ws (Iterable[Word]): Any set of words.

    Returns:
        frozenset[Word]: The antichain.
    """
    kept: set[Word] = set()
    for w in sorted(set(ws), key=lambda s: (len(s), s)):
        check_word(w)
        if not any(w[:j] in kept for j in range(len(w) + 1)):
            kept.add(w)
    return frozenset(kept)


def covers(ws: Iterable[Word], s: Word) -> bool:
    """
    Decide Δ(s) ⊆ ∪_{w ∈ ws} Δ(w) exactly.

    Args:
        ws (Iterable[Word]): The covering words.
        s (Word): The word whose cylinder is tested.

    Returns:
        bool: True when the cylinder is covered.
    """
    pool = cylinder_union_normalize(ws)
    return _covers(pool, s)


def _covers(pool: frozenset[Word], s: Word) -> bool:
    if any(s[:j] in pool for j in range(len(s) + 1)):
        return True
    below = frozenset(w for w in pool if len(w) > len(s) and w.startswith(s))
    if not below:
        return False
    return _covers(below, s + "0") and _covers(below, s + "1")


def expansion_prefix(q: Fraction, m: int) -> Word:
    """
    Return the depth-m prefix of the binary expansion of q ∈ [0, 1].

    For q = 1 the expansion 1^∞ is used.

    Args:
        q (Fraction): The rational.
        m (int): Prefix length.

    Returns:
        Word: floor(q·2^m) written with m bits.
    """
    if not 0 <= q <= 1:
        raise PreconditionError(f"{q} is not in [0, 1]")
    if m == 0:
        return EMPTY
    if q == 1:
        return "1" * m
    return format((q.numerator << m) // q.denominator, f"0{m}b")


@dataclass(frozen=True, slots=True)
class PeriodicSequence:
    """
    The eventually periodic sequence head·repeat·repeat·…

    This is the only way an infinite sequence appears here: as a finitary
    specification. ``1^i0^∞`` is ``PeriodicSequence("1" * i, "0")``.
    """

    head: Word
    repeat: Word

    def __post_init__(self) -> None:
        check_word(self.head)
        check_word(self.repeat)
        if not self.repeat:
            raise SchemaError("The repeating block of a sequence must be nonempty")

    def bit(self, i: int) -> str:
        if i < len(self.head):
            return self.head[i]
        return self.repeat[(i - len(self.head)) % len(self.repeat)]

    def prefix(self, n: int) -> Word:
        """The length-n prefix of the sequence."""
        if n <= len(self.head):
            return self.head[:n]
        tail = n - len(self.head)
        reps = tail // len(self.repeat) + 1
        return self.head + (self.repeat * reps)[:tail]

    def extends(self, x: Word) -> bool:
        """True when ``x`` is a prefix of the sequence."""
        return self.prefix(len(x)) == x

    def value(self) -> Fraction:
        """
        The exact rational Σ 2^{-i} s_i of the infinite sequence.

        Returns:
            Fraction: A value in [0, 1]; 1^∞ gives 1.
        """
        period = len(self.repeat)
        head = int(self.head, 2) if self.head else 0
        return (head + Fraction(int(self.repeat, 2), (1 << period) - 1)) / (
            1 << len(self.head)
        )

    def __str__(self) -> str:
        return f"{self.head}({self.repeat})^inf"

    @classmethod
    def parse(cls, text: str) -> "PeriodicSequence":
        """
        Parse ``head(repeat)``, optionally followed by ``^inf``.

        ``"(1)"`` is 1^∞ and ``"11(0)^inf"`` is 1^2 0^∞.
        """
        body = text.strip()
        if body.endswith("^inf"):
            body = body[: -len("^inf")]
        head, sep, rest = body.partition("(")
        if not sep or not rest.endswith(")"):
            raise SchemaError(f"Expected head(repeat), got {text!r}")
        return cls(head, rest[:-1])
