"""Reference computations that do not go through the code under test."""

from fractions import Fraction
from math import comb

from src.models.specs import CounterexampleSpec


def beta_integral(ones: int, zeros: int, lower: Fraction, upper: Fraction) -> Fraction:
    """∫_lower^upper θ^ones (1−θ)^zeros dθ by expanding (1−θ)^zeros."""
    total = Fraction(0)
    for j in range(zeros + 1):
        power = ones + j + 1
        total += comb(zeros, j) * (-1) ** j * (upper**power - lower**power) / power
    return total


def interval_mass(word: str, lower: Fraction, upper: Fraction) -> Fraction:
    """Length of [r(word), r(word) + 2^-l) ∩ [lower, upper)."""
    left = Fraction(int(word, 2), 2 ** len(word)) if word else Fraction(0)
    right = left + Fraction(1, 2 ** len(word))
    return max(Fraction(0), min(right, upper) - max(left, lower))


def words_up_to(n: int):
    for length in range(n + 1):
        for i in range(2**length):
            yield format(i, f"0{length}b") if length else ""


def alternating_spec(size: int) -> CounterexampleSpec:
    """alpha = 2/3 approximated by a_i = (10)^i."""
    return CounterexampleSpec(
        approximants=["10" * i for i in range(1, size + 1)], alpha=Fraction(2, 3)
    )
