from fractions import Fraction

import pytest

from src.utils.errors import SchemaError
from src.utils.rationals import format_decimal, format_rational, parse_rational


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("3/4", Fraction(3, 4)),
        (" 2 ", Fraction(2)),
        ("-6/8", Fraction(-3, 4)),
        (5, Fraction(5)),
        (Fraction(1, 3), Fraction(1, 3)),
    ],
)
def test_exact_forms_parse(raw, expected):
    assert parse_rational(raw) == expected


@pytest.mark.parametrize("raw", ["0.5", "1e-2", "1/2.0", "1/0", "", "p/q", 0.5, True, None])
def test_inexact_or_malformed_forms_are_rejected(raw):
    with pytest.raises(SchemaError):
        parse_rational(raw)


def test_formatting():
    assert format_rational(Fraction(2)) == "2/1"
    assert format_decimal(Fraction(1, 3), 4) == "0.3333"
