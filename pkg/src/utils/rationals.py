import re
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Annotated, Any

from pydantic import BaseModel, ConfigDict, PlainSerializer, PlainValidator, WithJsonSchema

from src.config.settings import settings
from src.utils.errors import SchemaError

RATIONAL_PATTERN = r"^-?\d+(/\d+)?$"
_rational_re = re.compile(RATIONAL_PATTERN)


def parse_rational(value: Any) -> Fraction:
    """
    Parse an exact rational from a "p/q" string, an integer or a Fraction.

    Floats are rejected, and so are decimal or exponent strings such as
    "0.5" or "1e-2": a rational is written as an integer or "p/q".

    Args:
        value (Any): The raw value.

    Returns:
        Fraction: The parsed rational.

    Raises:
        SchemaError: If the value is not an exact rational.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise SchemaError(f"Expected an exact rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not _rational_re.match(text):
            raise SchemaError(f"Expected a rational written as \"p/q\", got {value!r}")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as e:
            raise SchemaError(f"Cannot parse rational {value!r}") from e
    raise SchemaError(f"Expected an exact rational, got {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    """Render a rational as "p/q", always with a denominator."""
    return f"{value.numerator}/{value.denominator}"


def format_decimal(value: Fraction, digits: int | None = None) -> str:
    """
    Render a rational as a decimal string with ``digits`` significant digits.

    Decimal renderings are for display and plotting only.

    Args:
        value (Fraction): The rational to render.
        digits (int | None): Significant digits; defaults to settings.decimal_digits.

    Returns:
        str: The decimal rendering.
    """
    digits = digits or settings.decimal_digits
    with localcontext() as ctx:
        ctx.prec = digits
        rendered = Decimal(value.numerator) / Decimal(value.denominator)
        return format(rendered, f".{digits}g")


Rational = Annotated[
    Fraction,
    PlainValidator(parse_rational),
    PlainSerializer(format_rational, return_type=str),
    WithJsonSchema({"type": "string", "pattern": RATIONAL_PATTERN}),
]


class ExactModel(BaseModel):
    """Base for every schema and report carrying exact rationals."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
