"""Helpers for exact rational values and their "p/q" JSON encoding.

All core quantities in lotbench are `fractions.Fraction` values, which are
always stored in lowest terms with a positive denominator.  JSON carries
rationals as strings like "5/24"; plain integers are accepted as shorthand.
"""

from __future__ import annotations

from fractions import Fraction


def parse_rational(value) -> Fraction:
    """Parse a JSON-level value ("p/q" string, int, or Fraction) exactly.

    Floats are rejected: they would silently break the exact-arithmetic
    contract of every identity checked downstream.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ValueError(f"not a rational: {value!r}")


def format_rational(value: Fraction) -> str:
    """Render a Fraction as "p/q" (or "p" when the denominator is 1)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_rational_vector(values) -> tuple[Fraction, ...]:
    return tuple(parse_rational(v) for v in values)


def format_rational_vector(values) -> list[str]:
    return [format_rational(v) for v in values]


def format_rational_matrix(rows) -> list[list[str]]:
    return [format_rational_vector(row) for row in rows]
