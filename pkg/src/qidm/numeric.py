"""Scalar helpers for the two numeric backends (exact rationals and floats)."""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Union

Scalar = Union[int, Fraction, float]

BACKENDS = ("rational", "float")
FLOAT_ATOL = 1e-9


def to_scalar(value, backend: str = "rational") -> Scalar:
    """Parse a JSON weight.

    Strings (``"0.3"``, ``"3/7"``) become exact rationals; numbers stay floats
    unless the rational backend is requested, in which case their shortest
    decimal representation is taken literally.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if isinstance(value, bool):
        raise TypeError("booleans are not weights")
    if isinstance(value, str):
        exact = Fraction(value.strip())
        return exact if backend == "rational" else float(exact)
    if isinstance(value, Rational):
        return Fraction(value) if backend == "rational" else float(value)
    if isinstance(value, float):
        return Fraction(repr(value)) if backend == "rational" else value
    raise TypeError(f"cannot interpret {value!r} as a weight")


def is_exact(x) -> bool:
    return isinstance(x, Rational)


def is_zero(x, atol: float = FLOAT_ATOL) -> bool:
    if is_exact(x):
        return x == 0
    return abs(x) <= atol


def close(a, b, atol: float = FLOAT_ATOL) -> bool:
    """Exact equality for rationals, absolute tolerance otherwise."""
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(a - b) <= atol


def pos(x):
    return x if x > 0 else x * 0


def neg(x):
    return -x if x < 0 else x * 0


def one_wedge_sq(x):
    """The integrability weight ``min(1, x**2)``, exact for rationals."""
    sq = x * x
    return sq if sq < 1 else sq ** 0


def tau(x):
    """Truncation used in every Levy-Khintchine exponent: identity on [-1, 1], sign outside."""
    if x > 1:
        return x ** 0
    if x < -1:
        return -(x ** 0)
    return x


def dump_scalar(x):
    """JSON-ready value: rationals as ``"p/q"`` strings, floats untouched."""
    if is_exact(x):
        x = Fraction(x)
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return float(x)


def fmt(x) -> str:
    """CSV cell: 17 significant digits for floats, exact text for rationals."""
    if is_exact(x):
        return str(dump_scalar(x))
    return format(float(x), ".17g")
