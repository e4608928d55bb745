"""Exact binary-rational helpers.

Dyadics are carried as :class:`fractions.Fraction` at API boundaries and as
integers over an implicit ``2**w`` scale inside hot loops.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction

DEFAULT_MAX_PREC_BITS = 4096


class PrecisionExhausted(ArithmeticError):
    """Raised when a certified answer needs more bits than the configured cap."""


class DomainError(ValueError):
    pass


def max_prec_bits() -> int:
    raw = os.environ.get("ORBITGAUGE_MAX_PREC_BITS")
    if raw is None:
        return DEFAULT_MAX_PREC_BITS
    return int(raw)


def is_dyadic(x: Fraction) -> bool:
    d = x.denominator
    return d & (d - 1) == 0


def as_dyadic(x) -> Fraction:
    """Coerce ints, Fractions and dyadic strings ("3/8", "0x3p-3") to a dyadic."""
    if isinstance(x, str):
        x = parse_dyadic(x)
    q = Fraction(x)
    if not is_dyadic(q):
        raise DomainError(f"{x!r} is not a dyadic rational")
    return q


def bits_of(x: Fraction) -> int:
    """Number of fractional binary digits of a dyadic."""
    return x.denominator.bit_length() - 1


def floor_scaled(x: Fraction, w: int) -> int:
    return (x.numerator << w) // x.denominator if w >= 0 else math.floor(x * Fraction(2) ** w)


def ceil_scaled(x: Fraction, w: int) -> int:
    return -((-x.numerator << w) // x.denominator)


def round_dyadic(x: Fraction, prec: int) -> Fraction:
    """Round to the nearest multiple of 2**-prec (ties to even); error <= 2**-(prec+1)."""
    if bits_of(x) <= prec and is_dyadic(x):
        return x
    scaled = x * (1 << prec)
    return Fraction(round(scaled), 1 << prec)


def iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0."""
    if n < 0:
        raise ValueError("negative radicand")
    if k == 1 or n < 2:
        return n
    if k == 2:
        return math.isqrt(n)
    if k % 2 == 0:
        return iroot(math.isqrt(n), k // 2)
    # Newton from above
    x = 1 << -(-n.bit_length() // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def to_hex(x: Fraction) -> str:
    """Hex mantissa + binary exponent, e.g. 3/8 -> '0x3p-3'."""
    x = as_dyadic(x)
    e = bits_of(x)
    m = x.numerator
    sign = "-" if m < 0 else ""
    return f"{sign}0x{abs(m):x}p-{e}"


def parse_dyadic(text: str) -> Fraction:
    t = text.strip()
    if "p" in t.lower() and t.lower().lstrip("-+").startswith("0x"):
        mant, _, exp = t.lower().partition("p")
        neg = mant.startswith("-")
        m = int(mant.lstrip("-+"), 16)
        v = Fraction(m) * Fraction(2) ** int(exp)
        return -v if neg else v
    return Fraction(t)


def bits_to_dyadic(hex_bits: str) -> Fraction:
    """Hex string h read as the binary fraction 0.h (e.g. '4' -> 1/4, 'c0' -> 3/4)."""
    h = hex_bits.strip().lower()
    if h.startswith("0x"):
        h = h[2:]
    if not h:
        return Fraction(0)
    return Fraction(int(h, 16), 1 << (4 * len(h)))


def circle_dist(x: Fraction, y: Fraction) -> Fraction:
    t = (x - y) % 1
    return min(t, 1 - t)
