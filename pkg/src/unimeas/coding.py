"""Bijective integer codings used by every enumeration in the package.

All enumerations (basic points, basic functions, atomic measures, ball
triples) are built from the primitives here, so the numbering is fixed
and reproducible across runs and platforms.
"""
from __future__ import annotations

from fractions import Fraction
from math import isqrt


def pair(a: int, b: int) -> int:
    """Cantor pairing, a bijection N x N -> N."""
    s = a + b
    return s * (s + 1) // 2 + b


def unpair(n: int) -> tuple[int, int]:
    w = (isqrt(8 * n + 1) - 1) // 2
    b = n - w * (w + 1) // 2
    return w - b, b


def zigzag(z: int) -> int:
    """Z -> N: 0, -1, 1, -2, 2, ... map to 0, 1, 2, 3, 4, ..."""
    return 2 * z if z >= 0 else -2 * z - 1


def unzigzag(n: int) -> int:
    return n // 2 if n % 2 == 0 else -(n + 1) // 2


def encode_list(items: list[int]) -> int:
    code = 0
    for x in reversed(items):
        code = pair(x, code) + 1
    return code


def decode_list(code: int) -> list[int]:
    out: list[int] = []
    while code > 0:
        head, code = unpair(code - 1)
        out.append(head)
    return out


def is_dyadic(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


def encode_pos_dyadic(q: Fraction) -> int:
    """Positive dyadic m * 2^e (m odd) -> pair((m - 1) / 2, zigzag(-1 - e)).

    Exponents are visited in the order -1, 0, -2, 1, -3, ... so that
    1/2, 1, 1/4, 2, 1/8 are the first values with m = 1.
    """
    q = Fraction(q)
    if q <= 0 or not is_dyadic(q):
        raise ValueError(f"not a positive dyadic: {q}")
    m, d = q.numerator, q.denominator
    e = -(d.bit_length() - 1)
    while m % 2 == 0:
        m //= 2
        e += 1
    return pair((m - 1) // 2, zigzag(-1 - e))


def decode_pos_dyadic(code: int) -> Fraction:
    a, b = unpair(code)
    m = 2 * a + 1
    e = -1 - unzigzag(b)
    return Fraction(m) * Fraction(2) ** e


def encode_dyadic(q: Fraction) -> int:
    """All dyadics: 0 -> 0, q > 0 -> 2c + 1, q < 0 -> 2c + 2."""
    q = Fraction(q)
    if q == 0:
        return 0
    if q > 0:
        return 2 * encode_pos_dyadic(q) + 1
    return 2 * encode_pos_dyadic(-q) + 2


def decode_dyadic(code: int) -> Fraction:
    if code == 0:
        return Fraction(0)
    if code % 2 == 1:
        return decode_pos_dyadic((code - 1) // 2)
    return -decode_pos_dyadic((code - 2) // 2)


def encode_nonneg_dyadic(q: Fraction) -> int:
    q = Fraction(q)
    if q == 0:
        return 0
    return encode_pos_dyadic(q) + 1


def decode_nonneg_dyadic(code: int) -> Fraction:
    if code == 0:
        return Fraction(0)
    return decode_pos_dyadic(code - 1)


def parse_dyadic(text: str) -> Fraction:
    """Parse '3/8', '-5', '0.375' into an exact dyadic Fraction."""
    q = Fraction(text.strip())
    if not is_dyadic(q):
        raise ValueError(f"not a dyadic rational: {text!r}")
    return q


def format_dyadic(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"
