"""Dyadic numbers, outward-rounded intervals and real streams.

Every finite-precision answer in the package is a ``DyadicInterval``.
Internally most computations carry exact ``Fraction`` pairs and round
outward to a dyadic grid only when an answer leaves a module.
"""
from __future__ import annotations

import threading
from fractions import Fraction
from math import isqrt
from typing import Callable, Iterable, Sequence, Union

from mpmath import libmp

from .errors import BudgetExceeded

Q = Fraction
Number = Union[int, Fraction, "Dyadic"]
QInterval = tuple  # (Fraction, Fraction)


def ceil_log2(n: int) -> int:
    """Smallest e >= 0 with 2^e >= n."""
    if n <= 1:
        return 0
    return (n - 1).bit_length()


def ceil_log2_q(q: Fraction) -> int:
    """Smallest integer e with 2^e >= q, for q > 0."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("ceil_log2_q needs q > 0")
    e = q.numerator.bit_length() - q.denominator.bit_length()
    while Fraction(2) ** e < q:
        e += 1
    while Fraction(2) ** (e - 1) >= q:
        e -= 1
    return e


def pow2(e: int) -> Fraction:
    return Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e)


def floor_to(q: Fraction, prec: int) -> Fraction:
    """Largest multiple of 2^-prec that is <= q."""
    if prec >= 0:
        s = 1 << prec
        return Fraction((q.numerator * s) // q.denominator, s)
    s = 1 << -prec
    return Fraction(((q.numerator // q.denominator) // s) * s)


def ceil_to(q: Fraction, prec: int) -> Fraction:
    return -floor_to(-q, prec)


def _round_lo(q: Fraction, prec: int) -> Fraction:
    d = q.denominator
    if d & (d - 1) == 0 and d.bit_length() - 1 <= prec + 64:
        return q
    return floor_to(q, prec)


def _round_hi(q: Fraction, prec: int) -> Fraction:
    d = q.denominator
    if d & (d - 1) == 0 and d.bit_length() - 1 <= prec + 64:
        return q
    return ceil_to(q, prec)


class Dyadic:
    """Exact value mantissa * 2^exponent, canonical (odd mantissa or zero)."""

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: int, exponent: int = 0) -> None:
        mantissa, exponent = int(mantissa), int(exponent)
        if mantissa == 0:
            exponent = 0
        else:
            tz = (mantissa & -mantissa).bit_length() - 1
            mantissa >>= tz
            exponent += tz
        object.__setattr__(self, "mantissa", mantissa)
        object.__setattr__(self, "exponent", exponent)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    @classmethod
    def of(cls, x: Number) -> "Dyadic":
        if isinstance(x, Dyadic):
            return x
        q = Fraction(x)
        d = q.denominator
        if d & (d - 1):
            raise ValueError(f"{q} is not dyadic")
        return cls(q.numerator, -(d.bit_length() - 1))

    def to_fraction(self) -> Fraction:
        return Fraction(self.mantissa) * pow2(self.exponent)

    def __float__(self) -> float:
        return float(self.to_fraction())

    def __repr__(self) -> str:
        return f"Dyadic({self.mantissa}, {self.exponent})"

    def __str__(self) -> str:
        q = self.to_fraction()
        return str(q)

    def __hash__(self) -> int:
        return hash(self.to_fraction())

    def _q(self, other) -> Fraction:
        if isinstance(other, Dyadic):
            return other.to_fraction()
        return Fraction(other)

    def __eq__(self, other) -> bool:
        try:
            return self.to_fraction() == self._q(other)
        except (TypeError, ValueError):
            return NotImplemented

    def __lt__(self, other) -> bool:
        return self.to_fraction() < self._q(other)

    def __le__(self, other) -> bool:
        return self.to_fraction() <= self._q(other)

    def __gt__(self, other) -> bool:
        return self.to_fraction() > self._q(other)

    def __ge__(self, other) -> bool:
        return self.to_fraction() >= self._q(other)

    def __add__(self, other) -> "Dyadic":
        return Dyadic.of(self.to_fraction() + self._q(other))

    __radd__ = __add__

    def __sub__(self, other) -> "Dyadic":
        return Dyadic.of(self.to_fraction() - self._q(other))

    def __rsub__(self, other) -> "Dyadic":
        return Dyadic.of(self._q(other) - self.to_fraction())

    def __mul__(self, other) -> "Dyadic":
        return Dyadic.of(self.to_fraction() * self._q(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.mantissa, self.exponent)

    def __abs__(self) -> "Dyadic":
        return Dyadic(abs(self.mantissa), self.exponent)

    def shift(self, e: int) -> "Dyadic":
        """Multiply by 2^e."""
        return Dyadic(self.mantissa, self.exponent + e)

    def to_json(self) -> dict:
        return {"mantissa": self.mantissa, "exponent": self.exponent}

    @classmethod
    def from_json(cls, obj: dict) -> "Dyadic":
        return cls(int(obj["mantissa"]), int(obj["exponent"]))


class DyadicInterval:
    """Closed interval [lo, hi] with dyadic endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Number, hi: Number) -> None:
        lo_d, hi_d = Dyadic.of(lo), Dyadic.of(hi)
        if lo_d > hi_d:
            raise ValueError(f"empty interval [{lo_d}, {hi_d}]")
        object.__setattr__(self, "lo", lo_d)
        object.__setattr__(self, "hi", hi_d)

    def __setattr__(self, name, value):
        raise AttributeError("DyadicInterval is immutable")

    @classmethod
    def point(cls, x: Number) -> "DyadicInterval":
        return cls(x, x)

    @classmethod
    def outward(cls, lo: Fraction, hi: Fraction, prec: int) -> "DyadicInterval":
        """Smallest grid-2^-prec interval containing [lo, hi].

        Endpoints that are already dyadic (and not absurdly fine) are kept
        exactly.
        """
        lo, hi = Fraction(lo), Fraction(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        return cls(_round_lo(lo, prec), _round_hi(hi, prec))

    @property
    def lo_q(self) -> Fraction:
        return self.lo.to_fraction()

    @property
    def hi_q(self) -> Fraction:
        return self.hi.to_fraction()

    def q(self) -> tuple[Fraction, Fraction]:
        return self.lo_q, self.hi_q

    def width(self) -> Fraction:
        return self.hi_q - self.lo_q

    def mid(self) -> Fraction:
        return (self.lo_q + self.hi_q) / 2

    def contains(self, x: Number) -> bool:
        v = x.to_fraction() if isinstance(x, Dyadic) else Fraction(x)
        return self.lo_q <= v <= self.hi_q

    def contains_interval(self, other: "DyadicInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersect(self, other: "DyadicInterval") -> "DyadicInterval":
        lo = max(self.lo_q, other.lo_q)
        hi = min(self.hi_q, other.hi_q)
        if lo > hi:
            raise ValueError("inconsistent intervals: empty intersection")
        return DyadicInterval(lo, hi)

    def hull(self, other: "DyadicInterval") -> "DyadicInterval":
        return DyadicInterval(min(self.lo_q, other.lo_q), max(self.hi_q, other.hi_q))

    def __add__(self, other) -> "DyadicInterval":
        if not isinstance(other, DyadicInterval):
            other = DyadicInterval.point(other)
        return DyadicInterval(self.lo_q + other.lo_q, self.hi_q + other.hi_q)

    __radd__ = __add__

    def __neg__(self) -> "DyadicInterval":
        return DyadicInterval(-self.hi_q, -self.lo_q)

    def __sub__(self, other) -> "DyadicInterval":
        if not isinstance(other, DyadicInterval):
            other = DyadicInterval.point(other)
        return self + (-other)

    def __mul__(self, other) -> "DyadicInterval":
        if not isinstance(other, DyadicInterval):
            other = DyadicInterval.point(other)
        lo, hi = qmul(self.q(), other.q())
        return DyadicInterval(lo, hi)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, DyadicInterval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"DyadicInterval({self.lo_q}, {self.hi_q})"

    def to_json(self) -> dict:
        return {"lo": self.lo.to_json(), "hi": self.hi.to_json()}


# ---------------------------------------------------------------------------
# Fraction-pair interval helpers used internally.

def qadd(a: QInterval, b: QInterval) -> QInterval:
    return a[0] + b[0], a[1] + b[1]


def qneg(a: QInterval) -> QInterval:
    return -a[1], -a[0]


def qsub(a: QInterval, b: QInterval) -> QInterval:
    return a[0] - b[1], a[1] - b[0]


def qscale(c: Fraction, a: QInterval) -> QInterval:
    if c >= 0:
        return c * a[0], c * a[1]
    return c * a[1], c * a[0]


def qmul(a: QInterval, b: QInterval) -> QInterval:
    if a[0] >= 0 and b[0] >= 0:
        return a[0] * b[0], a[1] * b[1]
    ps = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return min(ps), max(ps)


def qdiv(a: QInterval, b: QInterval) -> QInterval:
    if b[0] <= 0 <= b[1]:
        raise ZeroDivisionError("interval divisor contains 0")
    return qmul(a, (1 / b[1], 1 / b[0]))


def qabs(a: QInterval) -> QInterval:
    lo, hi = a
    if lo >= 0:
        return lo, hi
    if hi <= 0:
        return -hi, -lo
    return Fraction(0), max(-lo, hi)


def qclamp(a: QInterval, lo: Fraction, hi: Fraction) -> QInterval:
    return min(max(a[0], lo), hi), min(max(a[1], lo), hi)


def qsqrt(a: QInterval, prec: int) -> QInterval:
    """Outward-rounded square root on a grid of 2^-prec."""
    lo, hi = max(a[0], Fraction(0)), max(a[1], Fraction(0))
    s = 1 << (2 * prec)
    lo_n = (lo.numerator * s) // lo.denominator
    hi_n = -((-hi.numerator * s) // hi.denominator)
    r_lo = isqrt(lo_n)
    r_hi = isqrt(hi_n)
    if r_hi * r_hi < hi_n:
        r_hi += 1
    return Fraction(r_lo, 1 << prec), Fraction(r_hi, 1 << prec)


def _mpf_to_q(x) -> Fraction:
    p, q = libmp.to_rational(x)
    return Fraction(int(p), int(q))


def one_minus_exp_neg(a: QInterval, prec: int) -> QInterval:
    """Outward enclosure of {1 - exp(-x) : x in a} for a within [0, inf)."""
    lo, hi = max(a[0], Fraction(0)), max(a[1], Fraction(0))
    bits = prec + 16
    y_lo = libmp.from_rational(-lo.numerator, lo.denominator, bits, "c")
    e_hi = libmp.mpf_exp(y_lo, bits, "c")
    y_hi = libmp.from_rational(-hi.numerator, hi.denominator, bits, "f")
    e_lo = libmp.mpf_exp(y_hi, bits, "f")
    out_lo = max(Fraction(0), 1 - _mpf_to_q(e_hi))
    out_hi = min(Fraction(1), 1 - _mpf_to_q(e_lo))
    return floor_to(out_lo, prec + 8), ceil_to(out_hi, prec + 8)


# ---------------------------------------------------------------------------
# Real streams.

IntervalLike = Union[DyadicInterval, QInterval]


def _as_q(iv: IntervalLike) -> QInterval:
    if isinstance(iv, DyadicInterval):
        return iv.q()
    return Fraction(iv[0]), Fraction(iv[1])


class RealStream:
    """A real number given by a precision-indexed family of intervals.

    ``raw(k)`` must return an interval of width <= 2^-k containing the
    value.  Queries are intersection-normalized, so ``self(k + 1)`` is
    always a subset of ``self(k)``.
    """

    def __init__(self, raw: Callable[[int], IntervalLike], label: str | None = None) -> None:
        self._raw = raw
        self.label = label
        self._cache: list[QInterval] = []
        self._lock = threading.Lock()

    def __call__(self, k: int) -> DyadicInterval:
        lo, hi = self.query_q(k)
        return DyadicInterval.outward(lo, hi, k + 2)

    def query_q(self, k: int) -> QInterval:
        if k < 0:
            k = 0
        with self._lock:
            while len(self._cache) <= k:
                j = len(self._cache)
                lo, hi = _as_q(self._raw(j))
                if self._cache:
                    plo, phi = self._cache[-1]
                    lo, hi = max(lo, plo), min(hi, phi)
                    if lo > hi:
                        raise ValueError(f"inconsistent real stream {self.label or ''} at k={j}")
                self._cache.append((lo, hi))
            return self._cache[k]

    def __repr__(self) -> str:
        return f"RealStream({self.label or '?'})"

    @classmethod
    def constant(cls, x: Number) -> "RealStream":
        q = x.to_fraction() if isinstance(x, Dyadic) else Fraction(x)

        def raw(k: int) -> QInterval:
            return _round_lo(q, k + 1), _round_hi(q, k + 1)

        return cls(raw, label=str(q))

    def __add__(self, other: "RealStream") -> "RealStream":
        other = _as_stream(other)
        return RealStream(lambda k: qadd(self.query_q(k + 1), other.query_q(k + 1)))

    __radd__ = __add__

    def __neg__(self) -> "RealStream":
        return RealStream(lambda k: qneg(self.query_q(k)))

    def __sub__(self, other: "RealStream") -> "RealStream":
        return self + (-_as_stream(other))

    def __mul__(self, other: "RealStream") -> "RealStream":
        other = _as_stream(other)

        def raw(k: int) -> QInterval:
            a0, b0 = self.query_q(0), other.query_q(0)
            ma = max(abs(a0[0]), abs(a0[1])) + 1
            mb = max(abs(b0[0]), abs(b0[1])) + 1
            extra = ceil_log2_q(ma + mb) + 1
            return qmul(self.query_q(k + extra), other.query_q(k + extra))

        return RealStream(raw)

    __rmul__ = __mul__


def _as_stream(x) -> RealStream:
    if isinstance(x, RealStream):
        return x
    return RealStream.constant(x)


def refine(x: RealStream, k: int) -> DyadicInterval:
    """Interval of width <= 2^-k containing the real represented by ``x``."""
    if k < 0:
        raise ValueError("precision must be >= 0")
    return x(k)


def sum_with_tail_bound(
    terms: Sequence[RealStream] | Callable[[int], RealStream],
    tail_bound: Callable[[int], Fraction],
    k: int,
    max_terms: int = 1 << 16,
) -> DyadicInterval:
    """Enclose a convergent series to width 2^-k.

    ``tail_bound(N)`` bounds the absolute value of the sum of all terms
    with index >= N.  The head is cut where that bound drops to
    2^-(k+2), and each of the N head terms is evaluated at precision
    k + 2 + ceil(log2 N).
    """
    finite = not callable(terms) or isinstance(terms, RealStream)
    if finite:
        seq = list(terms) if not isinstance(terms, RealStream) else [terms]
        get = seq.__getitem__
        length = len(seq)
    else:
        get = terms  # type: ignore[assignment]
        length = None
    threshold = pow2(-(k + 2))
    n = 0
    tail = Fraction(0)
    while True:
        if length is not None and n >= length:
            tail = Fraction(0)
            break
        tail = Fraction(tail_bound(n))
        if tail <= threshold:
            break
        n += 1
        if n > max_terms:
            raise BudgetExceeded(
                f"tail bound still above 2^-{k + 2} after {max_terms} terms", partial=n
            )
    p = k + 2 + ceil_log2(max(n, 1))
    lo = hi = Fraction(0)
    for i in range(n):
        term = get(i)
        a, b = term.query_q(p) if isinstance(term, RealStream) else _as_q(term(p))
        lo += a
        hi += b
    return DyadicInterval.outward(lo - tail, hi + tail, k + 3)


def interval_json(lo: Fraction, hi: Fraction, prec: int) -> dict:
    return DyadicInterval.outward(lo, hi, prec).to_json()


def dyadic_json(q: Fraction, prec: int | None = None) -> dict:
    """Exact dyadic as JSON; non-dyadic values must go through an interval."""
    return Dyadic.of(q).to_json()


def iter_q(values: Iterable[Number]) -> list[Fraction]:
    return [v.to_fraction() if isinstance(v, Dyadic) else Fraction(v) for v in values]
