"""Computable metric spaces, Cauchy names and the built-in catalog.

A space is an enumerated set of basic points with a distance oracle
``dist(i, j, k)``.  A point is a ``CauchyName``: a stream of basic-point
indices h with d(b_h(j), b_h(i)) <= 2^-i for j >= i.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .coding import (
    decode_list,
    decode_nonneg_dyadic,
    encode_list,
    encode_nonneg_dyadic,
    format_dyadic,
    is_dyadic,
    pair,
    parse_dyadic,
    unpair,
    unzigzag,
    zigzag,
)
import math

from .exact import DyadicInterval, QInterval, pow2


class CauchyName:
    """A memoized index stream naming a point of ``space``."""

    def __init__(
        self, space: "Space", fn: Callable[[int], int], label: str | None = None, basic: int | None = None,
        desc: dict | None = None,
    ) -> None:
        self.space = space
        self.basic = basic
        # JSON point descriptor when the name was built from a literal
        self.desc = desc if desc is not None else ({"index": basic} if basic is not None else None)
        self._fn = fn
        self.label = label
        self._cache: dict[int, int] = {}
        self._lock = threading.Lock()

    def __call__(self, i: int) -> int:
        with self._lock:
            v = self._cache.get(i)
        if v is None:
            v = int(self._fn(i))
            with self._lock:
                self._cache[i] = v
        return v

    def prefix(self, n: int) -> list[int]:
        return [self(i) for i in range(n)]

    def project(self, axis: int) -> "CauchyName":
        space = self.space
        if not isinstance(space, ProductSpace):
            raise TypeError("project() needs a name in a product space")
        factor = space.factors[axis]
        return CauchyName(factor, lambda i: space.split(self(i))[axis], label=f"pi{axis}({self.label})")

    def __repr__(self) -> str:
        return f"CauchyName({self.space.kind}, {self.label or '?'})"


class Space:
    """Base class: basic points 0, 1, 2, ... and a distance oracle."""

    kind = "space"
    exact = False
    size: int | None = None

    def dist(self, i: int, j: int, k: int) -> DyadicInterval:
        lo, hi = self.dist_q(i, j, k + 1)
        return DyadicInterval.outward(lo, hi, k + 2)

    def dist_q(self, i: int, j: int, k: int) -> QInterval:
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"kind": self.kind, "parameters": {}, "children": []}

    def basic_point(self, i: int):
        return i

    def index_of(self, value) -> int:
        raise NotImplementedError(f"{self.kind} has no point lookup")

    def parse_point(self, text: str) -> int:
        return self.index_of(text)

    def basic_name(self, i: int) -> CauchyName:
        return CauchyName(self, lambda _n: i, label=f"b{i}", basic=i)

    def candidates(self, z: CauchyName, radius: Fraction) -> Iterator[int] | None:
        """Increasing indices covering every basic point b with d(b, z) < radius.

        ``None`` means no fast enumeration exists; callers scan 0, 1, 2, ...
        """
        return None

    def __eq__(self, other) -> bool:
        return isinstance(other, Space) and self.descriptor() == other.descriptor()

    def __hash__(self) -> int:
        return hash(repr(self.descriptor()))

    def __repr__(self) -> str:
        return f"<{self.kind} space>"


class ExactSpace(Space):
    """Space whose basic-point distances are exact dyadics."""

    exact = True

    def d(self, i: int, j: int) -> Fraction:
        raise NotImplementedError

    def dist_q(self, i: int, j: int, k: int) -> QInterval:
        v = self.d(i, j)
        return v, v


def _first_diff(x: int, y: int) -> int | None:
    z = x ^ y
    if z == 0:
        return None
    return (z & -z).bit_length() - 1


class CantorSpace(ExactSpace):
    """{0,1}^N with d(x, y) = 2^-(first index where x and y differ).

    Basic point i is the eventually-zero sequence whose bits are the
    binary digits of i, least significant first.
    """

    kind = "cantor"

    def d(self, i: int, j: int) -> Fraction:
        n = _first_diff(i, j)
        return Fraction(0) if n is None else pow2(-n)

    def basic_point(self, i: int) -> str:
        return format(i, "b")[::-1] if i else "0"

    def index_of(self, value) -> int:
        bits = str(value).strip()
        if not bits or any(c not in "01" for c in bits):
            raise ValueError(f"not a bit string: {value!r}")
        return sum(1 << j for j, c in enumerate(bits) if c == "1")

    def name(self, bits: str | Sequence[int] | Callable[[int], int], label: str | None = None) -> CauchyName:
        """Name of the sequence with the given bits (finite strings are padded with zeros)."""
        desc = None
        if callable(bits):
            fn = bits
            label = label or "bits"
        else:
            seq = [int(c) for c in bits]
            desc = {"bits": "".join(map(str, seq))}
            fn = lambda j: seq[j] if j < len(seq) else 0  # noqa: E731
            label = label or ("".join(map(str, seq)) + "0^inf")
        cache: list[int] = []

        def h(i: int) -> int:
            while len(cache) <= i:
                j = len(cache)
                prev = cache[-1] if cache else 0
                cache.append(prev | (int(fn(j)) << j))
            return cache[i]

        return CauchyName(self, h, label=label, desc=desc)

    def candidates(self, z: CauchyName, radius: Fraction) -> Iterator[int]:
        # d(b, z) < radius iff b agrees with z on the first J bits, 2^-J < radius
        J = 0
        while pow2(-J) >= radius:
            J += 1
        prefix = z(J) & ((1 << J) - 1)
        step = 1 << J
        j = 0
        while True:
            yield prefix + j * step
            j += 1


def bits_of(name: CauchyName, n: int) -> list[int]:
    """First n bits of a Cantor point from its name."""
    v = name(n)
    return [(v >> j) & 1 for j in range(n)]


def _v2(n: int) -> int:
    return (n & -n).bit_length() - 1


def baire_decode(i: int) -> list[int]:
    out: list[int] = []
    while i > 0:
        a = _v2(i)
        out.append(a)
        i = ((i >> a) - 1) // 2
    return out


def baire_encode(seq: Sequence[int]) -> int:
    code = 0
    for a in reversed(list(seq)):
        code = (1 << a) * (2 * code + 1)
    return code


class BaireSpace(ExactSpace):
    """N^N with the first-difference metric; basic points are eventually zero."""

    kind = "baire"

    def d(self, i: int, j: int) -> Fraction:
        a, b = baire_decode(i), baire_decode(j)
        n = max(len(a), len(b))
        a = a + [0] * (n - len(a))
        b = b + [0] * (n - len(b))
        for t in range(n):
            if a[t] != b[t]:
                return pow2(-t)
        return Fraction(0)

    def basic_point(self, i: int) -> list[int]:
        return baire_decode(i)

    def index_of(self, value) -> int:
        if isinstance(value, str):
            value = [int(v) for v in value.split(",") if v.strip()]
        return baire_encode(value)

    def name(self, seq: Callable[[int], int] | Sequence[int], label: str | None = None) -> CauchyName:
        fn = seq if callable(seq) else (lambda j: seq[j] if j < len(seq) else 0)
        return CauchyName(self, lambda i: baire_encode([fn(t) for t in range(i + 1)]), label=label)


def unit_value(i: int) -> Fraction:
    if i == 0:
        return Fraction(0)
    if i == 1:
        return Fraction(1)
    t = i - 2
    j = (t + 1).bit_length()
    m = t - ((1 << (j - 1)) - 1)
    return Fraction(2 * m + 1, 1 << j)


def unit_index(q: Fraction) -> int:
    q = Fraction(q)
    if not (0 <= q <= 1) or not is_dyadic(q):
        raise ValueError(f"not a dyadic in [0,1]: {q}")
    if q == 0:
        return 0
    if q == 1:
        return 1
    j = q.denominator.bit_length() - 1
    m = (q.numerator - 1) // 2
    return 2 + (1 << (j - 1)) - 1 + m


def _nearest_dyadic(q: Fraction, level: int) -> Fraction:
    s = 1 << level
    return Fraction(round(q * s), s)


class UnitInterval(ExactSpace):
    """[0, 1] with the Euclidean metric and dyadic basic points.

    Enumeration: 0, 1, 1/2, 1/4, 3/4, 1/8, 3/8, ...
    """

    kind = "unit"

    def d(self, i: int, j: int) -> Fraction:
        return abs(unit_value(i) - unit_value(j))

    def basic_point(self, i: int) -> Fraction:
        return unit_value(i)

    def index_of(self, value) -> int:
        return unit_index(parse_dyadic(value) if isinstance(value, str) else Fraction(value))

    def name(self, x: Fraction | str | Callable[[int], Fraction], label: str | None = None) -> CauchyName:
        """Name of x; ``x`` may be exact or a map k -> rational within 2^-k of x."""
        desc = None
        if callable(x):
            approx = x
        else:
            q = Fraction(x)
            approx = lambda k: q  # noqa: E731
            label = label or str(q)
            desc = {"value": str(q)}

        def h(i: int) -> int:
            a = Fraction(approx(i + 3))
            v = _nearest_dyadic(a, i + 2)
            v = min(max(v, Fraction(0)), Fraction(1))
            return unit_index(v)

        return CauchyName(self, h, label=label, desc=desc)

    def candidates(self, z: CauchyName, radius: Fraction) -> Iterator[int]:
        m = 2
        while pow2(-m) > radius:
            m += 1
        centre = unit_value(z(m))
        lo, hi = centre - radius - pow2(-m), centre + radius + pow2(-m)
        for q in (Fraction(0), Fraction(1)):
            if lo <= q <= hi:
                yield unit_index(q)
        j = 1
        while True:
            s = 1 << j
            t = max(0, math.ceil((lo * s - 1) / 2))
            while True:
                v = Fraction(2 * t + 1, s)
                if v >= 1 or v > hi:
                    break
                yield unit_index(v)
                t += 1
            j += 1


def real_value(i: int) -> Fraction:
    a, b = unpair(i)
    frac = Fraction(0) if b == 0 else unit_value(b + 1)
    return unzigzag(a) + frac


def real_index(q: Fraction) -> int:
    q = Fraction(q)
    if not is_dyadic(q):
        raise ValueError(f"not dyadic: {q}")
    z = q.numerator // q.denominator
    frac = q - z
    b = 0 if frac == 0 else unit_index(frac) - 1
    return pair(zigzag(z), b)


class RealLine(ExactSpace):
    """The real line with dyadic basic points."""

    kind = "real"

    def d(self, i: int, j: int) -> Fraction:
        return abs(real_value(i) - real_value(j))

    def basic_point(self, i: int) -> Fraction:
        return real_value(i)

    def index_of(self, value) -> int:
        return real_index(parse_dyadic(value) if isinstance(value, str) else Fraction(value))

    def name(self, x: Fraction | Callable[[int], Fraction], label: str | None = None) -> CauchyName:
        approx = x if callable(x) else (lambda k: Fraction(x))

        def h(i: int) -> int:
            return real_index(_nearest_dyadic(Fraction(approx(i + 3)), i + 2))

        desc = None if callable(x) else {"value": str(Fraction(x))}
        return CauchyName(self, h, label=label or (None if callable(x) else str(x)), desc=desc)


class FiniteSpace(ExactSpace):
    """Finitely many points with an explicit dyadic distance matrix."""

    kind = "finite"

    def __init__(self, matrix: Sequence[Sequence[Fraction]]) -> None:
        m = [[Fraction(v) for v in row] for row in matrix]
        n = len(m)
        for i in range(n):
            if len(m[i]) != n or m[i][i] != 0:
                raise ValueError("distance matrix must be square with zero diagonal")
            for j in range(n):
                if m[i][j] != m[j][i] or m[i][j] < 0 or not is_dyadic(m[i][j]):
                    raise ValueError("distance matrix must be symmetric, nonnegative and dyadic")
        self.matrix = m
        self.size = n

    def d(self, i: int, j: int) -> Fraction:
        return self.matrix[i][j]

    def index_of(self, value) -> int:
        i = int(value)
        if not 0 <= i < self.size:
            raise ValueError(f"no basic point {i}")
        return i

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "parameters": {"matrix": [[format_dyadic(v) for v in row] for row in self.matrix]},
            "children": [],
        }


class ProductSpace(Space):
    """Finite product with the max metric and diagonal (Cantor) pairing of indices."""

    kind = "product"

    def __init__(self, factors: Sequence[Space]) -> None:
        if len(factors) < 2:
            raise ValueError("a product needs at least two factors")
        self.factors = list(factors)
        self.exact = all(f.exact for f in self.factors)

    def split(self, i: int) -> tuple[int, ...]:
        out = []
        for _ in range(len(self.factors) - 1):
            a, i = unpair(i)
            out.append(a)
        out.append(i)
        return tuple(out)

    def join(self, parts: Sequence[int]) -> int:
        parts = list(parts)
        code = parts[-1]
        for a in reversed(parts[:-1]):
            code = pair(a, code)
        return code

    def dist_q(self, i: int, j: int, k: int) -> QInterval:
        lo = hi = Fraction(0)
        for f, a, b in zip(self.factors, self.split(i), self.split(j)):
            x, y = f.dist_q(a, b, k)
            lo, hi = max(lo, x), max(hi, y)
        return lo, hi

    def basic_point(self, i: int):
        return tuple(f.basic_point(a) for f, a in zip(self.factors, self.split(i)))

    def index_of(self, value) -> int:
        if isinstance(value, str):
            value = value.split(";")
        return self.join([f.index_of(v) for f, v in zip(self.factors, value)])

    def name(self, names: Sequence[CauchyName]) -> CauchyName:
        names = list(names)
        desc = None
        if all(n.desc is not None for n in names):
            desc = {"components": [n.desc for n in names]}
        return CauchyName(self, lambda i: self.join([n(i) for n in names]),
                          label="(" + ", ".join(str(n.label) for n in names) + ")", desc=desc)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "parameters": {}, "children": [f.descriptor() for f in self.factors]}


def decode_atomic(i: int) -> list[tuple[Fraction, int]]:
    out = []
    for code in decode_list(i):
        w, b = unpair(code)
        out.append((decode_nonneg_dyadic(w), b))
    return out


def encode_atomic(atoms: Sequence[tuple[Fraction, int]]) -> int:
    return encode_list([pair(encode_nonneg_dyadic(Fraction(w)), int(b)) for w, b in atoms])


class MeasureSpace(Space):
    """Finite Borel measures on ``base`` with the bounded weak metric.

    Basic point i is the atomic measure sum_j q_j delta_{x_j} decoded by
    ``decode_atomic``; the distance is the series evaluated by
    ``measures.measure_metric``.
    """

    kind = "measures"

    def __init__(self, base: Space) -> None:
        self.base = base
        self._memo: dict[tuple[int, int, int], QInterval] = {}
        self._lock = threading.Lock()

    def atoms(self, i: int) -> list[tuple[Fraction, int]]:
        return decode_atomic(i)

    def measure(self, i: int):
        from .measures import atomic

        return atomic(self.base, self.atoms(i))

    def dist_q(self, i: int, j: int, k: int) -> QInterval:
        from .measures import measure_metric

        if i == j:
            return Fraction(0), Fraction(0)
        key = (min(i, j), max(i, j), k)
        with self._lock:
            hit = self._memo.get(key)
        if hit is None:
            hit = measure_metric(self.measure(key[0]), self.measure(key[1]), k).q()
            with self._lock:
                self._memo[key] = hit
        return hit

    def basic_point(self, i: int):
        return [(format_dyadic(w), self.base.basic_point(b)) for w, b in self.atoms(i)]

    def index_of(self, value) -> int:
        return encode_atomic(value)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "parameters": {}, "children": [self.base.descriptor()]}


def measure_space_of(space: Space) -> MeasureSpace:
    """The space of finite measures on ``space`` as a computable metric space."""
    return MeasureSpace(space)


def point_distance(space: Space, x: CauchyName, y: CauchyName, k: int) -> DyadicInterval:
    """Interval of width <= 2^-k containing d(x, y)."""
    lo, hi = point_distance_q(space, x, y, k)
    return DyadicInterval.outward(lo, hi, k + 2)


def point_distance_q(space: Space, x: CauchyName, y: CauchyName, k: int) -> QInterval:
    m = k + 2 if space.exact else k + 3
    a, b = space.dist_q(x(m), y(m), m)
    slack = 2 * pow2(-m)
    return max(Fraction(0), a - slack), b + slack


def basic_to_point_q(space: Space, i: int, x: CauchyName, m: int) -> QInterval:
    """Enclosure of d(b_i, x) of width <= 3 * 2^-m (2 * 2^-m for exact spaces)."""
    if x.basic is not None and space.exact:
        d = space.d(i, x.basic)
        return d, d
    a, b = space.dist_q(i, x(m), m)
    slack = pow2(-m)
    return max(Fraction(0), a - slack), b + slack


@dataclass(frozen=True)
class NameVerdict:
    consistent: bool
    at: tuple[int, int] | None = None

    def to_json(self) -> dict:
        return {"consistent": self.consistent, "at": list(self.at) if self.at else None}


def validate_name_prefix(space: Space, h: CauchyName | Sequence[int], depth: int) -> NameVerdict:
    """Check d(b_h(j), b_h(i)) <= 2^-i for all i <= j < depth.

    Reports a violation only when the distance interval lies strictly
    above 2^-i.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    idx = h.prefix(depth) if isinstance(h, CauchyName) else list(h)[:depth]
    for j in range(len(idx)):
        for i in range(j):
            lo, _ = space.dist_q(idx[j], idx[i], i + 8)
            if lo > pow2(-i):
                return NameVerdict(False, (i, j))
    return NameVerdict(True)


def space_from_descriptor(desc: dict) -> Space:
    kind = desc.get("kind")
    params = desc.get("parameters") or {}
    children = desc.get("children") or []
    if kind == "cantor":
        return CantorSpace()
    if kind == "baire":
        return BaireSpace()
    if kind == "unit":
        return UnitInterval()
    if kind == "real":
        return RealLine()
    if kind == "finite":
        return FiniteSpace([[parse_dyadic(str(v)) for v in row] for row in params["matrix"]])
    if kind == "product":
        return ProductSpace([space_from_descriptor(c) for c in children])
    if kind == "measures":
        return MeasureSpace(space_from_descriptor(children[0]))
    raise ValueError(f"unknown space kind: {kind!r}")


def name_from_descriptor(space: Space, desc) -> CauchyName:
    """Build a name from JSON: a basic index, or a space-specific value."""
    if isinstance(desc, int):
        return space.basic_name(desc)
    if isinstance(desc, dict):
        if "index" in desc:
            return space.basic_name(int(desc["index"]))
        if "bits" in desc and isinstance(space, CantorSpace):
            return space.name(str(desc["bits"]))
        if "value" in desc and isinstance(space, (UnitInterval, RealLine)):
            return space.name(Fraction(str(desc["value"])))
        if "components" in desc and isinstance(space, ProductSpace):
            return space.name([name_from_descriptor(f, c) for f, c in zip(space.factors, desc["components"])])
    if isinstance(desc, str):
        return space.basic_name(space.parse_point(desc))
    raise ValueError(f"cannot build a point from {desc!r}")


CANTOR = CantorSpace()
BAIRE = BaireSpace()
UNIT = UnitInterval()
REAL = RealLine()

__all__ = [
    "BAIRE",
    "CANTOR",
    "REAL",
    "UNIT",
    "BaireSpace",
    "CantorSpace",
    "CauchyName",
    "ExactSpace",
    "FiniteSpace",
    "MeasureSpace",
    "NameVerdict",
    "ProductSpace",
    "RealLine",
    "Space",
    "UnitInterval",
    "basic_to_point_q",
    "bits_of",
    "decode_atomic",
    "encode_atomic",
    "measure_space_of",
    "name_from_descriptor",
    "point_distance",
    "point_distance_q",
    "space_from_descriptor",
    "validate_name_prefix",
]
