"""Basic bump functions, the algebra they generate and its enumeration.

Trees are built from ``One`` and ``Bump`` leaves with ``Max``, ``Min``
and dyadic ``LinComb`` nodes.  Three auxiliary nodes are not part of
the enumeration: ``Hat`` (a bump with r = 0, used for tents and
Lipschitz extensions), ``Lift`` (a function of one product coordinate)
and ``Tensor`` (a pointwise product).

Enumeration (index 0 is ``One``).  For i >= 1 let j = i - 1, t = j % 4
and q = j // 4:

* t = 0: ``Bump(c, r, r + d)`` with q = pair(c, pair(code(r), code(d)))
  and code the positive-dyadic code of ``coding``;
* t = 1: ``Max(F_a, F_b)`` with (a, b) = unpair(q);
* t = 2: ``Min(F_a, F_b)`` likewise;
* t = 3: ``LinComb`` whose terms are the list code q of entries
  pair(dyadic code of the coefficient, child index).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Optional, Union

from .coding import (
    decode_dyadic,
    decode_list,
    decode_pos_dyadic,
    encode_dyadic,
    encode_list,
    encode_pos_dyadic,
    format_dyadic,
    is_dyadic,
    pair,
    parse_dyadic,
    unpair,
)
from .exact import DyadicInterval, QInterval, ceil_log2_q, pow2, qmul

ZERO = Fraction(0)
ONE = Fraction(1)


class BasicFunction:
    """Base class of expression-tree nodes."""

    __slots__ = ()

    def __add__(self, other: "BasicFunction") -> "LinComb":
        return LinComb(((ONE, self), (ONE, other)))

    def scale(self, c) -> "LinComb":
        return LinComb(((Fraction(c), self),))

    def __str__(self) -> str:
        return to_sexpr(self)


@dataclass(frozen=True)
class One(BasicFunction):
    pass


@dataclass(frozen=True)
class Bump(BasicFunction):
    center: int
    r: Fraction
    s: Fraction

    def __post_init__(self) -> None:
        r, s = Fraction(self.r), Fraction(self.s)
        if not (0 < r < s):
            raise ValueError(f"bump needs 0 < r < s, got r={r}, s={s}")
        if not (is_dyadic(r) and is_dyadic(s)):
            raise ValueError("bump radii must be dyadic")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)


@dataclass(frozen=True)
class Hat(BasicFunction):
    """max(0, 1 - d(center, x) / s)."""

    center: int
    s: Fraction

    def __post_init__(self) -> None:
        s = Fraction(self.s)
        if s <= 0 or not is_dyadic(s):
            raise ValueError(f"hat needs a positive dyadic width, got {s}")
        object.__setattr__(self, "s", s)


@dataclass(frozen=True)
class Max(BasicFunction):
    a: BasicFunction
    b: BasicFunction


@dataclass(frozen=True)
class Min(BasicFunction):
    a: BasicFunction
    b: BasicFunction


@dataclass(frozen=True)
class LinComb(BasicFunction):
    terms: tuple = ()

    def __post_init__(self) -> None:
        terms = tuple((Fraction(c), f) for c, f in self.terms)
        for c, _ in terms:
            if not is_dyadic(c):
                raise ValueError(f"coefficient {c} is not dyadic")
        object.__setattr__(self, "terms", terms)


@dataclass(frozen=True)
class Lift(BasicFunction):
    """f applied to coordinate ``axis`` of a product point."""

    axis: int
    f: BasicFunction


@dataclass(frozen=True)
class Tensor(BasicFunction):
    """Pointwise product f * g."""

    f: BasicFunction
    g: BasicFunction


Leaf = Union[Bump, Hat]
ZERO_FN = LinComb(())


def const(c) -> BasicFunction:
    c = Fraction(c)
    if c == 1:
        return One()
    if c == 0:
        return ZERO_FN
    return LinComb(((c, One()),))


def _balanced(fs: list, node) -> BasicFunction:
    # balanced trees keep nesting depth logarithmic in the number of parts
    while len(fs) > 1:
        nxt = [node(fs[i], fs[i + 1]) for i in range(0, len(fs) - 1, 2)]
        if len(fs) % 2:
            nxt.append(fs[-1])
        fs = nxt
    return fs[0]


def max_of(fs) -> BasicFunction:
    fs = list(fs)
    if not fs:
        return ZERO_FN
    return _balanced(fs, Max)


def min_of(fs) -> BasicFunction:
    fs = list(fs)
    if not fs:
        raise ValueError("min of nothing")
    return _balanced(fs, Min)


def profile(leaf: Leaf, d: Fraction) -> Fraction:
    """Leaf value at distance d from its center."""
    if isinstance(leaf, Bump):
        if d <= leaf.r:
            return ONE
        if d >= leaf.s:
            return ZERO
        return (leaf.s - d) / (leaf.s - leaf.r)
    if d >= leaf.s:
        return ZERO
    return 1 - d / leaf.s


def profile_q(leaf: Leaf, d: QInterval) -> QInterval:
    return profile(leaf, d[1]), profile(leaf, d[0])


# ---------------------------------------------------------------------------
# Structural quantities.

@lru_cache(maxsize=65536)
def bounds(f: BasicFunction) -> tuple[Fraction, Fraction]:
    """(lo, hi) with lo <= f(x) <= hi everywhere."""
    if isinstance(f, One):
        return ONE, ONE
    if isinstance(f, (Bump, Hat)):
        return ZERO, ONE
    if isinstance(f, Max):
        (a0, a1), (b0, b1) = bounds(f.a), bounds(f.b)
        return max(a0, b0), max(a1, b1)
    if isinstance(f, Min):
        (a0, a1), (b0, b1) = bounds(f.a), bounds(f.b)
        return min(a0, b0), min(a1, b1)
    if isinstance(f, LinComb):
        lo = hi = ZERO
        for c, g in f.terms:
            g0, g1 = bounds(g)
            if c >= 0:
                lo, hi = lo + c * g0, hi + c * g1
            else:
                lo, hi = lo + c * g1, hi + c * g0
        return lo, hi
    if isinstance(f, Lift):
        return bounds(f.f)
    if isinstance(f, Tensor):
        return qmul(bounds(f.f), bounds(f.g))
    raise TypeError(f"not a basic function: {f!r}")


def sup_abs(f: BasicFunction) -> Fraction:
    lo, hi = bounds(f)
    return max(abs(lo), abs(hi))


@lru_cache(maxsize=65536)
def lipschitz(f: BasicFunction) -> Fraction:
    """A Lipschitz constant for f (with respect to the space metric)."""
    if isinstance(f, One):
        return ZERO
    if isinstance(f, Bump):
        return 1 / (f.s - f.r)
    if isinstance(f, Hat):
        return 1 / f.s
    if isinstance(f, (Max, Min)):
        return max(lipschitz(f.a), lipschitz(f.b))
    if isinstance(f, LinComb):
        return sum((abs(c) * lipschitz(g) for c, g in f.terms), ZERO)
    if isinstance(f, Lift):
        return lipschitz(f.f)
    if isinstance(f, Tensor):
        lf, lg = lipschitz(f.f), lipschitz(f.g)
        return lf * sup_abs(f.g) + lg * sup_abs(f.f) + lf * lg
    raise TypeError(f"not a basic function: {f!r}")


def is_nonneg(f: BasicFunction) -> bool:
    return bounds(f)[0] >= 0


def leaves(f: BasicFunction, ctx: tuple = ()) -> Iterator[tuple[tuple, Leaf]]:
    """Every leaf occurrence with its coordinate path (tuple of axes)."""
    if isinstance(f, (Bump, Hat)):
        yield ctx, f
    elif isinstance(f, (Max, Min)):
        yield from leaves(f.a, ctx)
        yield from leaves(f.b, ctx)
    elif isinstance(f, LinComb):
        for _, g in f.terms:
            yield from leaves(g, ctx)
    elif isinstance(f, Lift):
        yield from leaves(f.f, ctx + (f.axis,))
    elif isinstance(f, Tensor):
        yield from leaves(f.f, ctx)
        yield from leaves(f.g, ctx)


def leaf_gains(f: BasicFunction) -> dict[tuple[tuple, Leaf], Fraction]:
    """Sensitivity of f to each distinct (path, leaf): |df| <= sum gain * |d leaf|."""
    out: dict[tuple[tuple, Leaf], Fraction] = {}

    def walk(g: BasicFunction, ctx: tuple, w: Fraction) -> None:
        if w == 0:
            return
        if isinstance(g, (Bump, Hat)):
            out[(ctx, g)] = out.get((ctx, g), ZERO) + w
        elif isinstance(g, (Max, Min)):
            walk(g.a, ctx, w)
            walk(g.b, ctx, w)
        elif isinstance(g, LinComb):
            for c, h in g.terms:
                walk(h, ctx, w * abs(c))
        elif isinstance(g, Lift):
            walk(g.f, ctx + (g.axis,), w)
        elif isinstance(g, Tensor):
            # |fg - f'g'| <= |f - f'| sup|g| + sup|f'| |g - g'|
            walk(g.f, ctx, w * sup_abs(g.g))
            walk(g.g, ctx, w * sup_abs(g.f))

    walk(f, (), ONE)
    return out


# ---------------------------------------------------------------------------
# Evaluation.

LeafValuation = Callable[[tuple, Leaf], QInterval]


def eval_tree(f: BasicFunction, leafval: LeafValuation, ctx: tuple = ()) -> QInterval:
    """Interval evaluation given intervals for every leaf."""
    if isinstance(f, One):
        return ONE, ONE
    if isinstance(f, (Bump, Hat)):
        return leafval(ctx, f)
    if isinstance(f, Max):
        a, b = eval_tree(f.a, leafval, ctx), eval_tree(f.b, leafval, ctx)
        return max(a[0], b[0]), max(a[1], b[1])
    if isinstance(f, Min):
        a, b = eval_tree(f.a, leafval, ctx), eval_tree(f.b, leafval, ctx)
        return min(a[0], b[0]), min(a[1], b[1])
    if isinstance(f, LinComb):
        lo = hi = ZERO
        for c, g in f.terms:
            g0, g1 = eval_tree(g, leafval, ctx)
            if c >= 0:
                lo, hi = lo + c * g0, hi + c * g1
            else:
                lo, hi = lo + c * g1, hi + c * g0
        return lo, hi
    if isinstance(f, Lift):
        return eval_tree(f.f, leafval, ctx + (f.axis,))
    if isinstance(f, Tensor):
        return qmul(eval_tree(f.f, leafval, ctx), eval_tree(f.g, leafval, ctx))
    raise TypeError(f"not a basic function: {f!r}")


def component(space, index: int, ctx: tuple):
    """Follow a coordinate path through nested product spaces."""
    for axis in ctx:
        index = space.split(index)[axis]
        space = space.factors[axis]
    return space, index


def expand_products(f: BasicFunction, space) -> BasicFunction:
    """Rewrite leaves on product spaces as Min of lifted factor leaves.

    For the max metric, prof(max(d0, d1)) = min(prof(d0), prof(d1)).
    """
    from .spaces import ProductSpace

    if not isinstance(space, ProductSpace):
        if isinstance(f, Lift):
            raise ValueError("Lift used on a space that is not a product")
        return f
    if isinstance(f, One):
        return f
    if isinstance(f, (Bump, Hat)):
        parts = space.split(f.center)
        lifted = []
        for axis, (fac, c) in enumerate(zip(space.factors, parts)):
            leaf = Bump(c, f.r, f.s) if isinstance(f, Bump) else Hat(c, f.s)
            lifted.append(Lift(axis, expand_products(leaf, fac)))
        return min_of(lifted)
    if isinstance(f, Max):
        return Max(expand_products(f.a, space), expand_products(f.b, space))
    if isinstance(f, Min):
        return Min(expand_products(f.a, space), expand_products(f.b, space))
    if isinstance(f, LinComb):
        return LinComb(tuple((c, expand_products(g, space)) for c, g in f.terms))
    if isinstance(f, Lift):
        return Lift(f.axis, expand_products(f.f, space.factors[f.axis]))
    if isinstance(f, Tensor):
        return Tensor(expand_products(f.f, space), expand_products(f.g, space))
    raise TypeError(f"not a basic function: {f!r}")


def substitute(f: BasicFunction, rule: Callable[[tuple, Leaf], Optional[Fraction]], ctx: tuple = ()) -> BasicFunction:
    """Replace leaves for which ``rule`` returns a constant."""
    if isinstance(f, One):
        return f
    if isinstance(f, (Bump, Hat)):
        v = rule(ctx, f)
        return f if v is None else const(v)
    if isinstance(f, Max):
        return Max(substitute(f.a, rule, ctx), substitute(f.b, rule, ctx))
    if isinstance(f, Min):
        return Min(substitute(f.a, rule, ctx), substitute(f.b, rule, ctx))
    if isinstance(f, LinComb):
        return LinComb(tuple((c, substitute(g, rule, ctx)) for c, g in f.terms))
    if isinstance(f, Lift):
        return Lift(f.axis, substitute(f.f, rule, ctx + (f.axis,)))
    if isinstance(f, Tensor):
        return Tensor(substitute(f.f, rule, ctx), substitute(f.g, rule, ctx))
    raise TypeError(f"not a basic function: {f!r}")


def strip_lift(f: BasicFunction, axis: Optional[int]) -> BasicFunction:
    """Drop ``Lift`` wrappers: only ``axis`` when given, every one when None."""
    if isinstance(f, (One, Bump, Hat)):
        return f
    if isinstance(f, Max):
        return Max(strip_lift(f.a, axis), strip_lift(f.b, axis))
    if isinstance(f, Min):
        return Min(strip_lift(f.a, axis), strip_lift(f.b, axis))
    if isinstance(f, LinComb):
        return LinComb(tuple((c, strip_lift(g, axis)) for c, g in f.terms))
    if isinstance(f, Lift):
        if axis is not None and f.axis != axis:
            raise ValueError(f"function still depends on coordinate {f.axis}")
        return strip_lift(f.f, axis)
    if isinstance(f, Tensor):
        return Tensor(strip_lift(f.f, axis), strip_lift(f.g, axis))
    raise TypeError(f"not a basic function: {f!r}")


def project_axis(f: BasicFunction, axis: int) -> BasicFunction:
    """View f as a function of coordinate ``axis`` alone.

    Lifts onto other coordinates must already be leaf-free (constants).
    """
    if isinstance(f, One):
        return f
    if isinstance(f, (Bump, Hat)):
        raise ValueError("leaf outside any Lift; expand products first")
    if isinstance(f, Max):
        return Max(project_axis(f.a, axis), project_axis(f.b, axis))
    if isinstance(f, Min):
        return Min(project_axis(f.a, axis), project_axis(f.b, axis))
    if isinstance(f, LinComb):
        return LinComb(tuple((c, project_axis(g, axis)) for c, g in f.terms))
    if isinstance(f, Lift):
        if f.axis == axis:
            return f.f
        if any(True for _ in leaves(f.f)):
            raise ValueError(f"function still depends on coordinate {f.axis}")
        return strip_lift(f.f, None)
    if isinstance(f, Tensor):
        return Tensor(project_axis(f.f, axis), project_axis(f.g, axis))
    raise TypeError(f"not a basic function: {f!r}")


def eval_index(f: BasicFunction, space, i: int, k: int = 30) -> QInterval:
    """Enclosure of f at basic point i; exact for exact-distance spaces."""
    if space.exact:
        def leafval(ctx, leaf):
            sub, j = component(space, i, ctx)
            v = profile(leaf, sub.d(leaf.center, j))
            return v, v
    else:
        def leafval(ctx, leaf):
            sub, j = component(space, i, ctx)
            return profile_q(leaf, sub.dist_q(leaf.center, j, k))
    return eval_tree(f, leafval)


def eval_basic_q(f: BasicFunction, x, k: int) -> QInterval:
    """f(x) to width <= 2^-(k+1) for a Cauchy name x."""
    space = x.space
    if x.basic is not None and space.exact:
        return eval_index(f, space, x.basic)
    lip = lipschitz(f)
    m = k + 3 + (ceil_log2_q(lip) if lip > 1 else 0)
    for _ in range(8):
        idx = x(m)
        slack = pow2(-m)

        def leafval(ctx, leaf, idx=idx, m=m, slack=slack):
            sub, j = component(space, idx, ctx)
            a, b = sub.dist_q(leaf.center, j, m)
            return profile_q(leaf, (max(ZERO, a - slack), b + slack))

        lo, hi = eval_tree(f, leafval)
        if hi - lo <= pow2(-(k + 1)):
            return lo, hi
        m += 4
    return lo, hi


def eval_basic(f: BasicFunction, x, k: int) -> DyadicInterval:
    """Interval of width <= 2^-k containing f(x)."""
    lo, hi = eval_basic_q(f, x, k)
    return DyadicInterval.outward(lo, hi, k + 2)


# ---------------------------------------------------------------------------
# Ball approximations.

def ball_lower_approx(center: int, radius, n: int) -> BasicFunction:
    """Basic function below the indicator of the open ball B(center, radius).

    Bump(center, radius - 2*2^-n, radius - 2^-n); zero when radius <= 2*2^-n.
    """
    radius = Fraction(radius)
    e = pow2(-n)
    if radius <= 2 * e:
        return ZERO_FN
    return Bump(center, radius - 2 * e, radius - e)


def ball_upper_approx(center: int, radius, n: int) -> BasicFunction:
    """Basic function above the indicator of the closed ball, decreasing in n."""
    radius = Fraction(radius)
    e = pow2(-n)
    if radius <= 0:
        return Hat(center, e)
    return Bump(center, radius, radius + e)


# ---------------------------------------------------------------------------
# Enumeration.

@lru_cache(maxsize=65536)
def basic_function(i: int) -> BasicFunction:
    """The i-th basic function of the fixed enumeration."""
    if i < 0:
        raise ValueError("index must be >= 0")
    if i == 0:
        return One()
    j = i - 1
    t, q = j % 4, j // 4
    if t == 0:
        c, rest = unpair(q)
        rc, dc = unpair(rest)
        r = decode_pos_dyadic(rc)
        return Bump(c, r, r + decode_pos_dyadic(dc))
    if t in (1, 2):
        a, b = unpair(q)
        node = Max if t == 1 else Min
        return node(basic_function(a), basic_function(b))
    terms = []
    for code in decode_list(q):
        cc, child = unpair(code)
        terms.append((decode_dyadic(cc), basic_function(child)))
    return LinComb(tuple(terms))


@lru_cache(maxsize=65536)
def index_of(f: BasicFunction) -> int:
    """Inverse of ``basic_function``; auxiliary nodes have no index."""
    if isinstance(f, One):
        return 0
    if isinstance(f, Bump):
        q = pair(f.center, pair(encode_pos_dyadic(f.r), encode_pos_dyadic(f.s - f.r)))
        return 4 * q + 1
    if isinstance(f, (Max, Min)):
        q = pair(index_of(f.a), index_of(f.b))
        return 4 * q + (2 if isinstance(f, Max) else 3)
    if isinstance(f, LinComb):
        q = encode_list([pair(encode_dyadic(c), index_of(g)) for c, g in f.terms])
        return 4 * q + 4
    raise ValueError(f"{type(f).__name__} nodes are not part of the enumeration")


def as_function(f: Union[int, BasicFunction]) -> BasicFunction:
    return basic_function(f) if isinstance(f, int) else f


# ---------------------------------------------------------------------------
# S-expression text form.

def to_sexpr(f: BasicFunction) -> str:
    if isinstance(f, One):
        return "(one)"
    if isinstance(f, Bump):
        return f"(bump {f.center} {format_dyadic(f.r)} {format_dyadic(f.s)})"
    if isinstance(f, Hat):
        return f"(hat {f.center} {format_dyadic(f.s)})"
    if isinstance(f, Max):
        return f"(max {to_sexpr(f.a)} {to_sexpr(f.b)})"
    if isinstance(f, Min):
        return f"(min {to_sexpr(f.a)} {to_sexpr(f.b)})"
    if isinstance(f, LinComb):
        inner = "".join(f" ({format_dyadic(c)} {to_sexpr(g)})" for c, g in f.terms)
        return f"(lin{inner})"
    if isinstance(f, Lift):
        return f"(lift {f.axis} {to_sexpr(f.f)})"
    if isinstance(f, Tensor):
        return f"(tensor {to_sexpr(f.f)} {to_sexpr(f.g)})"
    raise TypeError(f"not a basic function: {f!r}")


_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def _tokens(text: str) -> list[str]:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"bad character at {pos} in {text!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse_sexpr(text: str, space=None) -> BasicFunction:
    """Parse the text form.  Centers are integers or ``@point`` literals."""
    toks = _tokens(text)
    pos = 0

    def expect(tok: str) -> None:
        nonlocal pos
        if pos >= len(toks) or toks[pos] != tok:
            got = toks[pos] if pos < len(toks) else "end of input"
            raise ValueError(f"expected {tok!r}, got {got!r}")
        pos += 1

    def atom() -> str:
        nonlocal pos
        if pos >= len(toks) or toks[pos] in "()":
            raise ValueError("expected an atom")
        pos += 1
        return toks[pos - 1]

    def center() -> int:
        tok = atom()
        if tok.startswith("@"):
            if space is None:
                raise ValueError("point literal needs a space")
            return space.parse_point(tok[1:])
        c = int(tok)
        if c < 0:
            raise ValueError("center index must be >= 0")
        return c

    def expr() -> BasicFunction:
        expect("(")
        head = atom()
        if head == "one":
            node = One()
        elif head == "bump":
            c = center()
            node = Bump(c, parse_dyadic(atom()), parse_dyadic(atom()))
        elif head == "hat":
            c = center()
            node = Hat(c, parse_dyadic(atom()))
        elif head in ("max", "min"):
            a, b = expr(), expr()
            node = Max(a, b) if head == "max" else Min(a, b)
        elif head == "lin":
            terms = []
            while pos < len(toks) and toks[pos] == "(":
                expect("(")
                c = parse_dyadic(atom())
                terms.append((c, expr()))
                expect(")")
            node = LinComb(tuple(terms))
        elif head == "lift":
            axis = int(atom())
            node = Lift(axis, expr())
        elif head == "tensor":
            node = Tensor(expr(), expr())
        else:
            raise ValueError(f"unknown node {head!r}")
        expect(")")
        return node

    f = expr()
    if pos != len(toks):
        raise ValueError("trailing input after expression")
    return f


__all__ = [
    "BasicFunction",
    "Bump",
    "Hat",
    "LinComb",
    "Lift",
    "Max",
    "Min",
    "One",
    "Tensor",
    "ZERO_FN",
    "as_function",
    "ball_lower_approx",
    "ball_upper_approx",
    "basic_function",
    "bounds",
    "const",
    "eval_basic",
    "eval_basic_q",
    "eval_index",
    "eval_tree",
    "expand_products",
    "index_of",
    "leaf_gains",
    "leaves",
    "lipschitz",
    "max_of",
    "min_of",
    "parse_sexpr",
    "profile",
    "project_axis",
    "strip_lift",
    "substitute",
    "to_sexpr",
]
