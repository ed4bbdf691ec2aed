"""Independent brute-force oracles used to freeze expected values.

Nothing here calls the package's evaluators or integrators; only the
tree node classes and the basic-point coding are shared.
"""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import product as iproduct

from unimeas.basis import Bump, Hat, LinComb, Max, Min, One
from unimeas.spaces import unit_value


def _leaf(f, d):
    if isinstance(f, Bump):
        if d <= f.r:
            return 1.0 if isinstance(d, float) else Fraction(1)
        if d >= f.s:
            return 0 * d
        return (f.s - d) / (f.s - f.r)
    return max(0 * d, 1 - d / f.s)


def eval_tree(f, dist):
    """Evaluate f with dist(center) giving the distance to the query point."""
    if isinstance(f, One):
        return 1
    if isinstance(f, (Bump, Hat)):
        return _leaf(f, dist(f.center))
    if isinstance(f, Max):
        return max(eval_tree(f.a, dist), eval_tree(f.b, dist))
    if isinstance(f, Min):
        return min(eval_tree(f.a, dist), eval_tree(f.b, dist))
    if isinstance(f, LinComb):
        return sum(c * eval_tree(g, dist) for c, g in f.terms)
    raise TypeError(type(f).__name__)


# ---------------------------------------------------------------------------
# [0, 1]

def unit_eval(f, x: float) -> float:
    return float(eval_tree(f, lambda c: abs(float(unit_value(c)) - x)))


def quad_unit(f, tol: float = 2.0 ** -20, min_width: float = 2.0 ** -10) -> float:
    return quad(lambda x: unit_eval(f, x), tol, min_width)


def quad(g, tol: float = 2.0 ** -20, min_width: float = 2.0 ** -10) -> float:
    """Adaptive Simpson for a float function on [0, 1] down to ``tol``.

    Intervals wider than ``min_width`` are always split, so narrow
    features cannot hide between the sample points.
    """

    def simpson(a, fa, b, fb):
        m = (a + b) / 2
        fm = g(m)
        return m, fm, (b - a) / 6 * (fa + 4 * fm + fb)

    def rec(a, fa, b, fb, m, fm, whole, eps):
        lm, flm, left = simpson(a, fa, m, fm)
        rm, frm, right = simpson(m, fm, b, fb)
        if b - a <= min_width and abs(left + right - whole) <= 15 * eps:
            return left + right + (left + right - whole) / 15
        if b - a < 2.0 ** -40:
            return left + right
        return rec(a, fa, m, fm, lm, flm, left, eps / 2) + rec(m, fm, b, fb, rm, frm, right, eps / 2)

    fa, fb = g(0.0), g(1.0)
    m, fm, whole = simpson(0.0, fa, 1.0, fb)
    return rec(0.0, fa, 1.0, fb, m, fm, whole, tol)


# ---------------------------------------------------------------------------
# Cantor space

def cantor_bits(i: int, n: int) -> tuple:
    return tuple((i >> j) & 1 for j in range(n))


def _cantor_dist(center: int, x: tuple) -> Fraction:
    # distance from a basic point to any sequence extending the prefix x;
    # when they agree on all of x we return 0 (callers pick |x| past every radius)
    for j, b in enumerate(x):
        if ((center >> j) & 1) != b:
            return Fraction(1, 1 << j)
    return Fraction(0)


def cantor_eval_prefix(f, x: tuple) -> Fraction:
    return Fraction(eval_tree(f, lambda c: _cantor_dist(c, x)))


def min_radius(f) -> Fraction:
    if isinstance(f, Bump):
        return f.r
    if isinstance(f, (Max, Min)):
        return min(min_radius(f.a), min_radius(f.b))
    if isinstance(f, LinComb):
        return min((min_radius(g) for _, g in f.terms), default=Fraction(1))
    return Fraction(1)


def cantor_sum(f, mass, depth: int | None = None, transform=None) -> Fraction:
    """Exact integral by summing over all prefixes of length ``depth``.

    Bumps only: with 2^-depth <= every plateau radius, f is constant on
    each depth-cylinder.  ``transform`` maps a prefix to the prefix of
    the image point, giving the integral of f(T x).
    """
    if depth is None:
        r = min_radius(f)
        depth = 0
        while Fraction(1, 1 << depth) > r:
            depth += 1
    total = Fraction(0)
    for x in iproduct((0, 1), repeat=depth):
        w = mass(x)
        if w:
            total += w * cantor_eval_prefix(f, transform(x) if transform else x)
    return total


def bernoulli_mass(p: Fraction):
    p = Fraction(p)
    return lambda x: math.prod((p if b else 1 - p) for b in x) if x else Fraction(1)


def metric_series(f_i, a, b, terms: int = 20) -> float:
    """sum_{i < terms} 2^-(i+1) (1 - exp(-|a_i - b_i|)) with floats."""
    total = 0.0
    for i in range(terms):
        total += 2.0 ** -(i + 1) * (1 - math.exp(-abs(float(a(f_i(i))) - float(b(f_i(i))))))
    return total
