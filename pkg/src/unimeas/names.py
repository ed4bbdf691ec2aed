"""Null-boundary balls, Boolean combinations of them, and the measure xi on names."""
from __future__ import annotations

import random
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence, Union

from .basis import Bump, Hat, LinComb, Min, One
from .coding import decode_pos_dyadic, pair, unpair
from .errors import BudgetExceeded, PreconditionError
from .exact import DyadicInterval, QInterval, RealStream, ceil_log2, ceil_log2_q, dyadic_json, pow2
from .measures import (
    ClosedBall,
    ClosedIntersection,
    ClosedSet,
    ClosedUnion,
    Complement,
    MeasureOracle,
    OpenBall,
    OpenIntersection,
    OpenSet,
    OpenUnion,
    measure_closed_upper,
    measure_open_lower,
)
from .spaces import CauchyName, Space, basic_to_point_q

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Null-boundary radii.

@dataclass(frozen=True)
class AnnulusStage:
    a: Fraction
    b: Fraction
    eps: Fraction
    bound: Fraction

    def to_json(self) -> dict:
        return {
            "interval": DyadicInterval(self.a, self.b).to_json(),
            "eps": dyadic_json(self.eps),
            "mass_upper": DyadicInterval.outward(self.bound, self.bound, 40).to_json()["hi"],
        }


def annulus_upper_function(center: int, a: Fraction, b: Fraction, eta: Fraction):
    """Basic function above the indicator of {a <= d(center, x) <= b}."""
    outer = Bump(center, b, b + eta)
    if a <= 0:
        return outer
    if a - eta > 0:
        inner = LinComb(((ONE, One()), (-ONE, Bump(center, a - eta, a))))
    else:
        inner = LinComb(((ONE, One()), (-ONE, Hat(center, a))))
    return Min(outer, inner)


class NullRadiusCertificate:
    """Nested windows [a_s, b_s] around a radius r whose sphere is mu-null.

    Stage s subdivides [a_s, b_s] into M pieces and keeps the leftmost
    even-position piece whose annulus has mass bound <= eps_s = eps 2^-s.
    """

    def __init__(self, mu: MeasureOracle, center: int, q1, q2, eps, budget: int = 1 << 14) -> None:
        q1, q2, eps = Fraction(q1), Fraction(q2), Fraction(eps)
        if not q1 < q2:
            raise PreconditionError("the radius window needs q1 < q2")
        if eps <= 0:
            raise PreconditionError("eps must be positive")
        self.mu, self.center, self.q1, self.q2, self.eps = mu, int(center), q1, q2, eps
        self.budget = budget
        self._stages: list[AnnulusStage] = []
        self._lock = threading.Lock()
        self.r = RealStream(self._r_raw, label=f"r({center})")

    def _norm_hi(self) -> Fraction:
        return self.mu.norm_q(4)[1]

    def _next(self, a: Fraction, b: Fraction, s: int) -> AnnulusStage:
        eps_s = self.eps * pow2(-s)
        m = max(3, int(self._norm_hi() / eps_s) + 2)
        M = 1 << ceil_log2(2 * m)
        w = (b - a) / M
        p = ceil_log2(M) + ceil_log2_q(1 / eps_s) + 3
        spent = 0
        for j in range(0, M, 2):
            lo, hi = a + j * w, a + (j + 1) * w
            f = annulus_upper_function(self.center, lo, hi, w / 2)
            bound = self.mu.integrate_q(f, p)[1]
            spent += 1
            if bound <= eps_s:
                return AnnulusStage(lo, hi, eps_s, bound)
            if spent > self.budget:
                break
        raise BudgetExceeded(f"no light annulus at stage {s}", partial=self._stages[:])

    def stage(self, s: int) -> AnnulusStage:
        with self._lock:
            while len(self._stages) <= s:
                if self._stages:
                    prev = self._stages[-1]
                    a, b = prev.a, prev.b
                else:
                    a, b = self.q1, self.q2
                self._stages.append(self._next(a, b, len(self._stages)))
            return self._stages[s]

    def stages(self, n: int) -> list[AnnulusStage]:
        return [self.stage(s) for s in range(n)]

    def _r_raw(self, k: int) -> QInterval:
        s = 0
        while True:
            st = self.stage(s)
            if st.b - st.a <= pow2(-k):
                return st.a, st.b
            s += 1

    def excludes(self, value, s: int) -> bool:
        st = self.stage(s)
        return not (st.a <= Fraction(value) <= st.b)

    def to_json(self, n: int) -> dict:
        return {
            "center": self.center,
            "window": DyadicInterval(self.q1, self.q2).to_json(),
            "stages": [st.to_json() for st in self.stages(n)],
        }


def find_null_radius(mu: MeasureOracle, center: int, q1, q2, eps=Fraction(1, 4),
                     budget: int = 1 << 14) -> NullRadiusCertificate:
    return NullRadiusCertificate(mu, center, q1, q2, eps, budget)


# ---------------------------------------------------------------------------
# Balls with null boundaries and Boolean combinations.

@dataclass(frozen=True)
class AeBall:
    center: int
    cert: NullRadiusCertificate

    def inner(self, s: int) -> OpenBall:
        return OpenBall(self.cert.mu.space, self.center, self.cert.stage(s).a)

    def outer(self, s: int) -> ClosedBall:
        return ClosedBall(self.cert.mu.space, self.center, self.cert.stage(s).b)


def triple(i: int) -> tuple[int, Fraction, Fraction]:
    """i -> (center, q1, q2) with 0 < q1 < q2 dyadic."""
    c, rest = unpair(i)
    a, b = unpair(rest)
    q1 = decode_pos_dyadic(a)
    return c, q1, q1 + decode_pos_dyadic(b)


def triple_index(center: int, q1, q2) -> int:
    from .coding import encode_pos_dyadic

    q1, q2 = Fraction(q1), Fraction(q2)
    return pair(center, pair(encode_pos_dyadic(q1), encode_pos_dyadic(q2 - q1)))


def ae_ball_enumeration(mu: MeasureOracle, eps=Fraction(1, 4)) -> Iterator[AeBall]:
    """Null-boundary balls, one for every triple (center, q1, q2) in order."""
    i = 0
    while True:
        c, q1, q2 = triple(i)
        if mu.space.size is None or c < mu.space.size:
            yield AeBall(c, find_null_radius(mu, c, q1, q2, eps))
        i += 1


Combo = Union[AeBall, tuple]


def _sets(combo: Combo, s: int) -> tuple[OpenSet, ClosedSet]:
    """(open lower, closed upper) sandwich of a Boolean combination at stage s."""
    if isinstance(combo, AeBall):
        return combo.inner(s), combo.outer(s)
    if not isinstance(combo, tuple) or not combo:
        raise PreconditionError(f"not a Boolean combination of certified balls: {combo!r}")
    op, args = combo[0], combo[1:]
    if op == "not":
        (e,) = args
        o, c = _sets(e, s)
        return c.complement(), Complement(o)
    parts = [_sets(e, s) for e in args]
    if op == "and":
        return OpenIntersection([o for o, _ in parts]), ClosedIntersection([c for _, c in parts])
    if op == "or":
        return OpenUnion([o for o, _ in parts]), ClosedUnion([c for _, c in parts])
    raise PreconditionError(f"unknown Boolean operator {op!r}")


def boolean_combo_measure_q(mu: MeasureOracle, combo: Combo, k: int, max_stage: int = 60) -> QInterval:
    _check_leaves(mu, combo)
    for s in range(max_stage):
        o, c = _sets(combo, s)
        p = s + 2
        lo = measure_open_lower(mu, o, p)
        hi = measure_closed_upper(mu, c, p)
        if hi - lo <= pow2(-(k + 1)):
            return lo, hi
    raise BudgetExceeded(f"Boolean combination did not reach width 2^-{k}", partial=(lo, hi))


def boolean_combo_measure(mu: MeasureOracle, combo: Combo, k: int, max_stage: int = 60) -> DyadicInterval:
    lo, hi = boolean_combo_measure_q(mu, combo, k, max_stage)
    return DyadicInterval.outward(lo, hi, k + 2)


def _check_leaves(mu: MeasureOracle, combo: Combo) -> None:
    if isinstance(combo, AeBall):
        if combo.cert.mu is not mu:
            raise PreconditionError("ball certificate was issued for a different measure")
        return
    if not isinstance(combo, tuple) or not combo:
        raise PreconditionError(f"not a Boolean combination of certified balls: {combo!r}")
    for e in combo[1:]:
        _check_leaves(mu, e)


# ---------------------------------------------------------------------------
# The measure xi on Cauchy names.

class XiMeasure:
    """Probability measure on index sequences concentrated on names of z.

    Coordinate i is independent with weight of n proportional to
    2^-n max(0, 2^-(i+1) - d(b_n, z)); xi[sigma] is the product of the
    normalized weights of sigma(i) over i = 0, ..., |sigma| - 1.
    """

    def __init__(self, space: Space, z: CauchyName) -> None:
        self.space, self.z = space, z
        self._lock = threading.Lock()
        self._denoms: dict = {}

    def _candidates(self, i: int) -> Iterator[int]:
        if self.space.size is not None:
            return iter(range(self.space.size))
        gen = self.space.candidates(self.z, pow2(-(i + 1)))
        if gen is None:
            return _count()
        return gen

    def weight_q(self, i: int, n: int, m: int) -> QInterval:
        R = pow2(-(i + 1))
        dlo, dhi = basic_to_point_q(self.space, n, self.z, m)
        c = pow2(-n)
        return c * max(ZERO, R - dhi), c * max(ZERO, R - dlo)

    def denominator_q(self, i: int, p: int) -> QInterval:
        """Sum of coordinate-i weights, width <= 2^-p."""
        key = (i, p)
        with self._lock:
            hit = self._denoms.get(key)
        if hit is not None:
            return hit
        R = pow2(-(i + 1))
        m = p + 4
        lo = hi = ZERO
        tail = R * 2
        for n in self._candidates(i):
            a, b = self.weight_q(i, n, m)
            lo, hi = lo + a, hi + b
            tail = pow2(-n) * R
            if tail <= pow2(-(p + 2)):
                break
        else:
            tail = ZERO
        out = (lo, hi + tail)
        with self._lock:
            self._denoms[key] = out
        return out

    def cylinder_q(self, sigma: Sequence[int], k: int) -> QInterval:
        if not sigma:
            return ONE, ONE
        p = k + 4 + ceil_log2(len(sigma) + 1)
        while True:
            lo, hi = ONE, ONE
            for i, n in enumerate(sigma):
                num = self.weight_q(i, int(n), p + 4 + i)
                den = self.denominator_q(i, p + 2 * i + 4)
                if num[1] == 0:
                    return ZERO, ZERO
                if den[0] <= 0:
                    lo, hi = ZERO, ONE
                    break
                lo *= num[0] / den[1]
                hi *= min(ONE, num[1] / den[0])
            if hi - lo <= pow2(-k):
                return lo, hi
            p += 4
            if p > k + 200:
                raise BudgetExceeded("xi cylinder did not converge", partial=(lo, hi))

    def cylinder(self, sigma: Sequence[int], k: int) -> DyadicInterval:
        lo, hi = self.cylinder_q(sigma, k)
        return DyadicInterval.outward(lo, hi, k + 2)

    def coordinate_mass_q(self, i: int, N: int, k: int) -> QInterval:
        """Sum over n <= N of xi[<..., n>] at coordinate i alone."""
        lo = hi = ZERO
        den = self.denominator_q(i, k + 4)
        for n in range(N + 1):
            a, b = self.weight_q(i, n, k + 8)
            if b == 0:
                continue
            lo += a / den[1]
            hi += b / den[0]
        return lo, hi

    def sample_coordinate(self, i: int, u: Fraction) -> int:
        """Inverse-CDF draw with lower-bound weights; u in [0, 1)."""
        R = pow2(-(i + 1))
        m = 60
        den_lo = self.denominator_q(i, 40)[0]
        target = u * den_lo
        acc = ZERO
        last = None
        for n in self._candidates(i):
            a, _ = self.weight_q(i, n, m)
            if a > 0:
                acc += a
                last = n
                if acc > target:
                    return n
            if last is not None and pow2(-n) * R <= pow2(-m):
                return last
        if last is None:
            raise PreconditionError("no basic point close enough to the target")
        return last

    def sample_name(self, seed: int, label: str | None = None) -> CauchyName:
        rng = random.Random(seed)
        coords: list[int] = []
        lock = threading.Lock()

        def h(i: int) -> int:
            with lock:
                while len(coords) <= i:
                    u = Fraction(rng.getrandbits(64), 1 << 64)
                    coords.append(self.sample_coordinate(len(coords), u))
                return coords[i]

        return CauchyName(self.space, h, label=label or f"xi-sample({seed})")


def _count() -> Iterator[int]:
    n = 0
    while True:
        yield n
        n += 1


def xi_measure(space: Space, z: CauchyName) -> XiMeasure:
    return XiMeasure(space, z)


def xi_cylinder(xi: XiMeasure, sigma: Sequence[int], k: int) -> DyadicInterval:
    return xi.cylinder(sigma, k)


def sample_name(xi: XiMeasure, seed: int) -> CauchyName:
    return xi.sample_name(seed)


__all__ = [
    "AeBall",
    "AnnulusStage",
    "NullRadiusCertificate",
    "XiMeasure",
    "ae_ball_enumeration",
    "annulus_upper_function",
    "boolean_combo_measure",
    "boolean_combo_measure_q",
    "find_null_radius",
    "sample_name",
    "triple",
    "triple_index",
    "xi_cylinder",
    "xi_measure",
]
