"""Lower semicomputable functions and the calculus of integral tests.

An ``LscFunction`` is a nondecreasing sequence of basic functions; its
value is the pointwise supremum.  An ``IntegralTest`` attaches one such
sequence to every measure together with a computable integral map.
The remaining operations build continuous families with prescribed
integrals from these sequences.
"""
from __future__ import annotations

import csv
import io
import threading
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

from .basis import (
    BasicFunction,
    Hat,
    LinComb,
    Max,
    Min,
    One,
    ZERO_FN,
    const,
    eval_basic_q,
    min_of,
)
from .coding import format_dyadic
from .errors import BudgetExceeded, MonotonicityError, OutOfRange, PreconditionError
from .exact import (
    DyadicInterval,
    QInterval,
    RealStream,
    ceil_log2_q,
    floor_to,
    pow2,
)
from .measures import MeasureOracle
from .spaces import CauchyName, Space, point_distance_q

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Lower semicomputable functions.

class LscFunction:
    """sup_n of nondecreasing basic functions, optionally clamped by n."""

    def __init__(self, stages: Callable[[int], BasicFunction], clamp: bool = True,
                 label: str | None = None) -> None:
        self._stages = stages
        self.clamp = clamp
        self.label = label
        self._cache: dict[int, BasicFunction] = {}
        self._lock = threading.Lock()

    def stage(self, n: int) -> BasicFunction:
        with self._lock:
            hit = self._cache.get(n)
        if hit is None:
            raw = self._stages(n)
            hit = Min(const(n), raw) if self.clamp else raw
            with self._lock:
                self._cache[n] = hit
        return hit

    def stage_value(self, x: CauchyName, n: int, k: int) -> QInterval:
        return eval_basic_q(self.stage(n), x, k)

    def transcript(self, x: CauchyName, depth: int, k: int = 20) -> list[tuple[int, Fraction, Fraction]]:
        """(n, lo, hi) for n < depth, checking monotonicity along the way."""
        rows = []
        prev_lo = None
        for n in range(depth):
            lo, hi = self.stage_value(x, n, k)
            if prev_lo is not None and hi < prev_lo:
                raise MonotonicityError(
                    f"stage {n} of {self.label or 'lsc'} lies below stage {n - 1} at {x.label}")
            prev_lo = lo
            rows.append((n, lo, hi))
        return rows

    def lower(self, x: CauchyName, depth: int, k: int = 20) -> Fraction:
        """Best certified lower bound on the value from stages < depth."""
        best = ZERO
        for _, lo, _ in self.transcript(x, depth, k):
            best = max(best, lo)
        return best


def make_lsc_from_stages(g: Callable[[int], BasicFunction], clamp: bool = True,
                         label: str | None = None) -> LscFunction:
    return LscFunction(g, clamp=clamp, label=label)


def write_transcript(rows: Iterable[tuple], out=None) -> str:
    """CSV with columns stage, lo, hi (exact dyadic or rational strings)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "lo", "hi"])
    for n, lo, hi in rows:
        w.writerow([n, _fmt(lo), _fmt(hi)])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def _fmt(q: Fraction) -> str:
    q = Fraction(q)
    return format_dyadic(q) if q.denominator & (q.denominator - 1) == 0 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# Integral tests.

StageFn = Callable[[MeasureOracle, int], BasicFunction]
IntegralFn = Callable[[MeasureOracle, int], QInterval]


class IntegralTest:
    """A family mu -> t_mu of lsc functions with computable integrals.

    ``stage(mu, n)`` is the n-th approximant; ``integral_fn(mu, k)``
    returns an interval of width <= 2^-k containing the integral.
    """

    def __init__(self, stage: StageFn, integral_fn: IntegralFn, label: str = "test",
                 params: dict | None = None, normalized: bool = False,
                 floor: Callable[[MeasureOracle], BasicFunction] | None = None) -> None:
        self._stage = stage
        self._integral = integral_fn
        self.label = label
        self.params = params or {}
        self.normalized = normalized
        self.floor = floor
        self._lsc: dict = {}
        self._streams: dict = {}
        self._lock = threading.Lock()

    def stage(self, mu: MeasureOracle, n: int) -> BasicFunction:
        return self.lsc(mu).stage(n)

    def lsc(self, mu: MeasureOracle) -> LscFunction:
        with self._lock:
            hit = self._lsc.get(mu)
            if hit is None:
                hit = LscFunction(lambda n: self._stage(mu, n), clamp=False, label=self.label)
                self._lsc[mu] = hit
        return hit

    def integral_q(self, mu: MeasureOracle, k: int) -> QInterval:
        return self.integral_stream(mu).query_q(k)

    def integral(self, mu: MeasureOracle, k: int) -> DyadicInterval:
        return self.integral_stream(mu)(k)

    def integral_stream(self, mu: MeasureOracle) -> RealStream:
        with self._lock:
            hit = self._streams.get(mu)
            if hit is None:
                hit = RealStream(lambda k: self._integral(mu, k), label=f"int {self.label}")
                self._streams[mu] = hit
        return hit

    def descriptor(self) -> dict:
        return {"kind": self.label, "parameters": dict(self.params)}


def eval_deficiency(t: IntegralTest, mu: MeasureOracle, x: CauchyName, depth: int, k: int = 20) -> Fraction:
    """Nondecreasing (in depth) lower bound on t_mu(x)."""
    return t.lsc(mu).lower(x, depth, k)


def _norm_floor(mu: MeasureOracle, max_k: int = 40) -> int:
    """Smallest k at which the norm interval is bounded away from 0."""
    for k in range(max_k + 1):
        lo, hi = mu.norm_q(k)
        if lo > 0:
            return k
        if hi == 0:
            break
    raise PreconditionError("normalization needs a measure with positive norm")


def normalize(t: IntegralTest) -> IntegralTest:
    """s = (t + 1) / (int t dmu + ||mu||), so that int s dmu = 1."""
    totals: dict = {}
    lock = threading.Lock()

    def total(mu: MeasureOracle) -> RealStream:
        with lock:
            hit = totals.get(mu)
            if hit is None:
                _norm_floor(mu)
                it = t.integral_stream(mu)
                hit = RealStream(lambda k: _qadd(it.query_q(k + 1), mu.norm_q(k + 1)), label="int(t+1)")
                totals[mu] = hit
        return hit

    def coef(mu: MeasureOracle, n: int) -> Fraction:
        # 1/hi is nondecreasing in n because queries are nested
        hi = total(mu).query_q(n)[1]
        return floor_to(1 / hi, n + 4)

    def stage(mu, n):
        c = coef(mu, n)
        if c == 0:
            return ZERO_FN
        return LinComb(((c, t.stage(mu, n)), (c, One())))

    def integral(mu, k):
        T = total(mu)
        p = k + 2 + _norm_floor(mu)
        while True:
            lo, hi = T.query_q(p)
            if lo > 0 and hi / lo - lo / hi <= pow2(-(k + 1)):
                # int s = (int t + ||mu||) * (int t + ||mu||)^-1
                return lo / hi, hi / lo
            p += 2

    def floor(mu):
        return const(coef(mu, 2))

    return IntegralTest(stage, integral, label=f"normalized({t.label})",
                        params={"base": t.descriptor()}, normalized=True, floor=floor)


def _qadd(a: QInterval, b: QInterval) -> QInterval:
    return a[0] + b[0], a[1] + b[1]


# ---------------------------------------------------------------------------
# Continuous families.

def phi_interp(r: Fraction) -> Fraction:
    """Piecewise-linear interpolant of n -> 1 - 2^-n at the integers."""
    n = r.numerator // r.denominator
    frac = r - n
    a, b = 1 - pow2(-n), 1 - pow2(-(n + 1))
    return a + frac * (b - a)


class CalibratedFamily:
    """r -> f(r) basic functions, nondecreasing in r, with integral map r -> int f(r) dmu."""

    def __init__(self, f: Callable[[Fraction], BasicFunction], mu: MeasureOracle,
                 r_sup: Fraction | None = None, label: str = "family") -> None:
        self._f = f
        self.mu = mu
        self.r_sup = r_sup
        self.label = label
        self._cache: dict = {}
        self._lock = threading.Lock()

    def at(self, r) -> BasicFunction:
        r = Fraction(r)
        if r < 0:
            raise ValueError("family index must be >= 0")
        if self.r_sup is not None and r >= self.r_sup:
            raise OutOfRange(f"r = {r} is outside [0, {self.r_sup})")
        with self._lock:
            hit = self._cache.get(r)
        if hit is None:
            hit = self._f(r)
            with self._lock:
                self._cache[r] = hit
        return hit

    def integral_q(self, r, k: int) -> QInterval:
        return self.mu.integrate_q(self.at(r), k)

    def integral(self, r, k: int) -> DyadicInterval:
        return self.mu.integrate(self.at(r), k)

    def value(self, r, x: CauchyName, k: int) -> DyadicInterval:
        lo, hi = eval_basic_q(self.at(r), x, k)
        return DyadicInterval.outward(lo, hi, k + 2)


def approx_family(t: LscFunction, mu: MeasureOracle, floor: BasicFunction | None = None) -> CalibratedFamily:
    """Interpolated family f(r) = h(n) + (r - n)(h(n+1) - h(n)), n = floor(r).

    h(n) = min(n, stage n).  With a positive ``floor`` g <= t the family
    approximates t - g and adds phi(r) g, where phi interpolates
    1 - 2^-n linearly between integers, so it is strictly increasing.
    """
    if floor is None:
        h = LscFunction(t.stage, clamp=True)
    else:
        h = LscFunction(lambda n: Max(ZERO_FN, LinComb(((ONE, t.stage(n)), (-ONE, floor)))), clamp=True)

    def f(r: Fraction) -> BasicFunction:
        n = r.numerator // r.denominator
        frac = r - n
        if frac == 0:
            base = h.stage(n)
        else:
            base = LinComb(((1 - frac, h.stage(n)), (frac, h.stage(n + 1))))
        if floor is None:
            return base
        return LinComb(((ONE, base), (phi_interp(r), floor)))

    return CalibratedFamily(f, mu, label=f"approx({t.label})")


TargetLike = Union[Fraction, int, RealStream]


def integral_inverse(I: Callable[[Fraction, int], QInterval], target: TargetLike, k: int,
                     sup: Fraction | None = None, max_iter: int = 400, start: Fraction = ONE) -> Fraction:
    """Dyadic r with |I(r) - target| <= 2^-k for nondecreasing I with I(0) = 0.

    ``I(r, p)`` returns an interval of width <= 2^-p.  Doubling finds an
    upper bracket, then bisection at dyadic midpoints.
    """
    tol = pow2(-k)
    p = k + 3
    if isinstance(target, RealStream):
        t_lo, t_hi = target.query_q(p)
    else:
        t_lo = t_hi = Fraction(target)
    if t_hi < 0:
        raise OutOfRange("target below I(0) = 0")
    if sup is not None and t_lo >= sup:
        raise OutOfRange(f"target {t_lo} is not below the supremum {sup}")
    if t_hi <= tol and t_lo >= -tol:
        return ZERO

    def good(iv: QInterval) -> bool:
        return iv[1] - t_lo <= tol and t_hi - iv[0] <= tol

    def above(iv: QInterval) -> bool:
        return (iv[0] + iv[1]) > (t_lo + t_hi)

    a, b = ZERO, Fraction(start)
    steps = 0
    while True:
        iv = I(b, p)
        if good(iv):
            return b
        if above(iv):
            break
        a, b = b, 2 * b
        steps += 1
        if steps > 64:
            raise OutOfRange("target not reached while doubling; it may exceed the supremum")
    for _ in range(max_iter):
        m = (a + b) / 2
        iv = I(m, p)
        if good(iv):
            return m
        if above(iv):
            b = m
        else:
            a = m
    raise BudgetExceeded(f"bisection did not certify within {max_iter} steps", partial=(a, b))


def calibrate(fam: CalibratedFamily, mu: MeasureOracle | None = None, sup: Fraction | None = None,
              prec: int = 24) -> CalibratedFamily:
    """g(r) = f(I^-1(r)) so that int g(r) dmu = r (to within 2^-prec)."""
    mu = mu or fam.mu
    if mu is not fam.mu:
        raise ValueError("calibrate against the family's own measure")

    def g(r: Fraction) -> BasicFunction:
        if r == 0:
            return fam.at(ZERO)
        rho = integral_inverse(fam.integral_q, r, prec, sup=sup)
        return fam.at(rho)

    return CalibratedFamily(g, mu, r_sup=sup, label=f"calibrated({fam.label})")


def residual_calibrate(t: IntegralTest, mu: MeasureOracle, extra: int = 16) -> CalibratedFamily:
    """Family f(r), f(r) -> t, with int (t - f(r)) dmu = 2^-r (to within 2^-(r + extra)).

    Requires t >= 1; the necessary condition int t dmu >= ||mu|| is checked.
    """
    T = t.integral_stream(mu)
    t_lo = T.query_q(20)
    n_hi = mu.norm_q(20)
    if t_lo[1] < n_hi[0]:
        raise PreconditionError("residual calibration needs t >= 1, but int t dmu < ||mu||")
    base = approx_family(t.lsc(mu), mu, floor=One())

    def f(r: Fraction) -> BasicFunction:
        k = _ceil_int(r) + extra
        target = RealStream(lambda p: _qsub_const(T.query_q(p + 1), _two_pow_neg(r, p + 1)))
        rho = integral_inverse(base.integral_q, target, k)
        return base.at(rho)

    return CalibratedFamily(f, mu, label=f"residual({t.label})")


def _ceil_int(r: Fraction) -> int:
    return -((-r.numerator) // r.denominator)


def _qsub_const(a: QInterval, c: QInterval) -> QInterval:
    return a[0] - c[1], a[1] - c[0]


def _two_pow_neg(r: Fraction, p: int) -> QInterval:
    """Enclosure of 2^-r of width <= 2^-p, by exact bisection on y^b = 2^-a."""
    r = Fraction(r)
    n = r.numerator // r.denominator
    frac = r - n
    scale = pow2(-n)
    if frac == 0:
        return scale, scale
    a, b = frac.numerator, frac.denominator
    target = pow2(-a)
    lo, hi = Fraction(1, 2), ONE
    while (hi - lo) * scale > pow2(-p):
        mid = (lo + hi) / 2
        if mid ** b <= target:
            lo = mid
        else:
            hi = mid
    return lo * scale, hi * scale


class LuzinCap:
    """Two-sided evaluator of the cap h^m built from a residual family f.

    g^{m,r} = inf{f(2s) + 2^-s : m <= s <= r} and
    h^m = sup{f(2r) : r >= m, f(2r) <= g^{m,r}} = inf{g^{m,r} : f(2r) <= g^{m,r}}.
    The continuum in s is replaced by a grid of step ``delta``; on a grid
    cell [s_j, s_j+1] monotonicity gives f(2s) + 2^-s >= f(2 s_j) + 2^-s_{j+1}.
    """

    def __init__(self, fam: CalibratedFamily, m: int, delta: Fraction = Fraction(1, 4)) -> None:
        self.fam, self.m, self.delta = fam, int(m), Fraction(delta)

    def eval_q(self, x: CauchyName, k: int, horizon: int | None = None) -> QInterval:
        R = self.m + (horizon if horizon is not None else k + 2)
        steps = int((R - self.m) / self.delta)
        grid = [self.m + j * self.delta for j in range(steps + 1)]
        phi = [eval_basic_q(self.fam.at(2 * s), x, k + 4) for s in grid]
        lower = ZERO
        upper: Fraction | None = None
        psi_lo: Fraction | None = None
        psi_hi: Fraction | None = None
        for j, s in enumerate(grid):
            # psi(s) = inf over [m, s] of f(2u) + 2^-u
            here_hi = phi[j][1] + pow2_q(s)
            psi_hi = here_hi if psi_hi is None else min(psi_hi, here_hi)
            if j == 0:
                psi_lo = phi[0][0] + pow2_q(s)
            else:
                cell = phi[j - 1][0] + pow2_q(s)
                psi_lo = min(psi_lo, cell, phi[j][0] + pow2_q(s))
            if phi[j][1] <= psi_lo:
                lower = max(lower, phi[j][0])
                upper = psi_hi if upper is None else min(upper, psi_hi)
            elif phi[j][0] > psi_hi:
                upper = phi[j][1] if upper is None else min(upper, phi[j][1])
                break
        if upper is None:
            upper = psi_hi
        return lower, max(lower, upper)

    def eval(self, x: CauchyName, k: int, horizon: int | None = None) -> DyadicInterval:
        lo, hi = self.eval_q(x, k, horizon)
        return DyadicInterval.outward(lo, hi, k + 8)


def pow2_q(s: Fraction) -> Fraction:
    """A lower bound on 2^-s accurate to 2^-40 (exact for integer s)."""
    s = Fraction(s)
    if s.denominator == 1:
        return pow2(-int(s))
    return _two_pow_neg(s, 40)[0]


def luzin_cap(t: IntegralTest, mu: MeasureOracle, m: int, delta: Fraction = Fraction(1, 4)) -> LuzinCap:
    return LuzinCap(residual_calibrate(t, mu), m, delta)


class CutoffFunction(LscFunction):
    """sup{f(r) : int f(r) dnu <= budget} for a calibrated family."""

    def __init__(self, fam: CalibratedFamily, budget: RealStream) -> None:
        self.fam = fam
        self.budget = budget
        self._rs: list[Fraction] = []
        super().__init__(self._stage_fn, clamp=False, label=f"cutoff({fam.label})")

    def r_at(self, n: int) -> Fraction:
        while len(self._rs) <= n:
            j = len(self._rs)
            lo, _ = self.budget.query_q(j + 2)
            r = max(ZERO, floor_to(lo - pow2(-(j + 2)), j + 4))
            if self.fam.r_sup is not None:
                r = min(r, self.fam.r_sup - pow2(-j))
            r = max(r, ZERO)
            if self._rs:
                r = max(r, self._rs[-1])
            self._rs.append(r)
        return self._rs[n]

    def _stage_fn(self, n: int) -> BasicFunction:
        return self.fam.at(self.r_at(n))

    def integral_q(self, k: int) -> QInterval:
        lo, hi = self.budget.query_q(k + 1)
        if self.fam.r_sup is not None:
            lo, hi = min(lo, self.fam.r_sup), min(hi, self.fam.r_sup)
        return max(lo, ZERO), max(hi, ZERO)


def cutoff(fam: CalibratedFamily, budget: Union[RealStream, Fraction, int]) -> CutoffFunction:
    if not isinstance(budget, RealStream):
        budget = RealStream.constant(Fraction(budget))
    return CutoffFunction(fam, budget)


# ---------------------------------------------------------------------------
# Lipschitz extension from located sets.

def _pow2_at_least(L: Fraction) -> Fraction:
    if L <= 0:
        return ZERO
    return pow2(ceil_log2_q(L))


def mcshane_extend(space: Space, data: Sequence[tuple[int, Fraction]], L) -> BasicFunction:
    """Extension of f (given at finitely many basic points) as a basic function.

    Returns clamp(min_j (c_j + L d(x, y_j)), [min c, max c]).  L is
    rounded up to a power of two so that every tent width is dyadic.
    """
    data = [(int(i), Fraction(c)) for i, c in data]
    if not data:
        raise PreconditionError("cannot extend from an empty set")
    L = _pow2_at_least(Fraction(L))
    lo = min(c for _, c in data)
    hi = max(c for _, c in data)
    if lo == hi:
        return const(lo)
    if L == 0:
        raise PreconditionError("nonconstant data cannot be 0-Lipschitz")
    terms = []
    for y, c in data:
        if c >= hi:
            terms.append(const(hi))
        else:
            w = (hi - c) / L
            terms.append(LinComb(((hi, One()), (c - hi, Hat(y, w)))))
    inner = min_of(terms)
    return Max(const(lo), inner) if lo != 0 else Max(ZERO_FN, inner)


class McShaneExtension:
    """Extension of an L-Lipschitz f from a located set K.

    ``dense(j)`` is (name of y_j, f(y_j)) and ``net(eps)`` returns N such
    that y_0, ..., y_{N-1} is an eps-net of K.
    """

    def __init__(self, space: Space, dense: Callable[[int], tuple[CauchyName, Fraction]],
                 net: Callable[[Fraction], int], L, inf_f, sup_f) -> None:
        self.space = space
        self.dense = dense
        self.net = net
        self.L = Fraction(L)
        self.inf_f, self.sup_f = Fraction(inf_f), Fraction(sup_f)

    def eval_q(self, x: CauchyName, k: int) -> QInterval:
        # net error 2 L eps, distance error L * 2^-(k+3)
        eps = pow2(-(k + 3)) / (2 * self.L) if self.L else ONE
        n = self.net(eps)
        if n <= 0:
            raise PreconditionError("the located set is empty")
        p = k + 3 + (ceil_log2_q(self.L) if self.L > 1 else 0)
        best_lo = best_hi = None
        for j in range(n):
            y, c = self.dense(j)
            a, b = point_distance_q(self.space, x, y, p)
            lo, hi = Fraction(c) + self.L * a, Fraction(c) + self.L * b
            best_lo = lo if best_lo is None else min(best_lo, lo)
            best_hi = hi if best_hi is None else min(best_hi, hi)
        slack = 2 * self.L * eps
        lo, hi = best_lo - slack, best_hi
        clamp = lambda v: min(max(v, self.inf_f), self.sup_f)  # noqa: E731
        return clamp(lo), clamp(hi)

    def eval(self, x: CauchyName, k: int) -> DyadicInterval:
        lo, hi = self.eval_q(x, k)
        return DyadicInterval.outward(lo, hi, k + 2)


__all__ = [
    "CalibratedFamily",
    "CutoffFunction",
    "IntegralTest",
    "LscFunction",
    "LuzinCap",
    "McShaneExtension",
    "approx_family",
    "calibrate",
    "cutoff",
    "eval_deficiency",
    "integral_inverse",
    "luzin_cap",
    "make_lsc_from_stages",
    "mcshane_extend",
    "normalize",
    "phi_interp",
    "residual_calibrate",
    "write_transcript",
]
