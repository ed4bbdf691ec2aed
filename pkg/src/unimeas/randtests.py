"""Randomness tests: sequential, integral, Kurtz and martingale frontends.

Built-in integral tests live here too, together with the conversions
between the test notions.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .basis import (
    BasicFunction,
    Bump,
    Hat,
    LinComb,
    Max,
    Min,
    One,
    ZERO_FN,
    ball_lower_approx,
    const,
    eval_basic_q,
    max_of,
)
from .errors import BudgetExceeded, PreconditionError
from .exact import (
    DyadicInterval,
    QInterval,
    RealStream,
    ceil_log2,
    ceil_log2_q,
    floor_to,
    pow2,
    qsqrt,
    sum_with_tail_bound,
)
from .measures import (
    BallExterior,
    ClosedBall,
    CylinderMeasure,
    MeasureOracle,
    OpenBall,
    OpenIntersection,
    OpenSet,
    OpenSetEnum,
    OpenUnion,
    measure_open_lower,
    norm_upper,
)
from .names import find_null_radius
from .semicomp import IntegralTest, LscFunction, eval_deficiency
from .spaces import CANTOR, CauchyName, Space, bits_of

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Sequential tests.

LevelFn = Callable[[MeasureOracle, int], OpenSet]
LevelMeasureFn = Callable[[MeasureOracle, int, int], QInterval]


class SequentialTest:
    """Levels U_n (open sets) with mu(U_n) <= 2^-n and computable mu(U_n)."""

    def __init__(self, level: LevelFn, level_measure: LevelMeasureFn, label: str = "sequential",
                 empty: bool = False) -> None:
        self._level = level
        self._level_measure = level_measure
        self.label = label
        self.empty = empty

    def level(self, mu: MeasureOracle, n: int) -> OpenSet:
        return self._level(mu, n)

    def level_measure_q(self, mu: MeasureOracle, n: int, k: int) -> QInterval:
        return self._level_measure(mu, n, k)

    def level_measure(self, mu: MeasureOracle, n: int, k: int) -> DyadicInterval:
        lo, hi = self.level_measure_q(mu, n, k)
        return DyadicInterval.outward(lo, hi, k + 2)


class EmptySet(OpenSet):
    def lower_function(self, n: int) -> BasicFunction:
        return ZERO_FN


def empty_sequential_test(space: Space) -> SequentialTest:
    return SequentialTest(lambda mu, n: EmptySet(space), lambda mu, n, k: (ZERO, ZERO),
                          label="empty", empty=True)


def sandwich_q(mu: MeasureOracle, inner: OpenSet, outer, k: int, max_stage: int = 80) -> QInterval:
    """mu of a set with null boundary from an open inner and closed outer version."""
    from .measures import measure_closed_upper

    for s in range(2, max_stage):
        lo = measure_open_lower(mu, inner, s)
        hi = measure_closed_upper(mu, outer, s)
        if hi - lo <= pow2(-k):
            return lo, hi
    raise BudgetExceeded(f"sandwich did not reach width 2^-{k}", partial=(lo, hi))


def _bits_index(bits: Sequence[int]) -> int:
    return sum(int(b) << j for j, b in enumerate(bits))


def cylinder_sequential_test(prefix: Callable[[int], Sequence[int]], label: str = "cylinders") -> SequentialTest:
    """U_n = [prefix(n)] on Cantor space, where prefix(n) has length n."""

    def ball(n: int) -> tuple[int, Fraction]:
        bits = tuple(prefix(n))
        if len(bits) != n:
            raise ValueError("prefix(n) must have length n")
        return _bits_index(bits), pow2(-(n - 1)) if n else Fraction(2)

    def level(mu, n):
        return OpenSetEnum(CANTOR, [ball(n)])

    def level_measure(mu, n, k):
        if isinstance(mu, CylinderMeasure):
            v = mu.cylinder_mass(tuple(prefix(n)))
            return v, v
        c, r = ball(n)
        if n == 0:
            return mu.norm_q(k)
        # the open ball of radius 2^-(n-1) and the closed ball of radius 2^-n are the same cylinder
        return sandwich_q(mu, OpenBall(CANTOR, c, r), ClosedBall(CANTOR, c, pow2(-n)), k)

    return SequentialTest(level, level_measure, label=label)


def zeros_cylinder_test() -> SequentialTest:
    return cylinder_sequential_test(lambda n: (0,) * n, label="cylinders-0")


def ones_cylinder_test() -> SequentialTest:
    return cylinder_sequential_test(lambda n: (1,) * n, label="cylinders-1")


def sum_sequential_to_integral(seq: SequentialTest) -> IntegralTest:
    """t = sum_n 1_{U_n}; its integral is sum_n mu(U_n) <= 2."""
    if seq.empty:
        return IntegralTest(lambda mu, n: ZERO_FN, lambda mu, k: (ZERO, ZERO), label="zero")

    def stage(mu, n):
        parts = [(ONE, seq.level(mu, j).lower_function(n)) for j in range(n)]
        return LinComb(tuple(parts))

    def integral(mu, k):
        def term(j):
            return lambda p: seq.level_measure_q(mu, j, p)

        iv = sum_with_tail_bound(term, lambda N: pow2(-(N - 1)) * max(ONE, mu.mass_bound()), k + 1)
        return iv.q()

    return IntegralTest(stage, integral, label=f"sum({seq.label})")


# ---------------------------------------------------------------------------
# Null levels and the derived sequential test.

def _clamp01(f: BasicFunction) -> BasicFunction:
    return Max(ZERO_FN, Min(One(), f))


def _ramp(t_n: BasicFunction, threshold: Fraction, delta: Fraction) -> BasicFunction:
    """clamp((t_n - threshold) / delta, 0, 1)."""
    return _clamp01(LinComb(((1 / delta, t_n), (-threshold / delta, One()))))


@dataclass(frozen=True)
class LevelStage:
    a: Fraction
    b: Fraction
    delta: Fraction
    N: int
    lo: Fraction
    hi: Fraction
    eps: Fraction


class NullLevel:
    """Certified threshold c in [2^(n+1), 2^(n+2)] with computable mu{t > c}.

    Stage s keeps a window [a_s, b_s] around c and two-sided bounds
    on mu{t > c}: below by mu{t_N > b_s}, above by mu{t_N > a_s - delta}
    plus the Markov bound on mu{t - t_N >= delta}.
    """

    def __init__(self, t: IntegralTest, mu: MeasureOracle, n: int, budget: int = 4096) -> None:
        self.t, self.mu, self.n = t, mu, int(n)
        self.lsc = t.lsc(mu)
        self.budget = budget
        self.window = (pow2(self.n + 1), pow2(self.n + 2))
        self._stages: list[LevelStage] = []
        self._stage_lo: dict = {}
        self._lock = threading.Lock()
        total = t.integral_q(mu, 12)
        if total[0] > 2:
            raise PreconditionError("null levels need a test with integral <= 2; normalize first")
        self.markov = total[1] / self.window[0]
        self.c = RealStream(self._c_raw, label=f"c_{n}")
        self.level_measure = RealStream(self._m_raw, label=f"mu(V_{n})")

    @property
    def stages_used(self) -> int:
        return len(self._stages)

    def _markov_term(self, N: int, delta: Fraction, p: int) -> Fraction:
        hi = self.t.integral_q(self.mu, p)[1]
        key = (N, p)
        lo = self._stage_lo.get(key)
        if lo is None:
            lo = self._stage_lo[key] = self.mu.integrate_q(self.lsc.stage(N), p)[0]
        return max(ZERO, (hi - lo) / delta)

    def _next(self, s: int) -> LevelStage:
        if self._stages:
            prev = self._stages[-1]
            A, B, N = prev.a, prev.b, prev.N
        else:
            A, B = self.window
            N = 0
        eps = pow2(-(s + 2))
        norm_hi = self.mu.norm_q(4)[1]
        m = max(3, int(norm_hi / eps) + 2)
        M = 1 << ceil_log2(2 * m)
        w = (B - A) / M
        delta = w / 4
        p = ceil_log2_q(1 / delta) + ceil_log2_q(1 / eps) + 6
        spent = 0
        step = 1
        while self._markov_term(N, delta, p) > eps / 4:
            N += step
            step *= 2
            spent += 1
            if spent > self.budget:
                raise BudgetExceeded(f"stage {s}: approximants too far from the integral",
                                     partial=self.certificate_json(10))
        tN = self.lsc.stage(N)
        markov = self._markov_term(N, delta, p)
        q = p + ceil_log2(M)
        for j in range(0, M, 2):
            a, b = A + j * w, A + (j + 1) * w
            hi = self.mu.integrate_q(_ramp(tN, a - 2 * delta, delta), q)[1] + markov
            lo = max(ZERO, self.mu.integrate_q(_ramp(tN, b, delta), q)[0])
            hi = min(hi, self.markov)
            spent += 1
            if hi - lo <= eps:
                return LevelStage(a, b, delta, N, lo, hi, eps)
            if spent > self.budget:
                break
        raise BudgetExceeded(f"no light level interval at stage {s}", partial=self.certificate_json(10))

    def stage(self, s: int) -> LevelStage:
        with self._lock:
            while len(self._stages) <= s:
                self._stages.append(self._next(len(self._stages)))
            return self._stages[s]

    def _c_raw(self, k: int) -> QInterval:
        s = 0
        while True:
            st = self.stage(s)
            if st.b - st.a <= pow2(-k):
                return st.a, st.b
            s += 1

    def _m_raw(self, k: int) -> QInterval:
        s = 0
        while True:
            st = self.stage(s)
            if st.hi - st.lo <= pow2(-k):
                return st.lo, st.hi
            s += 1

    def certificate_json(self, k: int) -> dict:
        done = list(self._stages)
        if done:
            last = done[-1]
            c = DyadicInterval.outward(last.a, last.b, 60).to_json()
            m = DyadicInterval.outward(last.lo, last.hi, k + 8).to_json()
        else:
            c = DyadicInterval(*self.window).to_json()
            m = DyadicInterval.outward(ZERO, self.markov, k + 8).to_json()
        return {"n": self.n, "c": c, "level_measure": m, "stages_used": len(done)}

    def to_json(self, k: int) -> dict:
        self.level_measure(k)
        return self.certificate_json(k)


def markov_precheck(t: IntegralTest, mu: MeasureOracle, n: int, k: int = 12) -> Fraction:
    """Upper bound 2^-(n+1) * int t dmu on mu{t > 2^(n+1)}."""
    return t.integral_q(mu, k)[1] * pow2(-(n + 1))


def find_null_level(t: IntegralTest, mu: MeasureOracle, n: int, budget: int = 4096) -> NullLevel:
    return NullLevel(t, mu, n, budget)


class SuperLevelSet(OpenSet):
    """{t > c} for a certified null level c."""

    def __init__(self, level: NullLevel) -> None:
        super().__init__(level.mu.space)
        self.level = level

    def lower_function(self, n: int) -> BasicFunction:
        st = self.level.stage(n)
        return _ramp(self.level.lsc.stage(st.N), st.b, st.delta)

    def certify_member(self, x: CauchyName, max_stage: int = 256, k: int = 20) -> bool:
        """True once some approximant t_N(x) provably exceeds the window top."""
        top = self.level.window[1]
        for N in range(max_stage + 1):
            lo, _ = eval_basic_q(self.level.lsc.stage(N), x, k)
            if lo > top:
                return True
        return False


def integral_to_sequential(t: IntegralTest, budget: int = 4096) -> SequentialTest:
    """V_n = {t > c_n} with c_n a certified null level in [2^(n+1), 2^(n+2)]."""
    cache: dict = {}
    lock = threading.Lock()

    def level_of(mu, n) -> NullLevel:
        with lock:
            hit = cache.get((mu, n))
            if hit is None:
                hit = find_null_level(t, mu, n, budget)
                cache[(mu, n)] = hit
        return hit

    def level(mu, n):
        return SuperLevelSet(level_of(mu, n))

    def level_measure(mu, n, k):
        return level_of(mu, n).level_measure.query_q(k)

    test = SequentialTest(level, level_measure, label=f"levels({t.label})")
    test.null_level = level_of
    return test


# ---------------------------------------------------------------------------
# Kurtz tests.

@dataclass
class KurtzTest:
    """P = complement of an enumerated open set; mu(P) = 0 is the caller's claim."""

    complement: OpenSetEnum
    label: str = "kurtz"

    @property
    def space(self) -> Space:
        return self.complement.space


@dataclass
class Unverified:
    n: int
    steps: int
    message: str = "nullity unverified at budget"
    partial: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"n": self.n, "status": self.message, "steps": self.steps, "partial": self.partial}


class NullityUnverified(BudgetExceeded):
    def __init__(self, result: Unverified) -> None:
        super().__init__(result.message, partial=result)
        self.result = result


class KurtzLevel:
    """V_n: complement of finitely many closed balls inside the complement of P."""

    def __init__(self, mu: MeasureOracle, n: int, certs: list, steps: int) -> None:
        self.mu, self.n, self.certs, self.steps = mu, n, certs, steps
        self.open_set = _BallsExterior(mu.space, certs)

    def measure_q(self, k: int) -> QInterval:
        from .names import AeBall, boolean_combo_measure_q

        combo = ("not", ("or",) + tuple(AeBall(c.center, c) for c in self.certs))
        return boolean_combo_measure_q(self.mu, combo, k)

    def to_json(self, k: int) -> dict:
        lo, hi = self.measure_q(k)
        return {
            "n": self.n,
            "status": "verified",
            "balls": len(self.certs),
            "steps": self.steps,
            "level_measure": DyadicInterval.outward(lo, hi, k + 2).to_json(),
        }


class _BallsExterior(OpenSet):
    def __init__(self, space: Space, certs: list) -> None:
        super().__init__(space)
        self.certs = certs

    def lower_function(self, n: int) -> BasicFunction:
        return OpenIntersection([BallExterior(self.space, c.center, c.stage(n).b) for c in self.certs]).lower_function(n)

    def contains(self, x: CauchyName, depth: int = 24) -> bool:
        for s in range(depth):
            lo, _ = eval_basic_q(self.lower_function(s), x, s + 4)
            if lo >= 1:
                return True
        return False


def kurtz_level(P: KurtzTest, mu: MeasureOracle, n: int, budget: int = 512) -> Union[KurtzLevel, Unverified]:
    """Cover most of the complement of P by null-boundary closed balls.

    Each ball certificate and each measure check costs one step.
    """
    steps = 0
    M = 1
    certs: list = []
    norm_hi = None
    while steps < budget:
        balls = P.complement.balls(M)
        # shrink each radius into [r(1 - 2^-l), r(1 - 2^-(l+1))] with l growing with M
        l = ceil_log2(M) + 1
        certs = []
        for c, r in balls[: M]:
            if r <= 0:
                continue
            q1, q2 = r * (1 - pow2(-l)), r * (1 - pow2(-(l + 1)))
            certs.append(find_null_radius(mu, c, q1, q2, pow2(-(n + l + 4))))
            steps += 1
        if steps >= budget:
            break
        for s in range(3):
            steps += 1
            p = n + l + s + 6
            if norm_hi is None or s == 0:
                norm_hi = norm_upper(mu, p)
            if not certs:
                continue
            inner = OpenUnion([OpenBall(mu.space, ce.center, ce.stage(s).a) for ce in certs])
            if measure_open_lower(mu, inner, p) > norm_hi - pow2(-n):
                return KurtzLevel(mu, n, certs, steps)
            if steps >= budget:
                break
        if len(balls) < M:
            break
        M *= 2
    return Unverified(n, steps, partial={"balls_tried": len(certs)})


def kurtz_to_sequential(P: KurtzTest, budget: int = 512) -> SequentialTest:
    cache: dict = {}

    def level_of(mu, n) -> KurtzLevel:
        hit = cache.get((mu, n))
        if hit is None:
            hit = kurtz_level(P, mu, n, budget)
            cache[(mu, n)] = hit
        if isinstance(hit, Unverified):
            raise NullityUnverified(hit)
        return hit

    test = SequentialTest(lambda mu, n: level_of(mu, n).open_set,
                          lambda mu, n, k: level_of(mu, n).measure_q(k), label=f"kurtz({P.label})")
    test.kurtz_level = level_of
    return test


def point_kurtz_test_cantor(bits: Callable[[int], int], label: str = "point") -> KurtzTest:
    """P = {x}; the complement is the union of the cylinders x|j followed by the flipped bit."""

    def ball(j: int):
        prefix = [int(bits(i)) for i in range(j)] + [1 - int(bits(j))]
        return _bits_index(prefix), pow2(-j)

    return KurtzTest(OpenSetEnum(CANTOR, ball), label=label)


def point_kurtz_test_unit(x) -> KurtzTest:
    """P = {x} in [0, 1]; the complement is the union of B(q, |q - x|) over dyadics q."""
    from .spaces import UNIT, unit_value

    x = Fraction(x)
    # the ball around x itself is empty
    return KurtzTest(OpenSetEnum(UNIT, lambda j: (j, abs(unit_value(j) - x))), label=f"point({x})")


# ---------------------------------------------------------------------------
# Martingale tests on Cantor space.

Rate = Callable[[int], Fraction]


@dataclass
class MartingaleTest:
    """nu (possibly depending on mu) against an unbounded nondecreasing rate f."""

    nu: Callable[[MeasureOracle], CylinderMeasure]
    rate: Rate
    blind: bool = False
    label: str = "martingale"

    @classmethod
    def blind_test(cls, nu: CylinderMeasure, rate: Rate, label: str = "blind") -> "MartingaleTest":
        return cls(lambda mu: nu, rate, blind=True, label=label)

    def as_uniform(self) -> "MartingaleTest":
        """The same nu and f viewed as a parameter-independent uniform test."""
        return MartingaleTest(self.nu, self.rate, blind=False, label=f"uniform({self.label})")


@dataclass
class MartingaleReport:
    ratios: list
    exceedances: list
    verdict: str
    argmax: Optional[int]
    depth: int
    blind: bool

    def to_json(self) -> dict:
        def fmt(r):
            if r is None:
                return None
            return DyadicInterval.outward(r, r, 40).to_json()

        return {
            "depth": self.depth,
            "mode": "blind" if self.blind else "uniform",
            "ratios": [fmt(r) for r in self.ratios],
            "exceedances": self.exceedances,
            "verdict": self.verdict,
            "argmax": self.argmax,
        }


def martingale_identity_holds(nu: CylinderMeasure, sigma: Sequence[int]) -> bool:
    sigma = tuple(sigma)
    return nu.cylinder_mass(sigma + (0,)) + nu.cylinder_mass(sigma + (1,)) == nu.cylinder_mass(sigma)


def martingale_check(M: MartingaleTest, mu: CylinderMeasure, x: Union[CauchyName, Sequence[int]],
                     N: int) -> MartingaleReport:
    """Ratios nu[x|n] / mu[x|n] for n <= N against f(n).

    Uniform mode flags ratio > f(n), blind mode flags ratio >= f(n).
    The verdict looks at the second half of the window.
    """
    if not isinstance(mu, CylinderMeasure):
        raise PreconditionError("martingale checks need exact cylinder masses")
    nu = M.nu(mu)
    bits = bits_of(x, N) if isinstance(x, CauchyName) else [int(b) for b in x][:N]
    if len(bits) < N:
        raise ValueError("not enough bits for the requested depth")
    ratios: list = []
    flags: list[int] = []
    best, argmax = None, None
    for n in range(N + 1):
        sigma = tuple(bits[:n])
        m = mu.cylinder_mass(sigma)
        if m == 0:
            ratios.append(None)
            return MartingaleReport(ratios, flags, "outside support", argmax, n, M.blind)
        r = nu.cylinder_mass(sigma) / m
        ratios.append(r)
        f = Fraction(M.rate(n))
        if (r >= f) if M.blind else (r > f):
            flags.append(n)
        score = r / f if f > 0 else None
        if score is not None and (best is None or score > best):
            best, argmax = score, n
    late = [n for n in flags if 2 * n >= N]
    return MartingaleReport(ratios, flags, "exceeds" if late else "passes", argmax, N, M.blind)


# ---------------------------------------------------------------------------
# Built-in integral tests.

def constant_test(c) -> IntegralTest:
    c = Fraction(c)
    return IntegralTest(lambda mu, n: const(min(c, n)) if c else ZERO_FN,
                        lambda mu, k: _scale(c, mu.norm_q(k + 2 + ceil_log2_q(c + 1))),
                        label="constant", params={"c": str(c)})


def _scale(c: Fraction, iv: QInterval) -> QInterval:
    return c * iv[0], c * iv[1]


def zero_measure_test() -> IntegralTest:
    """t_mu = ||mu||^(-1/2), infinite at the zero measure; int t dmu = ||mu||^(1/2)."""
    norms: dict = {}
    lock = threading.Lock()

    def norm(mu) -> RealStream:
        with lock:
            hit = norms.get(mu)
            if hit is None:
                hit = RealStream(lambda k: mu.norm_q(k), label="norm")
                norms[mu] = hit
        return hit

    def stage(mu, n):
        hi = norm(mu).query_q(n + 2)[1]
        if hi == 0:
            return const(n)
        root_hi = qsqrt((hi, hi), n + 4)[1]
        return const(min(Fraction(n), floor_to(1 / root_hi, n + 2)))

    def integral(mu, k):
        lo, hi = norm(mu).query_q(2 * k + 4)
        return qsqrt((lo, hi), k + 2)

    return IntegralTest(stage, integral, label="zero-measure")


def support_test(space: Space, center: int, radius) -> IntegralTest:
    """Infinite on the open ball B(center, radius), 0 elsewhere.

    Valid only for measures giving the ball mass 0; the integral is then 0.
    """
    radius = Fraction(radius)

    def stage(mu, n):
        f = ball_lower_approx(center, radius, n)
        return LinComb(((Fraction(n), f),)) if f != ZERO_FN and n else ZERO_FN

    return IntegralTest(stage, lambda mu, k: (ZERO, ZERO), label="support",
                        params={"center": center, "radius": str(radius)})


def tent_test(x0: CauchyName) -> IntegralTest:
    """t_mu(x) = sum_n 2^-n / max(2^-n, int f_n dmu) * f_n(x), f_n = 1 - 2^n d(x0, .) clipped at 0."""
    basic = x0.basic

    def lower_tent(n: int, s: int) -> BasicFunction:
        if basic is not None:
            return Hat(basic, pow2(-n))
        parts = []
        for j in range(s + 1):
            i = n + j + 2
            c = 1 - pow2(-(j + 2))
            parts.append(LinComb(((c, Hat(x0(i), c * pow2(-n))),)))
        return max_of(parts)

    def upper_tent(n: int, j: int) -> BasicFunction:
        if basic is not None:
            return Hat(basic, pow2(-n))
        i = n + j + 2
        return Bump(x0(i), pow2(-i), pow2(-n) + pow2(-i))

    uppers: dict = {}
    lock = threading.Lock()

    def upper_integral(mu, n: int, s: int) -> Fraction:
        """Running min over j <= s of upper bounds on int f_n dmu."""
        with lock:
            row = uppers.setdefault((mu, n), [])
        while len(row) <= s:
            j = len(row)
            hi = mu.integrate_q(upper_tent(n, j), j + n + 4)[1]
            row.append(min(hi, row[-1]) if row else hi)
        return row[s]

    def coef(mu, n: int, s: int) -> Fraction:
        e = pow2(-n)
        return floor_to(e / max(e, upper_integral(mu, n, s)), s + n + 4)

    def stage(mu, s):
        terms = [(coef(mu, n, s), lower_tent(n, s)) for n in range(s)]
        return LinComb(tuple((c, f) for c, f in terms if c))

    def term_interval(mu, n: int, p: int) -> QInterval:
        e = pow2(-n)
        if basic is not None:
            lo, hi = mu.integrate_q(Hat(basic, e), p + 1)
        else:
            j = p + 3
            lo = mu.integrate_q(lower_tent(n, j), p + 2)[0]
            hi = mu.integrate_q(upper_tent(n, j), p + 2)[1]
        return min(max(lo, ZERO), e), min(hi, e)

    def integral(mu, k):
        iv = sum_with_tail_bound(lambda n: (lambda p: term_interval(mu, n, p)),
                                 lambda N: pow2(-(N - 1)), k + 1)
        return iv.q()

    return IntegralTest(stage, integral, label="tent", params={"target": x0.label})


__all__ = [
    "EmptySet",
    "IntegralTest",
    "KurtzLevel",
    "KurtzTest",
    "LscFunction",
    "MartingaleReport",
    "MartingaleTest",
    "NullLevel",
    "NullityUnverified",
    "SequentialTest",
    "SuperLevelSet",
    "Unverified",
    "constant_test",
    "cylinder_sequential_test",
    "empty_sequential_test",
    "eval_deficiency",
    "find_null_level",
    "integral_to_sequential",
    "kurtz_level",
    "kurtz_to_sequential",
    "markov_precheck",
    "martingale_check",
    "martingale_identity_holds",
    "ones_cylinder_test",
    "point_kurtz_test_cantor",
    "point_kurtz_test_unit",
    "sandwich_q",
    "sum_sequential_to_integral",
    "support_test",
    "tent_test",
    "zero_measure_test",
    "zeros_cylinder_test",
]
