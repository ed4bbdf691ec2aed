"""Finite Borel measures as basic-function integration oracles.

A ``MeasureOracle`` answers ``integrate(f, k)`` with an interval of width
<= 2^-k containing the integral of the basic function f.  Everything
else (norms, open-set and closed-set bounds, the weak metric) is
derived from that one map.
"""
from __future__ import annotations

import bisect
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .basis import (
    BasicFunction,
    Bump,
    Hat,
    LinComb,
    Lift,
    Max,
    Min,
    One,
    Tensor,
    ZERO_FN,
    as_function,
    ball_lower_approx,
    ball_upper_approx,
    eval_basic_q,
    eval_index,
    eval_tree,
    expand_products,
    index_of,
    leaf_gains,
    leaves,
    lipschitz,
    max_of,
    min_of,
    profile,
    project_axis,
    strip_lift,
    substitute,
    sup_abs,
)
from .errors import BudgetExceeded, RepresentationError, UnimeasError
from .exact import (
    DyadicInterval,
    QInterval,
    ceil_log2_q,
    one_minus_exp_neg,
    pow2,
    qabs,
    qmul,
    qscale,
    qsub,
    sum_with_tail_bound,
)
from .spaces import (
    CANTOR,
    UNIT,
    CauchyName,
    ProductSpace,
    Space,
    point_distance_q,
    unit_index,
    unit_value,
)

ZERO = Fraction(0)
ONE = Fraction(1)
FnLike = Union[int, BasicFunction]
LeafKey = tuple  # (ctx, leaf)


def _log2_up(q: Fraction) -> int:
    """max(0, ceil(log2 q)) for q > 0; 0 for q <= 1."""
    return ceil_log2_q(q) if q > 1 else 0


@dataclass
class Piece:
    """A measurable region with exact mass, used by iterated integration.

    ``ranges`` maps each requested (path, leaf) to an interval holding its
    values on the region; every point of the region lies within
    ``radius`` of ``point``.
    """

    weight: Fraction
    ranges: dict
    point: Optional[CauchyName]
    radius: Fraction
    alt: Optional[CauchyName] = None


class MeasureOracle:
    """Base class.  Subclasses implement ``_integrate_q`` (width <= 2^-(k+1))."""

    kind = "measure"

    def __init__(self, space: Space, label: str | None = None) -> None:
        self.space = space
        self.label = label
        self._memo: dict = {}
        self._lock = threading.Lock()

    # -- public oracle --------------------------------------------------
    def integrate(self, f: FnLike, k: int) -> DyadicInterval:
        lo, hi = self.integrate_q(f, k)
        return DyadicInterval.outward(lo, hi, k + 2)

    def integrate_q(self, f: FnLike, k: int) -> QInterval:
        f = as_function(f)
        key = (f, k)
        with self._lock:
            # an exact value answers every precision
            hit = self._memo.get((f, None)) or self._memo.get(key)
        if hit is not None:
            return hit
        val = self._integrate_q(f, k)
        with self._lock:
            self._memo.setdefault((f, None) if val[0] == val[1] else key, val)
            return val

    def _integrate_q(self, f: BasicFunction, k: int) -> QInterval:
        raise NotImplementedError

    def norm(self, k: int) -> DyadicInterval:
        return self.integrate(One(), k)

    def norm_q(self, k: int) -> QInterval:
        return self.integrate_q(One(), k)

    def mass_bound(self) -> Fraction:
        """A cheap upper bound on the total mass."""
        return self.norm_q(0)[1]

    def pieces(self, keys: Sequence[LeafKey], tol: Fraction, max_radius: Fraction | None = None,
               budget: int = 1 << 15) -> Optional[list[Piece]]:
        """Partition into regions where each listed leaf varies by <= tol.

        Returns None when the measure cannot produce exact-mass pieces.
        """
        return None

    def descriptor(self) -> dict:
        return {"kind": self.kind, "parameters": {}, "children": []}

    def __repr__(self) -> str:
        return f"<{self.kind} measure {self.label or ''}>"


def integrate_basic(mu: MeasureOracle, f: FnLike, k: int) -> DyadicInterval:
    """Interval of width <= 2^-k containing the integral of f against mu."""
    return mu.integrate(f, k)


def norm(mu: MeasureOracle, k: int) -> DyadicInterval:
    return mu.norm(k)


# ---------------------------------------------------------------------------
# Elementary measures.

class ZeroMeasure(MeasureOracle):
    kind = "zero"

    def _integrate_q(self, f, k):
        return ZERO, ZERO

    def mass_bound(self) -> Fraction:
        return ZERO

    def pieces(self, keys, tol, max_radius=None, budget=1 << 15):
        return []

    def descriptor(self):
        return {"kind": "zero", "parameters": {"space": self.space.descriptor()}, "children": []}


class DiracMeasure(MeasureOracle):
    """The point mass at x."""

    kind = "dirac"

    def __init__(self, x: CauchyName, label: str | None = None) -> None:
        super().__init__(x.space, label or f"delta({x.label})")
        self.x = x

    def _integrate_q(self, f, k):
        if self.x.basic is not None and self.space.exact:
            return eval_index(f, self.space, self.x.basic)
        return eval_basic_q(f, self.x, k)

    def mass_bound(self) -> Fraction:
        return ONE

    def leaf_range(self, key: LeafKey, tol: Fraction) -> tuple:
        ctx, leaf = key
        g = leaf
        for axis in reversed(ctx):
            g = Lift(axis, g)
        if self.x.basic is not None and self.space.exact:
            return eval_index(g, self.space, self.x.basic)
        k = 0
        while pow2(-(k + 1)) > tol:
            k += 1
        return eval_basic_q(g, self.x, k)

    def pieces(self, keys, tol, max_radius=None, budget=1 << 15):
        ranges = {key: self.leaf_range(key, tol) for key in keys}
        return [Piece(ONE, ranges, self.x, ZERO)]

    def descriptor(self):
        point = self.x.desc if self.x.desc is not None else {"label": self.x.label}
        return {"kind": "dirac", "parameters": {"space": self.space.descriptor(), "point": point},
                "children": []}


def dirac(x: CauchyName) -> DiracMeasure:
    return DiracMeasure(x)


class Mixture(MeasureOracle):
    """sum_i w_i mu_i for dyadic w_i >= 0."""

    kind = "mixture"

    def __init__(self, weights: Sequence, parts: Sequence[MeasureOracle], label: str | None = None) -> None:
        if len(weights) != len(parts):
            raise ValueError("weights and parts differ in length")
        if not parts:
            raise ValueError("mixture of nothing; use ZeroMeasure")
        ws = [Fraction(w) for w in weights]
        if any(w < 0 for w in ws):
            raise ValueError("mixture weights must be >= 0")
        for p in parts[1:]:
            if p.space != parts[0].space:
                raise ValueError("mixture parts live on different spaces")
        super().__init__(parts[0].space, label)
        self.weights = ws
        self.parts = list(parts)
        self.total = sum(ws, ZERO)

    def _active(self):
        return [(w, p) for w, p in zip(self.weights, self.parts) if w != 0]

    def _integrate_q(self, f, k):
        active = self._active()
        if not active:
            return ZERO, ZERO
        p = k + 1 + _log2_up(self.total)
        lo = hi = ZERO
        for w, part in active:
            a, b = part.integrate_q(f, p)
            lo += w * a
            hi += w * b
        return lo, hi

    def mass_bound(self) -> Fraction:
        return sum((w * p.mass_bound() for w, p in self._active()), ZERO)

    def pieces(self, keys, tol, max_radius=None, budget=1 << 15):
        out: list[Piece] = []
        for w, part in self._active():
            ps = part.pieces(keys, tol, max_radius, budget)
            if ps is None:
                return None
            out.extend(Piece(w * q.weight, q.ranges, q.point, q.radius, q.alt) for q in ps)
        return out

    def descriptor(self):
        from .coding import format_dyadic

        return {"kind": "mixture", "parameters": {"weights": [format_dyadic(w) for w in self.weights]},
                "children": [p.descriptor() for p in self.parts]}


def mixture(weights: Sequence, parts: Sequence[MeasureOracle]) -> MeasureOracle:
    """Weighted sum; all-zero weights give the zero measure."""
    if parts and all(Fraction(w) == 0 for w in weights) and len(weights) == len(parts):
        return ZeroMeasure(parts[0].space)
    return Mixture(weights, parts)


def atomic(space: Space, atoms: Sequence[tuple]) -> MeasureOracle:
    """sum_j q_j delta_{b_j} over basic points b_j."""
    atoms = [(Fraction(w), int(b)) for w, b in atoms]
    if not atoms:
        return ZeroMeasure(space)
    return mixture([w for w, _ in atoms], [DiracMeasure(space.basic_name(b)) for _, b in atoms])


# ---------------------------------------------------------------------------
# Cantor space measures given by exact cylinder masses.

def _center_bit(c: int, j: int) -> int:
    return (c >> j) & 1


def cylinder_leaf_range(leaf, tau: Sequence[int]) -> QInterval:
    """Range of a Cantor leaf over the cylinder [tau]."""
    c = leaf.center
    for j, bit in enumerate(tau):
        if _center_bit(c, j) != bit:
            v = profile(leaf, pow2(-j))
            return v, v
    return profile(leaf, pow2(-len(tau))), ONE


class CylinderMeasure(MeasureOracle):
    """Measure on Cantor space with exact dyadic cylinder masses."""

    kind = "cylinder"
    max_depth = 256

    def __init__(self, mass: Callable[[tuple], Fraction], label: str | None = None,
                 params: dict | None = None) -> None:
        super().__init__(CANTOR, label)
        self._mass = mass
        self._params = params or {}
        self._mass_cache: dict = {}

    def cylinder_mass(self, sigma: Sequence[int]) -> Fraction:
        sigma = tuple(int(b) for b in sigma)
        hit = self._mass_cache.get(sigma)
        if hit is None:
            hit = Fraction(self._mass(sigma))
            self._mass_cache[sigma] = hit
        return hit

    def mass_bound(self) -> Fraction:
        return self.cylinder_mass(())

    def walk(self, keys: Sequence[LeafKey], tol: Fraction, max_radius: Fraction | None = None,
             transform: Callable[[tuple], tuple] | None = None, budget: int = 1 << 15) -> list[Piece]:
        """Depth-first cylinder partition, splitting undetermined cylinders."""
        for ctx, _ in keys:
            if ctx:
                raise ValueError("Cantor leaves cannot carry a product path")
        out: list[Piece] = []
        stack: list[tuple] = [()]
        while stack:
            sigma = stack.pop()
            w = self.cylinder_mass(sigma)
            if w == 0:
                continue
            tau = transform(sigma) if transform else sigma
            n = len(tau)
            ranges = {key: cylinder_leaf_range(key[1], tau) for key in keys}
            split = any(hi - lo > tol for lo, hi in ranges.values())
            if max_radius is not None and pow2(-n) > max_radius:
                split = True
            if split:
                if n >= self.max_depth:
                    raise BudgetExceeded("cylinder recursion exceeded the depth cap", partial=len(out))
                stack.append(sigma + (1,))
                stack.append(sigma + (0,))
                continue
            out.append(Piece(w, ranges, None, pow2(-n), None))
            out[-1].sigma = tau  # type: ignore[attr-defined]
            if len(out) > budget:
                raise BudgetExceeded(f"more than {budget} cylinder pieces", partial=len(out))
        return out

    def _integrate_cyl(self, f: BasicFunction, k: int, transform=None) -> QInterval:
        keys = sorted(set(leaves(f)), key=repr)
        gain = sum(leaf_gains(f).values(), ZERO)
        mass = self.mass_bound()
        if gain == 0 or mass == 0:
            tol = ONE
        else:
            tol = pow2(-(k + 2)) / (gain * mass)
        lo = hi = ZERO
        for piece in self.walk(keys, tol, transform=transform, budget=1 << 22):
            a, b = eval_tree(f, lambda ctx, leaf, r=piece.ranges: r[(ctx, leaf)])
            lo += piece.weight * a
            hi += piece.weight * b
        return lo, hi

    def _integrate_q(self, f, k):
        return self._integrate_cyl(f, k)

    def pieces(self, keys, tol, max_radius=None, budget=1 << 15):
        ps = self.walk(keys, tol, max_radius, budget=budget)
        for p in ps:
            sigma = p.sigma  # type: ignore[attr-defined]
            p.point = CANTOR.basic_name(_bits_to_int(sigma))
            p.alt = CANTOR.basic_name(_bits_to_int(tuple(sigma) + (1,)))
        return ps

    def descriptor(self):
        return {"kind": self.kind, "parameters": dict(self._params), "children": []}


def _bits_to_int(bits: Sequence[int]) -> int:
    return sum(1 << j for j, b in enumerate(bits) if b)


def bernoulli(p) -> CylinderMeasure:
    """Product measure on Cantor space with P(bit = 1) = p."""
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    q = 1 - p

    def mass(sigma: tuple) -> Fraction:
        ones = sum(sigma)
        return p ** ones * q ** (len(sigma) - ones)

    from .coding import format_dyadic

    m = CylinderMeasure(mass, label=f"bernoulli({p})", params={"p": format_dyadic(p)})
    m.kind = "bernoulli"
    return m


def uniform_cantor() -> CylinderMeasure:
    return bernoulli(Fraction(1, 2))


def conditioned_cantor(base: CylinderMeasure, position: int, bit: int) -> CylinderMeasure:
    """base restricted to {x : x_position = bit} and renormalized by the base mass."""
    def mass(sigma: tuple) -> Fraction:
        if len(sigma) > position and sigma[position] != bit:
            return ZERO
        if len(sigma) > position:
            return base.cylinder_mass(sigma) / _slice_mass(base, position, bit)
        return _restricted_prefix_mass(base, sigma, position, bit)

    m = CylinderMeasure(mass, label=f"{base.label}|x{position}={bit}",
                        params={"base": base.descriptor(), "position": position, "bit": bit})
    m.kind = "conditioned"
    return m


def _slice_mass(base: CylinderMeasure, position: int, bit: int) -> Fraction:
    """base{x : x_position = bit}."""
    total = ZERO
    for code in range(1 << position):
        sigma = tuple((code >> j) & 1 for j in range(position)) + (bit,)
        total += base.cylinder_mass(sigma)
    return total


def _restricted_prefix_mass(base: CylinderMeasure, sigma: tuple, position: int, bit: int) -> Fraction:
    total = ZERO
    free = position - len(sigma)
    for code in range(1 << free):
        ext = sigma + tuple((code >> j) & 1 for j in range(free)) + (bit,)
        total += base.cylinder_mass(ext)
    return total / _slice_mass(base, position, bit)


# ---------------------------------------------------------------------------
# Lebesgue measure on [0, 1] by exact piecewise-linear integration.

PL = tuple  # (xs, ys)


def _pl_eval(pl: PL, x: Fraction) -> Fraction:
    xs, ys = pl
    i = bisect.bisect_right(xs, x) - 1
    if i >= len(xs) - 1:
        return ys[-1]
    if i < 0:
        return ys[0]
    x0, x1 = xs[i], xs[i + 1]
    return ys[i] + (ys[i + 1] - ys[i]) * (x - x0) / (x1 - x0)


def _pl_leaf(leaf, a: Fraction = ONE, b: Fraction = ZERO) -> PL:
    """x -> profile(|a x + b - c|) on [0, 1]."""
    c = unit_value(leaf.center)
    radii = [ZERO, leaf.s] + ([leaf.r] if isinstance(leaf, Bump) else [])
    xs = {ZERO, ONE}
    if a != 0:
        for rad in radii:
            for u in (c - rad, c + rad):
                x = (u - b) / a
                if 0 < x < 1:
                    xs.add(x)
    xs = sorted(xs)
    return xs, [profile(leaf, abs(a * x + b - c)) for x in xs]


def _pl_merge(p: PL, q: PL, op: str) -> PL:
    xs = sorted(set(p[0]) | set(q[0]))
    ya = [_pl_eval(p, x) for x in xs]
    yb = [_pl_eval(q, x) for x in xs]
    if op == "add":
        return xs, [u + v for u, v in zip(ya, yb)]
    out_x: list[Fraction] = []
    out_y: list[Fraction] = []
    pick = max if op == "max" else min
    for i, x in enumerate(xs):
        if i > 0:
            d0, d1 = ya[i - 1] - yb[i - 1], ya[i] - yb[i]
            if (d0 < 0 < d1) or (d1 < 0 < d0):
                t = d0 / (d0 - d1)
                xc = xs[i - 1] + t * (x - xs[i - 1])
                out_x.append(xc)
                out_y.append(ya[i - 1] + t * (ya[i] - ya[i - 1]))
        out_x.append(x)
        out_y.append(pick(ya[i], yb[i]))
    return out_x, out_y


def _pl_scale(p: PL, c: Fraction) -> PL:
    return p[0], [c * y for y in p[1]]


def pl_of(f: BasicFunction, a: Fraction = ONE, b: Fraction = ZERO, memo: dict | None = None) -> PL:
    """Exact piecewise-linear form of x -> f(a x + b) on [0, 1]."""
    if memo is None:
        memo = {}
    hit = memo.get(f)
    if hit is not None:
        return hit
    if isinstance(f, One):
        out = [ZERO, ONE], [ONE, ONE]
    elif isinstance(f, (Bump, Hat)):
        out = _pl_leaf(f, a, b)
    elif isinstance(f, Max):
        out = _pl_merge(pl_of(f.a, a, b, memo), pl_of(f.b, a, b, memo), "max")
    elif isinstance(f, Min):
        out = _pl_merge(pl_of(f.a, a, b, memo), pl_of(f.b, a, b, memo), "min")
    elif isinstance(f, LinComb):
        out = [ZERO, ONE], [ZERO, ZERO]
        for c, g in f.terms:
            out = _pl_merge(out, _pl_scale(pl_of(g, a, b, memo), c), "add")
    else:
        raise UnimeasError(f"{type(f).__name__} is not piecewise linear on [0, 1]")
    memo[f] = out
    return out


def pl_integral(pl: PL) -> Fraction:
    xs, ys = pl
    return sum(((xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]) / 2 for i in range(len(xs) - 1)), ZERO)


class LebesgueUnit(MeasureOracle):
    """Lebesgue measure on [0, 1], integrating basic functions exactly."""

    kind = "lebesgue"

    def __init__(self, a: Fraction = ONE, b: Fraction = ZERO, label: str | None = None) -> None:
        super().__init__(UNIT, label or "lebesgue")
        # pushforward of Lebesgue under x -> a x + b when (a, b) != (1, 0)
        self.a, self.b = Fraction(a), Fraction(b)

    def _integrate_q(self, f, k):
        v = pl_integral(pl_of(f, self.a, self.b))
        return v, v

    def mass_bound(self) -> Fraction:
        return ONE

    def pieces(self, keys, tol, max_radius=None, budget=1 << 15):
        for ctx, _ in keys:
            if ctx:
                raise ValueError("leaves on [0, 1] cannot carry a product path")
        if self.a != 1 or self.b != 0:
            return None
        pls = {key: _pl_leaf(key[1]) for key in keys}
        knots = sorted({ZERO, ONE}.union(*[set(p[0]) for p in pls.values()]))
        out: list[Piece] = []
        for x0, x1 in zip(knots, knots[1:]):
            ln = x1 - x0
            worst = max((abs(_pl_eval(p, x1) - _pl_eval(p, x0)) for p in pls.values()), default=ZERO)
            parts = 1
            while worst / parts > tol or (max_radius is not None and ln / (2 * parts) > max_radius):
                parts *= 2
            if len(out) + parts > budget:
                raise BudgetExceeded(f"more than {budget} interval pieces", partial=len(out))
            step = ln / parts
            for j in range(parts):
                a, b = x0 + j * step, x0 + (j + 1) * step
                ranges = {}
                for key, p in pls.items():
                    u, v = _pl_eval(p, a), _pl_eval(p, b)
                    ranges[key] = (min(u, v), max(u, v))
                mid = (a + b) / 2
                point = UNIT.basic_name(unit_index(mid)) if _dy(mid) else UNIT.name(mid)
                alt = UNIT.basic_name(unit_index(a)) if _dy(a) else UNIT.name(a)
                out.append(Piece(b - a, ranges, point, (b - a) / 2, alt))
        return out

    def descriptor(self):
        from .coding import format_dyadic

        params = {}
        if self.a != 1 or self.b != 0:
            params = {"a": format_dyadic(self.a), "b": format_dyadic(self.b)}
        return {"kind": "lebesgue", "parameters": params, "children": []}


def _dy(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


def lebesgue_unit() -> LebesgueUnit:
    return LebesgueUnit()


# ---------------------------------------------------------------------------
# Products and kernels.

def _split_keys(f: BasicFunction, axis: int):
    gains = leaf_gains(f)
    keys = [(ctx[1:], leaf) for (ctx, leaf) in gains if ctx and ctx[0] == axis]
    gain = sum((g for (ctx, _), g in gains.items() if ctx and ctx[0] == axis), ZERO)
    return sorted(set(keys), key=repr), gain


def _inner_function(f: BasicFunction, piece: Piece, outer: int, inner: int,
                    gains: dict | None = None) -> tuple[BasicFunction, Fraction]:
    """Freeze the outer coordinate's leaves at their midpoints on ``piece``."""
    if gains is None:
        gains = leaf_gains(f)
    slack = ZERO
    mids = {}
    for (ctx, leaf), g in gains.items():
        if ctx and ctx[0] == outer:
            lo, hi = piece.ranges[(ctx[1:], leaf)]
            mids[(ctx, leaf)] = (lo + hi) / 2
            slack += g * (hi - lo) / 2

    def rule(ctx, leaf):
        if ctx and ctx[0] == outer:
            return mids[(ctx, leaf)]
        return None

    return project_axis(substitute(f, rule), inner), slack


def _separable(f: BasicFunction):
    """Decompose f into sum_j c_j * u_j(x) * v_j(y) when possible, else None."""
    if isinstance(f, One):
        return [(ONE, One(), One())]
    if isinstance(f, Lift) and f.axis in (0, 1):
        if not any(True for _ in leaves(f.f)):
            return [(ONE, strip_lift(f.f, None), One())]
        return [(ONE, f.f, One())] if f.axis == 0 else [(ONE, One(), f.f)]
    if isinstance(f, LinComb):
        out = []
        for c, g in f.terms:
            sub = _separable(g)
            if sub is None:
                return None
            out.extend((c * w, u, v) for w, u, v in sub)
        return out
    if isinstance(f, Tensor):
        a, b = _separable(f.f), _separable(f.g)
        if a is None or b is None:
            return None
        return [(w1 * w2, _times(u1, u2), _times(v1, v2)) for w1, u1, v1 in a for w2, u2, v2 in b]
    return None


def _times(u: BasicFunction, v: BasicFunction) -> BasicFunction:
    if isinstance(u, One):
        return v
    if isinstance(v, One):
        return u
    return Tensor(u, v)


def _pieces_cost_hint(mu: MeasureOracle) -> int:
    if isinstance(mu, (DiracMeasure, ZeroMeasure)):
        return 0
    if isinstance(mu, CylinderMeasure):
        return 1
    if isinstance(mu, Mixture):
        return max(_pieces_cost_hint(p) for p in mu.parts)
    if isinstance(mu, Pushforward) and isinstance(mu.base, CylinderMeasure) and mu.map.cantor_prefix:
        return 1
    return 5


class ProductMeasure(MeasureOracle):
    """mu (x) nu on the product space with the max metric.

    Iterated integration: the outer factor is partitioned into pieces on
    which its leaves are nearly constant; on each piece those leaves are
    frozen and the resulting function of the inner coordinate is
    integrated exactly against the inner factor.
    """

    kind = "product"

    def __init__(self, mu: MeasureOracle, nu: MeasureOracle, label: str | None = None) -> None:
        super().__init__(ProductSpace([mu.space, nu.space]), label)
        self.mu, self.nu = mu, nu
        self.outer = 0 if _pieces_cost_hint(mu) <= _pieces_cost_hint(nu) else 1

    def factor(self, axis: int) -> MeasureOracle:
        return self.mu if axis == 0 else self.nu

    def mass_bound(self) -> Fraction:
        return self.mu.mass_bound() * self.nu.mass_bound()

    def _integrate_q(self, f, k):
        g = expand_products(f, self.space)
        sep = _separable(g)
        if sep is not None:
            return self._integrate_separable(sep, k)
        return self.iterated(g, k, self.outer)

    def _integrate_separable(self, sep, k):
        # width of a*b is at most |a| wb + |b| wa + wa wb
        mb, nb = self.mu.mass_bound(), self.nu.mass_bound()
        S = sum((abs(w) * (sup_abs(u) * nb + sup_abs(v) * mb + 1) for w, u, v in sep), ZERO)
        p = k + 1 + _log2_up(S)
        lo = hi = ZERO
        for w, u, v in sep:
            x0, x1 = qscale(w, qmul(self.mu.integrate_q(u, p), self.nu.integrate_q(v, p)))
            lo += x0
            hi += x1
        return lo, hi

    def iterated(self, g: BasicFunction, k: int, outer: int) -> QInterval:
        """Integrate with coordinate ``outer`` as the outer integral."""
        inner = 1 - outer
        om, im = self.factor(outer), self.factor(inner)
        keys, gain = _split_keys(g, outer)
        om_mass, im_mass = om.mass_bound(), im.mass_bound()
        budget = pow2(-(k + 2))
        if gain == 0 or om_mass == 0 or im_mass == 0:
            tol = ONE
        else:
            tol = budget / (gain * om_mass * im_mass)
        pieces = om.pieces(keys, tol)
        if pieces is None:
            if outer != self.outer:
                raise UnimeasError("neither factor can be partitioned for iterated integration")
            return self.iterated(g, k, inner)
        p_in = k + 2 + _log2_up(om_mass)
        gains = leaf_gains(g)
        lo = hi = ZERO
        for piece in pieces:
            h, slack = _inner_function(g, piece, outer, inner, gains)
            a, b = im.integrate_q(h, p_in)
            err = slack * im_mass
            lo += piece.weight * (a - err)
            hi += piece.weight * (b + err)
        return lo, hi

    def descriptor(self):
        return {"kind": "product", "parameters": {}, "children": [self.mu.descriptor(), self.nu.descriptor()]}


def product(mu: MeasureOracle, nu: MeasureOracle) -> ProductMeasure:
    return ProductMeasure(mu, nu)


class Kernel:
    """x -> a probability measure on ``target``, with a Lipschitz modulus.

    ``lip`` is a constant with |int g d(kappa x) - int g d(kappa x')| <=
    lip * Lip(g) * d(x, x') for every basic function g.
    """

    def __init__(self, source: Space, target: Space, measure_at: Callable[[CauchyName], MeasureOracle],
                 lip: Fraction, label: str = "kernel", constant: MeasureOracle | None = None,
                 diagonal: bool = False) -> None:
        self.source, self.target = source, target
        self._measure_at = measure_at
        self.lip = Fraction(lip)
        self.label = label
        self.constant = constant
        self.diagonal = diagonal

    def __call__(self, x: CauchyName) -> MeasureOracle:
        return self._measure_at(x)

    def descriptor(self) -> dict:
        kind = "constant" if self.constant is not None else ("diagonal" if self.diagonal else self.label)
        children = [self.constant.descriptor()] if self.constant is not None else []
        return {"kind": kind, "parameters": {"lip": str(self.lip)}, "children": children}


def constant_kernel(source: Space, nu: MeasureOracle) -> Kernel:
    return Kernel(source, nu.space, lambda x: nu, ZERO, label="constant", constant=nu)


def diagonal_kernel(space: Space) -> Kernel:
    """x -> delta_x (1-Lipschitz in the bounded-Lipschitz sense)."""
    return Kernel(space, space, DiracMeasure, ONE, label="diagonal", diagonal=True)


class KernelJoin(MeasureOracle):
    """mu * kappa on X x Y: integral of f is int_X int_Y f(x, y) kappa(dy|x) mu(dx)."""

    kind = "kernel_join"
    check_pieces = 4

    def __init__(self, mu: MeasureOracle, kernel: Kernel, generic: bool = False, label: str | None = None) -> None:
        super().__init__(ProductSpace([mu.space, kernel.target]), label)
        self.mu, self.kernel = mu, kernel
        self.generic = generic

    def mass_bound(self) -> Fraction:
        return self.mu.mass_bound()

    def _integrate_q(self, f, k):
        g = expand_products(f, self.space)
        if self.kernel.diagonal and not self.generic:
            return self.mu.integrate_q(strip_lift(g, None), k)
        keys, gain = _split_keys(g, 0)
        mass = self.mu.mass_bound()
        if mass == 0:
            return ZERO, ZERO
        budget = pow2(-(k + 3)) / mass
        tol = budget / gain if gain else ONE
        inner_lips = lipschitz(project_axis(substitute(g, lambda c, l: ONE if c and c[0] == 0 else None), 1))
        # Lipschitz constant of the frozen inner function does not depend on the frozen values
        spread = self.kernel.lip * inner_lips
        max_radius = budget / spread if spread else None
        pieces = self.mu.pieces(keys, tol, max_radius, budget=1 << 18)
        if pieces is None:
            raise UnimeasError("the outer measure cannot be partitioned for a kernel join")
        p_in = k + 2 + _log2_up(mass)
        gains = leaf_gains(g)
        lo = hi = ZERO
        for n, piece in enumerate(pieces):
            h, slack = _inner_function(g, piece, 0, 1, gains)
            kx = self.kernel(piece.point)
            a, b = kx.integrate_q(h, p_in)
            if n < self.check_pieces and spread and piece.alt is not None:
                self._check_modulus(h, piece, kx, p_in)
            err = slack + spread * piece.radius
            lo += piece.weight * (a - err)
            hi += piece.weight * (b + err)
        return lo, hi

    def _check_modulus(self, h: BasicFunction, piece: Piece, kx: MeasureOracle, p: int) -> None:
        a = kx.integrate_q(h, p)
        b = self.kernel(piece.alt).integrate_q(h, p)
        dist = point_distance_q(self.mu.space, piece.point, piece.alt, p)
        allowed = self.kernel.lip * lipschitz(h) * dist[1] + 2 * pow2(-p)
        if qabs(qsub(a, b))[0] > allowed:
            raise RepresentationError(
                f"kernel {self.kernel.label} violates its declared modulus near {piece.point.label}")

    def descriptor(self):
        return {"kind": "kernel_join", "parameters": {"kernel": self.kernel.descriptor()},
                "children": [self.mu.descriptor()]}


def kernel_join(mu: MeasureOracle, kernel: Kernel, generic: bool = False) -> KernelJoin:
    return KernelJoin(mu, kernel, generic=generic)


# ---------------------------------------------------------------------------
# Maps and pushforwards.

class Map:
    """A uniformly continuous map given on names, with modulus ``omega``.

    omega(rho) bounds d(Tx, Tx') whenever d(x, x') <= rho.
    """

    cantor_prefix = False
    affine = False
    identity = False

    def __init__(self, domain: Space, codomain: Space, apply: Callable[[CauchyName], CauchyName],
                 omega: Callable[[Fraction], Fraction], label: str = "map") -> None:
        self.domain, self.codomain = domain, codomain
        self._apply = apply
        self.omega = omega
        self.label = label

    def __call__(self, x: CauchyName) -> CauchyName:
        return self._apply(x)

    def descriptor(self) -> dict:
        return {"kind": self.label, "parameters": {}}


class IdentityMap(Map):
    identity = True

    def __init__(self, space: Space) -> None:
        super().__init__(space, space, lambda x: x, lambda r: r, label="identity")

    def descriptor(self) -> dict:
        return {"kind": "identity", "parameters": {"space": self.domain.descriptor()}}


def identity_map(space: Space) -> Map:
    return IdentityMap(space)


class CantorPrefixMap(Map):
    """Cantor map acting on bits: out[:n] is a function of in[:n]."""

    cantor_prefix = True

    def __init__(self, prefix_fn: Callable[[tuple], tuple], label: str) -> None:
        self.prefix_fn = prefix_fn

        def apply(x: CauchyName) -> CauchyName:
            def bits(j: int) -> int:
                v = x(j + 1)
                src = tuple((v >> t) & 1 for t in range(j + 1))
                return prefix_fn(src)[j]

            return CANTOR.name(bits, label=f"{label}({x.label})")

        super().__init__(CANTOR, CANTOR, apply, lambda r: r, label=label)


def force_first_bit(bit: int = 0) -> CantorPrefixMap:
    return CantorPrefixMap(lambda s: (bit,) + tuple(s[1:]) if s else s, label=f"force0={bit}")


def flip_bits() -> CantorPrefixMap:
    return CantorPrefixMap(lambda s: tuple(1 - b for b in s), label="flip")


def xor_mask(mask: Sequence[int]) -> CantorPrefixMap:
    mask = tuple(mask)
    return CantorPrefixMap(
        lambda s: tuple(b ^ (mask[j] if j < len(mask) else 0) for j, b in enumerate(s)),
        label="xor" + "".join(map(str, mask)))


class AffineUnitMap(Map):
    """x -> a x + b on [0, 1], required to map [0, 1] into itself."""

    affine = True

    def __init__(self, a, b) -> None:
        a, b = Fraction(a), Fraction(b)
        if not (0 <= b <= 1 and 0 <= a + b <= 1):
            raise ValueError("affine map must send [0, 1] into [0, 1]")
        self.a, self.b = a, b

        def apply(x: CauchyName) -> CauchyName:
            def approx(k: int) -> Fraction:
                m = k + 2 + _log2_up(abs(a) + 1)
                return a * unit_value(x(m)) + b

            return UNIT.name(approx, label=f"{a}*{x.label}+{b}")

        super().__init__(UNIT, UNIT, apply, lambda r: abs(a) * r, label=f"affine({a},{b})")


class Pushforward(MeasureOracle):
    """mu_T with int f d(mu_T) = int f(T x) mu(dx)."""

    kind = "pushforward"
    check_pieces = 4

    def __init__(self, base: MeasureOracle, tmap: Map, label: str | None = None) -> None:
        if tmap.domain != base.space:
            raise ValueError("map domain differs from the measure's space")
        super().__init__(tmap.codomain, label)
        self.base, self.map = base, tmap

    def mass_bound(self) -> Fraction:
        return self.base.mass_bound()

    def _integrate_q(self, f, k):
        base, T = self.base, self.map
        if T.identity:
            return base.integrate_q(f, k)
        if isinstance(base, CylinderMeasure) and T.cantor_prefix:
            return base._integrate_cyl(f, k, transform=T.prefix_fn)
        if isinstance(base, LebesgueUnit) and T.affine and base.a == 1 and base.b == 0:
            v = pl_integral(pl_of(f, T.a, T.b))
            return v, v
        return self.generic_integrate(f, k)

    def generic_integrate(self, f: BasicFunction, k: int) -> QInterval:
        """Riemann-type sums over pieces of the base measure."""
        mass = self.base.mass_bound()
        if mass == 0:
            return ZERO, ZERO
        L = lipschitz(f)
        eps = pow2(-(k + 3)) / mass
        rho = ONE
        if L:
            while L * self.map.omega(rho) > eps:
                rho /= 2
        pieces = self.base.pieces([], ONE, rho, budget=1 << 18)
        if pieces is None:
            raise UnimeasError("the base measure cannot be partitioned for a pushforward")
        p = k + 3 + _log2_up(mass)
        lo = hi = ZERO
        for n, piece in enumerate(pieces):
            y = self.map(piece.point)
            a, b = eval_basic_q(f, y, p)
            if n < self.check_pieces and piece.alt is not None:
                self._check_modulus(piece, p)
            err = L * self.map.omega(piece.radius)
            lo += piece.weight * (a - err)
            hi += piece.weight * (b + err)
        return lo, hi

    def _check_modulus(self, piece: Piece, p: int) -> None:
        d_src = point_distance_q(self.base.space, piece.point, piece.alt, p)
        d_img = point_distance_q(self.space, self.map(piece.point), self.map(piece.alt), p)
        if d_img[0] > self.map.omega(d_src[1]) + 2 * pow2(-p):
            raise RepresentationError(f"map {self.map.label} violates its declared modulus")

    def pieces(self, keys, tol, max_radius=None, budget=1 << 15):
        base, T = self.base, self.map
        if T.identity:
            return base.pieces(keys, tol, max_radius, budget)
        if isinstance(base, CylinderMeasure) and T.cantor_prefix:
            ps = base.walk(keys, tol, max_radius, transform=T.prefix_fn, budget=budget)
            for p in ps:
                sigma = p.sigma  # type: ignore[attr-defined]
                p.point = CANTOR.basic_name(_bits_to_int(sigma))
            return ps
        return None

    def descriptor(self):
        return {"kind": "pushforward", "parameters": {"map": self.map.descriptor()},
                "children": [self.base.descriptor()]}


def pushforward(mu: MeasureOracle, tmap: Map) -> MeasureOracle:
    """Image measure; Dirac and mixture inputs are transported structurally."""
    if isinstance(mu, DiracMeasure):
        return DiracMeasure(tmap(mu.x))
    if isinstance(mu, Mixture):
        return Mixture(mu.weights, [pushforward(p, tmap) for p in mu.parts])
    if isinstance(mu, ZeroMeasure):
        return ZeroMeasure(tmap.codomain)
    return Pushforward(mu, tmap)


class TableMeasure(MeasureOracle):
    """A measure given only by its table (i, k) -> integral of the i-th basic function."""

    kind = "table"

    def __init__(self, space: Space, table: Callable[[int, int], DyadicInterval], label: str | None = None) -> None:
        super().__init__(space, label)
        self.table = table

    def _integrate_q(self, f, k):
        return self.table(index_of(f), k + 1).q()


def from_table(mu: MeasureOracle) -> TableMeasure:
    return TableMeasure(mu.space, mu.integrate, label=f"table({mu.label})")


# ---------------------------------------------------------------------------
# Weak metric on measures.

def measure_metric_q(mu: MeasureOracle, nu: MeasureOracle, k: int) -> QInterval:
    if mu.space != nu.space:
        raise ValueError("measures live on different spaces")

    def term(i: int):
        def at(p: int) -> QInterval:
            # weight 2^-(i+1) lets the difference be computed 2^(i+1) times coarser
            q = max(0, p - i - 1) + 2
            a = mu.integrate_q(i, q)
            b = nu.integrate_q(i, q) if nu is not mu else a
            lo, hi = one_minus_exp_neg(qabs(qsub(a, b)), q + 2)
            w = pow2(-(i + 1))
            return w * lo, w * hi

        return at

    iv = sum_with_tail_bound(term, lambda n: pow2(-n), k)
    lo, hi = iv.q()
    return max(ZERO, lo), hi


def measure_metric(mu: MeasureOracle, nu: MeasureOracle, k: int) -> DyadicInterval:
    """d(mu, nu) = sum_i 2^-(i+1) (1 - exp(-|int f_i dmu - int f_i dnu|)) to width 2^-k."""
    lo, hi = measure_metric_q(mu, nu, k)
    return DyadicInterval.outward(lo, hi, k + 3)


# ---------------------------------------------------------------------------
# Open and closed sets.

class OpenSet:
    """Effectively open set given by basic functions below its indicator."""

    def __init__(self, space: Space) -> None:
        self.space = space

    def lower_function(self, n: int) -> BasicFunction:
        raise NotImplementedError


class OpenSetEnum(OpenSet):
    """Union of an enumerated stream of open balls (center index, dyadic radius)."""

    def __init__(self, space: Space, balls: Union[Sequence[tuple], Callable[[int], Optional[tuple]]]) -> None:
        super().__init__(space)
        if callable(balls):
            self._get = balls
        else:
            seq = [(int(c), Fraction(r)) for c, r in balls]
            self._get = lambda j: seq[j] if j < len(seq) else None

    def balls(self, n: int) -> list[tuple]:
        out = []
        for j in range(n):
            b = self._get(j)
            if b is None:
                break
            out.append((int(b[0]), Fraction(b[1])))
        return out

    def lower_function(self, n: int) -> BasicFunction:
        parts = [ball_lower_approx(c, r, n) for c, r in self.balls(n)]
        parts = [p for p in parts if p != ZERO_FN]
        return max_of(parts)


class BallExterior(OpenSet):
    """{x : d(center, x) > radius}."""

    def __init__(self, space: Space, center: int, radius) -> None:
        super().__init__(space)
        self.center, self.radius = center, Fraction(radius)

    def lower_function(self, n: int) -> BasicFunction:
        e = pow2(-n)
        return LinComb(((ONE, One()), (-ONE, Bump(self.center, self.radius + e, self.radius + 2 * e))))


class OpenBall(OpenSet):
    def __init__(self, space: Space, center: int, radius) -> None:
        super().__init__(space)
        self.center, self.radius = center, Fraction(radius)

    def lower_function(self, n: int) -> BasicFunction:
        return ball_lower_approx(self.center, self.radius, n)


class OpenUnion(OpenSet):
    def __init__(self, parts: Sequence[OpenSet]) -> None:
        super().__init__(parts[0].space)
        self.parts = list(parts)

    def lower_function(self, n: int) -> BasicFunction:
        return max_of([p.lower_function(n) for p in self.parts])


class OpenIntersection(OpenSet):
    def __init__(self, parts: Sequence[OpenSet]) -> None:
        super().__init__(parts[0].space)
        self.parts = list(parts)

    def lower_function(self, n: int) -> BasicFunction:
        return min_of([p.lower_function(n) for p in self.parts])


class ClosedSet:
    """Effectively closed set; ``upper_function(n)`` lies above its indicator."""

    def __init__(self, space: Space) -> None:
        self.space = space

    def complement(self) -> OpenSet:
        raise NotImplementedError

    def upper_function(self, n: int) -> BasicFunction:
        return LinComb(((ONE, One()), (-ONE, self.complement().lower_function(n))))


class Complement(ClosedSet):
    def __init__(self, open_set: OpenSet) -> None:
        super().__init__(open_set.space)
        self.open_set = open_set

    def complement(self) -> OpenSet:
        return self.open_set


class ClosedBall(ClosedSet):
    """{x : d(center, x) <= radius}."""

    def __init__(self, space: Space, center: int, radius) -> None:
        super().__init__(space)
        self.center, self.radius = center, Fraction(radius)

    def complement(self) -> OpenSet:
        return BallExterior(self.space, self.center, self.radius)

    def upper_function(self, n: int) -> BasicFunction:
        return ball_upper_approx(self.center, self.radius, n)


class ClosedUnion(ClosedSet):
    def __init__(self, parts: Sequence[ClosedSet]) -> None:
        super().__init__(parts[0].space)
        self.parts = list(parts)

    def complement(self) -> OpenSet:
        return OpenIntersection([p.complement() for p in self.parts])

    def upper_function(self, n: int) -> BasicFunction:
        return max_of([p.upper_function(n) for p in self.parts])


class ClosedIntersection(ClosedSet):
    def __init__(self, parts: Sequence[ClosedSet]) -> None:
        super().__init__(parts[0].space)
        self.parts = list(parts)

    def complement(self) -> OpenSet:
        return OpenUnion([p.complement() for p in self.parts])

    def upper_function(self, n: int) -> BasicFunction:
        return min_of([p.upper_function(n) for p in self.parts])


def measure_open_lower(mu: MeasureOracle, U: OpenSet, n: int) -> Fraction:
    """Stage-n lower bound on mu(U); nondecreasing in n with supremum mu(U)."""
    lo, _ = mu.integrate_q(U.lower_function(n), n)
    return max(ZERO, lo - pow2(-n))


def norm_upper(mu: MeasureOracle, n: int) -> Fraction:
    """Nonincreasing upper bounds on the norm."""
    return mu.norm_q(n)[1] + pow2(-n)


def measure_closed_upper(mu: MeasureOracle, C: ClosedSet, n: int) -> Fraction:
    """Stage-n upper bound on mu(C); nonincreasing in n with infimum mu(C)."""
    return norm_upper(mu, n) - measure_open_lower(mu, C.complement(), n)


def integrate_lsc_lower(mu: MeasureOracle, t, n: int) -> Fraction:
    """Stage-n lower bound on the integral of a lower semicomputable t >= 0."""
    lo, _ = mu.integrate_q(t.stage(n), n)
    return max(ZERO, lo - pow2(-n))


# ---------------------------------------------------------------------------
# Descriptors.

def measure_from_descriptor(desc: dict) -> MeasureOracle:
    """Build a measure from {kind, parameters, children}."""
    from .coding import parse_dyadic
    from .spaces import name_from_descriptor, space_from_descriptor

    if not isinstance(desc, dict) or "kind" not in desc:
        raise ValueError("measure descriptor must be an object with a 'kind'")
    kind = desc["kind"]
    params = desc.get("parameters") or {}
    children = desc.get("children") or []
    if kind == "zero":
        return ZeroMeasure(space_from_descriptor(params.get("space", {"kind": "cantor"})))
    if kind == "dirac":
        space = space_from_descriptor(params.get("space", {"kind": "cantor"}))
        return DiracMeasure(name_from_descriptor(space, params["point"]))
    if kind == "atomic":
        space = space_from_descriptor(params.get("space", {"kind": "cantor"}))
        atoms = []
        for w, pt in params["atoms"]:
            name = name_from_descriptor(space, pt)
            atoms.append((parse_dyadic(str(w)), DiracMeasure(name)))
        if not atoms:
            return ZeroMeasure(space)
        return mixture([w for w, _ in atoms], [m for _, m in atoms])
    if kind == "bernoulli":
        return bernoulli(parse_dyadic(str(params.get("p", "1/2"))))
    if kind == "uniform_cantor":
        return uniform_cantor()
    if kind == "lebesgue":
        a = parse_dyadic(str(params.get("a", "1")))
        b = parse_dyadic(str(params.get("b", "0")))
        return LebesgueUnit(a, b)
    if kind == "mixture":
        ws = [parse_dyadic(str(w)) for w in params["weights"]]
        return mixture(ws, [measure_from_descriptor(c) for c in children])
    if kind == "product":
        if len(children) != 2:
            raise ValueError("product takes exactly two children")
        return ProductMeasure(measure_from_descriptor(children[0]), measure_from_descriptor(children[1]))
    if kind == "pushforward":
        return pushforward(measure_from_descriptor(children[0]), map_from_descriptor(params["map"]))
    if kind == "kernel_join":
        mu = measure_from_descriptor(children[0])
        return KernelJoin(mu, kernel_from_descriptor(params["kernel"], mu.space))
    raise ValueError(f"unknown measure kind: {kind!r}")


def map_from_descriptor(desc: dict) -> Map:
    from .coding import parse_dyadic

    kind = desc.get("kind")
    params = desc.get("parameters") or {}
    if kind == "force_first_bit":
        return force_first_bit(int(params.get("bit", 0)))
    if kind == "flip":
        return flip_bits()
    if kind == "xor":
        return xor_mask([int(c) for c in str(params["mask"])])
    if kind == "affine":
        return AffineUnitMap(parse_dyadic(str(params["a"])), parse_dyadic(str(params["b"])))
    if kind == "identity":
        from .spaces import space_from_descriptor

        return identity_map(space_from_descriptor(params.get("space", {"kind": "cantor"})))
    raise ValueError(f"unknown map kind: {kind!r}")


def kernel_from_descriptor(desc: dict, source: Space) -> Kernel:
    kind = desc.get("kind")
    children = desc.get("children") or []
    if kind == "constant":
        return constant_kernel(source, measure_from_descriptor(children[0]))
    if kind == "diagonal":
        return diagonal_kernel(source)
    raise ValueError(f"unknown kernel kind: {kind!r}")


__all__ = [
    "AffineUnitMap",
    "BallExterior",
    "CantorPrefixMap",
    "ClosedBall",
    "ClosedIntersection",
    "ClosedSet",
    "ClosedUnion",
    "Complement",
    "CylinderMeasure",
    "DiracMeasure",
    "Kernel",
    "KernelJoin",
    "LebesgueUnit",
    "Map",
    "MeasureOracle",
    "Mixture",
    "OpenBall",
    "OpenIntersection",
    "OpenSet",
    "OpenSetEnum",
    "OpenUnion",
    "Piece",
    "ProductMeasure",
    "Pushforward",
    "TableMeasure",
    "ZeroMeasure",
    "atomic",
    "bernoulli",
    "conditioned_cantor",
    "constant_kernel",
    "diagonal_kernel",
    "dirac",
    "flip_bits",
    "force_first_bit",
    "from_table",
    "identity_map",
    "integrate_basic",
    "integrate_lsc_lower",
    "kernel_join",
    "lebesgue_unit",
    "measure_closed_upper",
    "measure_from_descriptor",
    "measure_metric",
    "measure_open_lower",
    "mixture",
    "norm",
    "norm_upper",
    "pl_integral",
    "pl_of",
    "product",
    "pushforward",
    "uniform_cantor",
    "xor_mask",
]
