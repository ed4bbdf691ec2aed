from __future__ import annotations

import io
from fractions import Fraction

import pytest

from unimeas.basis import Bump, LinComb, One, ZERO_FN, ball_lower_approx, bounds, const, eval_basic_q, max_of
from unimeas.errors import MonotonicityError, OutOfRange, PreconditionError
from unimeas.exact import RealStream, pow2
from unimeas.measures import ZeroMeasure, bernoulli, dirac, lebesgue_unit, mixture, uniform_cantor
from unimeas.randtests import constant_test, tent_test, zero_measure_test
from unimeas.semicomp import (
    LscFunction,
    McShaneExtension,
    approx_family,
    calibrate,
    cutoff,
    eval_deficiency,
    integral_inverse,
    luzin_cap,
    make_lsc_from_stages,
    mcshane_extend,
    normalize,
    residual_calibrate,
    write_transcript,
)
from unimeas.spaces import CANTOR, UNIT

F = Fraction
HALF = UNIT.index_of("1/2")


def _pts(n=4):
    # the dyadic grid of step 2^-n
    return [UNIT.basic_name(UNIT.index_of(F(j, 2 ** n))) for j in range(2 ** n + 1)]


# -- lsc functions

def test_lsc_constant_n_is_infinite():
    t = make_lsc_from_stages(lambda n: const(n))
    x = UNIT.basic_name(0)
    assert [t.lower(x, d) for d in (5, 10, 20)] == [4, 9, 19]


def test_lsc_geometric_limit_one():
    t = make_lsc_from_stages(lambda n: const(1 - pow2(-n)))
    x = UNIT.basic_name(HALF)
    assert t.lower(x, 30) == 1 - pow2(-29)


def test_lsc_open_set_indicator():
    # union of B(1/4, 1/8) and B(3/4, 1/8)
    balls = [(UNIT.index_of("1/4"), F(1, 8)), (UNIT.index_of("3/4"), F(1, 8))]
    t = make_lsc_from_stages(lambda n: max_of([ball_lower_approx(c, r, n) for c, r in balls]), clamp=False)
    for x in _pts(4):
        v = UNIT.basic_point(x.basic)
        inside = any(abs(v - UNIT.basic_point(c)) < r for c, r in balls)
        assert t.lower(x, 24) == (1 if inside else 0)


def test_lsc_monotonicity_violation():
    t = LscFunction(lambda n: const(F(1, n + 1)), clamp=False, label="decreasing")
    with pytest.raises(MonotonicityError):
        t.transcript(UNIT.basic_name(0), 4)


def test_lsc_clamp():
    t = make_lsc_from_stages(lambda n: const(5))
    assert [eval_basic_q(t.stage(n), UNIT.basic_name(0), 10)[0] for n in range(7)] == [0, 1, 2, 3, 4, 5, 5]


def test_transcript_csv():
    t = make_lsc_from_stages(lambda n: const(1 - pow2(-n)))
    buf = io.StringIO()
    text = write_transcript(t.transcript(UNIT.basic_name(0), 3), buf)
    assert text == buf.getvalue() == "stage,lo,hi\n0,0,0\n1,1/2,1/2\n2,3/4,3/4\n"


# -- normalization

def test_normalize_zero_test():
    s = normalize(constant_test(0))
    mu = uniform_cantor()
    assert s.integral(mu, 16).contains(1)
    assert eval_deficiency(s, mu, CANTOR.basic_name(0), 12) >= 1 - pow2(-10)


def test_normalize_one_test():
    s = normalize(constant_test(1))
    mu = bernoulli(F(1, 4))
    assert s.integral(mu, 16).contains(1)
    v = eval_deficiency(s, mu, CANTOR.basic_name(3), 14)
    assert 1 - pow2(-10) <= v <= 1


def test_normalize_contains_one():
    mu = lebesgue_unit()
    for t in (tent_test(UNIT.basic_name(HALF)), zero_measure_test(), constant_test(3)):
        s = normalize(t)
        assert s.normalized
        assert s.integral(mu, 16).contains(1)
        assert s.integral(mu, 16).width() <= pow2(-16)


def test_normalize_floor_positive():
    s = normalize(constant_test(3))
    mu = mixture([F(1, 2)], [lebesgue_unit()])
    g = s.floor(mu)
    assert bounds(g)[0] > 0


def test_normalize_zero_measure_rejected():
    s = normalize(constant_test(1))
    with pytest.raises(PreconditionError):
        s.integral(ZeroMeasure(UNIT), 4)


# -- interpolated families

def test_approx_family_integer_endpoints():
    t = make_lsc_from_stages(lambda n: const(F(n, 2)))
    fam = approx_family(t, uniform_cantor())
    assert bounds(fam.at(0)) == (0, 0)
    for n in range(5):
        assert bounds(fam.at(n)) == bounds(t.stage(n))


def test_approx_family_midpoint():
    t = make_lsc_from_stages(lambda n: const(F(n * n, 4)))
    fam = approx_family(t, uniform_cantor())
    for n in range(4):
        lo, hi = bounds(fam.at(n + F(1, 2)))
        a, b = bounds(t.stage(n))[0], bounds(t.stage(n + 1))[0]
        assert lo == hi == (a + b) / 2


def test_approx_family_bounded_by_r_plus_one():
    t = make_lsc_from_stages(lambda n: const(100))
    fam = approx_family(t, uniform_cantor())
    for r in (F(0), F(1, 4), F(3, 2), F(7, 2), F(10)):
        assert bounds(fam.at(r))[1] <= r + 1


def test_approx_family_strict_with_floor():
    t = make_lsc_from_stages(lambda n: const(2))
    fam = approx_family(t, uniform_cantor(), floor=One())
    vals = [bounds(fam.at(r))[0] for r in (F(0), F(1, 2), F(1), F(3, 2), F(2), F(5, 2))]
    assert all(b > a for a, b in zip(vals, vals[1:]))


# -- inversion

def _one_minus_2_neg(r, p):
    from unimeas.semicomp import _two_pow_neg

    lo, hi = _two_pow_neg(r, p)
    return 1 - hi, 1 - lo


def test_inverse_geometric():
    r = integral_inverse(_one_minus_2_neg, F(1, 2), 20, sup=F(1))
    assert abs(r - 1) <= pow2(-12)


def test_inverse_zero_target():
    assert integral_inverse(_one_minus_2_neg, 0, 20, sup=F(1)) == 0


def test_inverse_linear():
    r = integral_inverse(lambda r, p: (r / 2, r / 2), F(1), 20)
    assert r == 2


def test_inverse_out_of_range():
    with pytest.raises(OutOfRange):
        integral_inverse(_one_minus_2_neg, F(1), 10, sup=F(1))
    with pytest.raises(OutOfRange):
        integral_inverse(lambda r, p: (r / 2, r / 2), F(-1), 10)


def test_inverse_stream_target():
    target = RealStream.constant(F(1, 3))
    r = integral_inverse(lambda r, p: (r, r), target, 20)
    assert abs(r - F(1, 3)) <= pow2(-20)


# -- calibration

def _normalized_family(mu):
    s = normalize(tent_test(UNIT.basic_name(HALF)))
    return calibrate(approx_family(s.lsc(mu), mu), sup=F(1), prec=20)


def test_calibrate_zero():
    g = _normalized_family(lebesgue_unit())
    assert bounds(g.at(0)) == (0, 0)


def test_calibrate_half():
    mu = lebesgue_unit()
    g = _normalized_family(mu)
    lo, hi = g.integral_q(F(1, 2), 20)
    assert F(1, 2) - pow2(-16) <= lo and hi <= F(1, 2) + pow2(-16)


def test_calibrate_monotone():
    mu = lebesgue_unit()
    g = _normalized_family(mu)
    for x in _pts(3):
        a = eval_basic_q(g.at(F(1, 4)), x, 20)
        b = eval_basic_q(g.at(F(3, 4)), x, 20)
        assert a[0] <= b[1] + pow2(-20)


def test_calibrate_range():
    g = _normalized_family(lebesgue_unit())
    with pytest.raises(OutOfRange):
        g.at(F(1))


# -- residual family

def test_residual_constant_two():
    mu = uniform_cantor()
    t = constant_test(2)
    fam = residual_calibrate(t, mu)
    lo, hi = fam.integral_q(F(1), 24)
    # int (t - f(1)) = 2 - int f(1) should be 1/2
    assert abs(2 - (lo + hi) / 2 - F(1, 2)) <= pow2(-16)


def test_residual_at_zero_is_one():
    mu = uniform_cantor()
    fam = residual_calibrate(constant_test(1), mu)
    lo, hi = fam.integral_q(F(0), 24)
    assert abs(1 - (lo + hi) / 2 - 1) <= pow2(-12)


def test_residual_halves():
    mu = lebesgue_unit()
    t = constant_test(2)
    fam = residual_calibrate(t, mu)
    res = [2 - sum(fam.integral_q(F(r), 30)) / 2 for r in range(4)]
    for a, b in zip(res, res[1:]):
        assert abs(b / a - F(1, 2)) <= pow2(-10)


def test_residual_needs_t_at_least_one():
    with pytest.raises(PreconditionError):
        residual_calibrate(constant_test(F(1, 2)), uniform_cantor())


# -- Luzin cap

def test_cap_constant_two():
    mu = uniform_cantor()
    cap = luzin_cap(constant_test(2), mu, 2)
    for x in (CANTOR.basic_name(0), CANTOR.basic_name(5)):
        lo, hi = cap.eval_q(x, 12)
        assert lo <= 2 <= hi + pow2(-12)
        assert hi - lo <= pow2(-10)


def test_cap_below_test():
    mu = lebesgue_unit()
    t = constant_test(2)
    cap = luzin_cap(t, mu, 1)
    for x in _pts(4):
        lo, hi = cap.eval_q(x, 10)
        assert hi <= 2 + pow2(-10)


# -- cut-off

def test_cutoff_no_truncation():
    mu = uniform_cantor()
    fam = calibrate(approx_family(normalize(constant_test(1)).lsc(mu), mu), sup=F(1), prec=20)
    c = cutoff(fam, 5)
    x = CANTOR.basic_name(0)
    assert c.r_at(12) == 1 - pow2(-12)
    assert eval_basic_q(c.stage(12), x, 20)[0] >= 1 - pow2(-8)


def test_cutoff_zero_budget():
    mu = uniform_cantor()
    fam = calibrate(approx_family(normalize(constant_test(1)).lsc(mu), mu), sup=F(1), prec=20)
    c = cutoff(fam, 0)
    assert all(bounds(c.stage(n)) == (0, 0) for n in range(6))


def test_cutoff_half():
    mu = lebesgue_unit()
    fam = _normalized_family(mu)
    c = cutoff(fam, F(1, 2))
    lo, hi = mu.integrate_q(c.stage(14), 20)
    assert abs(lo - F(1, 2)) <= pow2(-12)


def test_cutoff_monotone_in_budget():
    mu = lebesgue_unit()
    fam = _normalized_family(mu)
    a, b = cutoff(fam, F(1, 4)), cutoff(fam, F(1, 2))
    for x in _pts(3):
        va = eval_basic_q(a.stage(10), x, 20)
        vb = eval_basic_q(b.stage(10), x, 20)
        assert va[0] <= vb[1] + pow2(-20)


# -- McShane extension

def test_mcshane_two_points():
    f = mcshane_extend(UNIT, [(0, F(0)), (1, F(1))], 1)
    lo, hi = eval_basic_q(f, UNIT.basic_name(HALF), 20)
    assert lo <= F(1, 2) <= hi


def test_mcshane_agrees_on_data():
    data = [(UNIT.index_of(F(j, 8)), F(j % 3, 4)) for j in range(9)]
    f = mcshane_extend(UNIT, data, 8)
    for i, c in data:
        assert eval_basic_q(f, UNIT.basic_name(i), 20) == (c, c)


def test_mcshane_constant():
    f = mcshane_extend(CANTOR, [(0, F(3, 4)), (5, F(3, 4))], 2)
    assert bounds(f) == (F(3, 4), F(3, 4))


def test_mcshane_empty():
    with pytest.raises(PreconditionError):
        mcshane_extend(UNIT, [], 1)


def test_mcshane_preserves_sup_inf():
    data = [(UNIT.index_of(F(j, 4)), F(j, 4)) for j in range(5)]
    f = mcshane_extend(UNIT, data, 1)
    lo, hi = bounds(f)
    assert lo >= 0 and hi <= 1


def test_located_extension_first_twenty_points():
    # K = {0} u {2^-j}, f(y) = y (1-Lipschitz); y_j is the j-th point
    def dense(j):
        y = F(0) if j == 0 else pow2(-(j - 1))
        return UNIT.basic_name(UNIT.index_of(y)), y

    def net(eps):
        n = 1
        while pow2(-(n - 1)) > eps:
            n += 1
        return n + 1

    ext = McShaneExtension(UNIT, dense, net, 1, 0, 1)
    for j in range(20):
        y, c = dense(j)
        lo, hi = ext.eval_q(y, 14)
        assert lo - pow2(-12) <= c <= hi + pow2(-12)
    lo, hi = ext.eval_q(UNIT.basic_name(UNIT.index_of(F(3, 4))), 12)
    assert lo - pow2(-10) <= F(3, 4) <= hi + pow2(-10)
