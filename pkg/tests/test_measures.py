from __future__ import annotations

import random
from fractions import Fraction

import pytest

from unimeas.basis import Bump, Hat, LinComb, Lift, Max, Min, One, Tensor, basic_function
from unimeas.exact import pow2
from unimeas.measures import (
    ClosedBall,
    Complement,
    OpenBall,
    OpenSetEnum,
    OpenUnion,
    ZeroMeasure,
    atomic,
    bernoulli,
    conditioned_cantor,
    constant_kernel,
    diagonal_kernel,
    dirac,
    flip_bits,
    force_first_bit,
    from_table,
    identity_map,
    integrate_basic,
    integrate_lsc_lower,
    kernel_join,
    lebesgue_unit,
    measure_closed_upper,
    measure_from_descriptor,
    measure_metric,
    measure_open_lower,
    mixture,
    norm,
    product,
    pushforward,
    uniform_cantor,
    xor_mask,
    AffineUnitMap,
)
from unimeas.spaces import CANTOR, UNIT
from unimeas.semicomp import make_lsc_from_stages
from unimeas.basis import const

from oracles import bernoulli_mass, cantor_sum, quad_unit

F = Fraction
K = 16
HALF = UNIT.index_of("1/2")
B0 = Bump(0, F(1, 4), F(1, 2))


def _contains(iv, v, slack=0):
    return iv.lo_q - slack <= v <= iv.hi_q + slack


# -- dirac

def test_dirac_one():
    assert integrate_basic(dirac(UNIT.name(F(1, 3))), One(), K).contains(1)


def test_dirac_bump_at_center():
    assert integrate_basic(dirac(UNIT.basic_name(HALF)), Bump(HALF, F(1, 8), F(1, 4)), K).contains(1)


def test_dirac_is_evaluation():
    from unimeas.basis import eval_basic

    x = UNIT.name(lambda k: F(round(F(2, 7) * 2 ** (k + 2)), 2 ** (k + 2)))
    f = Max(B0, LinComb(((F(1, 2), Bump(HALF, F(1, 8), F(1, 4))),)))
    a, b = integrate_basic(dirac(x), f, K), eval_basic(f, x, K)
    assert a.lo_q <= b.hi_q and b.lo_q <= a.hi_q


# -- bernoulli

def test_lambda_bump_quarter():
    assert integrate_basic(uniform_cantor(), B0, K).q() == (F(1, 4), F(1, 4))


def test_bernoulli_zero_is_dirac_zero():
    mu, d = bernoulli(0), dirac(CANTOR.name("0"))
    for i in range(1, 60):
        assert _contains(integrate_basic(mu, i, K), integrate_basic(d, i, K).mid(), pow2(-K))


def test_bernoulli_norm():
    for p in (F(0), F(1, 4), F(1, 2), F(1)):
        assert integrate_basic(bernoulli(p), One(), K).q() == (1, 1)


def test_bernoulli_matches_cylinder_oracle():
    b = Bump(CANTOR.index_of("0110"), F(1, 16), F(1, 4))
    f = Min(LinComb(((F(3), b), (F(-1, 2), One()))), B0)
    for p in (F(1, 2), F(1, 4)):
        assert integrate_basic(bernoulli(p), f, K).contains(cantor_sum(f, bernoulli_mass(p)))


# -- lebesgue

def test_lebesgue_one():
    assert integrate_basic(lebesgue_unit(), One(), K).q() == (1, 1)


def test_lebesgue_bump_at_zero():
    assert integrate_basic(lebesgue_unit(), B0, K).contains(F(3, 8))


def test_lebesgue_bump_at_half():
    # frozen from the adaptive quadrature oracle at 2^-20
    assert integrate_basic(lebesgue_unit(), Bump(HALF, F(1, 8), F(1, 4)), K).contains(F(3, 8))


def test_lebesgue_matches_quadrature():
    f = LinComb(((F(2), Min(B0, Bump(UNIT.index_of("3/8"), F(1, 16), F(3, 16)))),
                 (F(-1, 4), Hat(UNIT.index_of("3/4"), F(1, 8)))))
    assert _contains(integrate_basic(lebesgue_unit(), f, K), F(quad_unit(f)), pow2(-20))


# -- pushforward

def test_pushforward_identity():
    mu = lebesgue_unit()
    nu = pushforward(mu, identity_map(UNIT))
    for i in range(1, 40):
        assert integrate_basic(nu, i, K).q() == integrate_basic(mu, i, K).q()


def test_pushforward_dirac_transport():
    x = CANTOR.name("1101")
    nu = pushforward(dirac(x), flip_bits())
    d = dirac(CANTOR.name("0010" + "1" * 40))
    for i in range(1, 40):
        assert _contains(integrate_basic(nu, i, K), integrate_basic(d, i, K).mid(), pow2(-K))


def test_pushforward_force_first_bit():
    # frozen from cylinder brute force over the image measure
    assert integrate_basic(pushforward(uniform_cantor(), force_first_bit(0)), B0, K).contains(F(1, 2))


def test_pushforward_affine_change_of_basis():
    T = AffineUnitMap(F(1, 2), F(1, 4))
    nu = pushforward(lebesgue_unit(), T)
    f = Bump(HALF, F(1, 8), F(1, 4))
    # f(x/2 + 1/4) is Bump(1/2, 1/4, 1/2) in x
    assert _contains(integrate_basic(nu, f, K), F(3, 4), 2 * pow2(-K))


# -- product

def test_product_of_diracs():
    x, y = CANTOR.name("1"), UNIT.basic_name(HALF)
    P = product(dirac(x), dirac(y))
    z = P.space.name([x, y])
    f = Max(Lift(0, B0), Lift(1, Bump(HALF, F(1, 8), F(1, 4))))
    assert integrate_basic(P, f, K).contains(integrate_basic(dirac(z), f, K).mid())


def test_product_norm():
    mu = mixture([F(1, 2)], [uniform_cantor()])
    assert integrate_basic(product(mu, lebesgue_unit()), One(), K).contains(F(1, 2))


def test_product_separable():
    f, g = B0, Bump(HALF, F(1, 8), F(1, 4))
    P = product(uniform_cantor(), lebesgue_unit())
    assert integrate_basic(P, Tensor(Lift(0, f), Lift(1, g)), K).contains(F(1, 4) * F(3, 8))


def test_product_iterated_both_orders():
    P = product(uniform_cantor(), bernoulli(F(1, 4)))
    g = Min(Lift(0, B0), Lift(1, Bump(1, F(1, 8), F(1, 4))))
    a, b = P.iterated(g, K, 0), P.iterated(g, K, 1)
    assert abs((a[0] + a[1]) / 2 - (b[0] + b[1]) / 2) <= 2 * pow2(-K)


# -- kernels

def test_constant_kernel_is_product():
    mu, nu = uniform_cantor(), bernoulli(F(1, 4))
    J, P = kernel_join(mu, constant_kernel(CANTOR, nu)), product(mu, nu)
    g = Max(Lift(0, B0), Lift(1, Bump(1, F(1, 8), F(1, 4))))
    assert abs(integrate_basic(J, g, K).mid() - integrate_basic(P, g, K).mid()) <= 2 * pow2(-K)


def test_diagonal_kernel_collapses():
    mu = lebesgue_unit()
    J = kernel_join(mu, diagonal_kernel(UNIT))
    g = Min(Lift(0, B0), Lift(1, Bump(0, F(1, 8), F(3, 8))))
    # f(x, x) = min of the two bumps at x
    assert integrate_basic(J, g, K).contains(integrate_basic(mu, Min(B0, Bump(0, F(1, 8), F(3, 8))), K + 4).mid())


def test_kernel_join_norm():
    mu = mixture([F(3, 4)], [lebesgue_unit()])
    assert integrate_basic(kernel_join(mu, diagonal_kernel(UNIT)), One(), K).contains(F(3, 4))


# -- mixture and norm

def test_mixture_single():
    mu = bernoulli(F(1, 4))
    m = mixture([1], [mu])
    for i in range(30):
        assert integrate_basic(m, i, K).q() == integrate_basic(mu, i, K).q()


def test_mixture_thirds_norm():
    m = mixture([F(1, 3), F(2, 3)], [uniform_cantor(), dirac(CANTOR.name("1"))])
    assert norm(m, K).contains(1)


def test_mixture_idempotent():
    lam = uniform_cantor()
    m = mixture([F(1, 2), F(1, 2)], [lam, lam])
    for i in range(40):
        assert integrate_basic(m, i, K).q() == integrate_basic(lam, i, K).q()


def test_mixture_all_zero_weights():
    assert isinstance(mixture([0, 0], [uniform_cantor(), uniform_cantor()]), ZeroMeasure)


def test_norms():
    assert norm(dirac(CANTOR.name("0")), K).contains(1)
    assert norm(ZeroMeasure(CANTOR), K).q() == (0, 0)
    assert norm(atomic(UNIT, [(F(1, 4), 0), (F(3, 8), 2)]), K).contains(F(5, 8))


# -- sets

def test_open_lower_empty():
    U = OpenSetEnum(CANTOR, [])
    assert all(measure_open_lower(uniform_cantor(), U, n) == 0 for n in range(10))


def test_open_lower_cylinder():
    U = OpenSetEnum(CANTOR, [(0, F(3, 4))])
    vals = [measure_open_lower(uniform_cantor(), U, n) for n in range(2, 16)]
    assert vals == sorted(vals) and vals[-1] <= F(1, 2) and vals[-1] >= F(1, 2) - pow2(-10)


def test_open_lower_punctured_interval():
    U = OpenSetEnum(UNIT, [(UNIT.index_of("1/4"), F(1, 4)), (UNIT.index_of("3/4"), F(1, 4))])
    vals = [measure_open_lower(lebesgue_unit(), U, n) for n in range(2, 16)]
    assert vals == sorted(vals) and vals[-1] <= 1 and vals[-1] >= 1 - pow2(-10)


def test_closed_upper_whole_space():
    C = Complement(OpenSetEnum(UNIT, []))
    assert measure_closed_upper(lebesgue_unit(), C, 8) == 1 + pow2(-8)


def test_closed_upper_singleton_null():
    C = ClosedBall(CANTOR, 0, 0)
    vals = [measure_closed_upper(uniform_cantor(), C, n) for n in range(2, 16)]
    assert vals == sorted(vals, reverse=True) and vals[-1] <= pow2(-10)


def test_closed_upper_atom():
    C = ClosedBall(UNIT, HALF, 0)
    mu = dirac(UNIT.basic_name(HALF))
    assert all(measure_closed_upper(mu, C, n) >= 1 for n in range(2, 14))


def test_sandwich_meets_for_null_boundary():
    B = OpenBall(UNIT, 0, F(3, 8))
    lo = measure_open_lower(lebesgue_unit(), B, 16)
    hi = measure_closed_upper(lebesgue_unit(), ClosedBall(UNIT, 0, F(3, 8)), 16)
    assert lo <= F(3, 8) <= hi and hi - lo <= pow2(-10)
    assert measure_open_lower(lebesgue_unit(), OpenUnion([B, B]), 12) <= 1 + pow2(-12)


# -- lsc integrals

def test_lsc_zero():
    t = make_lsc_from_stages(lambda n: LinComb(()))
    assert all(integrate_lsc_lower(uniform_cantor(), t, n) == 0 for n in range(6))


def test_lsc_constant_three():
    t = make_lsc_from_stages(lambda n: const(3))
    vals = [integrate_lsc_lower(uniform_cantor(), t, n) for n in range(12)]
    assert vals == sorted(vals) and vals[-1] >= 3 - pow2(-10) and vals[-1] <= 3


def test_lsc_cylinder_sum():
    from unimeas.randtests import sum_sequential_to_integral, zeros_cylinder_test

    lam = uniform_cantor()
    t = sum_sequential_to_integral(zeros_cylinder_test()).lsc(lam)
    vals = [integrate_lsc_lower(lam, t, n) for n in range(2, 14)]
    assert vals == sorted(vals)
    # U_0 is the whole space, so the limit is 1 + sum_{n >= 1} 2^-n = 2
    assert 2 - pow2(-8) <= vals[-1] <= 2


# -- metric

def test_metric_self_zero():
    for mu in (uniform_cantor(), bernoulli(F(1, 4)), dirac(CANTOR.name("01"))):
        iv = measure_metric(mu, mu, 12)
        assert iv.contains(0) and iv.hi_q <= pow2(-12)


def test_metric_symmetric():
    a, b = uniform_cantor(), bernoulli(F(1, 4))
    assert measure_metric(a, b, 10) == measure_metric(b, a, 10)


def test_metric_lambda_bernoulli_positive():
    # int B0 is 1/4 under lambda and 9/16 under Bernoulli(1/4)
    assert integrate_basic(bernoulli(F(1, 4)), B0, K).contains(F(9, 16))
    iv = measure_metric(uniform_cantor(), bernoulli(F(1, 4)), 12)
    # frozen: first 12 oracle terms (cylinder sums, float exp), tail <= 2^-12
    assert iv.lo_q > 0 and _contains(iv, F(0.05967410515285586), pow2(-12))


def test_metric_spaces_must_match():
    with pytest.raises(ValueError):
        measure_metric(uniform_cantor(), lebesgue_unit(), 4)


# -- representation

def test_table_roundtrip():
    mu = bernoulli(F(1, 4))
    t = from_table(mu)
    for i in range(60):
        for k in (4, 10, 16):
            a, b = integrate_basic(t, i, k), integrate_basic(mu, i, k)
            assert a.lo_q <= b.hi_q and b.lo_q <= a.hi_q and a.width() <= pow2(-k)


def test_width_contract_random():
    rng = random.Random(3)
    for mu in (uniform_cantor(), lebesgue_unit(), bernoulli(F(1, 4)), dirac(UNIT.name(F(1, 3)))):
        for _ in range(25):
            i, k = rng.randrange(2000), rng.randrange(2, 20)
            assert integrate_basic(mu, basic_function(i), k).width() <= pow2(-k)


def test_conditioned_cantor_zero_cylinder():
    mu = conditioned_cantor(uniform_cantor(), 2, 1)
    assert mu.cylinder_mass((0, 0, 0)) == 0 and mu.cylinder_mass((0, 0, 1)) == F(1, 4)
    assert norm(mu, K).contains(1)


def test_xor_mask_preserves_lambda():
    nu = pushforward(uniform_cantor(), xor_mask([1, 0, 1]))
    assert integrate_basic(nu, B0, K).contains(F(1, 4))


def test_descriptor_roundtrip():
    desc = {"kind": "mixture", "parameters": {"weights": ["1/2", "1/4"]},
            "children": [{"kind": "bernoulli", "parameters": {"p": "1/4"}},
                         {"kind": "dirac", "parameters": {"point": {"bits": "1"}}}]}
    mu = measure_from_descriptor(desc)
    assert norm(mu, K).contains(F(3, 4))
    again = measure_from_descriptor(mu.descriptor())
    for i in range(20):
        assert integrate_basic(again, i, K).q() == integrate_basic(mu, i, K).q()
    with pytest.raises(ValueError):
        measure_from_descriptor({"kind": "nope"})
