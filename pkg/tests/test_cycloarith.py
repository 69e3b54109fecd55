import cmath

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhi.cycloarith import (
    EvenN,
    PoleHit,
    TooSmall,
    ZeroArgument,
    bracket,
    common_nth_roots,
    g_abs_squared_residual,
    g_func,
    h_func,
    make_context,
    nth_root,
    omega,
    omega_table,
    per_delta,
)

odd_N = st.sampled_from([3, 5, 7, 9, 11])
small = st.complex_numbers(max_magnitude=0.9, allow_nan=False, allow_infinity=False)


def g_oracle(N, x, dps=40):
    # extended-precision product with the same rotated cuts
    mpmath.mp.dps = dps
    eps = mpmath.mpf("1e-3")
    total = mpmath.mpc(0)
    for j in range(1, N):
        u = 1 - mpmath.mpc(x) * mpmath.exp(2j * mpmath.pi * j / N)
        total += mpmath.mpf(j) / N * (mpmath.log(u * mpmath.exp(-1j * eps)) + 1j * eps)
    return complex(mpmath.exp(total))


def test_context_definitions():
    c3 = make_context(3)
    assert c3.p == 1
    assert abs(c3.zeta - cmath.exp(2j * cmath.pi / 3)) < 1e-15
    c5 = make_context(5)
    assert c5.p == 2
    assert abs(c5.zeta_half - (-cmath.exp(1j * cmath.pi / 5))) < 1e-14
    assert abs(c5.zeta_half ** 2 - c5.zeta) < 1e-14


def test_context_rejects_bad_N():
    with pytest.raises(EvenN):
        make_context(4)
    with pytest.raises(TooSmall):
        make_context(1)


def test_omega_trivial_cases():
    ctx = make_context(5)
    assert omega(ctx, 0.3, 0.7, 1.1, 0) == 1
    for n in range(7):
        assert abs(omega(ctx, 0, 2.0, 2.0, n) - 1) < 1e-14


def test_omega_periodic_on_fermat_curve():
    ctx = make_context(3)
    rng = np.random.default_rng(0)
    for _ in range(10):
        x, z = rng.normal(size=2) + 1j * rng.normal(size=2)
        y = nth_root(ctx, z ** 3 - x ** 3)
        for n in range(4):
            a = omega(ctx, x, y, z, n)
            b = omega(ctx, x, y, z, n + 3)
            assert abs(a - b) <= 1e-10 * abs(a)


def test_omega_table_matches_scalar():
    ctx = make_context(7)
    tab = omega_table(ctx, 0.4 + 0.2j, 1.3, 0.9 - 0.1j)
    for n in range(7):
        assert abs(tab[n] - omega(ctx, 0.4 + 0.2j, 1.3, 0.9 - 0.1j, n)) < 1e-12


def test_omega_pole():
    ctx = make_context(3)
    with pytest.raises(PoleHit):
        omega(ctx, ctx.zeta.conjugate(), 1.0, 1.0, 1)
    with pytest.raises(ZeroArgument):
        omega(ctx, 1, 1, 0, 1)


@pytest.mark.parametrize("N", range(3, 52, 2))
def test_g_at_one_has_modulus_sqrt_N(N):
    assert g_abs_squared_residual(N) <= 1e-12


def test_g_at_zero_is_one():
    assert g_func(make_context(7), 0) == 1


def test_g_matches_multiprecision_oracle():
    ctx = make_context(3)
    x = 0.4 + 0.1j
    ref = g_oracle(3, x)
    assert abs(g_func(ctx, x) - ref) <= 1e-12 * abs(ref)


@settings(max_examples=30, deadline=None)
@given(N=odd_N, x=small)
def test_g_oracle_property(N, x):
    ctx = make_context(N)
    ref = g_oracle(N, x, dps=30)
    assert abs(g_func(ctx, x) - ref) <= 1e-11 * max(1.0, abs(ref))


def test_h_values():
    ctx = make_context(3)
    assert abs(h_func(ctx, 1.0) - 1) < 1e-14
    x = 0.4 + 0.1j
    expect = x ** -1 * g_oracle(3, x) / g_oracle(3, 1.0)
    assert abs(h_func(ctx, x) - expect) < 1e-12
    with pytest.raises(ZeroArgument):
        h_func(ctx, 0)


def test_bracket_values():
    ctx = make_context(5)
    assert bracket(ctx, 1.0) == 1
    assert abs(bracket(ctx, ctx.zeta)) < 1e-14
    assert abs(bracket(ctx, 0.0) - 1 / 5) < 1e-15


def test_per_delta():
    ctx = make_context(5)
    assert per_delta(ctx, 0) == 1
    assert per_delta(ctx, 5) == 1
    assert per_delta(ctx, -10) == 1
    assert per_delta(ctx, 1) == 0


def test_common_nth_roots_examples():
    ctx = make_context(3)
    r = common_nth_roots(ctx, 1, 1, -2)
    assert r[:2] == (1, 1)
    assert abs(r[2] - cmath.exp(cmath.log(-2) / 3)) < 1e-15
    r = common_nth_roots(ctx, 8, -1, -7)
    assert abs(r[0] - 2) < 1e-14
    assert all(abs(v ** 3 - u) < 1e-12 for v, u in zip(r, (8, -1, -7)))


@settings(max_examples=50, deadline=None)
@given(N=odd_N, u=st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3), t=st.floats(0.1, 10))
def test_nth_root_homogeneous_under_positive_scaling(N, u, t):
    ctx = make_context(N)
    r = nth_root(ctx, u)
    assert abs(r ** N - u) <= 1e-9 * abs(u)
    assert abs(nth_root(ctx, t ** N * u) - t * r) <= 1e-9 * t * abs(r)
