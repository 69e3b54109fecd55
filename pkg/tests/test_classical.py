import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhi.classical import Degenerate, OutOfDomain, bloch_wigner, five_term_check, li2, rogers_L, volume
from qhi.decor import ideal_transit_2_3

PI2_6 = math.pi ** 2 / 6


def mp_li2(z):
    return complex(mpmath.polylog(2, z))


def test_rogers_endpoints():
    assert abs(rogers_L(1)) < 1e-15
    assert abs(rogers_L(0) + PI2_6) < 1e-15


def test_rogers_half_against_quadrature():
    # L(x) = -1/2 int_0^x (log(1-t)/t + log(t)/(1-t)) dt - pi^2/6 + ... normalized at 1
    def integrand(t):
        return -0.5 * (mpmath.log(1 - t) / t + mpmath.log(t) / (1 - t))

    with mpmath.workdps(30):
        oracle = float(mpmath.quad(integrand, [0, 0.5])) - PI2_6
    assert abs(rogers_L(0.5) - oracle) < 1e-10
    assert abs(rogers_L(0.5) - (PI2_6 / 2 - PI2_6)) < 1e-12


@pytest.mark.parametrize("x", [-0.5, 1.5, -3.0])
def test_rogers_domain(x):
    with pytest.raises(OutOfDomain):
        rogers_L(x)


@settings(max_examples=200, deadline=None)
@given(
    re=st.floats(-3, 3),
    im=st.floats(-3, 3),
)
def test_li2_against_mpmath(re, im):
    z = complex(re, im)
    if abs(z - 1) < 1e-3:
        return
    assert abs(li2(z) - mp_li2(z)) <= 1e-13 * max(1.0, abs(mp_li2(z)))


def test_five_term_reference_pair():
    assert five_term_check(0.7, 0.3) <= 1e-10


def test_five_term_real_pairs():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        y, x = sorted(rng.uniform(1e-3, 1 - 1e-3, 2))
        worst = max(worst, five_term_check(x, y))
    assert worst <= 1e-10


@settings(max_examples=200, deadline=None)
@given(
    yr=st.floats(-1, 2),
    yi=st.floats(0.05, 2).flatmap(lambda v: st.sampled_from([v, -v])),
    a=st.floats(0.02, 0.96),
    b=st.floats(0.02, 0.96),
)
def test_five_term_complex_triangle(yr, yi, a, b):
    if a + b > 0.98:
        return
    y = complex(yr, yi)
    x = a * 1 + b * y  # inside the triangle 0, 1, y
    assert five_term_check(x, y) <= 1e-9


def test_bloch_wigner_real_is_zero():
    for w in (-2.0, 0.3, 0.7, 3.5):
        assert abs(bloch_wigner(w)) < 1e-15


@settings(max_examples=100, deadline=None)
@given(re=st.floats(-3, 3), im=st.floats(0.01, 3))
def test_bloch_wigner_modular_symmetry(re, im):
    w = complex(re, im)
    d = bloch_wigner(w)
    assert abs(bloch_wigner(1 - 1 / w) - d) < 1e-12
    assert abs(bloch_wigner(1 / (1 - w)) - d) < 1e-12
    assert abs(bloch_wigner(w.conjugate()) + d) < 1e-12


def test_bloch_wigner_regular_tetrahedron():
    w = cmath.exp(1j * math.pi / 3)
    oracle = complex(mpmath.polylog(2, w)).imag + math.log(abs(w)) * cmath.phase(1 - w)
    assert abs(bloch_wigner(w) - oracle) < 1e-13
    assert abs(bloch_wigner(w) - 1.0149416) < 1e-7


@pytest.mark.parametrize("w", [0, 1])
def test_bloch_wigner_degenerate(w):
    with pytest.raises(Degenerate):
        bloch_wigner(w)


def test_figure_eight_volume(fig8):
    assert abs(volume(fig8.TI) - 2.0298832128) < 1e-9


def test_trivial_character_volume(closed, trefoil):
    assert abs(volume(closed.TI)) < 1e-8
    assert abs(volume(trefoil.TI)) < 1e-8
    assert max(abs(bloch_wigner(m.w0)) for m in closed.TI.moduli) > 1e-3


def test_volume_invariant_under_ideal_2_3(closed):
    v = volume(closed.TI)
    for t, f in [(0, 0), (1, 2), (3, 1)]:
        new, _ = ideal_transit_2_3(closed.TI, t, f)
        assert new.tri.n_tets == 6
        assert abs(volume(new) - v) <= 1e-8
