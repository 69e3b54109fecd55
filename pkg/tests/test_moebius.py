import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from qhi.moebius import IDENTITY, INF, PSL2C, act, chordal_distance, compose, cross_ratio, inverse, is_inf

cx = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


def random_psl(rng):
    return PSL2C.from_matrix(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))


def test_compose_examples():
    m = random_psl(np.random.default_rng(0))
    assert compose(IDENTITY, m).close(m)
    assert compose(m, inverse(m)).close(IDENTITY)
    assert compose(PSL2C.parabolic(1), PSL2C.parabolic(2)).close(PSL2C.parabolic(3))


def test_inverse_examples():
    assert inverse(IDENTITY).close(IDENTITY)
    assert inverse(PSL2C.parabolic(0.5 + 2j)).close(PSL2C.parabolic(-0.5 - 2j))


def test_sign_is_quotiented():
    m = random_psl(np.random.default_rng(1))
    neg = PSL2C(-m.a, -m.b, -m.c, -m.d)
    assert m.close(neg)


def test_act_examples():
    assert act(IDENTITY, 0) == 0
    assert act(PSL2C.parabolic(1), 0) == 1
    assert is_inf(act(PSL2C(0, -1, 1, 0), 0))
    assert act(PSL2C(0, -1, 1, 0), INF) == 0


@settings(max_examples=50, deadline=None)
@given(entries=st.lists(cx, min_size=8, max_size=8), u=cx)
def test_action_is_a_homomorphism(entries, u):
    m1 = np.array(entries[:4]).reshape(2, 2)
    m2 = np.array(entries[4:]).reshape(2, 2)
    if min(abs(np.linalg.det(m1)), abs(np.linalg.det(m2))) < 1e-2:
        return
    a, b = PSL2C.from_matrix(m1), PSL2C.from_matrix(m2)
    lhs = act(compose(a, b), u)
    rhs = act(a, act(b, u))
    assert chordal_distance(lhs, rhs) < 1e-6
    det = a.a * a.d - a.b * a.c
    assert abs(det - 1) < 1e-9


def test_cross_ratio_is_moebius_invariant():
    rng = np.random.default_rng(2)
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    m = random_psl(rng)
    w = [act(m, v) for v in z]
    assert abs(cross_ratio(*z) - cross_ratio(*w)) < 1e-9 * abs(cross_ratio(*z))
