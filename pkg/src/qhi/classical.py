"""Classical dilogarithms and hyperbolic volumes of ideal tetrahedra."""
from __future__ import annotations

import cmath
import math
from functools import lru_cache

from .decor import ITriangulation

__all__ = ["OutOfDomain", "Degenerate", "li2", "rogers_L", "five_term_check", "bloch_wigner", "volume"]

PI2_6 = math.pi ** 2 / 6


class OutOfDomain(ValueError):
    pass


class Degenerate(ValueError):
    pass


@lru_cache(maxsize=1)
def _bernoulli_terms(count: int = 40) -> tuple[float, ...]:
    # B_n / (n+1)! for the series Li2(z) = sum B_n u^{n+1} / (n+1)!, u = -log(1-z)
    from fractions import Fraction

    B = [Fraction(1)]
    for m in range(1, count):
        s = sum(Fraction(math.comb(m + 1, k)) * B[k] for k in range(m))
        B.append(-s / (m + 1))
    return tuple(float(B[n] / math.factorial(n + 1)) for n in range(count))


def li2(z: complex) -> complex:
    """Principal-branch dilogarithm."""
    z = complex(z)
    if z == 0:
        return 0j
    if z == 1:
        return complex(PI2_6)
    if z.imag == 0 and z.real > 1:
        # on the cut take the limit from below, so that D vanishes on the real axis
        x = z.real
        return complex(2 * PI2_6 - 0.5 * math.log(x) ** 2 - li2(1 / x).real, -math.pi * math.log(x))
    if abs(z) > 1:
        return -li2(1 / z) - PI2_6 - 0.5 * cmath.log(-z) ** 2
    if z.real > 0.5:
        return -li2(1 - z) + PI2_6 - cmath.log(z) * cmath.log(1 - z)
    u = -cmath.log(1 - z)
    total = 0j
    power = u
    for coef in _bernoulli_terms():
        total += coef * power
        power *= u
    return total


def _in_domain(x: complex) -> bool:
    x = complex(x)
    if abs(x.imag) > 0:
        return True
    return 0 <= x.real <= 1


def rogers_L(x: complex) -> complex:
    """Li2(x) + log(x) log(1 - x) / 2 - pi^2/6, normalized so L(1) = 0."""
    if not _in_domain(x):
        raise OutOfDomain(f"{x} lies on a cut of the Rogers dilogarithm")
    x = complex(x)
    if x == 0:
        return complex(-PI2_6)
    if x == 1:
        return 0j
    return li2(x) + 0.5 * cmath.log(x) * cmath.log(1 - x) - PI2_6


def five_term_check(x: complex, y: complex) -> float:
    """Residual of L(x) - L(y) + L(y/x) - L((1-1/x)/(1-1/y)) + L((1-x)/(1-y))."""
    args = (x, y, y / x, (1 - 1 / x) / (1 - 1 / y), (1 - x) / (1 - y))
    L = [rogers_L(a) for a in args]
    return abs(L[0] - L[1] + L[2] - L[3] + L[4])


def bloch_wigner(w: complex) -> float:
    """D(w) = Im Li2(w) + log|w| arg(1 - w)."""
    w = complex(w)
    if w == 0 or w == 1:
        raise Degenerate("D is evaluated away from 0 and 1")
    return li2(w).imag + math.log(abs(w)) * cmath.phase(1 - w)


def volume(TI: ITriangulation) -> float:
    """Signed sum of Bloch-Wigner values of the w0 moduli."""
    return sum(TI.sign(t) * bloch_wigner(m.w0) for t, m in enumerate(TI.moduli))
