"""PSL(2,C) elements and their action on the Riemann sphere."""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

__all__ = ["PSL2C", "INF", "compose", "inverse", "act", "is_inf", "chordal_distance", "cross_ratio", "IDENTITY"]


class _Infinity:
    """The point at infinity of the Riemann sphere."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_inf(u) -> bool:
    return u is INF


@dataclass(frozen=True)
class PSL2C:
    """A 2x2 complex matrix with determinant 1, modulo sign."""

    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def from_matrix(cls, m) -> "PSL2C":
        m = np.asarray(m, dtype=complex)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) < 1e-300:
            raise ValueError("singular matrix")
        s = cmath.sqrt(det)
        m = m / s
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def close(self, other: "PSL2C", tol: float = 1e-10) -> bool:
        m1, m2 = self.matrix(), other.matrix()
        return bool(np.max(np.abs(m1 - m2)) <= tol or np.max(np.abs(m1 + m2)) <= tol)

    def __matmul__(self, other: "PSL2C") -> "PSL2C":
        return compose(self, other)

    def conjugate(self) -> "PSL2C":
        return PSL2C(self.a.conjugate(), self.b.conjugate(), self.c.conjugate(), self.d.conjugate())

    @classmethod
    def parabolic(cls, x: complex) -> "PSL2C":
        return cls(1.0, complex(x), 0.0, 1.0)


IDENTITY = PSL2C(1.0, 0.0, 0.0, 1.0)


def compose(m1: PSL2C, m2: PSL2C) -> PSL2C:
    return PSL2C.from_matrix(m1.matrix() @ m2.matrix())


def inverse(m: PSL2C) -> PSL2C:
    return PSL2C(m.d, -m.b, -m.c, m.a)


def act(m: PSL2C, u):
    """Moebius action u -> (a u + b) / (c u + d) on C plus INF."""
    if is_inf(u):
        if m.c == 0:
            return INF
        return m.a / m.c
    den = m.c * u + m.d
    if den == 0:
        return INF
    return (m.a * u + m.b) / den


def chordal_distance(u, v) -> float:
    """Distance between points of the unit sphere after stereographic projection."""
    def lift(z):
        if is_inf(z):
            return np.array([0.0, 0.0, 1.0])
        r2 = abs(z) ** 2
        return np.array([2 * z.real, 2 * z.imag, r2 - 1.0]) / (r2 + 1.0)

    return float(np.linalg.norm(lift(u) - lift(v)))


def cross_ratio(z1, z2, z3, z4) -> complex:
    """(z1 - z3)(z2 - z4) / ((z1 - z4)(z2 - z3)) for finite distinct points."""
    for z in (z1, z2, z3, z4):
        if is_inf(z):
            raise ValueError("cross_ratio expects finite points")
    return (z1 - z3) * (z2 - z4) / ((z1 - z4) * (z2 - z3))
