"""Arithmetic at an odd root of unity.

Everything downstream works with ``zeta = exp(2 pi i / N)`` for odd ``N``,
and with the distinguished square root ``zeta**(p+1)`` where ``N = 2p + 1``.
The helpers here (the cyclic product ``omega``, the function ``g`` and its
normalized cousin ``h``, the cyclic bracket, the Kronecker delta mod N) are
the raw ingredients of the tetrahedral tensors.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CycloError",
    "EvenN",
    "TooSmall",
    "PoleHit",
    "ZeroArgument",
    "RootContext",
    "make_context",
    "omega",
    "omega_table",
    "g_func",
    "h_func",
    "bracket",
    "per_delta",
    "common_nth_roots",
    "nth_root",
]

CUT_EPSILON = 1e-3
POLE_TOL = 1e-13


class CycloError(ValueError):
    """Base class for invalid inputs to root-of-unity arithmetic."""


class EvenN(CycloError):
    pass


class TooSmall(CycloError):
    pass


class PoleHit(CycloError):
    pass


class ZeroArgument(CycloError):
    pass


@dataclass(frozen=True)
class RootContext:
    """Precomputed powers of ``zeta`` for a fixed odd ``N``.

    ``half_exp`` is the integer standing for 1/2 modulo N, namely ``p + 1``.
    """

    N: int
    p: int
    zeta: complex
    zeta_half: complex
    cut_epsilon: float = CUT_EPSILON
    powers: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def half_exp(self) -> int:
        return self.p + 1

    def zpow(self, k) -> complex | np.ndarray:
        """zeta**k for integer k (or an integer array)."""
        return self.powers[np.mod(k, self.N)]

    def zpow_half(self, k) -> complex | np.ndarray:
        """zeta**(k/2), read as zeta**((p+1) k)."""
        return self.powers[np.mod(np.multiply(k, self.half_exp), self.N)]


def make_context(N: int, cut_epsilon: float = CUT_EPSILON) -> RootContext:
    """Build the context for an odd ``N >= 3``."""
    if not isinstance(N, (int, np.integer)):
        raise TypeError("N must be an integer")
    N = int(N)
    if N < 3:
        raise TooSmall(f"N must be at least 3, got {N}")
    if N % 2 == 0:
        raise EvenN(f"N must be odd, got {N}")
    p = (N - 1) // 2
    powers = np.exp(2j * np.pi * np.arange(N) / N)
    powers.setflags(write=False)
    zeta = complex(powers[1])
    return RootContext(N, p, zeta, complex(powers[(p + 1) % N]), cut_epsilon, powers)


def per_delta(ctx: RootContext, n: int) -> int:
    """1 if n is divisible by N, else 0."""
    return 1 if n % ctx.N == 0 else 0


def omega(ctx: RootContext, x: complex, y: complex, z: complex, n: int) -> complex:
    """Cyclic product prod_{j=1}^{n mod N} (y/z) / (1 - (x/z) zeta^j).

    Only the ratios x/z and y/z enter, so the result is invariant under a
    common rescaling of (x, y, z).
    """
    if z == 0:
        raise ZeroArgument("z must be nonzero")
    m = n % ctx.N
    a, b = x / z, y / z
    out = 1.0 + 0j
    for j in range(1, m + 1):
        den = 1.0 - a * ctx.powers[j]
        if abs(den) < POLE_TOL:
            raise PoleHit(f"1 - (x/z) zeta^{j} vanishes")
        out *= b / den
    return out


def omega_table(ctx: RootContext, x: complex, y: complex, z: complex) -> np.ndarray:
    """Vector of omega(x, y, z | n) for n = 0..N-1 (cumulative products)."""
    if z == 0:
        raise ZeroArgument("z must be nonzero")
    a, b = x / z, y / z
    den = 1.0 - a * ctx.powers[1:]
    if np.any(np.abs(den) < POLE_TOL):
        raise PoleHit("omega has a pole at these arguments")
    table = np.empty(ctx.N, dtype=complex)
    table[0] = 1.0
    table[1:] = np.cumprod(b / den)
    return table


def _log_rotated(u: complex, eps: float) -> complex:
    # principal log with its cut turned by eps away from the negative axis
    return cmath.log(u * cmath.exp(-1j * eps)) + 1j * eps


def g_func(ctx: RootContext, x: complex) -> complex:
    """g(x) = prod_{j=1}^{N-1} (1 - x zeta^j)^{j/N}.

    Fractional powers use the principal logarithm with the cuts turned by
    ``ctx.cut_epsilon``; crossing a cut multiplies g by an N-th root of unity.
    """
    N = ctx.N
    terms = []
    for j in range(1, N):
        if x == 1:
            # exact polar form of 1 - zeta^j, free of cancellation
            log_u = complex(math.log(2 * math.sin(math.pi * min(j, N - j) / N)), math.pi * j / N - math.pi / 2)
        else:
            u = 1.0 - x * ctx.powers[j]
            if u == 0:
                return 0j
            log_u = _log_rotated(u, ctx.cut_epsilon)
        terms.append((j / N) * log_u)
    return cmath.exp(complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms)))


def _g_at_one(ctx: RootContext) -> complex:
    return g_func(ctx, 1.0)


def h_func(ctx: RootContext, x: complex) -> complex:
    """h(x) = x^{-p} g(x) / g(1)."""
    if x == 0:
        raise ZeroArgument("h is undefined at 0")
    return x ** (-ctx.p) * g_func(ctx, x) / _g_at_one(ctx)


def bracket(ctx: RootContext, x: complex) -> complex:
    """[x] = (1 - x^N) / (N (1 - x)), continued by 1 at x = 1."""
    if abs(x - 1.0) < 1e-12:
        return 1.0 + 0j
    return (1.0 - x ** ctx.N) / (ctx.N * (1.0 - x))


def nth_root(ctx: RootContext, u: complex) -> complex:
    """Principal N-th root exp(log(u) / N)."""
    if u == 0:
        raise ZeroArgument("no N-th root of zero is usable here")
    return cmath.exp(cmath.log(u) / ctx.N)


def common_nth_roots(ctx: RootContext, p0: complex, p1: complex, p2: complex):
    """Principal N-th roots of each member of a triple."""
    return tuple(nth_root(ctx, complex(v)) for v in (p0, p1, p2))


def g_abs_squared_residual(N: int) -> float:
    """| |g(1)|^2 - N |, a quick self-check."""
    ctx = make_context(N)
    return abs(abs(_g_at_one(ctx)) ** 2 - N)


def sqrt_n_phase(ctx: RootContext) -> complex:
    """The unimodular constant g(1) / |g(1)|."""
    g1 = _g_at_one(ctx)
    return g1 / abs(g1)

