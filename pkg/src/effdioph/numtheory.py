"""Exact integer primitives: totients, restricted totients, distances, zeta."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels

__all__ = [
    "DomainError",
    "PhiTable",
    "FixedPointFraction",
    "euler_phi_sieve",
    "restricted_totient",
    "restricted_divisor_count",
    "nearest_int_distance",
    "zeta",
    "ZETA_MARGIN",
]

ZETA_MARGIN = 0.01
FRAC_BITS = 128
_ONE = 1 << FRAC_BITS
_MASK64 = (1 << 64) - 1


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True, eq=False)
class PhiTable:
    """Euler totients phi(0..limit); ``values[0]`` is an unused 0."""

    limit: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values.setflags(write=False)

    def __getitem__(self, q):
        if not 1 <= q <= self.limit:
            raise DomainError(f"q={q} outside sieve range 1..{self.limit}")
        return int(self.values[q])

    def __len__(self):
        return self.limit


def euler_phi_sieve(limit: int) -> PhiTable:
    """Totient table for 1 <= q <= limit via a linear sieve."""
    if limit < 1:
        raise DomainError("sieve limit must be >= 1")
    return PhiTable(int(limit), _kernels.phi_linear_sieve(int(limit)))


def _divisors(n: int) -> list[int]:
    small, large = [], []
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
    return small + large[::-1]


def _phi_single(n: int) -> int:
    result, m, p = n, n, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


def restricted_totient(k: int, n: int, phi: PhiTable | None = None) -> int:
    """#{1 <= m <= n : gcd(m, n) <= k}.

    Uses #{m : gcd(m, n) = d} = phi(n / d), summed over divisors d <= k.
    """
    if k < 1 or n < 1:
        raise DomainError("restricted_totient needs k >= 1 and n >= 1")
    if k >= n:
        return n
    lookup = phi.values if phi is not None and n <= phi.limit else None
    total = 0
    for d in _divisors(n):
        if d > k:
            break
        m = n // d
        total += int(lookup[m]) if lookup is not None else _phi_single(m)
    return total


def restricted_divisor_count(n: int, bound: float) -> int:
    """#{d | n : 1 <= d <= bound}."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return sum(1 for d in _divisors(n) if d <= bound)


@dataclass(frozen=True, order=True)
class FixedPointFraction:
    """A point of [0, 1) stored as ``numerator / 2**128``.

    ``scaled_frac`` resolves the fractional part of ``q * x`` to 64 bits, so
    for q < 2**64 the error against the stored value is below 2**-64 and
    against the represented real below ``q * 2**-128 + 2**-64``.
    """

    numerator: int

    def __post_init__(self):
        if not 0 <= self.numerator < _ONE:
            raise DomainError("fixed-point numerator must lie in [0, 2**128)")

    @classmethod
    def from_float(cls, x: float) -> FixedPointFraction:
        if not 0.0 <= x < 1.0:
            raise DomainError(f"x={x!r} not in [0, 1)")
        return cls.from_fraction(Fraction(x))

    @classmethod
    def from_fraction(cls, x: Fraction | int) -> FixedPointFraction:
        """Nearest representable point at or below ``x`` (mod 1)."""
        x = Fraction(x) % 1
        return cls((x.numerator << FRAC_BITS) // x.denominator)

    @classmethod
    def from_words(cls, hi: int, lo: int) -> FixedPointFraction:
        return cls((int(hi) << 64) | int(lo))

    @classmethod
    def parse(cls, text: str) -> FixedPointFraction:
        """Accepts decimal (``0.25``) or rational (``1/3``) text."""
        text = text.strip()
        try:
            return cls.from_fraction(Fraction(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse x from {text!r}") from exc

    @property
    def hi(self) -> int:
        return self.numerator >> 64

    @property
    def lo(self) -> int:
        return self.numerator & _MASK64

    def words(self) -> tuple[np.uint64, np.uint64]:
        return np.uint64(self.hi), np.uint64(self.lo)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, _ONE)

    def __float__(self):
        return self.numerator / _ONE

    def scaled_frac(self, q: int) -> int:
        """Top 64 bits of frac(q * x), as an integer in [0, 2**64)."""
        return ((q * self.numerator) % _ONE) >> 64

    def nearest_integer(self, q: int) -> int:
        """Nearest integer to q * x (the upper one on an exact tie)."""
        return (q * self.numerator + (_ONE >> 1)) >> FRAC_BITS


def nearest_int_distance(x, q: int = 1):
    """||q x||, the distance from q x to the nearest integer.

    ``x`` may be a :class:`FixedPointFraction` (float result, resolved to
    2**-64) or an exact rational (``Fraction``/``int``, exact result).
    """
    if isinstance(x, FixedPointFraction):
        f = x.scaled_frac(q)
        return min(f, (1 << 64) - f) * 2.0 ** -64
    r = (Fraction(x) * q) % 1
    return min(r, 1 - r)


def _zeta_em_terms(s: float, tol: float) -> tuple[int, int]:
    # Pick the cut n0 and Euler-Maclaurin order so the first omitted term is < tol/2.
    n0 = 8
    while True:
        for order in range(1, 9):
            if _em_term(s, n0, order) < tol / 2:
                return n0, order - 1
        n0 *= 2


_B2K = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def _em_term(s: float, n: int, k: int) -> float:
    # |B_2k / (2k)! * s (s+1) ... (s+2k-2) * n^(-s-2k+1)|
    rising = 1.0
    for i in range(2 * k - 1):
        rising *= s + i
    return abs(_B2K[k - 1]) / math.factorial(2 * k) * rising * n ** (-s - 2 * k + 1)


def zeta(s: float, tol: float = 1e-13) -> float:
    """Riemann zeta for real s > 1.01.

    Partial sum to n0, the integral tail n0**(1-s)/(s-1), and Euler-Maclaurin
    corrections; the remainder is bounded by the first omitted term.
    """
    if not s > 1.0 + ZETA_MARGIN:
        raise DomainError(f"zeta needs s > 1 + {ZETA_MARGIN} (pole margin), got s={s}")
    if tol <= 0:
        raise DomainError("tol must be positive")
    n0, order = _zeta_em_terms(s, tol)
    head = math.fsum(n ** -s for n in range(1, n0))
    tail = [n0 ** (1 - s) / (s - 1), 0.5 * n0 ** -s]
    for k in range(1, order + 1):
        rising = 1.0
        for i in range(2 * k - 1):
            rising *= s + i
        tail.append(_B2K[k - 1] / math.factorial(2 * k) * rising * n0 ** (-s - 2 * k + 1))
    return math.fsum([head, *tail])
