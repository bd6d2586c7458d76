"""Counting functions S, S', S*, R, digit counts A(d, b, N) and the gcd sum E(N).

Conventions: p runs over the integers 0..q with gcd(0, q) = q, S and S' use
a strict inequality, R a non-strict one.  ``x`` is either a
:class:`FixedPointFraction` (fast compiled path) or an exact rational
(``Fraction``/``int``), which is evaluated with integer arithmetic only.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .numtheory import DomainError, FixedPointFraction, PhiTable
from .psi import ApproxFunction, gamma_L_chain

__all__ = [
    "count_S",
    "count_S_series",
    "count_S_prime",
    "count_S_prime_series",
    "count_S_star",
    "count_R",
    "R_indicators",
    "digit_count",
    "digit_series",
    "gcd_sum_E",
    "sequence_psi",
    "SequenceSpec",
    "InhomParams",
    "CountRecord",
    "CountSeries",
]

_ONE = 1 << 128


def _is_fixed(x) -> bool:
    return isinstance(x, FixedPointFraction)


def _as_rational(x) -> Fraction:
    if isinstance(x, float):
        raise DomainError("pass floats through FixedPointFraction.from_float")
    return Fraction(x) % 1


def _grid_array(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.int64)
    if g.ndim != 1 or len(g) == 0 or g[0] < 1 or np.any(np.diff(g) <= 0):
        raise DomainError("Q grid must be a non-empty, strictly increasing list of positive integers")
    return g


def _exact_s(x: Fraction, grid: np.ndarray, psi: ApproxFunction, coprime: bool) -> np.ndarray:
    a, b = x.numerator, x.denominator
    vals = psi.values(1, int(grid[-1]))
    out = np.empty(len(grid), dtype=np.int64)
    count, g = 0, 0
    for q in range(1, int(grid[-1]) + 1):
        r = (q * a) % b
        dist = Fraction(min(r, b - r), b)
        if dist < Fraction(float(vals[q - 1])):
            if not coprime:
                count += 1
            else:
                lo_p = (q * a) // b
                cands = (lo_p, lo_p + 1) if 2 * r == b else ((lo_p,) if 2 * r < b else (lo_p + 1,))
                if any(math.gcd(p, q) == 1 for p in cands):
                    count += 1
        if q == grid[g]:
            out[g] = count
            g += 1
    return out


def count_S_series(x, grid, psi: ApproxFunction) -> np.ndarray:
    """S(x, Q) at every Q of an increasing grid, in one pass."""
    grid = _grid_array(grid)
    if not _is_fixed(x):
        return _exact_s(_as_rational(x), grid, psi, False)
    mode, c, cap, arr = psi.kernel_args(int(grid[-1]))
    hi, lo = x.words()
    out = np.empty(len(grid), dtype=np.int64)
    _kernels.count_s_grid(hi, lo, grid, mode, c, cap, arr, False, out)
    return out


def count_S(x, Q: int, psi: ApproxFunction) -> int:
    """S(x, Q) = #{q <= Q : ||q x|| < psi(q)}."""
    return int(count_S_series(x, [Q], psi)[0])


def count_S_prime_series(x, grid, psi: ApproxFunction, phi: PhiTable) -> np.ndarray:
    grid = _grid_array(grid)
    if grid[-1] > phi.limit:
        raise DomainError(f"Q={grid[-1]} exceeds the totient sieve limit {phi.limit}")
    if not _is_fixed(x):
        return _exact_s(_as_rational(x), grid, psi, True)
    mode, c, cap, arr = psi.kernel_args(int(grid[-1]))
    hi, lo = x.words()
    out = np.empty(len(grid), dtype=np.int64)
    _kernels.count_s_grid(hi, lo, grid, mode, c, cap, arr, True, out)
    return out


def count_S_prime(x, Q: int, psi: ApproxFunction, phi: PhiTable) -> int:
    """S'(x, Q): as S but the nearest integer p must be coprime to q."""
    return int(count_S_prime_series(x, [Q], psi, phi)[0])


def count_S_star(x, u: int, v: int, psi: ApproxFunction) -> int:
    """#{u < n <= v : ||n x|| < psi(n), witness m with gcd(m, n) <= Gamma(n)}."""
    if not 0 <= u < v:
        raise DomainError("need 0 <= u < v")
    gamma, _, _ = gamma_L_chain(psi.cache.prefix(v)[:v])
    if _is_fixed(x):
        mode, c, cap, arr = psi.kernel_args(v)
        hi, lo = x.words()
        return int(_kernels.count_s_star_range(hi, lo, u, v, mode, c, cap, arr, gamma))
    x = _as_rational(x)
    a, b = x.numerator, x.denominator
    count = 0
    for n in range(u + 1, v + 1):
        r = (n * a) % b
        if Fraction(min(r, b - r), b) < Fraction(psi(n)):
            m = (n * a + b // 2) // b
            if math.gcd(m, n) <= gamma[n - 1]:
                count += 1
    return count


# -- sequences -------------------------------------------------------------------


@dataclass(frozen=True)
class InhomParams:
    """Shift gamma and the Fourier-decay pair (nu, A); Lebesgue measure uses nu = 1/pi."""

    gamma: float = 0.0
    nu: float = 1.0 / math.pi
    A: float = 2.7

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise DomainError("gamma must lie in [0, 1]")
        if not self.nu > 0:
            raise DomainError("nu must be positive")
        if not self.A > 2:
            raise DomainError("A must exceed 2")


@dataclass(frozen=True)
class SequenceSpec:
    """An increasing integer sequence q_1 < q_2 < ... with declared structure.

    ``kind`` is ``"geometric"`` (q_n = floor(a r^n)), ``"pow2"`` (q_n = 2^n)
    or ``"list"`` (explicit ``terms``).  ``K0`` declares lacunarity,
    ``B``/``C_growth`` the growth condition log q_n > C n^(1/B), ``alpha`` the
    separation exponent.
    """

    kind: str
    a: Fraction = Fraction(1)
    r: Fraction = Fraction(2)
    terms: tuple[int, ...] = ()
    K0: float | None = None
    B: float = 1.0
    C_growth: float | None = None
    alpha: float | None = None
    m0: int = 1

    def __post_init__(self):
        if self.kind not in ("geometric", "pow2", "list"):
            raise DomainError(f"unknown sequence kind {self.kind!r}")
        if self.K0 is not None and not self.K0 > 1:
            raise DomainError("lacunary constant K0 must exceed 1")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if self.B < 1:
            raise DomainError("B must be >= 1")

    @classmethod
    def powers_of_two(cls, **kw) -> SequenceSpec:
        kw.setdefault("K0", 2.0)
        kw.setdefault("C_growth", math.log(2) * 0.999)
        return cls("pow2", **kw)

    @classmethod
    def geometric(cls, a, r, **kw) -> SequenceSpec:
        return cls("geometric", a=Fraction(a), r=Fraction(r), **kw)

    @classmethod
    def from_list(cls, terms: Sequence[int], **kw) -> SequenceSpec:
        return cls("list", terms=tuple(int(t) for t in terms), **kw)

    def generate(self, N: int) -> list[int]:
        """q_1..q_N, checking the declared structure on this prefix."""
        if self.kind == "pow2":
            qs = [1 << n for n in range(1, N + 1)]
        elif self.kind == "geometric":
            qs = [math.floor(self.a * self.r ** n) for n in range(1, N + 1)]
        else:
            if len(self.terms) < N:
                raise DomainError(f"sequence exhausted: {len(self.terms)} terms, {N} requested")
            qs = list(self.terms[:N])
        if qs and qs[0] < 1:
            raise DomainError("q_1 must be a positive integer")
        for n in range(1, len(qs)):
            if qs[n] <= qs[n - 1]:
                raise DomainError(f"sequence not strictly increasing at n={n + 1}")
            if self.K0 is not None and qs[n] < Fraction(self.K0) * qs[n - 1]:
                raise DomainError(f"lacunarity q_(n+1) >= {self.K0} q_n fails at n={n}")
        return qs

    def min_ratio(self, N: int) -> float:
        qs = self.generate(N)
        return min(Fraction(qs[n], qs[n - 1]) for n in range(1, len(qs))) if N > 1 else math.inf

    def growth_violation(self, N: int) -> int | None:
        """First n <= N with log q_n <= C n^(1/B), or None."""
        if self.C_growth is None:
            raise DomainError("growth constant C not declared")
        for n, q in enumerate(self.generate(N), start=1):
            if not math.log(q) > self.C_growth * n ** (1.0 / self.B):
                return n
        return None


def sequence_psi(psi: ApproxFunction, qs: Sequence[int], along: str = "q") -> np.ndarray:
    """psi(q_n) (``along="q"``) or psi(n) (``along="index"``) for n = 1..len(qs)."""
    if along == "q":
        return psi.at_many(qs)
    if along == "index":
        return psi.values(1, len(qs))
    raise DomainError(f"along must be 'q' or 'index', got {along!r}")


def R_indicators(x, qs: Sequence[int], gamma, psi_vals: np.ndarray) -> np.ndarray:
    """Boolean array: ||q_n x - gamma|| <= psi_n, decided exactly."""
    out = np.zeros(len(qs), dtype=bool)
    if _is_fixed(x):
        num, den = x.numerator, _ONE
    else:
        xr = _as_rational(x)
        num, den = xr.numerator, xr.denominator
    g = Fraction(gamma)
    for i, q in enumerate(qs):
        # (q num / den - g) mod 1 as an exact rational
        t = (Fraction(q * num % den, den) - g) % 1
        dist = min(t, 1 - t)
        out[i] = dist <= Fraction(float(psi_vals[i]))
    return out


def count_R(x, N: int, params: InhomParams, psi: ApproxFunction, seq: SequenceSpec,
            along: str = "q") -> int:
    """R(x, N) = #{n <= N : ||q_n x - gamma|| <= psi(q_n)}."""
    if N < 1:
        raise DomainError("N must be >= 1")
    qs = seq.generate(N)
    return int(R_indicators(x, qs, params.gamma, sequence_psi(psi, qs, along)).sum())


def gcd_sum_E(N: int, seq: SequenceSpec, psi: ApproxFunction, along: str = "q") -> float:
    """E(N) = sum_{m < n <= N} gcd(q_m, q_n) min(psi_m / q_m, psi_n / q_n)."""
    if N < 1:
        raise DomainError("N must be >= 1")
    qs = seq.generate(N)
    ps = sequence_psi(psi, qs, along)
    w = [float(p) / q for p, q in zip(ps, qs)]
    terms = []
    for n in range(1, N):
        for m in range(n):
            terms.append(math.gcd(qs[m], qs[n]) * min(w[m], w[n]))
    return math.fsum(terms)


# -- digits ----------------------------------------------------------------------


def _digits(x, b: int, N: int):
    if _is_fixed(x):
        r, den = x.numerator, _ONE
    else:
        xr = _as_rational(x)
        r, den = xr.numerator, xr.denominator
    for i in range(N):
        if r == 0:
            # terminating expansion: the rest are zeros
            yield from (0 for _ in range(N - i))
            return
        d, r = divmod(r * b, den)
        yield d


def digit_series(x, d: int, b: int, N: int) -> np.ndarray:
    """A(d, b, n) for n = 1..N by exact long division."""
    if b < 2 or not 0 <= d < b:
        raise DomainError("need b >= 2 and 0 <= d < b")
    if N < 1:
        raise DomainError("N must be >= 1")
    digits = np.fromiter(_digits(x, b, N), dtype=np.int64, count=N)
    return np.cumsum(digits == d)


def digit_count(x, d: int, b: int, N: int) -> int:
    """A(d, b, N): occurrences of digit d among the first N base-b digits."""
    return int(digit_series(x, d, b, N)[-1])


# -- series records ------------------------------------------------------------------


_HEADER = ["Q", "count", "main_term", "bound", "violated"]


def _fmt(v: float) -> str:
    return repr(float(v))


@dataclass(frozen=True)
class CountRecord:
    Q: int
    count: int
    main_term: float
    bound: float
    violated: bool

    @classmethod
    def make(cls, Q, count, main_term, bound) -> CountRecord:
        return cls(int(Q), int(count), float(main_term), float(bound),
                   bool(abs(count - main_term) > bound))


@dataclass
class CountSeries:
    """Per-Q comparison of a count against its main term and bound."""

    records: list[CountRecord] = field(default_factory=list)

    @classmethod
    def build(cls, grid, counts, main_terms, bounds) -> CountSeries:
        return cls([CountRecord.make(*row) for row in zip(grid, counts, main_terms, bounds)])

    def __len__(self):
        return len(self.records)

    @property
    def any_violated(self) -> bool:
        return any(r.violated for r in self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_HEADER)
        for r in self.records:
            w.writerow([r.Q, r.count, _fmt(r.main_term), _fmt(r.bound), "true" if r.violated else "false"])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{"Q": r.Q, "count": r.count, "main_term": _fmt(r.main_term),
                 "bound": _fmt(r.bound), "violated": r.violated} for r in self.records]
        return json.dumps(rows, indent=1) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> CountSeries:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != _HEADER:
            raise DomainError(f"series header must be {','.join(_HEADER)}")
        recs = []
        for row in rows[1:]:
            if row[4] not in ("true", "false"):
                raise DomainError(f"bad violated flag {row[4]!r}")
            recs.append(CountRecord(int(row[0]), int(row[1]), float(row[2]), float(row[3]), row[4] == "true"))
        return cls(recs)

    @classmethod
    def from_json(cls, text: str) -> CountSeries:
        return cls([CountRecord(int(r["Q"]), int(r["count"]), float(r["main_term"]),
                                float(r["bound"]), bool(r["violated"])) for r in json.loads(text)])
