"""Approximating functions psi and their aggregates Psi, Psi', Gamma, L, L2, Phi.

Textual grammar understood by :func:`parse_psi`::

    const:<v>          psi(q) = v
    inv:<c>            psi(q) = c / q
    invlog:<c>         psi(q) = c / (q log(q + 1))
    pow:<c>,<a>        psi(q) = c / q**a          (a > 1, summable)
    table:<path>       CSV with header ``q,psi``

Any closed form may carry a ``;cap=<v>`` suffix, giving min(v, psi(q)); for
example ``inv:1;cap=0.4`` is min(0.4, 1/q).
"""

from __future__ import annotations

import csv
import logging
import math
import re
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from . import _kernels
from .numtheory import DomainError, PhiTable, euler_phi_sieve, restricted_totient

__all__ = [
    "ApproxFunction",
    "AggregateCache",
    "PsiSyntaxError",
    "parse_psi",
    "load_table",
    "psi_sum",
    "psi_prime_sum",
    "gamma_L_chain",
    "capital_phi",
    "capital_phi_array",
    "validate_schmidt",
    "validate_abh",
    "validate_m0",
    "DIRECT_LIMIT",
]

log = logging.getLogger(__name__)

RANGE_HALF_OPEN = "[0,1/2)"
RANGE_HALF_CLOSED = "[0,1/2]"
RANGE_UNIT = "(0,1]"
RANGE_WIDE = "[0,inf)"

# beyond this many terms Psi switches from cached prefix sums to closed-form tails
DIRECT_LIMIT = 1 << 24

_FAMILIES = ("const", "inv", "invlog", "pow", "table")
_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class PsiSyntaxError(DomainError):
    """Malformed psi text; ``position`` is the 0-based offending column."""

    def __init__(self, message: str, text: str, position: int):
        super().__init__(f"{message} at position {position} in {text!r}")
        self.text = text
        self.position = position


@dataclass(frozen=True, eq=False)
class ApproxFunction:
    """A non-negative approximating function on the positive integers."""

    family: str
    c: float
    exponent: float = 1.0
    cap: float = math.inf
    table: np.ndarray | None = field(default=None, repr=False)
    path: str | None = None
    declared_range: str = RANGE_HALF_OPEN
    declared_monotone: bool = True
    cache: AggregateCache = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cache", AggregateCache(self))

    # -- evaluation ---------------------------------------------------------

    @property
    def limit(self) -> float:
        """Largest q at which psi is defined."""
        return len(self.table) if self.family == "table" else math.inf

    @property
    def divergent(self) -> bool:
        if self.family == "table" or self.family == "pow":
            return False
        return self.c > 0 and self.cap > 0

    @property
    def max_value(self) -> float:
        return float(self.values(1, 1)[0]) if self.family != "table" else float(self.table.max())

    @property
    def min_value_positive(self) -> bool:
        """True when psi(q) > 0 for every q in its domain."""
        if self.family == "table":
            return bool(np.all(self.table > 0))
        return self.c > 0 and self.cap > 0

    def __call__(self, q: int) -> float:
        if q < 1:
            raise DomainError(f"psi is defined for q >= 1, got {q}")
        if q > self.limit:
            raise DomainError(f"q={q} beyond the psi table (last q={len(self.table)})")
        return float(self.values(q, q)[0])

    def values(self, lo: int, hi: int) -> np.ndarray:
        """psi(q) for lo <= q <= hi as a float64 array."""
        if lo < 1 or hi < lo - 1:
            raise DomainError(f"bad psi range {lo}..{hi}")
        if hi > self.limit:
            raise DomainError(f"q={hi} beyond the psi table (last q={len(self.table)})")
        if self.family == "table":
            return self.table[lo - 1:hi].copy()
        q = np.arange(lo, hi + 1, dtype=np.float64)
        if self.family == "const":
            v = np.full(q.shape, self.c)
        elif self.family == "inv":
            v = self.c / q
        elif self.family == "invlog":
            v = self.c / (q * np.log(q + 1.0))
        else:
            v = self.c / q ** self.exponent
        return np.minimum(v, self.cap) if math.isfinite(self.cap) else v

    def at_many(self, qs) -> np.ndarray:
        """psi at arbitrary (possibly huge) positive integers ``qs``."""
        qs = np.asarray([float(q) if q < 2 ** 1023 else math.inf for q in qs], dtype=np.float64)
        if self.family == "table":
            return np.array([self(int(q)) for q in qs])
        if self.family == "const":
            v = np.full(qs.shape, self.c)
        elif self.family == "inv":
            v = self.c / qs
        elif self.family == "invlog":
            v = self.c / (qs * np.log(qs + 1.0))
        else:
            v = self.c / qs ** self.exponent
        return np.minimum(v, self.cap)

    def kernel_args(self, qmax: int):
        """(mode, c, cap, arr) for the compiled counting loops."""
        cap = self.cap if math.isfinite(self.cap) else 1e300
        mode = {"const": _kernels.PSI_CONST, "inv": _kernels.PSI_INV,
                "invlog": _kernels.PSI_INVLOG}.get(self.family)
        if mode is not None:
            return mode, float(self.c), float(cap), np.empty(0)
        return _kernels.PSI_ARRAY, 0.0, float(cap), self.values(1, qmax)

    # -- closed-form tails ----------------------------------------------------

    def tail_sum(self, n0: int, log_n: float) -> float:
        """Sum of psi(q) over n0 < q <= exp(log_n), by closed forms.

        Requires the cap to be inactive beyond n0.  Accuracy is at the level
        of the first neglected Euler-Maclaurin term, below 1e-12 relative for
        n0 = DIRECT_LIMIT.
        """
        if self.family == "table":
            raise DomainError("tables have no closed-form tail")
        if self.at_many([n0 + 1])[0] < self._raw(n0 + 1):
            raise DomainError("cap still active beyond the direct range")
        if log_n <= math.log(n0):
            return 0.0
        c = self.c
        if self.family == "const":
            return c * (math.exp(log_n) - n0)
        if self.family == "inv":
            return c * (_harmonic_log(log_n) - _harmonic_log(math.log(n0)))
        if self.family == "pow":
            a = self.exponent
            hi = special.zeta(a, math.exp(log_n) + 1) if log_n < 700 else 0.0
            return c * (special.zeta(a, n0 + 1) - hi)
        # invlog: midpoint rule, integral over [n0 + 1/2, N + 1/2] in u = log t
        u0, u1 = math.log(n0 + 0.5), log_n + math.log1p(0.5 * math.exp(-log_n))
        main = math.log(u1 / u0)
        corr, _ = integrate.quad(lambda u: math.log1p(math.exp(-u)) / (u * (u + math.log1p(math.exp(-u)))),
                                 u0, min(u1, u0 + 60.0))
        return c * (main - corr)

    def _raw(self, q: float) -> float:
        if self.family == "const":
            return self.c
        if self.family == "inv":
            return self.c / q
        if self.family == "invlog":
            return self.c / (q * math.log(q + 1))
        return self.c / q ** self.exponent

    # -- text form -------------------------------------------------------------

    @property
    def spec_text(self) -> str:
        if self.family == "table":
            return f"table:{self.path}"
        body = f"{self.c!r},{self.exponent!r}" if self.family == "pow" else repr(self.c)
        text = f"{self.family}:{body}"
        if math.isfinite(self.cap):
            text += f";cap={self.cap!r}"
        return text

    def __str__(self):
        return self.spec_text


def _harmonic_log(log_n: float) -> float:
    # H_n for n = exp(log_n); exact digamma below 1e15, asymptotic above
    if log_n < 34.5:
        n = math.exp(log_n)
        return float(special.digamma(n + 1.0)) + np.euler_gamma
    return log_n + np.euler_gamma


class AggregateCache:
    """Memoized prefix sums Psi(Q) and Psi'(Q) for one psi.

    Extension happens under a lock; already-computed prefixes are read-only
    arrays, so concurrent readers are safe.
    """

    def __init__(self, psi: ApproxFunction):
        self._psi = psi
        self._lock = threading.Lock()
        self._prefix = np.zeros(0)
        self._comp = 0.0
        self._prime: dict[int, tuple[PhiTable, np.ndarray]] = {}

    def prefix(self, Q: int) -> np.ndarray:
        """Array whose entry Q-1 is Psi(Q); holds at least Q entries."""
        arr = self._prefix
        if Q <= len(arr):
            return arr
        with self._lock:
            arr = self._prefix
            if Q > len(arr):
                n = len(arr)
                target = min(max(Q, 2 * n, 1024), int(min(self._psi.limit, max(Q, DIRECT_LIMIT))))
                target = max(target, Q)
                vals = self._psi.values(n + 1, target)
                grown = np.empty(target)
                grown[:n] = arr
                start = float(arr[-1]) if n else 0.0
                _, self._comp = _kernels.kahan_cumsum(vals, start, self._comp, grown[n:])
                grown.setflags(write=False)
                self._prefix = arr = grown
        return arr

    def prime_prefix(self, Q: int, phi: PhiTable) -> np.ndarray:
        """Array whose entry Q-1 is Psi'(Q) = 2 sum psi(q) phi(q) / q."""
        key = id(phi)
        hit = self._prime.get(key)
        if hit is not None and hit[0] is phi and len(hit[1]) >= Q:
            return hit[1]
        with self._lock:
            hit = self._prime.get(key)
            if hit is None or hit[0] is not phi or len(hit[1]) < Q:
                size = int(min(phi.limit, self._psi.limit))
                terms = np.empty(size)
                _kernels.psi_phi_terms(self._psi.values(1, size), phi.values, terms)
                out = np.empty(size)
                _kernels.kahan_cumsum(2.0 * terms, 0.0, 0.0, out)
                out.setflags(write=False)
                hit = (phi, out)
                self._prime[key] = hit
        return hit[1]


# -- parsing -------------------------------------------------------------------


def _number(text: str, token: str, pos: int) -> float:
    if not _NUMBER.match(token):
        raise PsiSyntaxError(f"expected a number, got {token!r}", text, pos)
    return float(token)


def _classify(top: float, positive: bool) -> str:
    if top < 0.5:
        return RANGE_HALF_OPEN
    if top == 0.5:
        return RANGE_HALF_CLOSED
    if top <= 1.0 and positive:
        return RANGE_UNIT
    # parses fine, but every theorem validator will refuse it
    return RANGE_WIDE


def parse_psi(text: str) -> ApproxFunction:
    """Parse a psi spec; see the module docstring for the grammar."""
    raw = text
    text = text.strip()
    offset = raw.find(text) if text else 0
    if ":" not in text:
        raise PsiSyntaxError("missing ':' after the family name", raw, offset + len(text))
    family, _, rest = text.partition(":")
    if family not in _FAMILIES:
        raise PsiSyntaxError(f"unknown family {family!r}", raw, offset)
    pos = offset + len(family) + 1
    if family == "table":
        if not rest:
            raise PsiSyntaxError("missing table path", raw, pos)
        return load_table(rest)

    body, sep, suffix = rest.partition(";")
    cap = math.inf
    if sep:
        spos = pos + len(body) + 1
        if not suffix.startswith("cap="):
            raise PsiSyntaxError("expected 'cap=<v>'", raw, spos)
        cap = _number(raw, suffix[4:], spos + 4)
        if cap < 0:
            raise DomainError("cap must be non-negative")
    exponent = 1.0
    if family == "pow":
        c_tok, comma, a_tok = body.partition(",")
        if not comma:
            raise PsiSyntaxError("pow needs '<c>,<a>'", raw, pos + len(body))
        c = _number(raw, c_tok, pos)
        exponent = _number(raw, a_tok, pos + len(c_tok) + 1)
        if not exponent > 1:
            raise DomainError("pow exponent must exceed 1 (use inv for a = 1)")
    else:
        c = _number(raw, body, pos)
    if c < 0:
        raise DomainError(f"psi coefficient must be non-negative, got {c}")

    fn = ApproxFunction(family, c, exponent=exponent, cap=cap)
    top = fn.max_value
    return ApproxFunction(family, c, exponent=exponent, cap=cap,
                          declared_range=_classify(top, fn.min_value_positive))


def load_table(path: str) -> ApproxFunction:
    """Read a ``q,psi`` CSV; rows must run 1, 2, 3, ... without gaps."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["q", "psi"]:
        raise DomainError(f"{path}: header must be 'q,psi'")
    vals = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            q, v = int(row[0]), float(row[1])
        except (ValueError, IndexError) as exc:
            raise DomainError(f"{path}:{lineno}: cannot parse row {row!r}") from exc
        if q <= 0:
            raise DomainError(f"{path}:{lineno}: non-positive q={q}")
        if q != len(vals) + 1:
            raise DomainError(f"{path}:{lineno}: expected q={len(vals) + 1}, got {q} (gap)")
        if not v >= 0:
            raise DomainError(f"{path}:{lineno}: psi must be non-negative")
        vals.append(v)
    if not vals:
        raise DomainError(f"{path}: empty table")
    arr = np.asarray(vals, dtype=np.float64)
    arr.setflags(write=False)
    return ApproxFunction("table", float(arr[0]), table=arr, path=path,
                          declared_range=_classify(float(arr.max()), bool(np.all(arr > 0))),
                          declared_monotone=bool(np.all(np.diff(arr) <= 0)))


# -- aggregates -------------------------------------------------------------------


def psi_sum(psi: ApproxFunction, Q: int) -> float:
    """Psi(Q) = sum_{q <= Q} psi(q)."""
    if Q < 1:
        raise DomainError("Q must be >= 1")
    if Q <= DIRECT_LIMIT or Q <= psi.limit < math.inf:
        return float(psi.cache.prefix(Q)[Q - 1])
    return psi_sum_log(psi, math.log(Q))


def psi_sum_log(psi: ApproxFunction, log_q: float) -> float:
    """Psi at Q = exp(log_q), usable far beyond float range for Q."""
    if log_q <= math.log(DIRECT_LIMIT):
        return psi_sum(psi, int(math.floor(math.exp(log_q) + 1e-9)))
    if psi.limit < math.inf:
        raise DomainError(f"psi table ends at q={psi.limit}")
    head = float(psi.cache.prefix(DIRECT_LIMIT)[DIRECT_LIMIT - 1])
    return head + psi.tail_sum(DIRECT_LIMIT, log_q)


def psi_prime_sum(psi: ApproxFunction, Q: int, phi: PhiTable) -> float:
    """Psi'(Q) = 2 sum_{q <= Q} psi(q) phi(q) / q."""
    if Q < 1:
        raise DomainError("Q must be >= 1")
    if Q > phi.limit:
        raise DomainError(f"Q={Q} exceeds the totient sieve limit {phi.limit}")
    return float(psi.cache.prime_prefix(Q, phi)[Q - 1])


def gamma_L_chain(psi_value):
    """(Gamma, L, L2) = (Psi^2 + 1, log(3 Gamma), log(2 L)); accepts arrays."""
    if np.any(np.asarray(psi_value) < 0):
        raise DomainError("Psi must be non-negative")
    gamma = np.square(psi_value) + 1.0
    L = np.log(3.0 * gamma)
    L2 = np.log(2.0 * L)
    if np.ndim(gamma) == 0:
        return float(gamma), float(L), float(L2)
    return gamma, L, L2


def capital_phi(N: int, psi: ApproxFunction) -> int:
    """Phi(N) = #{m <= N : gcd(m, N) <= Gamma(N)}."""
    gamma, _, _ = gamma_L_chain(psi_sum(psi, N))
    return restricted_totient(int(min(gamma, N)), N)


def capital_phi_array(psi: ApproxFunction, N: int, phi: PhiTable | None = None) -> np.ndarray:
    """Phi(n) for 1 <= n <= N (entry n-1)."""
    if phi is None or phi.limit < N:
        phi = euler_phi_sieve(N)
    gamma = np.square(psi.cache.prefix(N)[:N]) + 1.0
    out = np.empty(N, dtype=np.int64)
    _kernels.capital_phi_table(gamma, phi.values, out)
    return out


# -- theorem-specific validators ------------------------------------------------------


def validate_schmidt(psi: ApproxFunction) -> list[str]:
    """Non-increasing with values in [0, 1/2); returns warnings."""
    if not psi.declared_monotone:
        raise DomainError(f"{psi}: must be non-increasing")
    if psi.declared_range != RANGE_HALF_OPEN:
        raise DomainError(f"{psi}: values must lie in [0,1/2), found max {psi.max_value}"
                          " (psi = 1/2 is excluded)")
    warnings = []
    if not psi.min_value_positive or psi.max_value == 0:
        warnings.append(f"{psi}: psi attains 0")
    for w in warnings:
        log.warning(w)
    return warnings


def validate_abh(psi: ApproxFunction) -> list[str]:
    """Values in [0, 1/2]."""
    if psi.declared_range not in (RANGE_HALF_OPEN, RANGE_HALF_CLOSED):
        raise DomainError(f"{psi}: values must lie in [0,1/2], found max {psi.max_value}")
    return []


def validate_m0(psi: ApproxFunction) -> list[str]:
    """Values in (0, 1]."""
    if not psi.min_value_positive:
        raise DomainError(f"{psi}: values must be positive for the M0 bounds")
    if psi.max_value > 1:
        raise DomainError(f"{psi}: values must not exceed 1")
    return []
