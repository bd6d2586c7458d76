"""Explicit effective constants and the assembled bounds they feed.

Every constant is evaluated from its closed form.  Quantities that overflow a
double are carried as :class:`Huge` (natural log of the value) and any bound
built from one evaluates to ``inf``; the bundle's warnings say so.
"""

from __future__ import annotations

import decimal
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .counting import SequenceSpec, sequence_psi
from .numtheory import DomainError, zeta
from .psi import (DIRECT_LIMIT, ApproxFunction, psi_sum, psi_sum_log,
                  validate_m0, validate_schmidt)

__all__ = [
    "Huge",
    "EffectiveConstants",
    "est_constants",
    "thm2_constants",
    "thm3_constants",
    "thm2_second_branch",
    "thm3_second_branch",
    "abh_k",
    "abh_constants",
    "m0_constants",
    "m0_zeta_terms",
    "PowerLawTail",
    "TDelta",
    "t_delta_exact",
    "m0_lacunary_constants",
    "m0_separated_constants",
    "normal_constants",
    "slln_constants",
    "assemble_bound",
    "lebesgue_nu_ok",
]

LOG3 = math.log(3.0)
LOG4 = math.log(4.0)


@dataclass(frozen=True)
class Huge:
    """A positive number beyond double range, stored as its natural log."""

    log: float

    def __float__(self):
        return math.inf

    def __str__(self):
        if not math.isfinite(self.log):
            return "exp(>1e308)"
        e10 = self.log / math.log(10.0)
        if e10 > 1e15:
            return f"10^{e10:.6e}"
        exp = math.floor(e10)
        return f"{10 ** (e10 - exp):.6f}e+{exp}"


def _log_of(v) -> float:
    return v.log if isinstance(v, Huge) else math.log(v)


def _from_log(lv: float):
    return math.exp(lv) if lv < 700 else Huge(lv)


def _jsonable(v):
    if isinstance(v, Huge):
        return str(v)
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating, Fraction)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return str(v)


@dataclass(frozen=True)
class EffectiveConstants:
    """Inputs and explicit constants for one theorem instance."""

    theorem: str
    inputs: dict
    outputs: dict
    warnings: tuple[str, ...] = ()
    unverified: bool = False

    def __getitem__(self, name):
        return self.outputs[name]

    def as_dict(self) -> dict:
        d = {"theorem": self.theorem, "inputs": _jsonable(self.inputs),
             "outputs": _jsonable(self.outputs), "warnings": list(self.warnings)}
        if self.unverified:
            d["unverified"] = True
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=False) + "\n"


def _check_pos(**kw):
    for k, v in kw.items():
        if not (isinstance(v, (int, float, Fraction)) and v > 0 and math.isfinite(v)):
            raise DomainError(f"{k} must be a positive finite number, got {v!r}")


def _ceil_root(value: Fraction, eps: float):
    """Smallest integer m with m >= value**(1/eps); exact when eps is an integer."""
    if value <= 0:
        return 0
    if float(eps).is_integer() and eps <= 64:
        k = int(eps)
        try:
            guess = math.ceil(float(value) ** (1.0 / k))
        except OverflowError:
            return Huge(math.log(value.numerator) - math.log(value.denominator)) if k == 1 else \
                Huge((math.log(value.numerator) - math.log(value.denominator)) / k)
        m = max(guess, 0)
        while m ** k < value:
            m += 1
        while m > 0 and (m - 1) ** k >= value:
            m -= 1
        return m
    lv = (math.log(value.numerator) - math.log(value.denominator)) / eps
    if lv > 700:
        return Huge(lv)
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        root = (decimal.Decimal(value.numerator) / decimal.Decimal(value.denominator)) ** (
            decimal.Decimal(1) / decimal.Decimal(eps))
        return int(root.to_integral_value(rounding=decimal.ROUND_CEILING))


# -- Schmidt -------------------------------------------------------------


def _schmidt_g(Psi):
    # 44 Psi log(3 Psi^2 + 3) log(2 log(3 Psi^2 + 3))
    inner = math.log(3.0 * Psi * Psi + 3.0)
    return 44.0 * Psi * inner * math.log(2.0 * inner)


def _schmidt_K_log(eps: float, psi1: float) -> float:
    num = math.log(28.0 + 858.0 * (eps + 1.0) * 7.0 ** eps) if eps < 300 else \
        math.log(858.0 * (eps + 1.0)) + eps * math.log(7.0)
    return num - 0.5 * math.log(psi1) - (2.0 + eps) * math.log(math.log1p(psi1))


def _est_last_true(psi: ApproxFunction, T, search_cap: int):
    """(max n with T > g(Psi(n)), exact?) ; 0 for the empty set."""
    Tf = float(T)

    def pred(n):
        return Tf > _schmidt_g(psi_sum(psi, n))

    if not pred(1):
        return 0, True
    lo, hi = 1, 2
    while hi <= search_cap and pred(hi):
        lo, hi = hi, 2 * hi
    if hi <= search_cap:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if pred(mid):
                lo = mid
            else:
                hi = mid
        return lo, hi <= DIRECT_LIMIT
    if search_cap < DIRECT_LIMIT or not math.isfinite(Tf):
        return Huge(math.log(search_cap)), False
    # beyond the cached range: invert g, then Psi, in log space
    p_lo, p_hi = psi_sum(psi, DIRECT_LIMIT), max(1.0, psi_sum(psi, DIRECT_LIMIT))
    while _schmidt_g(p_hi) < Tf:
        p_hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (p_lo + p_hi)
        if _schmidt_g(mid) < Tf:
            p_lo = mid
        else:
            p_hi = mid
    target = p_hi
    L_lo, L_hi = math.log(DIRECT_LIMIT), 2.0 * math.log(DIRECT_LIMIT)
    while psi_sum_log(psi, L_hi) < target:
        L_lo, L_hi = L_hi, 2.0 * L_hi
        if L_hi > 1e300:
            return Huge(math.inf), False
    for _ in range(200):
        mid = 0.5 * (L_lo + L_hi)
        if psi_sum_log(psi, mid) < target:
            L_lo = mid
        else:
            L_hi = mid
    return Huge(L_lo), False


def est_constants(eps: float, delta: float, psi: ApproxFunction,
                  search_cap: int = 1 << 62) -> EffectiveConstants:
    """K_eps and N_{eps,delta} for the effective Schmidt bound."""
    _check_pos(eps=eps, delta=delta)
    warnings = list(validate_schmidt(psi))
    psi1 = psi(1)
    if psi1 <= 0:
        raise DomainError("psi(1) = 0 puts a zero in the denominator of K_eps")
    if not psi.divergent:
        raise DomainError(f"{psi}: sum of psi converges, so N_{{eps,delta}} is unbounded")
    logK = _schmidt_K_log(eps, psi1)
    K = _from_log(logK)
    if isinstance(K, Huge):
        warnings.append(f"K_eps astronomically large ({K})")
        T = _from_log(math.log(2.0) + logK - math.log(eps * delta))
        T = Huge(T.log / eps) if isinstance(T, Huge) else T
    else:
        T = _ceil_root(Fraction(2) * Fraction(K) / (Fraction(eps) * Fraction(delta)), eps)
    threshold = T + 1 if not isinstance(T, Huge) else T
    n_last, exact = _est_last_true(psi, threshold, search_cap)
    if isinstance(n_last, Huge):
        N = Huge(math.log(2.0) + n_last.log)
        warnings.append(f"N_eps,delta exceeds the direct search range; ~{N} (log-space estimate)")
    else:
        N = 2 * n_last
    return EffectiveConstants(
        "est",
        {"eps": eps, "delta": delta, "psi": psi.spec_text},
        {"K_eps": K, "threshold": threshold, "N_eps_delta": N, "N_exact": exact},
        tuple(warnings),
    )


# -- quantitative Borel-Cantelli ------------------------------------


def thm2_second_branch(eps: float, Phi0: float) -> float:
    return (4.0 / math.log(Phi0 + 2.0) ** (2.0 * eps / 3.0) * (LOG4 / LOG3) ** (1.0 + eps)
            * (4.0 + (1.0 + eps) / LOG3 + 1.0 / (4.0 * LOG4 ** (1.0 + eps))))


def thm3_second_branch(eps: float) -> float:
    return (2.0 / math.log(2.0) ** (1.5 + eps / 2.0)
            * (1.0 + 1.0 / (math.sqrt(2.0) * LOG4 ** (1.5 + eps)))
            * (LOG4 / LOG3) ** (1.5 + eps))


def _first_index(Phi: Callable[[int], float], test, cap: int):
    """Smallest n in [1, cap] with test(Phi(n)), assuming monotonicity; None if none."""
    if test(Phi(1)):
        return 1
    lo, hi = 1, 2
    while hi <= cap and not test(Phi(hi)):
        lo, hi = hi, 2 * hi
    if hi > cap:
        if test(Phi(cap)):
            hi = cap
        else:
            return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if test(Phi(mid)):
            hi = mid
        else:
            lo = mid
    return hi


def _scaled(C, N, denom):
    if isinstance(N, Huge):
        return Huge(math.log(C) + N.log - math.log(denom))
    return C * N / denom


def _kmax(a, b):
    if isinstance(a, Huge) or isinstance(b, Huge):
        return a if isinstance(a, Huge) else b
    return max(a, b)


def thm2_constants(eps: float, delta: float, K: float, Phi0: float, C: float,
                   Phi: Callable[[int], float] | None = None,
                   search_cap: int = 1 << 1000) -> EffectiveConstants:
    """j, N and K for the effective Borel-Cantelli bound with a j-indexed threshold."""
    _check_pos(eps=eps, delta=delta, K=K, Phi0=Phi0, C=C)
    warnings = []
    X = (1.0 + LOG3 ** (-1.0 - eps)) * K / (eps * delta)
    inner = X ** (1.0 / eps) if math.log(X) / eps < 700 else math.inf
    if inner < 700:
        j = 1 + math.ceil(math.exp(inner))
        logT = 3.0 * math.log(j) + (1.0 + eps) * math.log(math.log(j + 2.0))
    else:
        log_inner = math.log(X) / eps
        j = Huge(math.exp(log_inner) if log_inner < 700 else math.inf)
        logT = 3.0 * j.log + (1.0 + eps) * math.log(j.log) if math.isfinite(j.log) else math.inf
        warnings.append(f"j_eps,delta astronomically large ({j})")
    T = _from_log(logT)
    if not isinstance(T, Huge):
        # the comparison Phi(n) > T is made at 60 digits so N is exact for large j
        with decimal.localcontext() as ctx:
            ctx.prec = 60
            D = decimal.Decimal
            T_cmp = D(j) ** 3 * (D(j) + 2).ln() ** (D(1) + D(eps))
    out = {"j": j, "threshold": T}
    if Phi is None:
        N = None
    elif isinstance(T, Huge):
        # Phi(n) <= n because every phi_k <= 1, so N >= T
        N = T
        warnings.append("N_eps,delta reported as the lower bound T (threshold beyond double range)")
    else:
        N = _first_index(Phi, lambda v: v > T_cmp, search_cap)
        if N is None:
            N = search_cap
            warnings.append(f"Phi stayed below the threshold up to n={search_cap}; N is a lower bound")
    out["N_eps_delta"] = N
    second = thm2_second_branch(eps, Phi0)
    out["K_second_branch"] = second
    if N is not None:
        first = _scaled(C, N, max(Phi0 ** (2.0 / 3.0) * math.log(Phi0 + 2.0) ** (1.0 / 3.0 + eps), 1.0))
        out["K_first_branch"] = first
        out["K_eps_delta"] = _kmax(first, second)
    return EffectiveConstants("thm2", {"eps": eps, "delta": delta, "K": K, "Phi0": Phi0, "C": C},
                              out, tuple(warnings))


def thm3_constants(eps: float, delta: float, K: float, Phi0: float, C: float, f1: float,
                   Phi: Callable[[int], float] | None = None,
                   search_cap: int = 1 << 62) -> EffectiveConstants:
    """r, N and K for the effective Borel-Cantelli bound with an r-indexed threshold."""
    _check_pos(eps=eps, delta=delta, K=K, Phi0=Phi0, C=C)
    if f1 < 0:
        raise DomainError("f1 must be non-negative")
    warnings = []
    root = _ceil_root(Fraction(2) * Fraction(K) / (Fraction(eps) * Fraction(delta)), eps)
    r = root + 1 if not isinstance(root, Huge) else root
    out = {"r": r}
    if Phi is None:
        N = None
    elif isinstance(r, Huge):
        N = Huge(r.log - math.log(max(Phi0, 1e-300)))
        warnings.append("r beyond double range; N reported in log space")
    else:
        first_ge = _first_index(Phi, lambda v: v >= r, search_cap)
        if first_ge is None:
            N = search_cap
            warnings.append(f"Phi stayed below r up to n={search_cap}; N is a lower bound")
        else:
            N = first_ge - 1
    out["N_eps_delta"] = N
    second = thm3_second_branch(eps)
    out["K_second_branch"] = second
    if N is not None:
        first = _scaled(C, N, max(Phi0 ** 0.5 * math.log(Phi0 + 2.0) ** (1.5 + eps) + f1, 1.0))
        out["K_first_branch"] = first
        out["K_eps_delta"] = _kmax(first, second)
    return EffectiveConstants("thm3", {"eps": eps, "delta": delta, "K": K, "Phi0": Phi0, "C": C, "f1": f1},
                              out, tuple(warnings))


# -- ABH -----------------------------------------------------------------


def _abh_log_f(k: int, s: float, denom: float, log_cal: float) -> float:
    return log_cal - s * math.log(k) + math.log1p(2.0 * k / denom)


def abh_k(C: float, delta: float, calC: float) -> int:
    """min{k : calC k^(-sqrt(C)/2) (1 + 2k/(sqrt(C)-2)) < delta}.

    Both summands decrease in k when C > 4, so the predicate is monotone and
    an exponential bracket plus bisection finds the minimum.
    """
    if not C > 4:
        raise DomainError("C must exceed 4: the term 2k/(sqrt(C)-2) needs sqrt(C) > 2")
    _check_pos(delta=delta, calC=calC)
    s = math.sqrt(C) / 2.0
    denom = math.sqrt(C) - 2.0
    log_cal, log_d = math.log(calC), math.log(delta)

    def ok(k):
        return _abh_log_f(k, s, denom, log_cal) < log_d

    if ok(1):
        return 1
    lo, hi = 1, 2
    while not ok(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def abh_constants(C: float, delta: float, calC: float, calC_source: str = "user") -> EffectiveConstants:
    k = abh_k(C, delta, calC)
    warnings = [f"calC={calC!r} is {calC_source}-supplied and unverified; no published value exists"]
    return EffectiveConstants("abh", {"C": C, "delta": delta, "calC": calC, "calC_source": calC_source},
                              {"k_C_delta": k}, tuple(warnings), unverified=True)


# -- M0 constants --------------------------------------------------------------------


def lebesgue_nu_ok(A: float) -> bool:
    """Whether 1/(pi |t|) <= (1/pi) / log^A |t| for all |t| > 1, i.e. A <= e."""
    return A <= math.e


def m0_zeta_terms(A: float, B: float) -> dict[str, tuple[float, float]]:
    """Every zeta factor used by the M0 constants, as name -> (argument, value)."""
    args = {
        "zeta(A-1)": (A - 1.0, "c2"),
        "zeta(A-1/2)": (A - 0.5, "c2"),
        "zeta(A/2)": (A / 2.0, "c2"),
        "zeta(A/B-1/2)": (A / B - 0.5, "c3"),
        "zeta(A/(2B))": (A / (2.0 * B), "c3"),
        "zeta(A/B-1)": (A / B - 1.0, "m1"),
    }
    out = {}
    for name, (s, owner) in args.items():
        try:
            out[name] = (s, zeta(s))
        except DomainError as exc:
            raise DomainError(f"{owner} needs {name} with argument {s:.6g}: {exc}") from exc
    return out


def _power_tail_form(tau: float, coef: float, delta: float, printed: bool) -> float:
    # 1/2 + ((tau - 1) delta / (f coef))^(1/(1 - tau)), f = 2 as printed, 1 as derived
    f = 2.0 if printed else 1.0
    return 0.5 + ((tau - 1.0) * delta / (f * coef)) ** (1.0 / (1.0 - tau))


def m0_constants(nu: float, A: float, B: float, C_growth: float, alpha: float,
                 K0: float, delta: float) -> EffectiveConstants:
    """K', c1, c2, c3, m1, m2 and the closed-form t_{1,delta}, t_{2,delta}."""
    _check_pos(nu=nu, A=A, B=B, C_growth=C_growth, delta=delta)
    if not A > 2 * B:
        raise DomainError(f"need A > 2B, got A={A}, B={B}")
    if not K0 > 1:
        raise DomainError("K0 must exceed 1")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    z = {k: v[1] for k, v in m0_zeta_terms(A, B).items()}
    warnings = []
    if abs(nu - 1 / math.pi) < 1e-15 and not lebesgue_nu_ok(A):
        warnings.append(f"nu=1/pi bounds the Lebesgue transform only for A <= e; A={A}")
    Kp = 1.0 / (K0 - 1.0)
    c1 = 22.0 / (K0 - 1.0)
    m2 = 3.0 / 2.0 ** (2.0 / 3.0)
    decay = 18.0 * nu * C_growth ** (-A)
    c2 = (12.0 * (m2 + 1.0) * (1.0 + z["zeta(A-1)"]) + 8.0 / (K0 - 1.0)
          + decay * (math.sqrt(2.0) * z["zeta(A-1/2)"] * (2.0 + alpha ** (-A)) + 2.0 ** (A + 1.0) * z["zeta(A/2)"]))
    c3 = (4.0 + decay * (math.sqrt(2.0) * z["zeta(A/B-1/2)"] * (2.0 + alpha ** (-A))
                         + 2.0 ** (A + 1.0) * z["zeta(A/(2B))"]) + c2)
    m1 = 3.0 + 3.0 * z["zeta(A/B-1)"]
    w = nu / C_growth ** A
    tau2 = min(9.0, A / B)
    out = {
        "K_prime": Kp, "c1": c1, "c2": c2, "c3": c3, "m1": m1, "m2": m2,
        "K_lacunary": 6.0 * max(48.0, c1, c2), "K_separated": 2.0 * max(48.0, c3),
        # printed forms carry a factor 2 and exponent base (A - 1); the sign of
        # (1 - A) is flipped so the power is real
        "t1_printed": _power_tail_form(A, 3.0 + w, delta, True),
        "t1_derived": _power_tail_form(A / B, 3.0 + w, delta, False),
        "t2_printed": _power_tail_form(tau2, 1.0 + w, delta, True),
        "t2_derived": _power_tail_form(tau2, 1.0 + w, delta, False),
    }
    return EffectiveConstants("m0", {"nu": nu, "A": A, "B": B, "C_growth": C_growth,
                                     "alpha": alpha, "K0": K0, "delta": delta}, out, tuple(warnings))


# -- certified t_delta ----------------------------------------------------------------


@dataclass(frozen=True)
class PowerLawTail:
    """omega(n) = coef * n^(-exponent) with exact integral tail bounds."""

    coef: float
    exponent: float

    def __post_init__(self):
        if self.coef < 0:
            raise DomainError("coef must be non-negative")
        if self.coef > 0 and not self.exponent > 1:
            raise DomainError("power-law tail needs exponent > 1 to be summable")

    def term(self, n: int) -> float:
        return self.coef * n ** (-self.exponent) if self.coef else 0.0

    def integral(self, t: float) -> float:
        """int_t^inf omega."""
        if not self.coef:
            return 0.0
        return self.coef * t ** (1.0 - self.exponent) / (self.exponent - 1.0)


@dataclass(frozen=True)
class TDelta:
    t: int
    closed_forms: dict = field(default_factory=dict)


def _tail_bounds(series: Sequence, t: int, m: int) -> tuple[float, float]:
    # sum_{n >= t} f(n) for decreasing f: explicit terms t..t+m-1, then
    # int_{t+m}^inf f <= rest <= f(t+m) + int_{t+m}^inf f
    head = math.fsum(s.term(n) for s in series for n in range(t, t + m))
    rest_lo = math.fsum(s.integral(t + m) for s in series)
    rest_hi = rest_lo + math.fsum(s.term(t + m) for s in series)
    return head + rest_lo, head + rest_hi


def _tail_below(series, t: int, bound: float) -> bool:
    m = 8
    while True:
        lo, hi = _tail_bounds(series, t, m)
        if hi < bound:
            return True
        if lo >= bound:
            return False
        if m > 1 << 20:
            # undecidable at double precision: resolve conservatively
            return False
        m *= 8


def t_delta_exact(omega, nu: float, A: float, B: float, C_growth: float, delta: float) -> TDelta:
    """min{t : sum_{n >= t} (omega(n) + nu / (C^A n^(A/B))) < delta / 3}."""
    _check_pos(delta=delta, A=A, B=B, C_growth=C_growth)
    if not A / B > 1:
        raise DomainError("need A/B > 1 for the decay series to converge")
    if not (hasattr(omega, "term") and hasattr(omega, "integral")):
        raise DomainError("omega needs term() and integral() to certify the infinite tail")
    series = (omega, PowerLawTail(nu / C_growth ** A, A / B))
    bound = delta / 3.0
    if _tail_below(series, 1, bound):
        t = 1
    else:
        lo, hi = 1, 2
        while not _tail_below(series, hi, bound):
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _tail_below(series, mid, bound):
                hi = mid
            else:
                lo = mid
        t = hi
    w = nu / C_growth ** A
    tau1, tau2 = A / B, min(9.0, A / B)
    forms = {
        "t1_printed": _power_tail_form(A, 3.0 + w, delta, True),
        "t1_derived": _power_tail_form(tau1, 3.0 + w, delta, False),
        "t2_printed": _power_tail_form(tau2, 1.0 + w, delta, True),
        "t2_derived": _power_tail_form(tau2, 1.0 + w, delta, False),
    }
    return TDelta(t, forms)


# -- inhomogeneous bundles -----------------------------------------------------------


M0_SEARCH_CAP = 1024


def _m0_common(seq: SequenceSpec, psi: ApproxFunction, along: str, n_cap: int):
    validate_m0(psi)
    qs = seq.generate(n_cap)
    ps = sequence_psi(psi, qs, along)
    Psi = np.cumsum(ps)
    return qs, ps, Psi


def m0_lacunary_constants(seq: SequenceSpec, psi: ApproxFunction, eps: float, delta: float,
                   nu: float = 1 / math.pi, A: float = 2.7, alpha: float = 0.5,
                   along: str = "q", n_cap: int = M0_SEARCH_CAP) -> EffectiveConstants:
    """Constants of the lacunary M0 bound (Lebesgue instance by default)."""
    if seq.K0 is None:
        raise DomainError("the lacunary case needs a lacunary sequence with declared K0")
    C_growth = seq.C_growth if seq.C_growth is not None else math.log(seq.K0) * 0.999
    m0 = m0_constants(nu, A, 1.0, C_growth, alpha, seq.K0, delta)
    qs, ps, Psi = _m0_common(seq, psi, along, n_cap)
    phis = ps * np.cbrt(Psi) * (np.log(np.maximum(Psi, 1.0)) + 1.0) + 2.0 * ps
    Phi_arr = np.cumsum(phis)
    f1 = min(1.0, 2.0 * float(ps[0]))
    sub = thm3_constants(eps, delta / 2.0, m0["K_lacunary"], float(Phi_arr[0]), 1.0, f1,
                         Phi=lambda n: float(Phi_arr[n - 1]), search_cap=n_cap)
    td = t_delta_exact(PowerLawTail(3.0, A), nu, A, 1.0, C_growth, delta / 2.0)
    warnings = list(m0.warnings) + list(sub.warnings)
    if qs[0] <= 4:
        warnings.append("q_1 <= 4; the lemma chain assumes terms greater than 4")
    out = dict(m0.outputs)
    out.update({"K_eps_delta_half": sub["K_eps_delta"], "r": sub["r"], "N_eps_delta": sub["N_eps_delta"],
                "Phi0": float(Phi_arr[0]), "f1": f1, "t_delta_half": td.t,
                **{f"{k}_half": v for k, v in td.closed_forms.items()}})
    return EffectiveConstants(
        "m0-lacunary",
        {"seq": seq.kind, "K0": seq.K0, "psi": psi.spec_text, "along": along, "eps": eps, "delta": delta,
         "nu": nu, "A": A, "B": 1.0, "C_growth": C_growth, "alpha": alpha},
        out, tuple(warnings))


def separated_Phi(Psi: np.ndarray, E: np.ndarray) -> np.ndarray:
    return Psi * (np.log(np.maximum(Psi, 1.0)) + 2.0) + E


def gcd_sum_prefix(qs: Sequence[int], ps: np.ndarray) -> np.ndarray:
    """E(n) for n = 1..len(qs), built incrementally."""
    w = [float(p) / q for p, q in zip(ps, qs)]
    out = np.zeros(len(qs))
    acc = 0.0
    for n in range(1, len(qs)):
        acc += math.fsum(math.gcd(qs[m], qs[n]) * min(w[m], w[n]) for m in range(n))
        out[n] = acc
    return out


def m0_separated_constants(seq: SequenceSpec, psi: ApproxFunction, eps: float, delta: float,
                   nu: float = 1 / math.pi, A: float = 2.7, along: str = "q",
                   n_cap: int = 256) -> EffectiveConstants:
    """Constants of the alpha-separated M0 bound."""
    if seq.alpha is None or seq.C_growth is None:
        raise DomainError("the separated case needs alpha and the growth constant C declared")
    bad = seq.growth_violation(n_cap)
    if bad is not None:
        raise DomainError(f"growth condition log q_n > C n^(1/B) fails at n={bad}")
    K0 = seq.K0 if seq.K0 is not None else float(seq.min_ratio(n_cap))
    warnings = []
    if seq.K0 is None:
        warnings.append(f"K0 for c2 taken as the minimum ratio q_(n+1)/q_n over n <= {n_cap}: {K0:.6g}")
    m0 = m0_constants(nu, A, seq.B, seq.C_growth, seq.alpha, K0, delta)
    qs, ps, Psi = _m0_common(seq, psi, along, n_cap)
    Phi_arr = separated_Phi(Psi, gcd_sum_prefix(qs, ps))
    f1 = min(1.0, 2.0 * float(ps[0]))
    sub = thm3_constants(eps, delta / 2.0, m0["K_separated"], float(Phi_arr[0]), 1.0, f1,
                         Phi=lambda n: float(Phi_arr[n - 1]), search_cap=n_cap)
    td = t_delta_exact(PowerLawTail(1.0, 9.0), nu, A, seq.B, seq.C_growth, delta / 2.0)
    warnings += list(m0.warnings) + list(sub.warnings)
    out = dict(m0.outputs)
    out.update({"K0_used": K0, "K_eps_delta_half": sub["K_eps_delta"], "r": sub["r"],
                "N_eps_delta": sub["N_eps_delta"], "Phi0": float(Phi_arr[0]), "f1": f1,
                "t_delta_half": td.t, **{f"{k}_half": v for k, v in td.closed_forms.items()}})
    return EffectiveConstants(
        "m0-separated",
        {"seq": seq.kind, "psi": psi.spec_text, "along": along, "eps": eps, "delta": delta, "nu": nu,
         "A": A, "B": seq.B, "C_growth": seq.C_growth, "alpha": seq.alpha},
        out, tuple(warnings))


# -- normal numbers and SLLN ----------------------------------------------------------


def normal_constants(eps: float, delta: float, b: int) -> EffectiveConstants:
    """Borel-Cantelli constants with phi_k = 1/b, K = 1, C = 1."""
    if b < 2:
        raise DomainError("base b must be >= 2")
    sub = thm2_constants(eps, delta, 1.0, 1.0 / b, 1.0, Phi=lambda n: Fraction(n, b))
    return EffectiveConstants("normal", {"eps": eps, "delta": delta, "b": b},
                              dict(sub.outputs), sub.warnings)


def slln_constants(eps: float, delta: float, sigma2: float, F_tilde: Sequence[float],
                   F: float | None = None) -> EffectiveConstants:
    """r, N, K and Phi0 of the effective strong law; F_tilde over the probed range."""
    _check_pos(eps=eps, delta=delta, sigma2=sigma2)
    Ft = np.asarray(F_tilde, dtype=np.float64)
    if len(Ft) == 0 or np.any(Ft < 1):
        raise DomainError("F_tilde must be non-empty with every entry >= 1")
    Phi0 = float(Ft.max())
    F = float(Ft[0]) if F is None else float(F)
    root = _ceil_root(Fraction(2) * Fraction(sigma2) / (Fraction(eps) * Fraction(delta)), eps)
    if isinstance(root, Huge):
        raise DomainError(f"r_eps,delta beyond double range ({root})")
    r = root + 1
    N = math.ceil(Fraction(r) / Fraction(Phi0) - 1)
    alpha = N / max(Phi0 ** 0.5 * math.log(Phi0 + 2.0) ** (1.5 + eps) + F, 1.0)
    beta = thm3_second_branch(eps)
    return EffectiveConstants(
        "slln", {"eps": eps, "delta": delta, "sigma2": sigma2, "F": F},
        {"r": r, "N_eps_delta": N, "alpha": alpha, "beta": beta, "K_eps_delta": max(alpha, beta),
         "Phi0": Phi0})


# -- assembled bounds -----------------------------------------------------------------


def _f(v) -> float:
    return float(v)


def assemble_bound(theorem: str, constants: EffectiveConstants, **agg):
    """Right-hand side of the named bound at the given aggregates.

    est: Psi; abh: Psi_prime; m0-lacunary: Psi; m0-separated: Phi;
    normal: N; slln: N, Phi; thm2/thm3: Phi (thm3 also fmax).
    Arrays are accepted and broadcast.
    """
    if constants.theorem != theorem:
        raise DomainError(f"constants are for {constants.theorem!r}, not {theorem!r}")
    eps = constants.inputs.get("eps")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if theorem == "est":
            Psi = np.asarray(agg["Psi"], dtype=np.float64)
            K, N = _f(constants["K_eps"]), _f(constants["N_eps_delta"])
            main = np.where(Psi > 0, K * np.sqrt(Psi) * np.log1p(Psi) ** (2.0 + eps), 0.0)
            res = np.maximum(N, main)
        elif theorem == "abh":
            Pp = np.asarray(agg["Psi_prime"], dtype=np.float64)
            half_k = constants["k_C_delta"] / 2.0
            C = constants.inputs["C"]
            second = (2.0 * math.e * Pp + 1.0) / np.log(np.maximum(Pp, math.e)) ** C + 0.5
            res = np.where(Pp > math.e, np.maximum(half_k, second), half_k)
        elif theorem == "m0-lacunary":
            Psi = np.asarray(agg["Psi"], dtype=np.float64)
            K = _f(constants["K_eps_delta_half"])
            base = np.maximum(np.log(Psi) + 2.0, 0.0)
            res = 2.0 * K * (Psi ** (2.0 / 3.0) * base ** (2.0 + eps)) + constants["t_delta_half"]
        elif theorem == "m0-separated":
            Phi = np.asarray(agg["Phi"], dtype=np.float64)
            K = _f(constants["K_eps_delta_half"])
            lg = np.maximum(np.log(Phi), 0.0)
            res = K * (np.sqrt(Phi) * lg ** (1.5 + eps) + 2.0) + constants["t_delta_half"]
        elif theorem == "normal":
            N = np.asarray(agg["N"], dtype=np.float64)
            b = constants.inputs["b"]
            K = _f(constants["K_eps_delta"])
            env = N / b + K * N ** (2.0 / 3.0) * np.log(N + 2.0) ** (1.0 / 3.0 + eps)
            res = np.minimum(N, env)
        elif theorem == "slln":
            N = np.asarray(agg["N"], dtype=np.float64)
            Phi = np.asarray(agg["Phi"], dtype=np.float64)
            K = _f(constants["K_eps_delta"])
            res = K * (np.sqrt(Phi) * np.log(Phi) ** (1.5 + eps) / N + constants["Phi0"] / N)
        elif theorem == "thm2":
            Phi = np.asarray(agg["Phi"], dtype=np.float64)
            K = _f(constants["K_eps_delta"])
            res = K * Phi ** (2.0 / 3.0) * np.log(Phi + 2.0) ** (1.0 / 3.0 + eps)
        elif theorem == "thm3":
            Phi = np.asarray(agg["Phi"], dtype=np.float64)
            K = _f(constants["K_eps_delta"])
            res = K * (np.sqrt(Phi) * np.maximum(np.log(Phi), 0.0) ** (1.5 + eps) + agg.get("fmax", 0.0))
        else:
            raise DomainError(f"unknown theorem {theorem!r}")
    res = np.where(np.isnan(res), np.inf, res)
    return float(res) if res.ndim == 0 else res
