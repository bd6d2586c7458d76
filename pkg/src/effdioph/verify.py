"""Monte Carlo checks of the measure-delta claims and exact lemma checkers.

Every sample draws its own point from ``SeedSequence(seed, spawn_key=(i,))``,
so the set of samples, and hence every report, is independent of how the work
is split across threads.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.stats import norm

from .constants import (EffectiveConstants, abh_constants, assemble_bound, est_constants,
                        gcd_sum_prefix, normal_constants, m0_lacunary_constants, m0_separated_constants, separated_Phi)
from .counting import (InhomParams, R_indicators, SequenceSpec, count_S_prime_series,
                       count_S_series, digit_series, sequence_psi)
from .numtheory import DomainError, FixedPointFraction, PhiTable
from .psi import (ApproxFunction, capital_phi_array, gamma_L_chain, psi_prime_sum, psi_sum,
                  validate_abh, validate_m0, validate_schmidt)

__all__ = [
    "GridSpec",
    "ViolationReport",
    "LemmaCheck",
    "wilson_interval",
    "sample_x",
    "sample_rng",
    "mc_check_schmidt",
    "mc_check_abh",
    "estimate_abh_calC",
    "mc_check_m0_lacunary",
    "mc_check_m0_separated",
    "check_normal",
    "check_lemma41",
    "lemma41_sweep",
    "check_lemma42",
    "check_lemma43",
    "lemma43_sweep",
    "lemma43_constant",
    "lemma43_terms",
    "CONFIDENCE",
    "DEFAULT_SLACK",
]

CONFIDENCE = 0.99
DEFAULT_SLACK = 0.01
_MAX_LISTED = 20


# -- grids, intervals, reports -------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Evaluation points: ``points`` values from start to stop, linear or geometric."""

    kind: str = "geometric"
    start: int = 10
    stop: int = 10 ** 6
    points: int = 24

    def __post_init__(self):
        if self.kind not in ("linear", "geometric"):
            raise DomainError(f"grid kind must be linear or geometric, got {self.kind!r}")
        if not 1 <= self.start <= self.stop or self.points < 1:
            raise DomainError("grid needs 1 <= start <= stop and points >= 1")

    def values(self) -> np.ndarray:
        if self.kind == "linear":
            raw = np.linspace(self.start, self.stop, self.points)
        else:
            raw = np.geomspace(self.start, self.stop, self.points)
        g = np.unique(np.rint(raw).astype(np.int64))
        g[-1] = self.stop
        return np.unique(g)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "start": self.start, "stop": self.stop, "points": self.points}

    @classmethod
    def parse(cls, text: str) -> GridSpec:
        """``geometric:10:1000000:24`` or ``linear:1:40:40``."""
        parts = text.split(":")
        if len(parts) != 4:
            raise DomainError(f"grid must be kind:start:stop:points, got {text!r}")
        try:
            return cls(parts[0], int(parts[1]), int(parts[2]), int(parts[3]))
        except ValueError as exc:
            raise DomainError(f"bad grid {text!r}") from exc


def wilson_interval(k: int, n: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    """Two-sided Wilson score interval for k successes in n trials."""
    if n <= 0 or not 0 <= k <= n:
        raise DomainError("need n > 0 and 0 <= k <= n")
    z = norm.ppf(0.5 + confidence / 2.0)
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = z / denom * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))
    lo = 0.0 if k == 0 else max(0.0, float(center - half))
    hi = 1.0 if k == n else min(1.0, float(center + half))
    return lo, hi


@dataclass
class ViolationReport:
    theorem: str
    inputs: dict
    samples: int
    violators: int
    delta: float
    seed: int
    grid: dict
    slack: float = DEFAULT_SLACK
    warnings: list[str] = field(default_factory=list)
    violator_x: list[str] = field(default_factory=list)
    deterministic: bool = False

    @property
    def fraction(self) -> float:
        return self.violators / self.samples

    @property
    def wilson(self) -> tuple[float, float]:
        return wilson_interval(self.violators, self.samples)

    @property
    def passed(self) -> bool:
        if self.deterministic:
            return self.violators == 0
        return self.wilson[1] <= self.delta + self.slack

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def as_dict(self) -> dict:
        lo, hi = self.wilson
        return {"theorem": self.theorem, "inputs": self.inputs, "samples": self.samples,
                "violators": self.violators, "fraction": self.fraction, "wilson": [lo, hi],
                "delta": self.delta, "slack": self.slack, "verdict": self.verdict, "seed": self.seed,
                "grid": self.grid, "warnings": list(self.warnings), "violator_x": list(self.violator_x)}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"


@dataclass(frozen=True)
class LemmaCheck:
    holds: bool
    lower_slack: float
    upper_slack: float
    witness: tuple = ()


# -- sampling ------------------------------------------------------------------------


def sample_x(seed: int, i: int) -> FixedPointFraction:
    """The i-th uniform point of [0, 1) for ``seed``, at 128-bit resolution."""
    hi, lo = np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(2, np.uint64)
    return FixedPointFraction.from_words(int(hi), int(lo))


def sample_rng(seed: int, i: int) -> np.random.Generator:
    """Independent generator for path i (counter-mode keyed by the sample index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i,))))


def _map_samples(fn: Callable[[int], tuple[bool, str]], samples: int, threads: int) -> list:
    if samples < 1:
        raise DomainError("samples must be >= 1")
    if threads <= 1:
        return [fn(i) for i in range(samples)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(samples), chunksize=max(1, samples // (4 * threads))))


def _report(theorem, inputs, results, delta, seed, grid, warnings) -> ViolationReport:
    bad = [x for v, x in results if v]
    return ViolationReport(theorem, inputs, len(results), len(bad), delta, seed, grid,
                           warnings=list(warnings), violator_x=bad[:_MAX_LISTED])


def _xtag(x: FixedPointFraction) -> str:
    return f"{x.numerator:#034x}"


def _seed_ok(seed) -> int:
    if not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2 ** 64:
        raise DomainError("seed must be an integer in [0, 2**64)")
    return int(seed)


# -- Schmidt counts ---------------------------------------------------------------------------


def mc_check_schmidt(psi: ApproxFunction, eps: float, delta: float, samples: int,
                     grid: GridSpec, seed: int, threads: int = 1,
                     min_samples: int = 100) -> ViolationReport:
    """Fraction of x with |S(x,Q) - 2 Psi(Q)| above the effective Schmidt bound at some grid Q."""
    seed = _seed_ok(seed)
    if samples < min_samples:
        raise DomainError(f"need at least {min_samples} samples")
    warnings = list(validate_schmidt(psi))
    Q = grid.values()
    main = 2.0 * np.array([psi_sum(psi, int(q)) for q in Q])
    if psi.max_value == 0:
        bounds = np.zeros(len(Q))
        warnings.append("psi vanishes identically: S = 2 Psi = 0 and the bound is taken as 0")
        consts = None
    else:
        consts = est_constants(eps, delta, psi)
        warnings += consts.warnings
        bounds = assemble_bound("est", consts, Psi=main / 2.0)

    def one(i):
        x = sample_x(seed, i)
        counts = count_S_series(x, Q, psi)
        return bool(np.any(np.abs(counts - main) > bounds)), _xtag(x)

    inputs = {"psi": psi.spec_text, "eps": eps, "delta": delta}
    if consts is not None:
        inputs["constants"] = consts.as_dict()["outputs"]
    return _report("schmidt", inputs, _map_samples(one, samples, threads), delta, seed,
                   grid.as_dict(), warnings)


# -- coprime counts --------------------------------------------------------------------------


def estimate_abh_calC(psi: ApproxFunction, C: float, grid: GridSpec, samples: int, seed: int,
                      phi: PhiTable, threads: int = 1) -> float:
    """Empirical sup over grid Q (with Psi' > e) of E[(S' - Psi')^2] (log Psi')^C / Psi'^2."""
    Q = grid.values()
    Pp = np.array([psi_prime_sum(psi, int(q), phi) for q in Q])
    keep = Pp > math.e
    if not np.any(keep):
        raise DomainError("no grid point has Psi' > e")

    def one(i):
        return (count_S_prime_series(sample_x(seed, i), Q, psi, phi) - Pp) ** 2

    sq = np.mean(_map_samples(one, samples, threads), axis=0)
    ratio = sq[keep] * np.log(Pp[keep]) ** C / Pp[keep] ** 2
    return float(ratio.max())


def mc_check_abh(psi: ApproxFunction, C: float, delta: float, calC: float, samples: int,
                 grid: GridSpec, seed: int, phi: PhiTable, threads: int = 1,
                 calC_source: str = "user") -> ViolationReport:
    """Fraction of x with |S'(x,Q) - Psi'(Q)| above the effective coprime bound at some grid Q."""
    seed = _seed_ok(seed)
    validate_abh(psi)
    if not psi.divergent:
        raise DomainError(f"{psi}: Psi' must diverge")
    consts = abh_constants(C, delta, calC, calC_source)
    Q = grid.values()
    Pp = np.array([psi_prime_sum(psi, int(q), phi) for q in Q])
    bounds = assemble_bound("abh", consts, Psi_prime=Pp)

    def one(i):
        x = sample_x(seed, i)
        counts = count_S_prime_series(x, Q, psi, phi)
        return bool(np.any(np.abs(counts - Pp) > bounds)), _xtag(x)

    inputs = {"psi": psi.spec_text, "C": C, "delta": delta, "calC": calC,
              "calC_source": calC_source, "k_C_delta": consts["k_C_delta"]}
    return _report("abh", inputs, _map_samples(one, samples, threads), delta, seed,
                   grid.as_dict(), consts.warnings)


# -- inhomogeneous sequences ----------------------------------------------------------------------


def _m0_run(theorem, consts: EffectiveConstants, seq, psi, gamma, along, samples, grid, seed,
            threads, bound_at):
    N = grid.values()
    n_max = int(N[-1])
    qs = seq.generate(n_max)
    ps = sequence_psi(psi, qs, along)
    Psi = np.cumsum(ps)
    bounds = bound_at(N, Psi, qs, ps)
    main = 2.0 * Psi[N - 1]

    def one(i):
        x = sample_x(seed, i)
        R = np.cumsum(R_indicators(x, qs, gamma, ps))[N - 1]
        return bool(np.any(np.abs(R - main) > bounds)), _xtag(x)

    results = _map_samples(one, samples, threads)
    inputs = dict(consts.as_dict()["inputs"])
    inputs["gamma"] = float(gamma)
    inputs["constants"] = consts.as_dict()["outputs"]
    return _report(theorem, inputs, results, consts.inputs["delta"], seed, grid.as_dict(),
                   consts.warnings)


def mc_check_m0_lacunary(seq: SequenceSpec, psi: ApproxFunction, gamma: float, eps: float,
                         delta: float, samples: int, grid: GridSpec, seed: int,
                         params: InhomParams | None = None, along: str = "q",
                         threads: int = 1) -> ViolationReport:
    """|R(x,N) - 2 Psi(N)| against the lacunary M0 bound over the N grid."""
    seed = _seed_ok(seed)
    if samples < 1:
        raise DomainError("samples must be >= 1")
    if seq.K0 is None:
        raise DomainError("sequence is not declared lacunary (K0 missing)")
    validate_m0(psi)
    params = params or InhomParams(gamma, A=2.7)
    consts = m0_lacunary_constants(seq, psi, eps, delta, nu=params.nu, A=params.A, along=along)

    def bound_at(N, Psi, qs, ps):
        return assemble_bound("m0-lacunary", consts, Psi=Psi[N - 1])

    return _m0_run("m0-lacunary", consts, seq, psi, gamma, along, samples, grid, seed, threads, bound_at)


def mc_check_m0_separated(seq: SequenceSpec, psi: ApproxFunction, gamma: float, eps: float,
                          delta: float, samples: int, grid: GridSpec, seed: int,
                          params: InhomParams | None = None, along: str = "q",
                          threads: int = 1) -> ViolationReport:
    """|R(x,N) - 2 Psi(N)| against the alpha-separated M0 bound, E(N) folded into Phi."""
    seed = _seed_ok(seed)
    if samples < 1:
        raise DomainError("samples must be >= 1")
    validate_m0(psi)
    params = params or InhomParams(gamma, A=2.7)
    consts = m0_separated_constants(seq, psi, eps, delta, nu=params.nu, A=params.A, along=along,
                            n_cap=max(256, int(grid.stop)))

    def bound_at(N, Psi, qs, ps):
        Phi = separated_Phi(Psi, gcd_sum_prefix(qs, ps))
        return assemble_bound("m0-separated", consts, Phi=Phi[N - 1])

    return _m0_run("m0-separated", consts, seq, psi, gamma, along, samples, grid, seed, threads, bound_at)


# -- normal numbers --------------------------------------------------------------------------


def check_normal(d: int, b: int, grid: GridSpec, eps: float, delta: float, samples: int = 1,
                 seed: int = 0, x=None, threads: int = 1) -> ViolationReport:
    """A(d, b, N) against min{N, N/b + K N^(2/3) log^(1/3+eps)(N+2)} on the N grid.

    With ``x`` given the single explicit point is checked by exact long
    division.  Otherwise each sample is a uniform x, drawn as its i.i.d.
    uniform digit stream so that digits past the 128-bit resolution stay random.
    """
    seed = _seed_ok(seed)
    if b < 2 or not 0 <= d < b:
        raise DomainError("need b >= 2 and 0 <= d < b")
    consts = normal_constants(eps, delta, b)
    N = grid.values()
    bounds = assemble_bound("normal", consts, N=N)
    n_max = int(N[-1])
    if x is not None:
        A = digit_series(x, d, b, n_max)[N - 1]
        report = _report("normal", {}, [(bool(np.any(A > bounds)), str(x))], delta, seed,
                         grid.as_dict(), consts.warnings)
        report.deterministic = True
    else:
        def one(i):
            digits = sample_rng(seed, i).integers(0, b, size=n_max, dtype=np.int64)
            A = np.cumsum(digits == d)[N - 1]
            return bool(np.any(A > bounds)), f"sample {i}"

        report = _report("normal", {}, _map_samples(one, samples, threads), delta, seed,
                         grid.as_dict(), consts.warnings)
    report.inputs = {"d": d, "b": b, "eps": eps, "delta": delta,
                     "x": "sampled" if x is None else str(x), "constants": consts.as_dict()["outputs"]}
    return report


# -- restricted totient sums --------------------------------------------------------------------------------


def _restricted_totient_rows(N: int, kmax: int) -> np.ndarray:
    """rows[n, k] = phi(k, n) for 1 <= n <= N, 1 <= k <= kmax."""
    from .numtheory import euler_phi_sieve
    phi = euler_phi_sieve(N).values
    rows = np.zeros((N + 1, kmax + 1), dtype=np.int64)
    for n in range(1, N + 1):
        by_gcd = np.zeros(kmax + 1, dtype=np.int64)
        for d in range(1, min(n, kmax) + 1):
            if n % d == 0:
                by_gcd[d] = phi[n // d]
        rows[n] = np.cumsum(by_gcd)
        rows[n, n:] = n
    return rows


def check_lemma41(M: int, N: int, k: int) -> LemmaCheck:
    """0 <= N - M + 1 - sum_{n=M}^N phi(k,n)/n <= (N - M)/k + log N, middle term exact."""
    from .numtheory import restricted_totient
    if not 1 <= M < N or k < 1:
        raise DomainError("need 1 <= M < N and k >= 1")
    middle = (N - M + 1) - sum((Fraction(restricted_totient(k, n), n) for n in range(M, N + 1)), Fraction(0))
    upper = (N - M) / k + math.log(N)
    lo_slack, up_slack = float(middle), upper - float(middle)
    return LemmaCheck(middle >= 0 and float(middle) <= upper, lo_slack, up_slack, (M, N, k))


def lemma41_sweep(n_max: int = 2000, k_max: int = 50) -> LemmaCheck:
    """All 1 <= M < N <= n_max, 1 <= k <= k_max at once.

    Deficits d_n = 1 - phi(k,n)/n are held as integers over D = lcm(1..n_max),
    so the middle term is exact.  For fixed (N, k) the worst M maximizes
    sum_{n=M}^N d_n - (N-M)/k = P_N - P_{M-1} + 1/k with P the prefix sums of
    d_n - 1/k, so it is found from a running minimum of P.  The lower bound
    is tightest on the shortest window.  Reports the smallest slack on each side.
    """
    if n_max < 2 or k_max < 1:
        raise DomainError("need n_max >= 2 and k_max >= 1")
    rows = _restricted_totient_rows(n_max, k_max)
    D = math.lcm(*range(1, n_max + 1))
    inv = [0] + [D // n for n in range(1, n_max + 1)]
    logs = [0.0] + [math.log(n) for n in range(1, n_max + 1)]
    worst_up, worst_lo = math.inf, math.inf
    up_at = lo_at = ()
    for k in range(1, k_max + 1):
        P_lag, P = 0, 0          # P_{N-2}, P_{N-1} before term N is added
        minP, argmin = 0, 0      # min of P_0..P_{N-2}
        d_prev = 0
        for n in range(1, n_max + 1):
            dn = (n - int(rows[n, k])) * inv[n]
            if n >= 2:
                if P_lag < minP:
                    minP, argmin = P_lag, n - 2
                P_n = P + dn * k - D
                slack = logs[n] - (P_n - minP + D) / (D * k)
                if slack < worst_up:
                    worst_up, up_at = slack, (argmin + 1, n, k)
                mid = (d_prev + dn) / D
                if mid < worst_lo:
                    worst_lo, lo_at = mid, (n - 1, n, k)
            P_lag, P = P, P + dn * k - D
            d_prev = dn
    return LemmaCheck(worst_lo >= 0 and worst_up >= 0, worst_lo, worst_up, up_at if worst_up < 0 or worst_lo >= 0 else lo_at)


# -- weighted totient sums ---------------------------------------------------------------------------------


def check_lemma42(psi: ApproxFunction, M: int, N: int, k: int) -> LemmaCheck:
    """(1-1/k) S - psi(M) log M - sum psi(n)/n <= sum psi(n) phi(k,n)/n <= S, S = sum_{M..N} psi."""
    from .numtheory import restricted_totient
    if not 1 <= M < N or k < 1:
        raise DomainError("need 1 <= M < N and k >= 1")
    vals = psi.values(M, N)
    n = np.arange(M, N + 1)
    pk = np.array([restricted_totient(k, int(m)) for m in n], dtype=np.float64)
    S = math.fsum(vals)
    middle = math.fsum(vals * pk / n)
    lower = (1.0 - 1.0 / k) * S - float(vals[0]) * math.log(M) - math.fsum(vals / n)
    lo_slack, up_slack = middle - lower, S - middle
    tol = 1e-12 * max(1.0, S)
    return LemmaCheck(lo_slack >= -tol and up_slack >= -tol, lo_slack, up_slack, (M, N, k))


# -- weighted coprimality deficit ---------------------------------------------------------------------------------


def lemma43_terms() -> tuple[float, float, float, float]:
    l2l3 = math.log(2.0 * math.log(3.0))
    return (8.0 * math.sqrt(math.e) / l2l3, 8.0 * math.sqrt(math.e) / math.log(2.0),
            3.0 / (math.log(3.0) * l2l3), 1.0 / (math.log(2.0) * math.log(3.0)))


def lemma43_constant() -> float:
    """8 sqrt(e) (1/log(2 log 3) + 1/log 2) + 3/(log 3 log(2 log 3)) + 1/(log 2 log 3)."""
    return math.fsum(lemma43_terms())


def lemma43_sweep(psi: ApproxFunction, N: int, constant: float = 40.6) -> LemmaCheck:
    """0 <= sum_{n<=M} psi(n)(1 - Phi(n)/n) <= constant L(M) L2(M) for every M <= N."""
    Phi = capital_phi_array(psi, N)
    n = np.arange(1, N + 1)
    terms = psi.values(1, N) * (1.0 - Phi / n)
    if np.any(terms < 0):
        bad = int(np.argmax(terms < 0)) + 1
        return LemmaCheck(False, float(terms.min()), math.nan, ("negative term", bad))
    partial = np.cumsum(terms)
    _, L, L2 = gamma_L_chain(psi.cache.prefix(N)[:N])
    upper = constant * L * L2
    up_slack = upper - partial
    worst = int(np.argmin(up_slack))
    return LemmaCheck(bool(np.all(up_slack >= 0)), float(partial.min()), float(up_slack[worst]), (worst + 1,))


def check_lemma43(psi: ApproxFunction, N: int, constant: float = 40.6) -> LemmaCheck:
    """The weighted-coprimality inequality at the single endpoint N."""
    Phi = capital_phi_array(psi, N)
    n = np.arange(1, N + 1)
    total = math.fsum(psi.values(1, N) * (1.0 - Phi / n))
    _, L, L2 = gamma_L_chain(psi_sum(psi, N))
    upper = constant * L * L2
    return LemmaCheck(total >= 0 and total <= upper, total, upper - total, (N,))
