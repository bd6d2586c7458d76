"""Bounded random-variable sequences and the effective strong-law check."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .constants import assemble_bound, slln_constants
from .numtheory import DomainError
from .verify import GridSpec, ViolationReport, _map_samples, _report, _seed_ok, sample_rng

__all__ = [
    "Discrete",
    "RVSequenceSpec",
    "VarianceCertificate",
    "parse_rv",
    "simulate_slln",
    "variance_certificate",
    "empirical_second_moment",
]


@dataclass(frozen=True)
class Discrete:
    """A finitely supported law; bounded by construction."""

    support: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if not self.support or len(self.support) != len(self.probs):
            raise DomainError("support and probabilities must be non-empty and of equal length")
        if any(p < 0 for p in self.probs) or not math.isclose(sum(self.probs), 1.0, abs_tol=1e-12):
            raise DomainError("probabilities must be non-negative and sum to 1")
        if not all(math.isfinite(v) for v in self.support):
            raise DomainError("unbounded support rejected")

    @property
    def mean(self) -> float:
        return math.fsum(v * p for v, p in zip(self.support, self.probs))

    @property
    def variance(self) -> float:
        m = self.mean
        return math.fsum((v - m) ** 2 * p for v, p in zip(self.support, self.probs))

    def draw(self, u: np.ndarray) -> np.ndarray:
        cum = np.cumsum(self.probs)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, u, side="right")
        return np.asarray(self.support, dtype=np.float64)[np.minimum(idx, len(cum) - 1)]


@dataclass(frozen=True)
class RVSequenceSpec:
    """Independent F_1, F_2, ...; F_k follows ``laws[(k - 1) % len(laws)]``."""

    family: str
    laws: tuple[Discrete, ...]
    text: str = ""

    @classmethod
    def bernoulli(cls, p: float) -> RVSequenceSpec:
        if not 0.0 <= p <= 1.0:
            raise DomainError("Bernoulli p must lie in [0, 1]")
        return cls("bernoulli", (Discrete((0.0, 1.0), (1.0 - p, p)),), f"bernoulli:{p!r}")

    @classmethod
    def uniform(cls, a: int, b: int) -> RVSequenceSpec:
        if a > b:
            raise DomainError("discrete uniform needs a <= b")
        n = b - a + 1
        return cls("uniform", (Discrete(tuple(float(v) for v in range(a, b + 1)), (1.0 / n,) * n),),
                   f"uniform:{a},{b}")

    @classmethod
    def constant(cls, c: float) -> RVSequenceSpec:
        return cls("const", (Discrete((float(c),), (1.0,)),), f"const:{c!r}")

    @classmethod
    def table(cls, path: str) -> RVSequenceSpec:
        """CSV with header ``value,prob``."""
        try:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise DomainError(f"cannot read {path}: {exc}") from exc
        if not rows or [c.strip() for c in rows[0]] != ["value", "prob"]:
            raise DomainError(f"{path}: header must be value,prob")
        try:
            vals = tuple(float(r[0]) for r in rows[1:] if r)
            probs = tuple(float(r[1]) for r in rows[1:] if r)
        except (ValueError, IndexError) as exc:
            raise DomainError(f"{path}: malformed row") from exc
        return cls("table", (Discrete(vals, probs),), f"table:{path}")

    @classmethod
    def schedule(cls, parts: list[RVSequenceSpec]) -> RVSequenceSpec:
        laws = tuple(law for p in parts for law in p.laws)
        return cls("schedule", laws, "schedule:" + "|".join(p.text for p in parts))

    @property
    def period(self) -> int:
        return len(self.laws)

    @property
    def identical(self) -> bool:
        return len(set(self.laws)) == 1

    def _periodic(self, values, n: int) -> np.ndarray:
        v = np.asarray(values, dtype=np.float64)
        return np.resize(v, n)

    def means(self, n: int) -> np.ndarray:
        return self._periodic([law.mean for law in self.laws], n)

    def variances(self, n: int) -> np.ndarray:
        return self._periodic([law.variance for law in self.laws], n)

    def F_tilde(self, n: int) -> np.ndarray:
        return np.maximum(self.means(n), 1.0)

    @property
    def sigma2(self) -> float:
        """Universal variance bound max{sigma_k^2, 1}."""
        return max(max(law.variance for law in self.laws), 1.0)

    def Phi(self, n: int) -> np.ndarray:
        return np.cumsum(self.F_tilde(n))

    def sample_path(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(n)
        if self.period == 1:
            return self.laws[0].draw(u)
        out = np.empty(n)
        for j, law in enumerate(self.laws):
            out[j::self.period] = law.draw(u[j::self.period])
        return out


def parse_rv(text: str) -> RVSequenceSpec:
    """bernoulli:p | uniform:a,b | const:c | table:path | schedule:spec|spec|..."""
    family, sep, rest = text.strip().partition(":")
    if not sep:
        raise DomainError(f"random-variable spec needs family:args, got {text!r}")
    try:
        if family == "bernoulli":
            return RVSequenceSpec.bernoulli(float(rest))
        if family == "uniform":
            a, b = rest.split(",")
            return RVSequenceSpec.uniform(int(a), int(b))
        if family == "const":
            return RVSequenceSpec.constant(float(rest))
        if family == "table":
            return RVSequenceSpec.table(rest)
        if family == "schedule":
            return RVSequenceSpec.schedule([parse_rv(p) for p in rest.split("|")])
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"bad arguments in {text!r}") from exc
    raise DomainError(f"unknown random-variable family {family!r}")


def simulate_slln(spec: RVSequenceSpec, eps: float, delta: float, grid: GridSpec, samples: int,
                  seed: int, threads: int = 1) -> ViolationReport:
    """|N^-1 sum_{k<=N} (F_k(x) - F_k)| against the effective bound at each grid N.

    Phi0 = max F~_k is taken over the simulated range.  For identically
    distributed sequences the corollary form, whose last term is F/N with the
    raw mean F in place of Phi0/N, is also counted and recorded in the inputs.
    """
    seed = _seed_ok(seed)
    N = grid.values()
    n_max = int(N[-1])
    Ft = spec.F_tilde(n_max)
    consts = slln_constants(eps, delta, spec.sigma2, Ft)
    Phi = np.cumsum(Ft)[N - 1]
    Nf = N.astype(np.float64)
    bounds = assemble_bound("slln", consts, N=Nf, Phi=Phi)
    means = spec.means(n_max)
    K = float(consts["K_eps_delta"])
    corollary = None
    if spec.identical:
        # Phi(N) = N F~ there; the corollary's last term is F/N with the raw mean F
        F, Ftil = means[0], Ft[0]
        with np.errstate(divide="ignore"):
            corollary = K * (np.sqrt(Ftil) * np.log(Nf * Ftil) ** (1.5 + eps) / np.sqrt(Nf) + F / Nf)

    def one(i):
        path = spec.sample_path(sample_rng(seed, i), n_max)
        dev = np.abs(np.cumsum(path - means)[N - 1]) / Nf
        extra = bool(np.any(dev > corollary)) if corollary is not None else False
        return bool(np.any(dev > bounds)), f"path {i}", extra

    raw = _map_samples(one, samples, threads)
    report = _report("slln", {}, [(v, t) for v, t, _ in raw], delta, seed, grid.as_dict(), consts.warnings)
    inputs = {"rv": spec.text, "eps": eps, "delta": delta, "sigma2": spec.sigma2,
              "constants": consts.as_dict()["outputs"]}
    if corollary is not None:
        inputs["corollary_violators"] = sum(e for _, _, e in raw)
    report.inputs = inputs
    return report


@dataclass(frozen=True)
class VarianceCertificate:
    variance: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.variance


def variance_certificate(spec: RVSequenceSpec, m: int, n: int) -> VarianceCertificate:
    """sum_{m<k<=n} sigma_k^2 against sigma^2 sum_{m<k<=n} F~_k (independent case)."""
    if not 0 <= m < n:
        raise DomainError("need 0 <= m < n")
    var = spec.variances(n)[m:]
    ft = spec.F_tilde(n)[m:]
    cert = VarianceCertificate(math.fsum(var), spec.sigma2 * math.fsum(ft))
    if cert.slack < -1e-9 * cert.bound:
        raise AssertionError(f"variance certificate violated on ({m}, {n}]: {cert}")
    return cert


def empirical_second_moment(spec: RVSequenceSpec, m: int, n: int, paths: int, seed: int) -> float:
    """Mean over paths of (sum_{m<k<=n} (F_k(x) - F_k))^2."""
    means = spec.means(n)[m:]
    acc = [float(np.sum(spec.sample_path(sample_rng(seed, i), n)[m:] - means)) ** 2
           for i in range(paths)]
    return math.fsum(acc) / paths

