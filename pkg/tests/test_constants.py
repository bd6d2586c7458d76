import json
import math
import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from effdioph.constants import (EffectiveConstants, Huge, PowerLawTail, abh_constants, abh_k,
                                assemble_bound, est_constants, lebesgue_nu_ok, m0_constants,
                                m0_zeta_terms, normal_constants, slln_constants, t_delta_exact,
                                thm2_constants, thm2_second_branch, thm3_constants,
                                thm3_second_branch, m0_lacunary_constants, m0_separated_constants)
from effdioph.counting import SequenceSpec
from effdioph.numtheory import DomainError
from effdioph.psi import parse_psi

# -- Schmidt constants ------------------------------------------------------------------


@pytest.mark.parametrize("eps,psi1", [(1.0, 0.4), (0.5, 0.1), (2.0, 0.49), (3.0, 0.01)])
def test_schmidt_K_oracle(eps, psi1):
    c = est_constants(eps, 0.1, parse_psi(f"const:{psi1}"))
    assert c["K_eps"] == pytest.approx(oracles.schmidt_K(eps, psi1), rel=1e-12)
    assert c["threshold"] == oracles.schmidt_threshold(eps, 0.1, c["K_eps"])


def test_schmidt_frozen_example():
    # min(0.4, 1/q), eps = 1, delta = 0.1
    c = est_constants(1.0, 0.1, parse_psi("inv:1;cap=0.4"))
    assert c["K_eps"] == pytest.approx(499745.3779933, rel=1e-12)
    assert c["threshold"] == 9994909
    N = c["N_eps_delta"]
    assert isinstance(N, Huge) and not c["N_exact"]
    # oracle: solve g(Psi) = threshold, then invert Psi(n) = H_n - 0.7
    with mpmath.workdps(40):
        def g(P):
            inner = mpmath.log(3 * P * P + 3)
            return 44 * P * inner * mpmath.log(2 * inner)
        P_star = mpmath.findroot(lambda P: g(P) - 9994909, 3000)
        log_n = P_star - mpmath.euler + mpmath.mpf("0.7")
        ref = float(mpmath.log(2) + log_n)
    assert N.log == pytest.approx(ref, abs=1e-6)
    assert str(N).endswith("e+1585")


def test_schmidt_const_example_exact():
    c = est_constants(1.0, 0.1, parse_psi("const:0.4"))
    assert c["N_eps_delta"] == 18248 and c["N_exact"]


def _scan_triples():
    # sizes chosen so that a linear scan terminates: constant psi with eps >= 1.5,
    # harmonic psi only with eps >= 4
    rng = random.Random(7)
    triples = []
    for _ in range(14):
        c = round(rng.uniform(0.05, 0.49), 3)
        triples.append((f"const:{c}", rng.choice([1.5, 2.0, 3.0]), round(rng.uniform(0.05, 0.9), 3)))
    for _ in range(6):
        c = round(rng.uniform(0.25, 0.49), 3)
        triples.append((f"inv:{c}", rng.choice([4.0, 5.0, 6.0]), round(rng.uniform(0.05, 0.9), 3)))
    return triples


@pytest.mark.parametrize("text,eps,delta", _scan_triples())
def test_schmidt_N_linear_scan(text, eps, delta):
    psi = parse_psi(text)
    c = est_constants(eps, delta, psi)
    assert c["N_eps_delta"] == oracles.schmidt_N_scan(c["threshold"], psi)


def test_schmidt_domain():
    with pytest.raises(DomainError):
        est_constants(1.0, 0.1, parse_psi("const:0"))
    with pytest.raises(DomainError):
        est_constants(1.0, 0.1, parse_psi("pow:0.4,2"))
    with pytest.raises(DomainError):
        est_constants(0.0, 0.1, parse_psi("const:0.4"))


# -- Borel-Cantelli constants -----------------------------------------------------------------


def test_thm3_r_and_branches():
    c = thm3_constants(1.0, 0.1, 1.0, 1.0, 1.0, 0.0, Phi=lambda n: float(n))
    assert c["r"] == 21 == oracles.thm3_r(1.0, 0.1, 1.0)
    assert c["N_eps_delta"] == 20
    with mpmath.workdps(30):
        e = mpmath.mpf(1)
        beta = (2 / mpmath.log(2) ** (1.5 + e / 2) * (1 + 1 / (mpmath.sqrt(2) * mpmath.log(4) ** (1.5 + e)))
                * (mpmath.log(4) / mpmath.log(3)) ** (1.5 + e))
        first = 20 / (mpmath.log(3) ** (1.5 + e))
    assert thm3_second_branch(1.0) == pytest.approx(float(beta), rel=1e-13)
    assert c["K_first_branch"] == pytest.approx(float(first), rel=1e-13)
    assert c["K_eps_delta"] == max(c["K_first_branch"], c["K_second_branch"])


@given(st.floats(0.2, 4.0), st.floats(0.01, 0.99), st.floats(0.1, 50.0))
def test_thm3_r_property(eps, delta, K):
    assert thm3_constants(eps, delta, K, 1.0, 1.0, 0.0)["r"] == oracles.thm3_r(eps, delta, K)


def test_thm2_normal_example():
    c = normal_constants(1.0, 0.1, 10)
    with mpmath.workdps(60):
        X = (1 + 1 / mpmath.log(3) ** 2) * 10
        j = 1 + int(mpmath.ceil(mpmath.exp(X)))
        T = mpmath.mpf(j) ** 3 * mpmath.log(j + 2) ** 2
        N = int(mpmath.floor(10 * T)) + 1
    assert c["j"] == j == 87343093
    assert c["N_eps_delta"] == N
    # Phi0 = 1/b < 1, so the first branch is C N / 1
    assert c["K_eps_delta"] == pytest.approx(float(N), rel=1e-12)


def test_thm2_second_branch_oracle():
    with mpmath.workdps(30):
        e, P = mpmath.mpf(1), mpmath.mpf(0.1)
        ref = (4 / mpmath.log(P + 2) ** (2 * e / 3) * (mpmath.log(4) / mpmath.log(3)) ** (1 + e)
               * (4 + (1 + e) / mpmath.log(3) + 1 / (4 * mpmath.log(4) ** (1 + e))))
    assert thm2_second_branch(1.0, 0.1) == pytest.approx(float(ref), rel=1e-13)


def test_thm2_huge_j():
    c = thm2_constants(0.05, 0.01, 1.0, 1.0, 1.0, Phi=lambda n: float(n))
    assert isinstance(c["j"], Huge) and c.warnings


# -- ABH ------------------------------------------------------------------------------------


def test_abh_k_frozen():
    assert abh_k(16, 0.5, 1) == 3
    assert abh_k(16, 0.01, 100) == 10001
    assert abh_k(9, 0.2, 1) == 101


def _abh_triples():
    rng = random.Random(11)
    return [(rng.uniform(4.5, 60.0), rng.uniform(0.01, 0.99), math.exp(rng.uniform(-3, 8))) for _ in range(50)]


@pytest.mark.parametrize("C,delta,calC", _abh_triples())
def test_abh_k_bisection_oracle(C, delta, calC):
    assert abh_k(C, delta, calC) == oracles.abh_k(C, delta, calC)


def test_abh_domain_and_flag():
    with pytest.raises(DomainError):
        abh_k(4.0, 0.1, 1.0)
    c = abh_constants(9, 0.2, 3.0)
    assert c.unverified and "unverified" in c.warnings[0]
    assert c.as_dict()["unverified"] is True


# -- M0 constants ----------------------------------------------------------------------------


def test_m0_c1_direct_substitution():
    c = m0_constants(1 / math.pi, 2.7, 1.0, 0.999 * math.log(2), 0.5, 2.0, 0.2)
    assert c["c1"] == 22.0 and c["K_prime"] == 1.0
    assert c["m2"] == pytest.approx(3 / 2 ** (2 / 3), rel=1e-15)


def test_m0_c2_oracle():
    nu, A, B, C, alpha, K0 = 1 / math.pi, 2.7, 1.0, 0.6, 0.5, 3.0
    c = m0_constants(nu, A, B, C, alpha, K0, 0.2)
    with mpmath.workdps(40):
        z = mpmath.zeta
        m2 = 3 / mpmath.mpf(2) ** (mpmath.mpf(2) / 3)
        d = 18 * nu * mpmath.mpf(C) ** (-A)
        c2 = (12 * (m2 + 1) * (1 + z(A - 1)) + 8 / (K0 - 1)
              + d * (mpmath.sqrt(2) * z(A - 0.5) * (2 + alpha ** -A) + 2 ** (A + 1) * z(A / 2)))
        c3 = 4 + d * (mpmath.sqrt(2) * z(A / B - 0.5) * (2 + alpha ** -A) + 2 ** (A + 1) * z(A / (2 * B))) + c2
        m1 = 3 + 3 * z(A / B - 1)
    assert c["c2"] == pytest.approx(float(c2), rel=1e-12)
    assert c["c3"] == pytest.approx(float(c3), rel=1e-12)
    assert c["m1"] == pytest.approx(float(m1), rel=1e-12)
    assert c["K_lacunary"] == 6 * max(48, c["c1"], c["c2"])
    assert c["K_separated"] == 2 * max(48, c["c3"])


@pytest.mark.parametrize("A,B", [(2.7, 1.0), (6.0, 1.0), (9.0, 2.0), (4.5, 1.5), (2.05, 1.0)])
def test_m0_zeta_calls(A, B):
    for name, (s, val) in m0_zeta_terms(A, B).items():
        assert abs(val - oracles.zeta(s)) <= 2e-12, name


def test_m0_zeta_margin_names_constant():
    with pytest.raises(DomainError, match="c3 needs zeta"):
        m0_zeta_terms(4.0, 1.99)


def test_m0_lebesgue_warning():
    assert lebesgue_nu_ok(2.7) and not lebesgue_nu_ok(3.0)
    assert m0_constants(1 / math.pi, 6.0, 1.0, 1.0, 0.5, 2.0, 0.3).warnings
    assert not m0_constants(1 / math.pi, 2.7, 1.0, 1.0, 0.5, 2.0, 0.3).warnings
    with pytest.raises(DomainError):
        m0_constants(1 / math.pi, 2.0, 1.0, 1.0, 0.5, 2.0, 0.3)


def test_t_delta_example():
    td = t_delta_exact(PowerLawTail(3.0, 6.0), 1 / math.pi, 6.0, 1.0, 1.0, 0.3)
    assert td.t == 2 == oracles.t_delta(lambda n: 3 * mpmath.mpf(n) ** -6, 1 / math.pi, 6.0, 1.0, 1.0, 0.3)
    assert td.t <= math.ceil(td.closed_forms["t1_derived"])
    assert td.closed_forms["t1_printed"] == pytest.approx(0.5 + (5 * 0.3 / (2 * (3 + 1 / math.pi))) ** (-1 / 5))


@pytest.mark.parametrize("delta", [0.01, 0.1, 0.5])
def test_t_delta_ninth_power(delta):
    td = t_delta_exact(PowerLawTail(1.0, 9.0), 1 / math.pi, 2.7, 1.0, 0.69, delta)
    ref = oracles.t_delta(lambda n: mpmath.mpf(n) ** -9, 1 / math.pi, 2.7, 1.0, 0.69, delta)
    assert td.t == ref


def test_t_delta_trivial_and_refusal():
    assert t_delta_exact(PowerLawTail(0.0, 2.0), 1e-12, 3.0, 1.0, 1.0, 0.5).t == 1
    with pytest.raises(DomainError):
        t_delta_exact(lambda n: n ** -2.0, 0.3, 3.0, 1.0, 1.0, 0.5)


def test_lacunary_bundle_pow2():
    psi = parse_psi("pow:1,2")
    c = m0_lacunary_constants(SequenceSpec.powers_of_two(), psi, 1.0, 0.2, along="index")
    assert c["c1"] == 22.0 and c["K_prime"] == 1.0
    assert c["r"] == oracles.thm3_r(1.0, 0.1, c["K_lacunary"])
    assert c["t_delta_half"] == oracles.t_delta(lambda n: 3 * mpmath.mpf(n) ** -2.7, 1 / math.pi, 2.7, 1.0,
                                                0.999 * math.log(2), 0.1)
    assert any("lower bound" in w for w in c.warnings)


def test_separated_bundle_and_growth():
    seq = SequenceSpec.powers_of_two(alpha=0.5)
    c = m0_separated_constants(seq, parse_psi("pow:1,2"), 1.0, 0.2, along="index")
    assert c["K0_used"] == 2.0
    bad = SequenceSpec.from_list(list(range(2, 300)), alpha=0.5, C_growth=1.0)
    with pytest.raises(DomainError, match="n=1"):
        m0_separated_constants(bad, parse_psi("pow:1,2"), 1.0, 0.2)
    with pytest.raises(DomainError):
        m0_separated_constants(SequenceSpec.powers_of_two(), parse_psi("pow:1,2"), 1.0, 0.2)


def test_slln_example():
    c = slln_constants(1.0, 0.1, 1.0, [1.0] * 100)
    assert (c["r"], c["N_eps_delta"], c["Phi0"]) == (21, 20, 1.0)
    assert c["K_eps_delta"] == pytest.approx(thm3_second_branch(1.0))
    assert c["alpha"] == pytest.approx(20 / (math.log(3) ** 2.5 + 1))
    with pytest.raises(DomainError):
        slln_constants(1.0, 0.1, 1.0, [0.5])


# -- assembled bounds ----------------------------------------------------------------------------


def test_assemble_est_zero_Psi():
    c = est_constants(1.0, 0.1, parse_psi("const:0.4"))
    assert assemble_bound("est", c, Psi=0.0) == 18248.0
    big = assemble_bound("est", c, Psi=np.array([1.0, 1e6]))
    assert big[0] == max(18248.0, c["K_eps"] * math.log(2.0) ** 3) and big[1] == pytest.approx(c["K_eps"] * 1e3 * math.log1p(1e6) ** 3)


def test_assemble_mismatch():
    c = est_constants(1.0, 0.1, parse_psi("const:0.4"))
    with pytest.raises(DomainError):
        assemble_bound("abh", c, Psi_prime=3.0)


def test_assemble_abh_branches():
    c = abh_constants(9, 0.2, 1.0)
    assert assemble_bound("abh", c, Psi_prime=2.0) == 101 / 2
    v = assemble_bound("abh", c, Psi_prime=1e9)
    assert v == pytest.approx(max(50.5, (2 * math.e * 1e9 + 1) / math.log(1e9) ** 9 + 0.5))


def test_assemble_normal_clamp():
    c = normal_constants(1.0, 0.1, 2)
    N = np.array([1.0, 10.0, 1e6])
    assert np.array_equal(assemble_bound("normal", c, N=N), N)


def test_huge_and_json():
    h = Huge(math.log(10) * 1585.5)
    assert float(h) == math.inf and str(h).endswith("e+1585")
    c = est_constants(1.0, 0.1, parse_psi("inv:1;cap=0.4"))
    d = json.loads(c.to_json())
    assert d["outputs"]["N_eps_delta"].endswith("e+1585")
    assert isinstance(c, EffectiveConstants) and c.theorem == "est"
