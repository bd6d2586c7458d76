import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from effdioph.counting import (CountSeries, InhomParams, R_indicators, SequenceSpec, count_R, count_S,
                               count_S_prime, count_S_prime_series, count_S_series, count_S_star,
                               digit_count, digit_series, gcd_sum_E, sequence_psi)
from effdioph.numtheory import DomainError, FixedPointFraction, euler_phi_sieve
from effdioph.psi import parse_psi, psi_sum

PSIS = ["const:0.49", "inv:0.5", "inv:1;cap=0.4", "invlog:0.3", "pow:0.45,1.5"]


def test_documented_examples(phi_small):
    psi = parse_psi("const:0.49")
    half = Fraction(1, 2)
    assert count_S(half, 10, psi) == 5
    assert count_S(FixedPointFraction.parse("0.5"), 10, psi) == 5
    assert count_S(0, 100, psi) == 100
    assert count_S_prime(half, 10, psi, phi_small) == 1
    assert count_S_prime(0, 100, psi, phi_small) == 1


@given(st.fractions(min_value=0, max_value=1, max_denominator=400), st.sampled_from(PSIS))
def test_exact_path_matches_oracle(x, text):
    psi = parse_psi(text)
    grid = [1, 7, 30, 60]
    got = count_S_series(x, grid, psi)
    assert got.tolist() == [oracles.count_S(x, Q, psi) for Q in grid]


@given(st.fractions(min_value=0, max_value=1, max_denominator=400), st.sampled_from(PSIS))
def test_exact_prime_path_matches_oracle(x, text):
    psi = parse_psi(text)
    phi = euler_phi_sieve(60)
    assert count_S_prime(x, 60, psi, phi) == oracles.count_S_prime(x, 60, psi)


@given(st.integers(0, 2 ** 128 - 1), st.sampled_from(PSIS))
def test_kernel_matches_exact_rational(num, text):
    # the kernel and the exact path agree on the stored value except on
    # measure-zero boundary cases
    x = FixedPointFraction(num)
    psi = parse_psi(text)
    grid = np.array([5, 50, 400])
    assert np.array_equal(count_S_series(x, grid, psi), count_S_series(x.as_fraction(), grid, psi))
    phi = euler_phi_sieve(400)
    assert np.array_equal(count_S_prime_series(x, grid, psi, phi),
                          count_S_prime_series(x.as_fraction(), grid, psi, phi))


@given(st.integers(0, 2 ** 128 - 1))
def test_series_monotone_and_bounded(num):
    x = FixedPointFraction(num)
    psi = parse_psi("inv:0.5")
    phi = euler_phi_sieve(2000)
    grid = np.arange(1, 2001)
    s = count_S_series(x, grid, psi)
    sp = count_S_prime_series(x, grid, psi, phi)
    assert np.all(np.diff(s) >= 0) and np.all(sp <= s) and np.all(s <= grid)


def test_grid_validation():
    psi = parse_psi("const:0.1")
    for grid in ([], [0, 1], [3, 2], [[1, 2]]):
        with pytest.raises(DomainError):
            count_S_series(Fraction(1, 3), grid, psi)
    with pytest.raises(DomainError):
        count_S_series(0.3, [1], psi)
    with pytest.raises(DomainError):
        count_S_prime(Fraction(1, 3), 20, psi, euler_phi_sieve(10))


def _star_oracle(x, u, v, psi):
    total = 0
    for n in range(u + 1, v + 1):
        P = math.fsum(psi(q) for q in range(1, n + 1))
        G = P * P + 1
        if any(abs(n * x - m) < Fraction(psi(n)) and math.gcd(m, n) <= G for m in range(0, n + 1)):
            total += 1
    return total


@given(st.fractions(min_value=0, max_value=1, max_denominator=300), st.integers(0, 40), st.integers(1, 80))
def test_count_S_star_oracle(x, u, span):
    psi = parse_psi("inv:0.45")
    v = u + span
    assert count_S_star(x, u, v, psi) == _star_oracle(x, u, v, psi)
    fx = FixedPointFraction.from_fraction(x)
    assert count_S_star(fx, u, v, psi) == _star_oracle(fx.as_fraction(), u, v, psi)


def test_R_examples():
    seq = SequenceSpec.powers_of_two()
    psi = parse_psi("const:0.1")
    # x = 0: ||0 - gamma|| = gamma
    assert count_R(0, 10, InhomParams(0.3), psi, seq) == 0
    assert count_R(0, 10, InhomParams(0.05), psi, seq) == 10
    # x = 1/2: q_n x is an integer for every n
    assert count_R(Fraction(1, 2), 10, InhomParams(0.0), psi, seq) == 10


@given(st.integers(0, 2 ** 128 - 1), st.fractions(0, 1, max_denominator=50))
def test_R_indicators_oracle(num, gamma):
    x = FixedPointFraction(num)
    qs = SequenceSpec.powers_of_two().generate(30)
    ps = sequence_psi(parse_psi("pow:1,2"), qs, along="index")
    got = R_indicators(x, qs, gamma, ps)
    xr = x.as_fraction()
    ref = [oracles.dist(xr * q - gamma, 1) <= Fraction(p) for q, p in zip(qs, ps)]
    assert got.tolist() == ref


def test_sequences():
    assert SequenceSpec.powers_of_two().generate(4) == [2, 4, 8, 16]
    assert SequenceSpec.geometric(Fraction(3, 2), 3).generate(3) == [4, 13, 40]
    assert SequenceSpec.from_list([2, 3, 5]).generate(3) == [2, 3, 5]
    with pytest.raises(DomainError):
        SequenceSpec.from_list([2, 3]).generate(3)
    with pytest.raises(DomainError):
        SequenceSpec.from_list([2, 2, 5]).generate(3)
    with pytest.raises(DomainError):
        SequenceSpec.from_list([2, 3, 5], K0=2).generate(3)
    with pytest.raises(DomainError):
        SequenceSpec("spiral")
    seq = SequenceSpec.powers_of_two()
    assert seq.min_ratio(1100) == 2 and seq.growth_violation(1100) is None
    assert SequenceSpec.from_list([2, 3, 5], C_growth=1.0).growth_violation(3) == 1


def test_gcd_sum_E():
    seq = SequenceSpec.from_list([2, 3, 5, 7])
    psi = parse_psi("const:1")
    # pairwise coprime: E = sum_{m<n} min(1/q_m, 1/q_n) = sum over n of (n-1)/q_n
    assert gcd_sum_E(4, seq, psi) == pytest.approx(1 / 3 + 2 / 5 + 3 / 7)
    pow2 = SequenceSpec.powers_of_two()
    # gcd(2^m, 2^n) = 2^m, min(psi/2^m, psi/2^n) = psi/2^n
    assert gcd_sum_E(2, pow2, psi) == pytest.approx(0.5)


def test_sequence_psi_modes():
    psi = parse_psi("pow:1,2")
    qs = [2, 4, 8]
    assert sequence_psi(psi, qs, "index").tolist() == [1.0, 0.25, 1 / 9]
    assert sequence_psi(psi, qs, "q").tolist() == [0.25, 1 / 16, 1 / 64]
    assert sequence_psi(psi, [2 ** 1100], "q")[0] == 0.0
    with pytest.raises(DomainError):
        sequence_psi(psi, qs, "diagonal")


def test_digit_counts():
    third = Fraction(1, 3)
    assert [digit_count(third, 0, 2, n) for n in (1, 2, 3, 10)] == [1, 1, 2, 5]
    assert digit_count(Fraction(1, 7), 1, 10, 6) == 1  # 142857
    assert digit_count(Fraction(1, 4), 0, 10, 10) == 8  # 25 then zeros
    assert digit_count(0, 0, 2, 50) == 50


@given(st.fractions(0, 1, max_denominator=10 ** 4).filter(lambda f: f < 1), st.integers(2, 16),
       st.integers(1, 200))
def test_digit_series_oracle(x, b, N):
    ds = oracles.digits(x, b, N)
    for d in {0, b - 1, ds[0]}:
        assert digit_series(x, d, b, N).tolist() == np.cumsum([v == d for v in ds]).tolist()


def test_digits_fixed_point():
    x = FixedPointFraction.parse("0.75")
    assert digit_series(x, 1, 2, 4).tolist() == [1, 2, 2, 2]


def test_count_series_round_trip(tmp_path):
    psi = parse_psi("const:0.49")
    grid = [1, 2, 10]
    counts = count_S_series(Fraction(1, 2), grid, psi)
    main = [2 * psi_sum(psi, q) for q in grid]
    series = CountSeries.build(grid, counts, main, [1.0, math.inf, 0.5])
    text = series.to_csv()
    assert text.splitlines()[0] == "Q,count,main_term,bound,violated"
    assert "\r" not in text
    assert CountSeries.from_csv(text).to_csv() == text
    assert CountSeries.from_json(series.to_json()).to_csv() == text
    rows = json.loads(series.to_json())
    assert [r["violated"] for r in rows] == [False, False, True]
    assert series.any_violated


@given(st.lists(st.tuples(st.integers(0, 10 ** 6), st.floats(0, 1e6), st.floats(0, 1e9)), min_size=1,
                max_size=20))
def test_series_csv_property(rows):
    grid = list(range(1, len(rows) + 1))
    series = CountSeries.build(grid, [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows])
    assert CountSeries.from_csv(series.to_csv()).to_csv() == series.to_csv()
