"""Counting solutions of ||q x|| < psi(q) for a single x.

For a random x the count S(x, Q) tracks 2 Psi(Q) up to a fluctuation the
explicit bounds control.  For a rational x every multiple of the denominator
counts, so S grows linearly.  The coprime count S' tracks Psi'(Q).
"""

from fractions import Fraction

import numpy as np

from effdioph.counting import count_S_prime_series, count_S_series
from effdioph.numtheory import euler_phi_sieve
from effdioph.psi import parse_psi, psi_prime_sum, psi_sum
from effdioph.verify import sample_x

psi = parse_psi("inv:1;cap=0.4")
grid = np.array([10, 100, 1000, 10 ** 4, 10 ** 5, 10 ** 6])
phi = euler_phi_sieve(int(grid[-1]))

x = sample_x(seed=2024, i=0)
S = count_S_series(x, grid, psi)
Sp = count_S_prime_series(x, grid, psi, phi)
print(f"{'Q':>8} {'S':>6} {'2 Psi':>9} {'S prime':>8} {'Psi prime':>10}")
for Q, s, sp in zip(grid, S, Sp):
    print(f"{Q:>8} {s:>6} {2 * psi_sum(psi, int(Q)):>9.2f} {sp:>8} {psi_prime_sum(psi, int(Q), phi):>10.2f}")

# A rational point: multiples of 7 always hit.
r = Fraction(22, 7)
print("\nx = 22/7:", dict(zip(grid.tolist(), count_S_series(r, grid, psi).tolist())))
