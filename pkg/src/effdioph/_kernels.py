"""Compiled inner loops.

Everything here works on plain scalars and preallocated arrays so the hot
loops never allocate.  A point ``x`` in [0, 1) is carried as two uint64 words
``(hi, lo)`` with ``x = (hi * 2**64 + lo) / 2**128``.
"""

import numba as nb
import numpy as np

# psi evaluation modes understood by the counting kernels
PSI_ARRAY = 0
PSI_CONST = 1
PSI_INV = 2
PSI_INVLOG = 3

_MASK32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)
_HALF = np.uint64(1 << 63)
_TWO_P64 = 2.0 ** 64
_TWO_P63 = 2.0 ** 63


@nb.njit(nb.uint64(nb.uint64, nb.uint64), cache=True, nogil=True)
def mulhi64(a, b):
    """High 64 bits of the 128-bit product ``a * b``."""
    a_lo = a & _MASK32
    a_hi = a >> _SH32
    b_lo = b & _MASK32
    b_hi = b >> _SH32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _SH32) + (lh & _MASK32) + (hl & _MASK32)
    return hh + (lh >> _SH32) + (hl >> _SH32) + (mid >> _SH32)


@nb.njit(cache=True, nogil=True)
def scaled_parts(q, hi, lo):
    """Integer part and top 64 fractional bits of ``q * x``."""
    p1h = mulhi64(q, lo)
    p2l = q * hi
    p2h = mulhi64(q, hi)
    mid = p2l + p1h
    carry = np.uint64(1) if mid < p2l else np.uint64(0)
    return p2h + carry, mid


@nb.njit(cache=True, nogil=True)
def _frac_distance(frac):
    # distance from frac / 2**64 to the nearest integer, in units of 2**-64
    if frac >= _HALF:
        return (~frac) + np.uint64(1)
    return frac


@nb.njit(cache=True, nogil=True)
def _below(dist, psi):
    # dist * 2**-64 < psi, decided in integers (psi * 2**64 is exact in binary)
    t = psi * _TWO_P64
    if t > _TWO_P63:
        return True
    return dist < np.uint64(np.ceil(t))


@nb.njit(cache=True, nogil=True)
def _psi_at(mode, q, c, cap, arr):
    if mode == PSI_CONST:
        v = c
    elif mode == PSI_INV:
        v = c / q
    elif mode == PSI_INVLOG:
        v = c / (q * np.log(q + 1.0))
    else:
        v = arr[q - 1]
    if v > cap:
        v = cap
    return v


@nb.njit(cache=True, nogil=True)
def _gcd(a, b):
    while b != np.uint64(0):
        a, b = b, a % b
    return a


@nb.njit(cache=True, nogil=True)
def count_s_grid(hi, lo, grid, mode, c, cap, arr, coprime, out):
    """Write S(x, Q) (or S'(x, Q) when ``coprime``) for each Q in ``grid``.

    ``grid`` must be strictly increasing; ``out`` has the same length.
    """
    g = 0
    count = 0
    qmax = grid[grid.shape[0] - 1]
    for qi in range(1, qmax + 1):
        q = np.uint64(qi)
        ip, frac = scaled_parts(q, hi, lo)
        if _below(_frac_distance(frac), _psi_at(mode, qi, c, cap, arr)):
            if coprime:
                p = ip + np.uint64(1) if frac >= _HALF else ip
                if _gcd(p, q) == np.uint64(1):
                    count += 1
            else:
                count += 1
        if qi == grid[g]:
            out[g] = count
            g += 1
    return count


@nb.njit(cache=True, nogil=True)
def count_s_star_range(hi, lo, u, v, mode, c, cap, arr, gamma):
    """Solutions u < n <= v with witness gcd(m, n) <= gamma[n - 1]."""
    count = 0
    for ni in range(u + 1, v + 1):
        n = np.uint64(ni)
        ip, frac = scaled_parts(n, hi, lo)
        if _below(_frac_distance(frac), _psi_at(mode, ni, c, cap, arr)):
            m = ip + np.uint64(1) if frac >= _HALF else ip
            if float(_gcd(m, n)) <= gamma[ni - 1]:
                count += 1
    return count


@nb.njit(cache=True, nogil=True)
def phi_linear_sieve(limit):
    """Euler totients 0..limit by the linear (Euler) sieve."""
    phi = np.zeros(limit + 1, dtype=np.int64)
    primes = np.empty(limit // 2 + 16, dtype=np.int64)
    composite = np.zeros(limit + 1, dtype=np.bool_)
    if limit >= 1:
        phi[1] = 1
    n_primes = 0
    for i in range(2, limit + 1):
        if not composite[i]:
            primes[n_primes] = i
            n_primes += 1
            phi[i] = i - 1
        for j in range(n_primes):
            p = primes[j]
            ip = i * p
            if ip > limit:
                break
            composite[ip] = True
            if i % p == 0:
                phi[ip] = phi[i] * p
                break
            phi[ip] = phi[i] * (p - 1)
    return phi


@nb.njit(cache=True, nogil=True)
def kahan_cumsum(values, start, comp, out):
    """Compensated prefix sums of ``values`` continuing from ``start``."""
    s = start
    cmp = comp
    for i in range(values.shape[0]):
        y = values[i] - cmp
        t = s + y
        cmp = (t - s) - y
        s = t
        out[i] = s
    return s, cmp


@nb.njit(cache=True, nogil=True)
def psi_phi_terms(psi_vals, phi, out):
    """out[q-1] = psi(q) * phi(q) / q."""
    for i in range(psi_vals.shape[0]):
        q = i + 1
        out[i] = psi_vals[i] * phi[q] / q


@nb.njit(cache=True, nogil=True)
def capital_phi_table(gamma, phi, out):
    """Restricted totients Phi(n) = sum_{d | n, d <= Gamma(n)} phi(n / d)."""
    for i in range(out.shape[0]):
        n = i + 1
        bound = gamma[i]
        if bound >= n:
            out[i] = n
            continue
        total = 0
        d = 1
        while d <= bound:
            if n % d == 0:
                total += phi[n // d]
            d += 1
        out[i] = total
