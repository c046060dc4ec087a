"""Elementary arithmetic shared by the other modules.

Sieves, factorisation tables, the Kronecker symbol, multiplicative-function
builders and an explicit divisor-bound constant.  Everything here works on
plain ints or int64 numpy arrays.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def is_squarefree(n: int) -> bool:
    return square_factor(n) == 1


def square_factor(n: int) -> int:
    """Largest d with d*d | n (1 for squarefree n)."""
    n = abs(n)
    d = 1
    p = 2
    while p * p <= n:
        while n % (p * p) == 0:
            n //= p * p
            d *= p
        if n % p == 0:
            n //= p
        p += 1
    return d


def is_fundamental(D: int) -> bool:
    if D in (0, 1):
        return False
    r = D % 4
    if r == 1:
        return is_squarefree(D)
    if r == 0:
        m = D // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


def fundamental_discriminants(lo: int, hi: int) -> list[int]:
    """Negative fundamental discriminants in [lo, hi], ordered by increasing |D|."""
    return [D for D in range(min(hi, -3), lo - 1, -1) if is_fundamental(D)]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # deterministic for n < 3.3e24
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_factors(n: int) -> list[int]:
    n = abs(n)
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out.append(n)
    return out


@lru_cache(maxsize=8)
def primes_upto(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).astype(np.int64)


@lru_cache(maxsize=8)
def smallest_prime_factor(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    spf[1:] = np.arange(1, n + 1)
    for p in range(2, math.isqrt(n) + 1):
        if spf[p] == p:
            block = spf[p * p :: p]
            mask = block == np.arange(p * p, n + 1, p)
            block[mask] = p
    return spf


@lru_cache(maxsize=2)
def factor_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Prime-power factorisation of every m <= n as two (omega_max, n+1) arrays.

    ``P[j, m]`` is the j-th distinct prime of m (1 once exhausted) and
    ``K[j, m]`` its exponent (0 once exhausted).
    """
    spf = smallest_prime_factor(n)
    rest = np.arange(n + 1, dtype=np.int64)
    rest[0] = 1
    Ps, Ks = [], []
    while True:
        active = rest > 1
        if not active.any():
            break
        p = np.where(active, spf[rest], 2)
        k = np.zeros(n + 1, dtype=np.int8)
        while True:
            div = active & (rest % p == 0)
            if not div.any():
                break
            rest = np.where(div, rest // p, rest)
            k += div
        Ps.append(np.where(active, p, 1).astype(np.int32))
        Ks.append(k)
    if not Ps:
        Ps, Ks = [np.ones(n + 1, dtype=np.int32)], [np.zeros(n + 1, dtype=np.int8)]
    P, K = np.array(Ps), np.array(Ks)
    P.setflags(write=False)
    K.setflags(write=False)
    return P, K


def multiplicative(n: int, primes: np.ndarray, local: np.ndarray, dtype=float) -> np.ndarray:
    """Values f(m), 0 <= m <= n, of a multiplicative f given on prime powers.

    ``local[i, k]`` is f(primes[i]**k); the k-axis must reach the largest
    exponent occurring below n.  f(0) is set to 0.  Works by sieving over
    exact prime powers, so memory stays O(n).
    """
    out = np.ones(n + 1, dtype=dtype)
    for i, p in enumerate(primes.tolist()):
        if p > n:
            break
        pk, k = p, 1
        while pk <= n:
            idx = np.arange(pk, n + 1, pk)
            if pk * p <= n:
                idx = idx[(idx // pk) % p != 0]
            out[idx] *= local[i, k]
            pk *= p
            k += 1
    out[0] = 0
    return out


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for arbitrary integers."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    if n < 0:
        n = -n
        s = -1 if a < 0 else 1
    else:
        s = 1
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 == 1 and a % 8 in (3, 5):
            s = -s
    # Jacobi symbol (a/n), n odd positive
    a %= n
    t = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                t = -t
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            t = -t
        a %= n
    return s * t if n == 1 else 0


def _pow_mod_vec(base: np.ndarray, exp: np.ndarray, mod: np.ndarray) -> np.ndarray:
    result = np.ones_like(base)
    base = base % mod
    exp = exp.copy()
    while (exp > 0).any():
        odd = (exp & 1) == 1
        result = np.where(odd, result * base % mod, result)
        base = base * base % mod
        exp >>= 1
    return result


@lru_cache(maxsize=256)
def _kronecker_period(D: int) -> np.ndarray:
    m = abs(D)
    n_top = max(m, 2)
    primes = primes_upto(n_top)
    vals = np.zeros(len(primes), dtype=np.int64)
    odd = primes > 2
    po = primes[odd]
    e = _pow_mod_vec(D % po, (po - 1) // 2, po)
    vals[odd] = np.where(e == 0, 0, np.where(e == 1, 1, -1))
    if len(primes) and primes[0] == 2:
        vals[0] = kronecker(D, 2)
    local = np.ones((len(primes), 64), dtype=np.int64)
    for k in range(1, 64):
        local[:, k] = local[:, k - 1] * vals
    table = multiplicative(n_top, primes, local, dtype=np.int64)[:m]
    if m == 1:
        table = np.ones(1, dtype=np.int64)
    table[0] = 1 if m == 1 else 0
    table.setflags(write=False)
    return table


def kronecker_table(D: int, n: int) -> np.ndarray:
    """chi_D(m) for 0 <= m <= n, as int64 (D a fundamental discriminant)."""
    period = _kronecker_period(D)
    reps = (n + 1) // len(period) + 1
    return np.tile(period, reps)[: n + 1].copy()


def divisor_count(n: int) -> int:
    c = 1
    m = n
    p = 2
    while p * p <= m:
        k = 0
        while m % p == 0:
            m //= p
            k += 1
        c *= k + 1
        p += 1
    if m > 1:
        c *= 2
    return c


def divisor_table(n: int) -> np.ndarray:
    d = np.zeros(n + 1, dtype=np.int64)
    for k in range(1, n + 1):
        d[k::k] += 1
    return d


@lru_cache(maxsize=64)
def divisor_bound_constant(eps: float) -> float:
    """Exact C(eps) = sup_n d(n)/n**eps, as a product of local maxima."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    c = 1.0
    top = int(2 ** (1 / eps)) + 2
    for p in primes_upto(top):
        best, k = 1.0, 0
        while True:
            k += 1
            v = (k + 1) / float(p) ** (k * eps)
            if v <= best and k > 1 / eps:
                break
            best = max(best, v)
        c *= best
    return c
