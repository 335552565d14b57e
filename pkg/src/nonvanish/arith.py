"""Modular arithmetic for a fixed odd prime modulus.

Everything downstream reads characters, inverses and Kloosterman sums off the
tables held by :class:`PrimeContext`, so they are built once per prime.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

# Deterministic Miller-Rabin witnesses, valid for every n < 3.3e24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    """Deterministic primality test (exact for all n < 2**64)."""
    n = int(n)
    if n < 2:
        return False
    for q in _MR_WITNESSES:
        if n % q == 0:
            return n == q
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division."""
    n = int(n)
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@lru_cache(maxsize=4096)
def mobius(n: int) -> int:
    if n < 1:
        raise ValueError(f"mobius undefined at {n}")
    fac = factorize(n)
    if any(e > 1 for e in fac.values()):
        return 0
    return -1 if len(fac) % 2 else 1


def mobius_table(limit: int) -> np.ndarray:
    """mu(n) for 0 <= n <= limit via a linear sieve (entry 0 is unused and 0)."""
    mu = np.ones(limit + 1, dtype=np.int64)
    mu[0] = 0
    is_comp = np.zeros(limit + 1, dtype=bool)
    for q in range(2, limit + 1):
        if is_comp[q]:
            continue
        is_comp[2 * q :: q] = True
        mu[q::q] *= -1
        mu[q * q :: q * q] = 0
    return mu


def primitive_root(p: int) -> int:
    """Least positive primitive root mod the prime p."""
    if p == 2:
        return 1
    qs = list(factorize(p - 1))
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in qs):
            return g
    raise ValueError(f"no primitive root mod {p}")


@dataclass(frozen=True)
class PrimeContext:
    """Group structure of (Z/pZ)^*: primitive root, discrete logs and inverses.

    ``ind[n]`` is the index of n on the base ``g`` and ``inv[n]`` the inverse
    of n, for 1 <= n <= p-1.  Entry 0 of both arrays is a -1 sentinel.
    ``powers[k] = g**k mod p`` for 0 <= k <= p-2.
    """

    p: int
    g: int
    ind: np.ndarray = field(repr=False)
    inv: np.ndarray = field(repr=False)
    powers: np.ndarray = field(repr=False)

    def inverse(self, n: int) -> int:
        n %= self.p
        if n == 0:
            raise ZeroDivisionError(f"0 has no inverse mod {self.p}")
        return int(self.inv[n])

    def index(self, n: int) -> int:
        n %= self.p
        if n == 0:
            raise ValueError(f"0 has no index mod {self.p}")
        return int(self.ind[n])


def build_context(p: int) -> PrimeContext:
    p = int(p)
    if p < 3 or not is_prime(p):
        raise ValueError(f"modulus must be an odd prime, got {p}")
    g = primitive_root(p)
    powers = np.empty(p - 1, dtype=np.int64)
    x = 1
    for k in range(p - 1):
        powers[k] = x
        x = x * g % p
    ind = np.full(p, -1, dtype=np.int64)
    ind[powers] = np.arange(p - 1, dtype=np.int64)
    # g^k has inverse g^(p-1-k)
    inv = np.full(p, -1, dtype=np.int64)
    inv[powers] = powers[(-np.arange(p - 1)) % (p - 1)]
    for arr in (ind, inv, powers):
        arr.setflags(write=False)
    return PrimeContext(p=p, g=g, ind=ind, inv=inv, powers=powers)


@lru_cache(maxsize=64)
def cached_context(p: int) -> PrimeContext:
    return build_context(p)


def primes_between(lo: int, hi: int) -> list[int]:
    return [n for n in range(max(lo, 2), hi + 1) if is_prime(n)]
