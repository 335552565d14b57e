import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonvanish.arith import build_context, factorize, is_prime, mobius, mobius_table, primes_between


def trial_division(n):
    return n >= 2 and all(n % d for d in range(2, math.isqrt(n) + 1))


SMALL_PRIMES = [p for p in range(3, 10_000) if trial_division(p)]


@pytest.mark.parametrize("n,expected", [(2, True), (9, False), (10007, True), (1, False), (561, False)])
def test_is_prime_examples(n, expected):
    assert is_prime(n) is expected


def test_is_prime_matches_trial_division():
    assert [n for n in range(30_000) if is_prime(n)] == [n for n in range(30_000) if trial_division(n)]


def test_is_prime_large():
    assert is_prime(2**61 - 1)
    assert not is_prime((2**31 - 1) * (2**61 - 1))
    assert not is_prime(3825123056546413051)  # strong pseudoprime to bases 2..23


@pytest.mark.parametrize("n,expected", [(1, 1), (4, 0), (6, 1), (30, -1), (7, -1)])
def test_mobius_examples(n, expected):
    assert mobius(n) == expected


def test_mobius_multiplicative():
    for a in range(1, 201):
        for b in range(1, 201):
            if math.gcd(a, b) == 1:
                assert mobius(a * b) == mobius(a) * mobius(b)


def test_mobius_table_matches_factorization():
    tab = mobius_table(2000)
    assert [int(v) for v in tab[1:]] == [mobius(n) for n in range(1, 2001)]


def test_factorize_roundtrip():
    for n in range(1, 3000):
        assert math.prod(q**e for q, e in factorize(n).items()) == n


def order(g, p):
    x, k = g % p, 1
    while x != 1:
        x = x * g % p
        k += 1
    return k


def test_context_examples():
    c5 = build_context(5)
    assert c5.g == 2 and c5.index(4) == 2 and c5.inverse(2) == 3
    assert build_context(7).g == 3


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13, 23, 41, 71, 101, 191, 409])
def test_least_primitive_root_by_orders(p):
    ctx = build_context(p)
    assert order(ctx.g, p) == p - 1
    assert all(order(h, p) < p - 1 for h in range(2, ctx.g))


@pytest.mark.parametrize("bad", [1, 2, 4, 9, 15, 10])
def test_context_rejects(bad):
    with pytest.raises(ValueError):
        build_context(bad)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SMALL_PRIMES))
def test_context_invariants(p):
    ctx = build_context(p)
    n = np.arange(1, p)
    assert all(pow(ctx.g, int(k), p) == int(v) for k, v in zip(ctx.ind[n], n))
    assert sorted(ctx.ind[n]) == list(range(p - 1))
    assert ctx.ind[1] == 0
    assert np.all((n * ctx.inv[n]) % p == 1)
    s = np.sum(np.exp(2j * np.pi * ctx.ind[n] / (p - 1)))
    assert abs(s) <= p - 1
    rng = np.random.default_rng(p)
    a, b = rng.integers(1, p, size=(2, 200))
    assert np.all(ctx.ind[(a * b) % p] % (p - 1) == (ctx.ind[a] + ctx.ind[b]) % (p - 1))


def test_primes_between():
    assert primes_between(90, 110) == [97, 101, 103, 107, 109]
