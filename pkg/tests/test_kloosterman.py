import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonvanish.arith import build_context, primes_between
from nonvanish.kloosterman import (
    build_table,
    classify_mirror,
    exponent_fit,
    fgkm_scan,
    fourth_moment_sum,
    kloosterman_direct,
    kloosterman_matrix,
    mirror_count,
)


def naive_kloosterman(a, b, p):
    total = 0j
    for x in range(1, p):
        xbar = next(y for y in range(1, p) if x * y % p == 1)
        total += cmath.exp(2j * math.pi * (a * x + b * xbar) / p)
    return total


def test_direct_examples():
    assert abs(kloosterman_direct(0, 0, 13) - 12) < 1e-12
    assert abs(kloosterman_direct(1, 0, 13) + 1) < 1e-12
    assert abs(kloosterman_direct(1, 1, 5) - (3 - math.sqrt(5)) / 2) < 1e-12


@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_direct_matches_naive_and_is_real(p):
    for a in range(p):
        for b in range(p):
            ref = naive_kloosterman(a, b, p)
            assert abs(ref.imag) < 1e-9
            assert abs(kloosterman_direct(a, b, p) - ref.real) < 1e-9


@pytest.mark.parametrize("p", [5, 7, 31, 101, 257, 499])
def test_table_matches_direct(p):
    ctx = build_context(p)
    table = build_table(ctx)
    ms = range(p) if p <= 101 else range(0, p, 7)
    for m in ms:
        assert abs(table.values[m] - kloosterman_direct(1, m, p)) < 1e-8


def test_table_reduction_law():
    ctx = build_context(7)
    table = build_table(ctx)
    assert abs(kloosterman_direct(2, 3, 7) - table.values[6]) < 1e-12
    mat = kloosterman_matrix(ctx)
    assert np.allclose(mat, table(np.arange(7)[:, None], np.arange(7)[None, :]), atol=1e-9)


@pytest.mark.parametrize("p", primes_between(3, 199))
def test_weil_bound_exhaustive(p):
    mat = kloosterman_matrix(build_context(p))
    assert np.max(np.abs(mat[1:, 1:])) <= 2 * math.sqrt(p) + 1e-9


@pytest.mark.parametrize("p", primes_between(200, 997)[::9] + [997])
def test_weil_bound_table_scan(p):
    table = build_table(build_context(p))
    assert np.max(np.abs(table.values[1:])) <= 2 * math.sqrt(p) + 1e-9


def brute_fourth(p, b):
    inv = {x: pow(x, -1, p) for x in range(1, p)}
    total = 0.0
    for h in range(p):
        prod = 1.0
        for bi in b:
            prod *= naive_kloosterman(h, inv[bi % p], p).real
        total += prod
    return total


@pytest.mark.parametrize("p,b", [(5, (1, 1, 1, 1)), (7, (1, 2, 3, 4)), (13, (2, 2, 5, 7)), (31, (1, 2, 3, 5))])
def test_fourth_moment_brute_force(p, b):
    assert abs(fourth_moment_sum(build_table(build_context(p)), b) - brute_fourth(p, b)) < 1e-6


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 60), min_size=4, max_size=4), st.integers(0, 3))
def test_fourth_moment_symmetries(b, shift):
    p = 61
    table = build_table(build_context(p))
    if any(v % p == 0 for v in b):
        return
    base = fourth_moment_sum(table, b)
    for perm in list(itertools.permutations(b))[:6]:
        assert abs(fourth_moment_sum(table, perm) - base) < 1e-6 * max(1, abs(base))
    lifted = [v + shift * p for v in b]
    assert fourth_moment_sum(table, lifted) == base


def test_fourth_moment_rejects():
    table = build_table(build_context(11))
    with pytest.raises(ValueError):
        fourth_moment_sum(table, (1, 2, 11, 3))


@pytest.mark.parametrize(
    "b,expected", [((1, 1, 2, 2), True), ((1, 2, 3, 4), False), ((1, 1, 1, 2), False), ((3, 3, 3, 3), True)]
)
def test_classify_examples(b, expected):
    assert classify_mirror(b, 101).in_D is expected


def test_classify_uses_residues():
    assert classify_mirror((1, 102, 5, 106), 101).in_D
    assert not classify_mirror((1, 102, 5, 7), 101).in_D


@pytest.mark.parametrize("p", primes_between(3, 199)[::3])
def test_mirror_count_bound(p):
    for B in range(1, min(12, p - 1) + 1):
        count = mirror_count(B, p)
        assert count <= 3 * B * B
        assert count == 3 * B * B - 2 * B
        assert fgkm_scan(build_context(p), B).count_mirror == count


def test_scan_rejects_large_B():
    with pytest.raises(ValueError):
        fgkm_scan(build_context(7), 8)


def test_scan_fitted_constant_stable():
    consts = [fgkm_scan(build_context(p), 6).fitted_constant for p in (101, 211, 307, 401, 499)]
    # one constant covers every p in the range
    assert max(consts) <= 2.0
    assert max(consts) / min(consts) <= 1.5


def test_scan_generic_ratio_bounded():
    ratios = [fgkm_scan(build_context(p), 4).max_ratio_generic for p in (101, 211, 401, 499)]
    assert max(ratios) <= 3.0
    mirror = [fgkm_scan(build_context(p), 4).max_ratio_mirror for p in (101, 211, 401, 499)]
    assert min(mirror) >= 1.5  # mirror tuples keep the full p^3 size


def test_exponent_fit_recovers_slope():
    ps = np.array([101, 211, 401, 997])
    assert abs(exponent_fit(ps, 3.0 * ps**2.5) - 2.5) < 1e-12
