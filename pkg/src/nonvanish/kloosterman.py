"""Kloosterman sums to prime moduli and complete fourth-moment correlations."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .arith import PrimeContext
from .characters import e_frac, fsum_complex
from .lfun import InvariantViolation

REAL_TOL = 1e-9


def kloosterman_direct(a: int, b: int, p: int) -> float:
    """S(a, b; p) by summing over the invertible residues."""
    x = np.arange(1, p, dtype=np.int64)
    xbar = np.array([pow(int(v), -1, p) for v in x], dtype=np.int64)
    val = fsum_complex(e_frac(a * x + b * xbar, p))
    if abs(val.imag) > REAL_TOL:
        raise InvariantViolation(f"S({a},{b};{p}) has imaginary part {val.imag}")
    return val.real


def kloosterman_matrix(ctx: PrimeContext) -> np.ndarray:
    """S(a, b; p) for all 0 <= a, b < p by one dense product (small p only)."""
    p = ctx.p
    x = np.arange(1, p)
    u = e_frac(np.outer(np.arange(p), x), p)
    v = e_frac(np.outer(np.arange(p), ctx.inv[x]), p)
    s = u @ v.T
    if np.max(np.abs(s.imag)) > REAL_TOL * p:
        raise InvariantViolation("Kloosterman matrix not real")
    return s.real


@dataclass(frozen=True)
class KloostermanTable:
    """values[m] = S(1, m; p); then S(a, b; p) = values[a b mod p] whenever p does not divide a."""

    p: int
    values: np.ndarray

    def __call__(self, a, b):
        """S(a, b; p) for integer or array arguments, using S(a,b) = S(b,a) when p | a."""
        a = np.mod(np.asarray(a, dtype=np.int64), self.p)
        b = np.mod(np.asarray(b, dtype=np.int64), self.p)
        both_zero = (a == 0) & (b == 0)
        out = np.where(both_zero, float(self.p - 1), self.values[(a * b) % self.p])
        return float(out) if out.ndim == 0 else out


def build_table(ctx: PrimeContext) -> KloostermanTable:
    """S(1, m; p) = sum_u e((ubar + m u)/p) for all m, as one length-p transform of u -> e(ubar/p)."""
    p = ctx.p
    seq = np.zeros(p, dtype=complex)
    u = np.arange(1, p)
    seq[u] = e_frac(ctx.inv[u], p)
    raw = np.fft.ifft(seq) * p
    if np.max(np.abs(raw.imag)) > REAL_TOL * max(1.0, math.log(p)):
        raise InvariantViolation(f"Kloosterman table mod {p} not real")
    vals = raw.real.copy()
    vals.setflags(write=False)
    return KloostermanTable(p, vals)


def fourth_moment_sum(table: KloostermanTable, b) -> float:
    """sum over h mod p of S(h, b1bar) S(h, b2bar) S(h, b3bar) S(h, b4bar)."""
    p = table.p
    b = [int(v) % p for v in b]
    if len(b) != 4:
        raise ValueError("need a 4-tuple")
    if any(v == 0 for v in b):
        raise ValueError(f"components must be coprime to {p}")
    h = np.arange(p, dtype=np.int64)
    prod = np.ones(p)
    for v in b:
        prod = prod * table.values[(h * pow(v, -1, p)) % p]
    return math.fsum(prod)


@dataclass(frozen=True)
class MirrorVerdict:
    tuple: tuple
    in_D: bool


def classify_mirror(b, p: int) -> MirrorVerdict:
    """in_D holds when every component coincides mod p with at least one other."""
    res = [int(v) % p for v in b]
    in_d = all(res.count(r) >= 2 for r in res)
    return MirrorVerdict(tuple(int(v) for v in b), in_d)


@dataclass
class FGKMScan:
    p: int
    B: int
    total: float
    max_ratio_generic: float
    max_ratio_mirror: float
    count_generic: int
    count_mirror: int
    envelope: float
    fitted_constant: float

    def as_row(self) -> dict:
        return dict(
            p=self.p,
            B=self.B,
            total=self.total,
            max_ratio_generic=self.max_ratio_generic,
            max_ratio_mirror=self.max_ratio_mirror,
            count_generic=self.count_generic,
            count_mirror=self.count_mirror,
            envelope=self.envelope,
            fitted_constant=self.fitted_constant,
        )


def _row_products(table: KloostermanTable, bs: list[int]) -> np.ndarray:
    """rows[i, h] = S(h, bbar_i; p) for the residues in bs."""
    p = table.p
    h = np.arange(p, dtype=np.int64)
    return np.stack([table.values[(h * pow(v, -1, p)) % p] for v in bs])


def fgkm_scan(ctx: PrimeContext, B: int, table: KloostermanTable | None = None) -> FGKMScan:
    """Scan all 4-tuples in [1, B]^4 coprime to p.

    Reports the total of |fourth_moment_sum|, the worst ratio to p^(5/2) among
    tuples outside the mirror set and to p^3 among tuples inside it, and the
    class sizes.  The implicit constant of the B^4 p^(5/2) + B^2 p^3 bound is
    reported as the observed ratio, never asserted.
    """
    p = ctx.p
    if B > p:
        raise ValueError(f"B={B} exceeds p={p}")
    if table is None:
        table = build_table(ctx)
    bs = [b for b in range(1, B + 1) if b % p]
    rows = _row_products(table, bs)
    idx = {b: i for i, b in enumerate(bs)}
    total = 0.0
    mx_gen = mx_mir = 0.0
    n_gen = n_mir = 0
    # the sum is symmetric in the tuple, so loop over multisets and weight by orbit size
    for combo in itertools.combinations_with_replacement(bs, 4):
        val = abs(float(rows[idx[combo[0]]] * rows[idx[combo[1]]] * rows[idx[combo[2]]] @ rows[idx[combo[3]]]))
        mult = _orbit_size(combo)
        total += mult * val
        if classify_mirror(combo, p).in_D:
            n_mir += mult
            mx_mir = max(mx_mir, val / p**3)
        else:
            n_gen += mult
            mx_gen = max(mx_gen, val / p**2.5)
    env = B**4 * p**2.5 + B**2 * p**3
    return FGKMScan(p, B, total, mx_gen, mx_mir, n_gen, n_mir, env, total / env)


def _orbit_size(combo) -> int:
    counts = {}
    for v in combo:
        counts[v] = counts.get(v, 0) + 1
    out = math.factorial(len(combo))
    for c in counts.values():
        out //= math.factorial(c)
    return out


def mirror_count(B: int, p: int) -> int:
    """|D intersected with [1, B]^4| over tuples coprime to p, by enumeration."""
    bs = [b for b in range(1, B + 1) if b % p]
    return sum(classify_mirror(t, p).in_D for t in itertools.product(bs, repeat=4))


def exponent_fit(primes, values) -> float:
    """Least-squares slope of log|value| against log p."""
    x = np.log(np.asarray(primes, dtype=float))
    y = np.log(np.abs(np.asarray(values, dtype=float)))
    return float(np.polyfit(x, y, 1)[0])
