"""Dirichlet characters mod p and their Gauss sums."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arith import PrimeContext

TWO_PI = 2.0 * math.pi


def e_frac(num, den):
    """e(num/den) = exp(2 pi i num/den) with the integer numerator reduced mod den."""
    num = np.mod(num, den)
    return np.exp(1j * TWO_PI * num / den)


def fsum_complex(values) -> complex:
    """Compensated (exactly rounded) sum of complex values."""
    values = np.asarray(values, dtype=complex)
    return complex(math.fsum(values.real), math.fsum(values.imag))


@dataclass(frozen=True)
class Character:
    """The character chi_a with chi_a(g**k) = e(a*k/(p-1))."""

    ctx: PrimeContext
    a: int

    def __post_init__(self):
        object.__setattr__(self, "a", int(self.a) % (self.ctx.p - 1))

    @property
    def p(self) -> int:
        return self.ctx.p

    @property
    def is_even(self) -> bool:
        return self.a % 2 == 0

    @property
    def is_primitive(self) -> bool:
        return self.a != 0

    @property
    def parity(self) -> str:
        return "even" if self.is_even else "odd"

    def conj(self) -> "Character":
        return Character(self.ctx, -self.a)

    def __call__(self, n):
        return char_value(self, n)


def char_value(chi: Character, n):
    """chi(n); accepts an integer or an integer array."""
    p = chi.ctx.p
    n_arr = np.mod(np.asarray(n, dtype=np.int64), p)
    ind = chi.ctx.ind[n_arr]
    val = np.where(n_arr == 0, 0.0, e_frac(chi.a * ind, p - 1))
    if np.ndim(val) == 0:
        return complex(val)
    return val


def characters(ctx: PrimeContext, parity: str = "all", primitive: bool = True) -> list[Character]:
    out = []
    for a in range(ctx.p - 1):
        if primitive and a == 0:
            continue
        if parity == "even" and a % 2:
            continue
        if parity == "odd" and a % 2 == 0:
            continue
        out.append(Character(ctx, a))
    return out


def parity_mask(p: int, parity: str) -> np.ndarray:
    """Boolean mask over exponents a in [0, p-2] selecting primitive characters of a parity."""
    a = np.arange(p - 1)
    mask = a != 0
    if parity == "even":
        mask &= a % 2 == 0
    elif parity == "odd":
        mask &= a % 2 == 1
    elif parity not in ("both", "all"):
        raise ValueError(f"unknown parity {parity!r}")
    return mask


def group_transform(ctx: PrimeContext, weights: np.ndarray) -> np.ndarray:
    """Return T[a] = sum_k weights[k] e(a k/(p-1)) for every exponent a.

    ``weights`` is indexed by discrete log k in [0, p-2].  Evaluating
    sum_n c(n) chi_a(n) for all characters at once reduces to this transform of
    c(g**k).  A single FFT of length p-1 (pocketfft handles any length).
    """
    weights = np.asarray(weights, dtype=complex)
    n = ctx.p - 1
    if weights.shape != (n,):
        raise ValueError(f"expected {n} weights, got shape {weights.shape}")
    return np.fft.ifft(weights) * n


def log_histogram(ctx: PrimeContext, n, w) -> np.ndarray:
    """Accumulate weights w at the discrete logs of n (terms with p | n dropped)."""
    n = np.mod(np.asarray(n, dtype=np.int64), ctx.p)
    w = np.broadcast_to(np.asarray(w, dtype=complex), n.shape)
    keep = n != 0
    idx = ctx.ind[n[keep]]
    w = w[keep]
    m = ctx.p - 1
    return np.bincount(idx, weights=w.real, minlength=m) + 1j * np.bincount(idx, weights=w.imag, minlength=m)


def gauss_sum(chi: Character) -> complex:
    """tau_chi = sum_{x mod p} chi(x) e(x/p), by direct compensated summation."""
    p = chi.ctx.p
    x = np.arange(1, p)
    return fsum_complex(char_value(chi, x) * e_frac(x, p))


@dataclass(frozen=True)
class GaussSumTable:
    p: int
    values: np.ndarray

    def __getitem__(self, a: int) -> complex:
        return complex(self.values[int(a) % (self.p - 1)])


def batch_gauss_sums(ctx: PrimeContext) -> GaussSumTable:
    """All p-1 Gauss sums from one transform of k -> e(g**k/p)."""
    vals = group_transform(ctx, e_frac(ctx.powers, ctx.p))
    vals.setflags(write=False)
    return GaussSumTable(ctx.p, vals)


def even_primitive_gauss_twist_sum(ctx: PrimeContext, n: int, gauss: GaussSumTable | None = None) -> complex:
    """Sum of tau_chi chi(n) over the even primitive characters mod p.

    Equals (p-1) cos(2 pi nbar/p) + 1 with the normalization used here.
    """
    p = ctx.p
    if n % p == 0:
        raise ValueError(f"n={n} must be coprime to p={p}")
    if gauss is None:
        gauss = batch_gauss_sums(ctx)
    a = np.arange(2, p - 1, 2)
    terms = gauss.values[a] * e_frac(a * ctx.index(n), p - 1)
    return fsum_complex(terms)


def even_primitive_gauss_twist_all(ctx: PrimeContext, gauss: GaussSumTable | None = None) -> np.ndarray:
    """The same sum for every n in [1, p-1] at once (entry 0 unused)."""
    p = ctx.p
    if gauss is None:
        gauss = batch_gauss_sums(ctx)
    w = np.where(parity_mask(p, "even"), gauss.values, 0.0)
    # sum_a w_a e(a k/(p-1)) as a function of k = ind(n)
    by_log = np.fft.ifft(w) * (p - 1)
    out = np.zeros(p, dtype=complex)
    out[ctx.powers] = by_log
    return out
