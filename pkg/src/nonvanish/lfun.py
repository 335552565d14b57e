"""Central values L(1/2, chi), the smoothing kernel V and the approximate functional equation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli, loggamma

from .arith import PrimeContext
from .characters import Character, char_value, fsum_complex, group_transform, log_histogram, parity_mask

ZERO_THRESHOLD = 1e-12


class InvariantViolation(AssertionError):
    """A numerical identity or bound that must hold exactly failed to."""


@dataclass(frozen=True)
class HurwitzEvaluator:
    """zeta(s, q) for real s != 1 by Euler-Maclaurin summation.

    The first ``shift`` terms are summed directly and the tail is replaced by
    the integral, the half-term and ``depth`` Bernoulli corrections.  With the
    defaults the truncation error at s = 1/2, q in (0, 1] is below 1e-20.
    """

    shift: int = 16
    depth: int = 8
    tol: float = 1e-10

    def __call__(self, q, s: float = 0.5):
        q = np.asarray(q, dtype=float)
        if np.any(q <= 0):
            raise ValueError("Hurwitz parameter must be positive")
        k = np.arange(self.shift, dtype=float)
        head = np.sum((q[..., None] + k) ** (-s), axis=-1)
        a = q + self.shift
        tail = a ** (1.0 - s) / (s - 1.0) + 0.5 * a ** (-s)
        b2 = bernoulli(2 * self.depth)
        rising = s  # s (s+1) ... (s+2j-2)
        for j in range(1, self.depth + 1):
            tail = tail + b2[2 * j] / math.factorial(2 * j) * rising * a ** (-s - 2 * j + 1)
            rising *= (s + 2 * j - 1) * (s + 2 * j)
        out = head + tail
        return float(out) if out.ndim == 0 else out


_HURWITZ = HurwitzEvaluator()


def hurwitz_zeta_half(q) -> float:
    """zeta(1/2, q) for 0 < q <= 1 (scalar or array)."""
    return _HURWITZ(q, 0.5)


@dataclass(frozen=True)
class VKernel:
    """The AFE weight V(x) = (1/2 pi i) int_(sigma0) G(s) (pi x)^(-s) ds/s.

    G(s) = Gamma(s/2 + 1/4)^2 / Gamma(1/4)^2 for even characters and
    Gamma(s/2 + 3/4)^2 / Gamma(3/4)^2 for odd ones.  The integral is a
    trapezoid sum on the vertical line, truncated at |Im s| <= height.  For
    pi x < 1 the line sigma0 would produce huge cancelling terms, so there the
    contour is moved to ``left_sigma`` (between s = 0 and the first gamma
    pole) and the residue 1 at s = 0 is added back.
    """

    parity: str = "even"
    sigma0: float = 2.0
    height: float = 60.0
    step: float = 0.1
    left_sigma: float = -0.25
    left_step: float = 0.02
    _lines: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be even or odd, got {self.parity!r}")
        shift = 0.25 if self.parity == "even" else 0.75
        lines = []
        for sigma, h in ((self.sigma0, self.step), (self.left_sigma, self.left_step)):
            n = int(math.ceil(self.height / h))
            t = np.arange(n + 1) * (self.height / n)
            w = np.full(n + 1, self.height / n)
            w[0] *= 0.5
            w[-1] *= 0.5
            s = sigma + 1j * t
            g = np.exp(2.0 * (loggamma(s / 2 + shift) - loggamma(shift)))
            # symmetric in t -> fold to t >= 0 and take real parts
            lines.append((s, w * g / s / math.pi))
        object.__setattr__(self, "_lines", tuple(lines))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("V(x) requires x > 0")
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.empty(x.shape)
        logpx = np.log(math.pi * x)
        use_left = logpx < 0.0
        for flag, (s, cw), base in ((False, self._lines[0], 0.0), (True, self._lines[1], 1.0)):
            sel = np.flatnonzero(use_left == flag)
            for chunk in np.array_split(sel, max(1, len(sel) // 512 + 1)):
                if len(chunk) == 0:
                    continue
                phase = np.exp(-np.outer(logpx.flat[chunk], s))
                out.flat[chunk] = base + (phase @ cw).real
        return float(out[0]) if scalar else out


@lru_cache(maxsize=8)
def default_kernel(parity: str = "even") -> VKernel:
    return VKernel(parity=parity)


def v_kernel(x, parity: str = "even"):
    return default_kernel(parity)(x)


@lru_cache(maxsize=8)
def kernel_cutoff(parity: str = "even", floor: float = 1e-16) -> float:
    """Smallest x on a fine grid beyond which |V| stays below ``floor``."""
    xs = np.linspace(1.0, 20.0, 1901)
    vals = np.abs(v_kernel(xs, parity))
    above = np.flatnonzero(vals >= floor)
    return float(xs[min(above[-1] + 1, len(xs) - 1)]) if len(above) else 1.0


@dataclass(frozen=True)
class CentralValueTable:
    """L(1/2, chi_a) for every exponent a; entry a = 0 is the principal character."""

    p: int
    values: np.ndarray

    def __getitem__(self, a: int) -> complex:
        return complex(self.values[int(a) % (self.p - 1)])

    def primitive(self, parity: str = "both") -> np.ndarray:
        return self.values[parity_mask(self.p, parity)]


def hurwitz_table(ctx: PrimeContext) -> np.ndarray:
    """zeta(1/2, g**k/p) indexed by discrete log k."""
    return hurwitz_zeta_half(ctx.powers / ctx.p)


def central_values(ctx: PrimeContext) -> CentralValueTable:
    """All L(1/2, chi) = p^(-1/2) sum_a chi(a) zeta(1/2, a/p) by one group transform."""
    vals = group_transform(ctx, hurwitz_table(ctx)) / math.sqrt(ctx.p)
    vals.setflags(write=False)
    return CentralValueTable(ctx.p, vals)


def central_value(chi: Character) -> complex:
    """Single central value by direct compensated summation of the Hurwitz expression."""
    p = chi.ctx.p
    x = np.arange(1, p)
    return fsum_complex(char_value(chi, x) * hurwitz_zeta_half(x / p)) / math.sqrt(p)


def _product_pairs(limit: int) -> tuple[np.ndarray, np.ndarray]:
    """All (n1, n2) with n1 * n2 <= limit."""
    n1 = np.arange(1, limit + 1)
    counts = limit // n1
    rows = np.repeat(n1, counts)
    starts = np.cumsum(counts) - counts
    cols = np.arange(counts.sum()) - np.repeat(starts, counts) + 1
    return rows, cols


def default_afe_cutoff(p: int, parity: str = "even") -> float:
    return max(p ** 1.1, kernel_cutoff(parity) * p)


def _afe_histogram(ctx: PrimeContext, cutoff: float, parity: str) -> np.ndarray:
    p = ctx.p
    n1, n2 = _product_pairs(int(cutoff))
    keep = (n1 % p != 0) & (n2 % p != 0)
    n1, n2 = n1[keep], n2[keep]
    prod = n1 * n2
    vtab = v_kernel(np.arange(1, int(cutoff) + 1) / p, parity)
    w = vtab[prod - 1] / np.sqrt(prod)
    r = (ctx.ind[n1 % p] - ctx.ind[n2 % p]) % (p - 1)
    return np.bincount(r, weights=w, minlength=p - 1)


def afe_second_moment(chi: Character, cutoff: float | None = None) -> float:
    """|L(1/2, chi)|^2 for an even primitive chi from the smoothed double sum over n1 n2 <= cutoff.

    The odd analogue (Gamma(s/2 + 3/4) kernel) is available through
    :func:`afe_second_moments` with ``parity="odd"``.
    """
    ctx = chi.ctx
    if not chi.is_primitive or not chi.is_even:
        raise ValueError("needs an even primitive character")
    if cutoff is None:
        cutoff = default_afe_cutoff(ctx.p, "even")
    if cutoff < ctx.p ** 1.1:
        raise ValueError(f"cutoff {cutoff} below p^1.1")
    hist = _afe_histogram(ctx, cutoff, "even")
    r = np.arange(ctx.p - 1)
    val = 2.0 * fsum_complex(hist * np.exp(2j * math.pi * ((chi.a * r) % (ctx.p - 1)) / (ctx.p - 1)))
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise InvariantViolation(f"AFE value not real: {val}")
    return val.real


def afe_second_moments(ctx: PrimeContext, parity: str = "even", cutoff: float | None = None) -> np.ndarray:
    """AFE values for every character exponent (only entries of the given parity are meaningful)."""
    if cutoff is None:
        cutoff = default_afe_cutoff(ctx.p, parity)
    hist = _afe_histogram(ctx, cutoff, parity)
    return 2.0 * group_transform(ctx, hist).real


def plain_moments(ctx: PrimeContext, table: CentralValueTable | None = None) -> tuple[float, float]:
    """Averages of L(1/2, chi) and |L(1/2, chi)|^2 over the p-2 primitive characters."""
    if table is None:
        table = central_values(ctx)
    vals = table.primitive("both")
    total = fsum_complex(vals)
    if abs(total.imag) > 1e-7 * max(1.0, len(vals) / 100):
        raise InvariantViolation(f"first moment has imaginary part {total.imag}")
    n = ctx.p - 2
    second = math.fsum(np.abs(vals) ** 2) / n
    return total.real / n, second


def nonvanishing_fraction(values: np.ndarray, threshold: float = ZERO_THRESHOLD) -> float:
    values = np.asarray(values)
    return float(np.count_nonzero(np.abs(values) > threshold)) / len(values) if len(values) else 0.0
