"""The bilinear sum B(M1, M2, N1, N2), its Poisson dual, and the trilinear Kloosterman sum.

Envelopes for the three bounds are evaluated with every p^eps factor
dropped; the observed/envelope ratios are what gets tracked across p.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad

from .arith import PrimeContext
from .characters import e_frac, fsum_complex
from .kloosterman import KloostermanTable, build_table, fgkm_scan
from .lfun import InvariantViolation, v_kernel
from .mollify import MollifierCoefficients

SUPPORT = (0.5, 2.0)
N_PRODUCT_EXPONENT = 1.05


@dataclass(frozen=True)
class Bump:
    """exp(1 - 1/(1 - t^2)) on t in (-1, 1), mapped onto [1/2, 2]; peak value 1."""

    lo: float = SUPPORT[0]
    hi: float = SUPPORT[1]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        mid, half = 0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo)
        t = (x - mid) / half
        inside = np.abs(t) < 1
        out = np.zeros_like(x)
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DyadicWindow:
    M1: float
    M2: float
    N1: float
    N2: float
    f1: Bump = field(default_factory=Bump)
    f2: Bump = field(default_factory=Bump)

    def validate(self, p: int, M: int) -> None:
        if not 2 <= self.M1 * self.M2 <= M * M:
            raise ValueError(f"need 2 <= M1*M2 <= M^2, got M1*M2={self.M1 * self.M2}, M={M}")
        if not 1 <= self.N1 * self.N2 <= p**N_PRODUCT_EXPONENT:
            raise ValueError(f"need 1 <= N1*N2 <= p^{N_PRODUCT_EXPONENT}, got {self.N1 * self.N2}")

    def as_row(self) -> dict:
        return dict(M1=self.M1, M2=self.M2, N1=self.N1, N2=self.N2)


def _support_range(f: Bump, scale: float) -> np.ndarray:
    lo = max(1, math.floor(f.lo * scale))
    hi = math.ceil(f.hi * scale)
    n = np.arange(lo, hi + 1)
    return n[f(n / scale) > 0]


def _m_block(coeffs: MollifierCoefficients, start: float, p: int) -> tuple[np.ndarray, np.ndarray]:
    m = np.arange(math.ceil(start), math.floor(2 * start) + 1)
    m = m[(m <= coeffs.M) & (m % p != 0)]
    y = np.array([coeffs.coefficient(int(v)) for v in m])
    return m, y


def _normalization(p: int, w: DyadicWindow) -> float:
    return 1.0 / math.sqrt(p * w.M1 * w.M2 * w.N1 * w.N2)


def b_sum_direct(ctx: PrimeContext, w: DyadicWindow, coeffs: MollifierCoefficients) -> complex:
    """B(M1, M2, N1, N2) summed term by term.

    The bumps vanish outside [N/2, 2N], so both n-sums are finite.
    """
    p = ctx.p
    w.validate(p, coeffs.M)
    m1, y1 = _m_block(coeffs, w.M1, p)
    m2, y2 = _m_block(coeffs, w.M2, p)
    n1 = _support_range(w.f1, w.N1)
    n2 = _support_range(w.f2, w.N2)
    n1 = n1[n1 % p != 0]
    n2 = n2[n2 % p != 0]
    if not (len(m1) and len(m2) and len(n1) and len(n2)):
        return 0j
    # m-weights collapse onto the residue of m1*m2
    ym = np.outer(y1, y2).ravel()
    mm = np.outer(m1, m2).ravel() % p
    keep = ym != 0
    ym, mm = ym[keep], mm[keep]
    if not len(ym):
        return 0j
    g1 = w.f1(n1 / w.N1)
    g2 = w.f2(n2 / w.N2)
    vw = v_kernel(np.outer(n1, n2) / p)
    amp = vw * np.outer(g1, g2)  # (n1, n2)
    total = []
    for yv, mv in zip(ym, mm):
        inv = ctx.inv[(n1 * mv) % p]  # inverse of n1 m1 m2
        phase = e_frac(np.outer(inv, n2), p)
        total.append(yv * fsum_complex((amp * phase).ravel()))
    return fsum_complex(total) * _normalization(p, w)


def f_transform(k: int, w: DyadicWindow, n2: int, ctx: PrimeContext, epsabs: float = 1e-12) -> complex:
    """F(k) = int f1(x) V(x N1 n2/p) e(-x k N1/p) dx by adaptive quadrature."""
    p = ctx.p
    lo, hi = w.f1.lo, w.f1.hi
    freq = 2 * math.pi * k * w.N1 / p
    scale = w.N1 * n2 / p

    def amp(x):
        return w.f1(x) * v_kernel(x * scale)

    kw = dict(limit=400, epsabs=epsabs, epsrel=0.0)
    if k == 0:
        return complex(quad(amp, lo, hi, **kw)[0], 0.0)
    re = quad(amp, lo, hi, weight="cos", wvar=freq, **kw)[0]
    im = -quad(amp, lo, hi, weight="sin", wvar=freq, **kw)[0]
    return complex(re, im)


@dataclass
class FGrid:
    """F(k; n2) on a block of frequencies by a fixed trapezoid rule.

    The integrand is smooth and vanishes to all orders at both ends of the
    support, so the trapezoid sum converges faster than any power of the step.
    """

    k: np.ndarray
    n2: np.ndarray
    values: np.ndarray  # shape (len(n2), len(k))
    tail: float


def f_grid(
    ctx: PrimeContext, w: DyadicWindow, n2: np.ndarray, xi_max: float = 160.0, nodes: int | None = None
) -> FGrid:
    p = ctx.p
    kmax = max(1, math.ceil(xi_max * p / w.N1))
    k = np.arange(-kmax, kmax + 1)
    lo, hi = w.f1.lo, w.f1.hi
    if nodes is None:
        nodes = max(600, int(8 * xi_max * (hi - lo)))
    x = np.linspace(lo, hi, nodes + 1)
    h = x[1] - x[0]
    amp = w.f1(x)[None, :] * v_kernel(np.outer(n2, x) * w.N1 / p) * h
    vals = np.empty((len(n2), len(k)), dtype=complex)
    for chunk in np.array_split(np.arange(len(k)), max(1, len(k) // 256 + 1)):
        phase = np.exp(-2j * math.pi * np.outer(x, k[chunk]) * w.N1 / p)
        vals[:, chunk] = amp @ phase
    scale = np.max(np.abs(vals[:, kmax]))
    tail = float(np.max(np.abs(vals[:, [0, -1]]))) / scale if scale > 0 else 0.0
    return FGrid(k, n2, vals, tail)


@dataclass
class PoissonResult:
    value: complex
    zero_term: complex
    tail: float
    kmax: int


def b_sum_poisson(
    ctx: PrimeContext,
    w: DyadicWindow,
    coeffs: MollifierCoefficients,
    table: KloostermanTable | None = None,
    xi_max: float = 160.0,
) -> PoissonResult:
    """B(M1, M2, N1, N2) after Poisson summation in n1 over residue classes mod p.

    The dual variable k runs over |k| <= xi_max p/N1; ``tail`` is the largest
    |F| at the cutoff relative to |F(0)|.
    """
    p = ctx.p
    w.validate(p, coeffs.M)
    if table is None:
        table = build_table(ctx)
    m1, y1 = _m_block(coeffs, w.M1, p)
    m2, y2 = _m_block(coeffs, w.M2, p)
    n2 = _support_range(w.f2, w.N2)
    n2 = n2[n2 % p != 0]
    if not (len(m1) and len(m2) and len(n2)):
        return PoissonResult(0j, 0j, 0.0, 0)
    ym = np.outer(y1, y2).ravel()
    mm = np.outer(m1, m2).ravel() % p
    keep = ym != 0
    ym, mm = ym[keep], mm[keep]
    if not len(ym):
        return PoissonResult(0j, 0j, 0.0, 0)
    fg = f_grid(ctx, w, n2, xi_max)
    g2 = w.f2(n2 / w.N2)
    mbar = ctx.inv[mm]
    # S(k n2, mbar) = table[k n2 mbar mod p]
    arg = (fg.k[None, None, :] * n2[None, :, None] * mbar[:, None, None]) % p
    kl = table.values[arg]  # (m, n2, k)
    weight = ym[:, None, None] * g2[None, :, None] * fg.values[None, :, :]
    terms = kl * weight
    pref = _normalization(p, w) * w.N1 / p
    zero = pref * fsum_complex(terms[:, :, fg.k == 0].ravel())
    value = pref * fsum_complex(terms.ravel())
    return PoissonResult(value, zero, fg.tail, int(fg.k[-1]))


# -- trilinear sum ---------------------------------------------------------


@dataclass
class CoefficientSystem:
    """x over 1 <= |n| <= N (stored as n = -N..-1, 1..N), y over a <= A, z over b <= B."""

    N: int
    A: int
    B: int
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    seed: int | None = None

    @property
    def n(self) -> np.ndarray:
        return np.concatenate([np.arange(-self.N, 0), np.arange(1, self.N + 1)])

    @property
    def bound(self) -> float:
        return float(max(np.max(np.abs(self.x)), np.max(np.abs(self.y)), np.max(np.abs(self.z))))

    def validate(self, p: int) -> None:
        if len(self.x) != 2 * self.N or len(self.y) != self.A or len(self.z) != self.B:
            raise ValueError("coefficient lengths do not match N, A, B")
        a = np.arange(1, self.A + 1)
        b = np.arange(1, self.B + 1)
        if np.any(self.y[a % p == 0] != 0) or np.any(self.z[b % p == 0] != 0):
            raise ValueError("y_a and z_b must vanish when p divides the index")
        if self.N * self.A > p / 2:
            raise ValueError(f"need N*A <= p/2, got {self.N * self.A} with p={p}")
        if self.B > p:
            raise ValueError(f"need B <= p, got B={self.B}")

    @classmethod
    def random_signs(cls, p: int, N: int, A: int, B: int, seed: int) -> "CoefficientSystem":
        rng = np.random.default_rng(seed)
        x = rng.choice([-1.0, 1.0], size=2 * N)
        y = rng.choice([-1.0, 1.0], size=A)
        z = rng.choice([-1.0, 1.0], size=B)
        y[np.arange(1, A + 1) % p == 0] = 0.0
        z[np.arange(1, B + 1) % p == 0] = 0.0
        return cls(N, A, B, x, y, z, seed)


def trilinear_sum(ctx: PrimeContext, table: KloostermanTable, cs: CoefficientSystem) -> float:
    """sum x_n y_a z_b S(n, conj(ab); p), read off the table."""
    p = ctx.p
    cs.validate(p)
    a = np.arange(1, cs.A + 1)
    b = np.arange(1, cs.B + 1)
    ab = np.outer(a, b) % p
    yz = np.outer(cs.y, cs.z)
    keep = ab != 0
    abar = ctx.inv[ab[keep]]
    arg = np.outer(cs.n % p, abar) % p
    return math.fsum((cs.x[:, None] * table.values[arg] * yz[keep][None, :]).ravel())


@dataclass
class NuProfile:
    nu: np.ndarray
    second_moment: int
    diagonal: int


def nu_profile(ctx: PrimeContext, N: int, A: int) -> NuProfile:
    """nu(h) = #{(n, a): 1 <= |n| <= N, a <= A, n abar = h mod p} with its second moment.

    ``diagonal`` counts integer solutions of n1 a2 = n2 a1; it matches the
    congruence count whenever N A <= p/2.
    """
    p = ctx.p
    if N * A > p / 2:
        raise ValueError(f"need N*A <= p/2, got {N * A} with p={p}")
    n = np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])
    a = np.arange(1, A + 1)
    a = a[a % p != 0]
    h = np.outer(n % p, ctx.inv[a % p]) % p
    nu = np.bincount(h.ravel(), minlength=p)
    # n1 a2 = n2 a1  <=>  equal reduced fractions n/a
    g = np.gcd(np.abs(n)[:, None], a[None, :])
    num = (n[:, None] // g).ravel()
    den = (a[None, :] // g).ravel()
    _, counts = np.unique(np.stack([num, den]), axis=1, return_counts=True)
    return NuProfile(nu, int(np.sum(nu.astype(np.int64) ** 2)), int(np.sum(counts.astype(np.int64) ** 2)))


@dataclass
class CauchySchwarzChain:
    """Each step of the two Cauchy-Schwarz applications, evaluated numerically."""

    s4: float
    step_nu: float
    step_moments: float
    step_tuples: float
    step_bounds: float
    fourth_total: float
    nu_second_moment: int
    seed: int | None

    def holds(self, rtol: float = 1e-9) -> bool:
        chain = [self.s4, self.step_nu, self.step_moments, self.step_tuples, self.step_bounds]
        return all(a <= b * (1 + rtol) + 1e-12 for a, b in zip(chain, chain[1:]))

    def as_row(self) -> dict:
        return asdict(self)


def cauchy_schwarz_chain(ctx: PrimeContext, table: KloostermanTable, cs: CoefficientSystem) -> CauchySchwarzChain:
    """|S|^4 <= (sum|x y|^2)^2 (sum nu |U|^2)^2 <= ... <= (cx cy)^4 (2NA)^2 sum nu^2 cz^4 sum_b |C(b)|.

    U(h) = sum_b z_b S(h, bbar) and C(b) is the complete fourth-moment sum.
    """
    p = ctx.p
    s = trilinear_sum(ctx, table, cs)
    prof = nu_profile(ctx, cs.N, cs.A)
    b = np.arange(1, cs.B + 1)
    bk = b[b % p != 0]
    h = np.arange(p)
    u = np.array([math.fsum(cs.z[bk - 1] * table.values[(hh * ctx.inv[bk % p]) % p]) for hh in h])
    xy2 = math.fsum((np.abs(cs.x)[:, None] ** 2 * np.abs(cs.y)[None, :] ** 2).ravel())
    nu_u = math.fsum(prof.nu * u**2)
    u4 = math.fsum(u**4)
    cz = float(np.max(np.abs(cs.z)))
    fm = fgkm_scan(ctx, cs.B, table).total
    cx, cy = float(np.max(np.abs(cs.x))), float(np.max(np.abs(cs.y)))
    return CauchySchwarzChain(
        s4=s**4,
        step_nu=xy2**2 * nu_u**2,
        step_moments=xy2**2 * prof.second_moment * u4,
        step_tuples=xy2**2 * prof.second_moment * cz**4 * fm,
        step_bounds=(cx * cy) ** 4 * (2 * cs.N * cs.A) ** 2 * prof.second_moment * cz**4 * fm,
        fourth_total=fm,
        nu_second_moment=prof.second_moment,
        seed=cs.seed,
    )


# -- envelopes -------------------------------------------------------------


def regime(p: int, w: DyadicWindow, M: float) -> str:
    """Which bound the case split uses for this window.

    'first' when N1/N2 <= M, or when N2/N1 >= M^2/p (first bound already small);
    'third' otherwise.
    """
    ratio = w.N1 / w.N2
    if ratio <= M:
        return "first"
    if w.N2 / w.N1 < M * M / p:
        return "third"
    return "first"


def envelopes(p: int, w: DyadicWindow, M: float) -> dict:
    e1 = math.sqrt(M * M * w.N1 / (p * w.N2))
    e2 = math.sqrt(M * M * w.N2 / w.N1) + M / p
    e3 = (w.N2 * M**3 / (w.N1 * p**3)) ** 0.25 * (p**0.625 + p**0.75 / math.sqrt(M)) + M / math.sqrt(p)
    return dict(envelope_first=e1, envelope_second=e2, envelope_third=e3)


def bound_envelopes(ctx: PrimeContext, w: DyadicWindow, M: float, observed: float) -> dict:
    p = ctx.p
    env = envelopes(p, w, M)
    row = dict(p=p, M=M, **w.as_row(), observed=observed, **env, regime=regime(p, w, M))
    row["third_applicable"] = bool(w.N1 / w.N2 > M and M < math.sqrt(p))
    for key in ("first", "second", "third"):
        e = env[f"envelope_{key}"]
        row[f"ratio_{key}"] = observed / e if e > 0 else math.inf
    return row


def regime_split_bound(M: float, p: float) -> float:
    """Right side of the bound once N2/N1 < M^2/p is imposed (eps dropped)."""
    return M**1.25 / p * (p**0.625 + p**0.75 / math.sqrt(M)) + p ** (-1 / 6)


def dyadic_windows(p: int, M: int, n1_min: float = 1.0) -> list[DyadicWindow]:
    """Power-of-two windows with 2 <= M1 M2 <= M^2 and 1 <= N1 N2 <= p^1.05."""
    ms = [2**i for i in range(int(math.log2(M)) + 1)]
    ns = [2**i for i in range(int(math.log2(p**N_PRODUCT_EXPONENT)) + 1)]
    out = []
    for M1 in ms:
        for M2 in ms:
            if not 2 <= M1 * M2 <= M * M:
                continue
            for N1 in ns:
                if N1 < n1_min:
                    continue
                for N2 in ns:
                    if N1 * N2 <= p**N_PRODUCT_EXPONENT:
                        out.append(DyadicWindow(M1, M2, N1, N2))
    return out


def twisted_piece_decomposition(ctx: PrimeContext, coeffs: MollifierCoefficients, gauss=None, table=None) -> dict:
    """Compare the twisted piece of the even second moment with its Kloosterman-free main expression.

    ``character_side`` is the twisted piece from the character sum;
    ``exponential_side`` is (8/sqrt p) Re sum y y (n1 n2 m1 m2)^(-1/2) V(n1 n2/p)
    e(n2 conj(n1 m1 m2)/p) over p not dividing n1 n2 m1 m2 (the 8 is 4 times
    the factor 2 of the approximate functional equation); their difference is
    the error term, reported rather than bounded.
    """
    from .lfun import _product_pairs, kernel_cutoff
    from .mollify import second_moment_split

    p = ctx.p
    _, tw = second_moment_split(ctx, coeffs, table, gauss)
    cutoff = int(kernel_cutoff("even") * p)
    n1, n2 = _product_pairs(cutoff)
    keep = (n1 % p != 0) & (n2 % p != 0)
    n1, n2 = n1[keep], n2[keep]
    vtab = v_kernel(np.arange(1, cutoff + 1) / p)
    wn = vtab[n1 * n2 - 1] / np.sqrt(n1 * n2)
    m = coeffs.m
    ym = coeffs.y / np.sqrt(m)
    sel = (ym != 0) & (m % p != 0)
    mm = np.outer(m[sel], m[sel]).ravel() % p
    yy = np.outer(ym[sel], ym[sel]).ravel()
    acc = []
    for yv, mv in zip(yy, mm):
        inv = ctx.inv[(n1 % p) * mv % p]
        acc.append(yv * math.fsum(wn * np.cos(2 * math.pi * ((n2 % p) * inv % p) / p)))
    main = 8 / math.sqrt(p) * math.fsum(acc)
    return dict(p=p, M=coeffs.M, character_side=tw, exponential_side=main, discrepancy=tw - main)
