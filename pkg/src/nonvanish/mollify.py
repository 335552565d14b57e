"""Mollifiers, mollified moments over the primitive family, and the Cauchy-Schwarz ratio."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .arith import PrimeContext, mobius_table
from .characters import (
    Character,
    GaussSumTable,
    batch_gauss_sums,
    char_value,
    fsum_complex,
    group_transform,
    log_histogram,
    parity_mask,
)
from .lfun import ZERO_THRESHOLD, CentralValueTable, InvariantViolation, central_values

KINDS = ("IS", "MV")


@dataclass(frozen=True)
class MollifierCoefficients:
    """y[m-1] = mu(m) log(M/m)/log M for 1 <= m <= M (y = [1] when M = 1)."""

    M: int
    y: np.ndarray
    theta: float | None = None

    @property
    def m(self) -> np.ndarray:
        return np.arange(1, self.M + 1)

    def coefficient(self, m: int) -> float:
        return float(self.y[m - 1]) if 1 <= m <= self.M else 0.0


def coefficients(M: int, theta: float | None = None) -> MollifierCoefficients:
    M = int(M)
    if M < 1:
        raise ValueError(f"mollifier length must be >= 1, got {M}")
    if M == 1:
        y = np.ones(1)
    else:
        m = np.arange(1, M + 1)
        y = mobius_table(M)[1:] * np.log(M / m) / math.log(M)
    y.setflags(write=False)
    return MollifierCoefficients(M, y, theta)


def length_for(p: int, theta: float) -> int:
    """M = floor(p^theta), raised to 2 so the mollifier is nontrivial in form."""
    return max(2, int(math.floor(p**theta + 1e-12)))


def coefficients_for(p: int, theta: float) -> MollifierCoefficients:
    return coefficients(length_for(p, theta), theta)


def is_mollifier(chi: Character, coeffs: MollifierCoefficients) -> complex:
    """sum_{m <= M} y_m chi(m) m^(-1/2)."""
    m = coeffs.m
    return fsum_complex(coeffs.y * char_value(chi, m) / np.sqrt(m))


def mv_mollifier(chi: Character, coeffs: MollifierCoefficients, gauss: GaussSumTable) -> complex:
    """Twisted mollifier: the IS piece plus conj(tau_chi)/sqrt(p) times the same piece at conj(chi)."""
    p = chi.ctx.p
    return is_mollifier(chi, coeffs) + gauss[chi.a].conjugate() / math.sqrt(p) * is_mollifier(chi.conj(), coeffs)


def is_mollifier_values(ctx: PrimeContext, coeffs: MollifierCoefficients) -> np.ndarray:
    """IS mollifier at every character exponent by one group transform."""
    m = coeffs.m
    return group_transform(ctx, log_histogram(ctx, m, coeffs.y / np.sqrt(m)))


def mollifier_values(
    ctx: PrimeContext, coeffs: MollifierCoefficients, kind: str, gauss: GaussSumTable | None = None
) -> np.ndarray:
    if kind not in KINDS:
        raise ValueError(f"unknown mollifier kind {kind!r}")
    a_vals = is_mollifier_values(ctx, coeffs)
    if kind == "IS":
        return a_vals
    if gauss is None:
        gauss = batch_gauss_sums(ctx)
    # y real, so the piece at conj(chi) is conj of the piece at chi
    return a_vals + np.conj(gauss.values) / math.sqrt(ctx.p) * np.conj(a_vals)


def predicted_ratio(theta: float, kind: str) -> float:
    if kind == "IS":
        return theta / (1 + theta)
    if kind == "MV":
        return 2 * theta / (1 + 2 * theta)
    raise ValueError(f"unknown mollifier kind {kind!r}")


@dataclass
class MollifiedMomentReport:
    p: int
    theta: float | None
    M: int
    kind: str
    parity: str
    first: complex
    second: float
    ratio: float
    predicted: float | None
    nonvanishing_fraction: float
    family_size: int

    def as_row(self) -> dict:
        row = asdict(self)
        row["first_re"] = self.first.real
        row["first_im"] = self.first.imag
        del row["first"]
        row["theta_effective"] = math.log(self.M) / math.log(self.p) if self.M > 1 else 0.0
        return row


def _normalizer(p: int, parity: str) -> float:
    return 1.0 / (p - 2) if parity == "both" else 2.0 / (p - 2)


def mollified_moments(
    ctx: PrimeContext,
    coeffs: MollifierCoefficients,
    kind: str,
    parity: str = "even",
    table: CentralValueTable | None = None,
    gauss: GaussSumTable | None = None,
) -> MollifiedMomentReport:
    """First and second mollified moments by direct summation over the family.

    Normalized by 2/(p-2) for a single parity and 1/(p-2) for both.
    """
    p = ctx.p
    if coeffs.M >= p:
        raise ValueError(f"mollifier length {coeffs.M} must be below p={p}")
    if table is None:
        table = central_values(ctx)
    lm = table.values * mollifier_values(ctx, coeffs, kind, gauss)
    fam = lm[parity_mask(p, parity)]
    c = _normalizer(p, parity)
    first = c * fsum_complex(fam)
    second = c * math.fsum(np.abs(fam) ** 2)
    ratio = abs(first) ** 2 / second if second > 0 else 0.0
    predicted = predicted_ratio(coeffs.theta, kind) if coeffs.theta is not None else None
    frac = float(np.count_nonzero(np.abs(fam) > ZERO_THRESHOLD)) / len(fam)
    return MollifiedMomentReport(p, coeffs.theta, coeffs.M, kind, parity, first, second, ratio, predicted, frac, len(fam))


def second_moment_split(
    ctx: PrimeContext,
    coeffs: MollifierCoefficients,
    table: CentralValueTable | None = None,
    gauss: GaussSumTable | None = None,
) -> tuple[float, float]:
    """The two pieces of the even twisted second moment.

    diagonal = (4/(p-2)) sum+ |L|^2 |A|^2 and
    twisted  = (4/(p-2)) sum+ |L|^2 tau A^2 / sqrt(p), with A the IS piece.
    Pairing chi with conj(chi) makes the twisted sum real.
    """
    p = ctx.p
    if table is None:
        table = central_values(ctx)
    if gauss is None:
        gauss = batch_gauss_sums(ctx)
    mask = parity_mask(p, "even")
    a_vals = is_mollifier_values(ctx, coeffs)[mask]
    l2 = np.abs(table.values[mask]) ** 2
    c = 4.0 / (p - 2)
    diag = c * math.fsum(l2 * np.abs(a_vals) ** 2)
    tw = c * fsum_complex(l2 * gauss.values[mask] * a_vals**2) / math.sqrt(p)
    if abs(tw.imag) > 1e-8 * max(1.0, abs(tw.real)):
        raise InvariantViolation(f"twisted piece not real: {tw}")
    return diag, tw.real
