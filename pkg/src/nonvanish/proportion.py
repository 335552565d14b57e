"""Nonvanishing-proportion statements built from mollified-moment reports."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .mollify import MollifiedMomentReport

SCOPE_NOTE = (
    "finite-p measurement: checks the proportion algebra and the trend of measured ratios; "
    "the asymptotic statement itself is not verified"
)


def predicted_proportion(theta, formula: str):
    """theta/(1+theta) for IS, 2 theta/(1+2 theta) for MV.

    Exact when theta is a Fraction, so predicted_proportion(Fraction(3, 10), "MV") == Fraction(3, 8).
    """
    if not 0 < theta < Fraction(1, 2):
        raise ValueError(f"theta must lie in (0, 1/2), got {theta}")
    if formula == "IS":
        return theta / (1 + theta)
    if formula == "MV":
        return 2 * theta / (1 + 2 * theta)
    raise ValueError(f"unknown formula {formula!r}")


@dataclass
class ProportionStatement:
    p: int
    theta: float
    formula: str
    predicted: float
    measured: float
    nonvanishing_fraction: float
    parity: str
    notes: list[str] = field(default_factory=list)

    def as_row(self) -> dict:
        row = asdict(self)
        row["notes"] = "; ".join(self.notes)
        return row


def headline_report(reports: list[MollifiedMomentReport]) -> list[ProportionStatement]:
    out = []
    for r in reports:
        if r.theta is None:
            continue
        notes = [SCOPE_NOTE, f"M={r.M}"]
        if r.nonvanishing_fraction < r.ratio - 1e-6:
            notes.append("LOWER BOUND VIOLATED")
        out.append(
            ProportionStatement(
                p=r.p,
                theta=r.theta,
                formula=r.kind,
                predicted=float(predicted_proportion(r.theta, r.kind)),
                measured=r.ratio,
                nonvanishing_fraction=r.nonvanishing_fraction,
                parity=r.parity,
                notes=notes,
            )
        )
    return out


def monotone_within(values, slack: float) -> bool:
    return all(b >= a - slack for a, b in zip(values, values[1:]))
