"""Command-line experiments: ``nonvanish <command> [flags]``.

Each command writes one JSON or CSV report.  Exit status is 0 on success,
1 on a bad configuration (nothing written) and 2 when a checked invariant
fails (report written, violations listed in it and on stderr).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import arith, characters, kloosterman, lfun, mollify, proportion, sums_lab
from .reports import build_report, write_report

log = logging.getLogger("nonvanish")

THREADS_ENV = "NONVANISH_THREADS"

DEFAULT_PRIMES = {
    "moments": [1009, 5003, 10007],
    "mollified": [1009, 5003, 10007],
    "headline": [1009, 5003, 10007],
    "kloosterman-scan": [101, 211, 401, 499],
    "bsum-check": [101, 211],
    "trilinear-check": [61, 101],
    "afe-check": [101, 499],
    "gauss-identity": [101, 199, 499],
}

TAGS = {
    "moments": "plain first and second moments",
    "mollified": "mollified moments and Cauchy-Schwarz ratio",
    "headline": "nonvanishing proportion statements",
    "kloosterman-scan": "complete fourth moment of Kloosterman sums",
    "bsum-check": "bilinear sum B and its Poisson dual",
    "trilinear-check": "trilinear Kloosterman sum and nu(h) bookkeeping",
    "afe-check": "approximate functional equation for |L|^2",
    "gauss-identity": "even twisted Gauss sum identity",
}


@dataclass
class ExperimentConfig:
    primes: list[int] | None = None
    theta: list[float] = field(default_factory=lambda: [0.05, 0.10, 0.15, 0.20])
    kind: list[str] = field(default_factory=lambda: ["IS", "MV"])
    parities: list[str] = field(default_factory=lambda: ["even", "odd", "both"])
    B: int = 6
    bsum_M: int = 10
    n1_min: int = 16
    max_windows: int = 12
    trilinear_grid: list[list[int]] = field(default_factory=lambda: [[2, 3, 4], [3, 5, 8], [5, 5, 8]])
    n_systems: int = 3
    seed: int = 0
    format: str = "json"
    out: str | None = None
    tolerances: dict = field(
        default_factory=lambda: dict(
            afe_rel=1e-4,
            poisson_rel=1e-4,
            poisson_abs=1e-8,
            gauss_identity=2.0,
            ratio_slack=1e-9,
            lower_bound_slack=1e-6,
        )
    )

    def validate(self) -> None:
        for p in self.primes or []:
            if int(p) < 3 or not arith.is_prime(int(p)):
                raise ValueError(f"not an odd prime: {p}")
        for t in self.theta:
            if not 0 < t < 0.5:
                raise ValueError(f"theta must lie in (0, 1/2): {t}")
        for k in self.kind:
            if k not in mollify.KINDS:
                raise ValueError(f"unknown mollifier kind: {k}")
        if self.format not in ("json", "csv"):
            raise ValueError(f"unknown format: {self.format}")
        if self.B < 1:
            raise ValueError("B must be positive")

    def primes_for(self, command: str) -> list[int]:
        return list(self.primes) if self.primes else DEFAULT_PRIMES[command]


class Run:
    """Collects rows and invariant violations for one command."""

    def __init__(self, command: str, cfg: ExperimentConfig):
        self.command = command
        self.cfg = cfg
        self.rows: list[dict] = []
        self.violations: list[str] = []

    def check(self, ok: bool, what: str) -> None:
        if not ok:
            self.violations.append(what)


def _map_primes(fn, primes):
    threads = int(os.environ.get(THREADS_ENV, "1"))
    if threads <= 1:
        return [fn(p) for p in primes]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, primes))


def cmd_moments(run: Run) -> None:
    def cell(p):
        log.info("moments p=%d", p)
        ctx = arith.cached_context(p)
        table = lfun.central_values(ctx)
        first, second = lfun.plain_moments(ctx, table)
        return dict(
            p=p,
            first=first,
            second=second,
            log_p=math.log(p),
            second_minus_log_p=second - math.log(p),
            ratio=first**2 / second,
            nonvanishing_fraction=lfun.nonvanishing_fraction(table.primitive("both")),
        )

    for row in _map_primes(cell, run.cfg.primes_for(run.command)):
        run.rows.append(row)
        run.check(row["ratio"] <= 1 + run.cfg.tolerances["ratio_slack"], f"Cauchy-Schwarz ratio <= 1 at p={row['p']}")


def _mollified_rows(run: Run, command: str) -> list[mollify.MollifiedMomentReport]:
    cfg = run.cfg

    def cell(p):
        log.info("mollified p=%d", p)
        ctx = arith.cached_context(p)
        table = lfun.central_values(ctx)
        gauss = characters.batch_gauss_sums(ctx)
        out = []
        for theta in cfg.theta:
            coeffs = mollify.coefficients_for(p, theta)
            for kind in cfg.kind:
                for parity in cfg.parities:
                    out.append(mollify.mollified_moments(ctx, coeffs, kind, parity, table, gauss))
        return out

    reports = [r for chunk in _map_primes(cell, cfg.primes_for(command)) for r in chunk]
    for r in reports:
        tag = f"p={r.p} theta={r.theta} kind={r.kind} parity={r.parity}"
        run.check(
            r.nonvanishing_fraction >= r.ratio - cfg.tolerances["lower_bound_slack"],
            f"nonvanishing fraction >= ratio ({tag})",
        )
        if r.parity != "odd":
            run.check(r.ratio <= 1 + cfg.tolerances["ratio_slack"], f"ratio <= 1 ({tag})")
    return reports


def cmd_mollified(run: Run) -> None:
    run.rows.extend(r.as_row() for r in _mollified_rows(run, run.command))


def cmd_headline(run: Run) -> None:
    reports = _mollified_rows(run, run.command)
    for s in proportion.headline_report(reports):
        run.rows.append(s.as_row())
    for theta, kind in ((0.3, "MV"), (0.25, "MV"), (0.3, "IS")):
        run.rows.append(
            dict(p=None, theta=theta, formula=kind, predicted=float(proportion.predicted_proportion(theta, kind)),
                 measured=None, nonvanishing_fraction=None, parity=None, notes="closed form")
        )


def cmd_kloosterman_scan(run: Run) -> None:
    cfg = run.cfg

    def cell(p):
        log.info("kloosterman-scan p=%d", p)
        ctx = arith.cached_context(p)
        table = kloosterman.build_table(ctx)
        B = min(cfg.B, p - 1)
        scan = kloosterman.fgkm_scan(ctx, B, table)
        weil = float(np.max(np.abs(table.values[1:])) / (2 * math.sqrt(p)))
        row = scan.as_row()
        row.update(weil_ratio=weil, mirror_bound=3 * B * B)
        return row

    for row in _map_primes(cell, cfg.primes_for(run.command)):
        run.rows.append(row)
        run.check(row["weil_ratio"] <= 1 + 1e-12, f"Weil bound at p={row['p']}")
        run.check(row["count_mirror"] <= row["mirror_bound"], f"|D| <= 3B^2 at p={row['p']}")


def cmd_bsum_check(run: Run) -> None:
    cfg = run.cfg
    tol = cfg.tolerances

    def cell(p):
        ctx = arith.cached_context(p)
        table = kloosterman.build_table(ctx)
        coeffs = mollify.coefficients(min(cfg.bsum_M, p - 1))
        windows = sums_lab.dyadic_windows(p, coeffs.M, cfg.n1_min)
        windows = _spread(windows, cfg.max_windows)
        rows = []
        for w in windows:
            log.info("bsum-check p=%d window=%s", p, w.as_row())
            direct = sums_lab.b_sum_direct(ctx, w, coeffs)
            dual = sums_lab.b_sum_poisson(ctx, w, coeffs, table)
            diff = abs(direct - dual.value)
            row = sums_lab.bound_envelopes(ctx, w, coeffs.M, abs(direct))
            row.update(direct=direct, poisson=dual.value, abs_diff=diff,
                       rel_diff=diff / abs(direct) if abs(direct) > 0 else 0.0,
                       zero_term=abs(dual.zero_term), k_max=dual.kmax, k_tail=dual.tail)
            rows.append(row)
        return rows

    for rows in _map_primes(cell, cfg.primes_for(run.command)):
        for row in rows:
            run.rows.append(row)
            ok = row["abs_diff"] <= max(tol["poisson_rel"] * abs(row["direct"]), tol["poisson_abs"])
            run.check(ok, f"Poisson identity at p={row['p']} window={(row['M1'], row['M2'], row['N1'], row['N2'])}")


def _spread(items: list, k: int) -> list:
    if len(items) <= k:
        return items
    idx = np.linspace(0, len(items) - 1, k).round().astype(int)
    return [items[i] for i in sorted(set(idx))]


def cmd_trilinear_check(run: Run) -> None:
    cfg = run.cfg

    def cell(p):
        ctx = arith.cached_context(p)
        table = kloosterman.build_table(ctx)
        rows = []
        for j, (N, A, B) in enumerate(cfg.trilinear_grid):
            if N * A > p / 2 or B > p:
                continue
            prof = sums_lab.nu_profile(ctx, N, A)
            for i in range(cfg.n_systems):
                seed = cfg.seed + 1000 * j + i
                cs = sums_lab.CoefficientSystem.random_signs(p, N, A, B, seed)
                chain = sums_lab.cauchy_schwarz_chain(ctx, table, cs)
                rows.append(dict(p=p, N=N, A=A, B=B, seed=seed, S=sums_lab.trilinear_sum(ctx, table, cs),
                                 nu_second_moment=prof.second_moment, diagonal=prof.diagonal,
                                 chain_holds=chain.holds(), **{k: v for k, v in chain.as_row().items()
                                                               if k not in ("seed", "nu_second_moment")}))
        return rows

    for rows in _map_primes(cell, cfg.primes_for(run.command)):
        for row in rows:
            run.rows.append(row)
            tag = f"p={row['p']} N={row['N']} A={row['A']} B={row['B']} seed={row['seed']}"
            run.check(row["nu_second_moment"] == row["diagonal"], f"sum nu^2 equals diagonal count ({tag})")
            run.check(row["chain_holds"], f"Cauchy-Schwarz chain ({tag})")


def cmd_afe_check(run: Run) -> None:
    cfg = run.cfg

    def cell(p):
        log.info("afe-check p=%d", p)
        ctx = arith.cached_context(p)
        table = lfun.central_values(ctx)
        mask = characters.parity_mask(p, "even")
        afe = lfun.afe_second_moments(ctx, "even")[mask]
        ref = np.abs(table.values[mask]) ** 2
        rel = np.abs(afe - ref) / ref
        return dict(p=p, characters=int(mask.sum()), max_rel_diff=float(rel.max()),
                    cutoff=lfun.default_afe_cutoff(p, "even"))

    for row in _map_primes(cell, cfg.primes_for(run.command)):
        run.rows.append(row)
        run.check(row["max_rel_diff"] <= cfg.tolerances["afe_rel"], f"AFE agreement at p={row['p']}")


def cmd_gauss_identity(run: Run) -> None:
    cfg = run.cfg

    def cell(p):
        log.info("gauss-identity p=%d", p)
        ctx = arith.cached_context(p)
        sums = characters.even_primitive_gauss_twist_all(ctx)
        n = np.arange(1, p)
        c = np.cos(2 * math.pi * ctx.inv[n] / p)
        dev = sums[n] - p * c
        return dict(p=p, max_deviation=float(np.max(np.abs(dev))),
                    max_error_vs_one_minus_cos=float(np.max(np.abs(dev - (1 - c)))))

    for row in _map_primes(cell, cfg.primes_for(run.command)):
        run.rows.append(row)
        run.check(row["max_deviation"] <= cfg.tolerances["gauss_identity"], f"Gauss identity at p={row['p']}")


COMMANDS = {
    "moments": cmd_moments,
    "mollified": cmd_mollified,
    "headline": cmd_headline,
    "kloosterman-scan": cmd_kloosterman_scan,
    "bsum-check": cmd_bsum_check,
    "trilinear-check": cmd_trilinear_check,
    "afe-check": cmd_afe_check,
    "gauss-identity": cmd_gauss_identity,
}


def _csv_list(kind):
    def parse(text):
        return [kind(v) for v in text.split(",") if v.strip()]

    return parse


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nonvanish", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    ap.add_argument("--primes", type=_csv_list(int))
    ap.add_argument("--theta", type=_csv_list(float))
    ap.add_argument("--kind", type=_csv_list(str))
    ap.add_argument("--B", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--format", choices=["json", "csv"])
    ap.add_argument("--out", type=str)
    ap.add_argument("--echo", action="store_true", help="also print the report to stdout")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> ExperimentConfig:
    data = {}
    if args.config is not None:
        data = json.loads(Path(args.config).read_text())
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
    for name in ("primes", "theta", "kind", "B", "seed", "format", "out"):
        val = getattr(args, name)
        if val is not None:
            data[name] = val
    tol = data.pop("tolerances", {})
    cfg = ExperimentConfig(**data)
    unknown = set(tol) - set(cfg.tolerances)
    if unknown:
        raise ValueError(f"unknown tolerances: {sorted(unknown)}")
    cfg.tolerances.update(tol)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"bad configuration: {exc}", file=sys.stderr)
        return 1
    run = Run(args.command, cfg)
    COMMANDS[args.command](run)
    config_dict = asdict(cfg)
    config_dict["primes"] = cfg.primes_for(args.command)
    config_dict.pop("out")
    report = build_report(args.command, TAGS[args.command], config_dict, run.rows, run.violations)
    out = Path(cfg.out) if cfg.out else Path(f"{args.command}.{cfg.format}")
    write_report(report, out, cfg.format)
    if args.echo:
        sys.stdout.write(out.read_text())
    for v in run.violations:
        print(f"invariant violated: {v}", file=sys.stderr)
    return 2 if run.violations else 0


if __name__ == "__main__":
    sys.exit(main())
