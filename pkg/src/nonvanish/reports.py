"""Deterministic JSON/CSV report emission."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

from . import __version__

SIG_DIGITS = 15


def _clean(value):
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, complex):
        return {"re": _clean(value.real), "im": _clean(value.imag)}
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return int(value)
    if hasattr(value, "item") and not isinstance(value, (list, tuple, dict)):
        return _clean(value.item())
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return float(f"{value:.{SIG_DIGITS}g}")
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return str(value)


def config_hash(config: dict) -> str:
    blob = json.dumps(_clean(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_report(command: str, tag: str, config: dict, rows: list[dict], violations: list[str]) -> dict:
    return {
        "meta": {
            "artifact_version": __version__,
            "command": command,
            "tag": tag,
            "config_hash": config_hash(config),
            "seed": config.get("seed"),
            "config": config,
            "violations": violations,
        },
        "rows": rows,
    }


def dumps_json(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def dumps_csv(report: dict) -> str:
    meta = report["meta"]
    lead = {k: meta[k] for k in ("artifact_version", "command", "tag", "config_hash", "seed")}
    rows = [dict(lead, **_flatten(_clean(r))) for r in report["rows"]]
    fields: list[str] = []
    for r in rows or [lead]:
        for k in r:
            if k not in fields:
                fields.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _csv_cell(v) for k, v in r.items()})
    return buf.getvalue()


def _flatten(row: dict) -> dict:
    out = {}
    for k, v in row.items():
        if isinstance(v, dict):
            for kk, vv in v.items():
                out[f"{k}_{kk}"] = vv
        else:
            out[k] = v
    return out


def _csv_cell(v):
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    if isinstance(v, list):
        return json.dumps(v)
    return v


def write_report(report: dict, path: Path, fmt: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = dumps_json(report) if fmt == "json" else dumps_csv(report)
    path.write_text(text)
    return path
