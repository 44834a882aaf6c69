"""Deterministic report emission.

`report.json` is byte-reproducible for a fixed config and seed: keys
are sorted, floats use shortest round-trip repr, and nothing
time-dependent is written to it.  Wall-clock goes to a `meta.json`
sidecar, which is explicitly not byte-stable.  CSV tables use the fixed
column sets documented in the README so external plotting needs no
bundled UI.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

LN2 = 0.6931471805599453


def val(value, exact: bool) -> dict:
    """A reported numeric with its exactness flag."""
    return {"value": float(value), "exact": bool(exact)}


def entropy_val(value, exact: bool, log2: bool) -> dict:
    v = float(value) / LN2 if log2 else float(value)
    return {"value": v, "exact": bool(exact)}


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return str(obj)


def write_report(out_dir, payload: dict, wall_clock: float) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    with open(path, "w") as fh:
        json.dump(jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(out / "meta.json", "w") as fh:
        json.dump({"wall_clock_seconds": wall_clock}, fh, indent=2)
        fh.write("\n")
    return path


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(out_dir, name: str, header, rows) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return path


def hstar_csv_rows(profile, log2: bool):
    """Fixed columns: k, p_star_nats, p_star_over_k, exact_flag."""
    scale = 1.0 / LN2 if log2 else 1.0
    return [(k, v * scale, r * scale, "exact" if profile.exact else "estimate")
            for k, v, r in profile.per_k]


def density_csv_rows(records):
    """Fixed columns: trial, window_N, count, density."""
    rows = []
    for i, rec in enumerate(records):
        for n, d in rec.density.window_densities:
            rows.append((i, n, int(round(d * n)), d))
    return rows


def cesaro_csv_rows(records):
    """Fixed columns: trial, checkpoint_N, cesaro_value."""
    rows = []
    for i, rec in enumerate(records):
        for n, v in rec.checkpoints:
            rows.append((i, n, v))
    return rows
