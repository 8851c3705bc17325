"""Snapshots and ledger files.

Snapshot layout (little-endian): b"MUSK", u32 schema version, u32 n,
f64 period, f64 t, then n*n f64 samples in row-major order. A JSON sidecar
``<name>.json`` next to each snapshot carries the config digest and a short
summary of the field.

Ledger CSV: comment lines starting with '#' describe the columns, then one
header row and one row per report, numbers written with 17 significant
digits so that parsing them back gives the same doubles.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .grid import InterfaceField

SNAPSHOT_MAGIC = b"MUSK"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIdd")

LEDGER_COLUMNS = (
    "t",
    "h2",
    "h52",
    "lipschitz",
    "d_of_t",
    "de_dt",
    "dissipation_budget",
    "energy_residual",
    "slope_residual",
)

COLUMN_DOCS = {
    "t": "simulation time",
    "h2": "H^2 semi-norm of f",
    "h52": "H^{5/2} semi-norm of f",
    "lipschitz": "max over the grid of |grad f|",
    "d_of_t": "time integral of h52^2 from 0 to t (trapezoid rule over steps)",
    "de_dt": "central-difference estimate of d/dt h2^2 from the reports",
    "dissipation_budget": "(rho / 2 pi) h52^2 / (1 + lipschitz^2)^(3/2)",
    "energy_residual": "de_dt + dissipation_budget - C_fit h52^2 (h2 + h2^2)",
    "slope_residual": "lipschitz^2 - lipschitz(0)^2 - C_fit d_of_t",
}


class SnapshotError(ValueError):
    """Malformed snapshot file."""


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write to a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode())


# ---------------------------------------------------------------------------
# snapshots


def snapshot_bytes(f: InterfaceField, t: float) -> bytes:
    head = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, f.n, f.period, float(t))
    return head + np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C")


def write_snapshot(path, f: InterfaceField, t: float, config_digest: str = "") -> None:
    path = Path(path)
    atomic_write_bytes(path, snapshot_bytes(f, t))
    summary = {
        "schema_version": SNAPSHOT_VERSION,
        "config_digest": config_digest,
        "n": f.n,
        "period": f.period,
        "t": float(t),
        "mean": f.mean,
        "min": float(f.values.min()),
        "max": float(f.values.max()),
    }
    atomic_write_text(path.with_suffix(path.suffix + ".json"), json.dumps(summary, indent=2) + "\n")


def read_snapshot(path) -> tuple[InterfaceField, float]:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise SnapshotError(f"{path}: file too short for a snapshot header")
    magic, version, n, period, t = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"{path}: unsupported schema version {version}")
    expected = _HEADER.size + 8 * n * n
    if len(data) != expected:
        raise SnapshotError(f"{path}: expected {expected} bytes for n={n}, found {len(data)}")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, n)
    return InterfaceField(values.astype(np.float64), period), t


# ---------------------------------------------------------------------------
# ledgers


def _fmt(x: float) -> str:
    return "%.17g" % x


def ledger_csv_text(rows: list[dict], meta: dict | None = None) -> str:
    out = _io.StringIO()
    for col in LEDGER_COLUMNS:
        out.write(f"# {col}: {COLUMN_DOCS[col]}\n")
    for key, val in (meta or {}).items():
        out.write(f"# meta {key} = {val}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(LEDGER_COLUMNS)
    for row in rows:
        w.writerow([_fmt(float(row[c])) for c in LEDGER_COLUMNS])
    return out.getvalue()


def parse_ledger_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return []
    if tuple(header) != LEDGER_COLUMNS:
        raise ValueError(f"unexpected ledger columns {header}")
    return [{c: float(v) for c, v in zip(header, row)} for row in reader]


def ledger_json_text(rows: list[dict], meta: dict | None = None) -> str:
    def enc(x):
        x = float(x)
        return x if np.isfinite(x) else repr(x)

    doc = {
        "columns": list(LEDGER_COLUMNS),
        "column_docs": COLUMN_DOCS,
        "meta": meta or {},
        "rows": [[enc(r[c]) for c in LEDGER_COLUMNS] for r in rows],
    }
    return json.dumps(doc, indent=1) + "\n"


def parse_ledger_json(text: str) -> list[dict]:
    doc = json.loads(text)
    cols = doc["columns"]
    return [{c: float(v) for c, v in zip(cols, row)} for row in doc["rows"]]


def emit_ledger(rows: list[dict], directory, fmt: str = "csv", stem: str = "ledger", meta: dict | None = None) -> list[Path]:
    """Write the ledger as CSV, JSON or both; returns the written paths."""
    if fmt not in ("csv", "json", "both"):
        raise ValueError(f"unknown ledger format {fmt!r}")
    directory = Path(directory)
    written = []
    if fmt in ("csv", "both"):
        p = directory / f"{stem}.csv"
        atomic_write_text(p, ledger_csv_text(rows, meta))
        written.append(p)
    if fmt in ("json", "both"):
        p = directory / f"{stem}.json"
        atomic_write_text(p, ledger_json_text(rows, meta))
        written.append(p)
    return written
