"""CSV/JSON serialization with atomic writes."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .lindblad import ScanAxis, Spectrum
from .manybody import EchoCurve

__all__ = [
    "atomic_write_text",
    "write_csv",
    "write_json",
    "read_csv",
    "digest",
    "to_jsonable",
    "curves_to_rows",
    "curves_from_rows",
    "read_curves",
    "read_spectrum",
]


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, rows, columns) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return atomic_write_text(path, buf.getvalue())


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path, payload) -> Path:
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True, allow_nan=False)
    return atomic_write_text(path, text + "\n")


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def digest(payload) -> str:
    """SHA-256 of the canonical JSON encoding of ``payload``."""
    text = json.dumps(to_jsonable(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


CURVE_COLUMNS = ["n_atoms", "tau", "tau_p", "n_r", "stderr"]


def curves_to_rows(curves):
    for curve in curves:
        for row in curve.rows():
            yield {"n_atoms": "" if curve.n_atoms is None else curve.n_atoms, **row}


def curves_from_rows(rows) -> list[EchoCurve]:
    """Group CSV rows by (n_atoms, tau); ``n_atoms`` and ``stderr`` are optional."""
    groups: dict = {}
    for row in rows:
        try:
            n = row.get("n_atoms") or ""
            key = (int(n) if n != "" else None, float(row["tau"]))
            groups.setdefault(key, []).append(
                (float(row["tau_p"]), float(row["n_r"]), float(row.get("stderr") or 0.0))
            )
        except (KeyError, ValueError) as exc:
            raise InvalidArgument(f"malformed echo-curve row {row!r}: {exc}") from exc
    curves = []
    for (n, tau), pts in groups.items():
        pts.sort()
        arr = np.array(pts)
        curves.append(EchoCurve(tau, arr[:, 0], arr[:, 1], arr[:, 2], n))
    return curves


def read_curves(path) -> list[EchoCurve]:
    path = Path(path)
    if path.suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        records = data["curves"] if isinstance(data, dict) and "curves" in data else data
        if isinstance(records, dict):
            records = [records]
        return [EchoCurve.from_dict(r) for r in records]
    return curves_from_rows(read_csv(path))


def read_spectrum(path, scan_axis=None) -> Spectrum:
    path = Path(path)
    if path.suffix == ".json":
        return Spectrum.from_dict(json.loads(path.read_text(encoding="utf-8")))
    if scan_axis is None:
        raise InvalidArgument("scan_axis is required when reading a spectrum from CSV")
    rows = read_csv(path)
    try:
        x = [float(r["detuning_rad_s"]) for r in rows]
        y = [float(r["im_rho_ge"]) for r in rows]
    except (KeyError, ValueError) as exc:
        raise InvalidArgument(f"malformed spectrum CSV: {exc}") from exc
    return Spectrum(ScanAxis(scan_axis), x, y)
