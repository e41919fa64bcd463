"""Reading and writing measurement tables, reports and trajectories."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DoalocError
from .linear_system import Measurements

REQUIRED_COLUMNS = ("k", "uA", "vA", "wA", "xB", "yB", "zB", "theta_rad", "phi_rad")
TRUTH_COLUMNS = ("uB", "vB", "wB")


class InputFormatError(DoalocError, ValueError):
    """Malformed input file; the message names the offending line and column."""


@dataclass(frozen=True)
class MeasurementTable:
    k: np.ndarray
    measurements: Measurements
    p_b_global: np.ndarray | None = None


def read_measurement_csv(path, degrees: bool = False) -> MeasurementTable:
    """Parse a measurement CSV (``k, uA, vA, wA, xB, yB, zB, theta_rad, phi_rad``).

    Optional ``uB, vB, wB`` columns carry the observer's true global
    positions.  With ``degrees=True`` the angle columns are read as degrees.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputFormatError(f"{path}: cannot read ({exc.strerror})") from exc
    reader = csv.reader(text.splitlines())
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InputFormatError(f"{path}:1: empty file") from None
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise InputFormatError(f"{path}:1: missing column(s) {', '.join(missing)}")
    has_truth = all(c in header for c in TRUTH_COLUMNS)
    cols = list(REQUIRED_COLUMNS) + (list(TRUTH_COLUMNS) if has_truth else [])
    idx = [header.index(c) for c in cols]
    rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputFormatError(f"{path}:{line_no}: expected {len(header)} fields, found {len(row)}")
        vals = []
        for name, i in zip(cols, idx):
            try:
                v = float(row[i])
            except ValueError:
                raise InputFormatError(f"{path}:{line_no}:{i + 1}: column {name!r} is not a number: {row[i]!r}") from None
            if not math.isfinite(v):
                raise InputFormatError(f"{path}:{line_no}:{i + 1}: column {name!r} is not finite")
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    a = np.array(rows)
    az, el = a[:, 7], a[:, 8]
    if degrees:
        az, el = np.deg2rad(az), np.deg2rad(el)
    m = Measurements(a[:, 1:4], a[:, 4:7], az, el)
    return MeasurementTable(a[:, 0].astype(int), m, a[:, 9:12] if has_truth else None)


def write_measurement_csv(path, m: Measurements, p_b_global=None) -> None:
    header = list(REQUIRED_COLUMNS) + (list(TRUTH_COLUMNS) if p_b_global is not None else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(m.K):
            row = [k + 1, *m.p_a[k], *m.p_b[k], m.azimuth[k], m.elevation[k]]
            if p_b_global is not None:
                row += list(p_b_global[k])
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def write_trajectory_csv(path, positions, truth=None) -> None:
    """Reconstructed global observer positions, with truth columns if known."""
    positions = np.asarray(positions, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["k", "x", "y", "z"] + (["x_true", "y_true", "z_true"] if truth is not None else [])
        w.writerow(head)
        for k, p in enumerate(positions):
            row = [k + 1, *(f"{v:.6f}" for v in p)]
            if truth is not None:
                row += [f"{v:.6f}" for v in truth[k]]
            w.writerow(row)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise InputFormatError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
