"""Deterministic JSON, CSV and SVG serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction

import numpy as np

SCHEMA = "drop-moduli/1"
CURVE_COLUMNS = ("s", "x", "y", "theta", "xi1", "xi2", "kappa")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return rational(obj.numerator, obj.denominator)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def rational(num: int, den: int) -> dict:
    return {"num": int(num), "den": int(den), "of": "2pi"}


def json_document(payload: dict) -> str:
    """Serialize with the schema key first; non-finite floats become strings."""
    doc = {"schema": SCHEMA}
    doc.update(_plain(payload))
    return json.dumps(doc, indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    if x is None:
        return ""
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def curve_csv(rows: np.ndarray) -> str:
    return csv_text(CURVE_COLUMNS, rows)


def read_curve_csv(text: str) -> np.ndarray:
    """Parse what ``curve_csv`` writes; raises ValueError on anything else."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV") from None
    if tuple(h.strip() for h in header) != CURVE_COLUMNS:
        raise ValueError(f"unexpected header {header}")
    data = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CURVE_COLUMNS):
            raise ValueError(f"line {lineno}: expected {len(CURVE_COLUMNS)} fields")
        vals = [float(v) for v in row]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"line {lineno}: non-finite value")
        data.append(vals)
    if len(data) < 2:
        raise ValueError("need at least two samples")
    return np.array(data)


def svg_curve(x, y, closed: bool, circles=(), dashed=()) -> str:
    """Single-path SVG in a square viewBox padded by 5%.

    ``circles`` and ``dashed`` are radii of origin-centred overlay circles.
    The y axis is flipped so the picture has the usual orientation.
    """
    x = np.asarray(x, float)
    y = -np.asarray(y, float)
    radii = list(circles) + list(dashed)
    xs = np.concatenate([x] + [np.array([-r, r]) for r in radii])
    ys = np.concatenate([y] + [np.array([-r, r]) for r in radii])
    cx, cy = 0.5 * (xs.min() + xs.max()), 0.5 * (ys.min() + ys.max())
    side = max(xs.max() - xs.min(), ys.max() - ys.min(), 1e-12)
    pad = 0.05 * side
    x0, y0 = cx - side / 2 - pad, cy - side / 2 - pad
    full = side + 2 * pad
    stroke = 0.005 * side
    pts = " L".join(f"{a:.9g},{b:.9g}" for a, b in zip(x, y))
    d = "M" + pts + (" Z" if closed else "")
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.9g} {y0:.9g} {full:.9g} {full:.9g}">',
        f'  <path d="{d}" fill="none" stroke="black" stroke-width="{stroke:.9g}" stroke-linejoin="round"/>',
    ]
    for r in circles:
        out.append(f'  <circle cx="0" cy="0" r="{r:.9g}" fill="none" stroke="gray" stroke-width="{stroke / 2:.9g}"/>')
    for r in dashed:
        out.append(
            f'  <circle cx="0" cy="0" r="{r:.9g}" fill="none" stroke="gray" stroke-width="{stroke / 2:.9g}" '
            f'stroke-dasharray="{2 * stroke:.9g} {2 * stroke:.9g}"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
