"""Command-line interface: ``cyldrop <command> [flags]``.

Exit codes: 0 success, 1 numerical failure, 2 usage error.  Errors are
reported as a JSON document on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import export
from .core import DropParams, circle_radii, classify, critical_levels
from .errors import DropError
from .profile import (
    circle_curve,
    exceptional_trace,
    is_embedded,
    symmetry_type,
    trace_band,
)
from .quadrature import arc_length, delta_theta
from . import stability


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _number(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not math.isfinite(value):
            raise argparse.ArgumentTypeError(f"not finite: {text!r}") from None
        return value


def _positive(text: str) -> float:
    v = _number(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _level(text: str):
    """A number, or ``C1``/``C2``/``C3`` for a critical level."""
    t = text.strip()
    if t.upper() in ("C1", "C2", "C3"):
        return t.upper()
    return _number(t)


def _band(text: str) -> int:
    t = text.strip().lower()
    named = {"first": 0, "second": 1}
    if t in named:
        return named[t]
    try:
        i = int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"band must be first, second or 1-based index: {text!r}") from None
    if i < 1:
        raise argparse.ArgumentTypeError("band index is 1-based")
    return i - 1


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    n: int

    def values(self) -> list[float]:
        if self.n == 1:
            return [self.lo]
        return [float(v) for v in np.linspace(self.lo, self.hi, self.n)]


def _axis(text: str) -> Axis:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"axis must be lo:hi:n, got {text!r}")
    lo, hi = _number(parts[0]), _number(parts[1])
    try:
        n = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad count in {text!r}") from None
    if n < 1 or hi < lo or (n == 1 and hi != lo) or (n > 1 and hi == lo):
        raise argparse.ArgumentTypeError(f"empty or inconsistent axis {text!r}")
    return Axis(lo, hi, n)


def _grid(text: str) -> tuple[Axis, Axis]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("grid must be a_lo:a_hi:n_a,C_lo:C_hi:n_C")
    return _axis(parts[0]), _axis(parts[1])


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cyldrop", description="Equilibrium profiles of rotating cylindrical drops.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, level=True, band=False, fmt=("json",)):
        sp.add_argument("--a", type=_number, required=True, help="rotation coefficient")
        sp.add_argument("--lambda0", type=_number, default=1.0, help="pressure parameter (default 1)")
        if level:
            sp.add_argument("--C", type=_level, required=True, help="level value, or C1/C2/C3")
        if band:
            sp.add_argument("--band", type=_band, default=0, help="first, second or 1-based index")
        sp.add_argument("--out", type=Path, help="output file (default stdout)")
        sp.add_argument("--format", choices=fmt, default=fmt[0])
        sp.add_argument("--tol", type=_positive, default=1e-6, help="rationality tolerance")
        sp.add_argument("--max-denominator", type=int, default=64)

    sp = sub.add_parser("classify", help="roots, region and bands of one level")
    common(sp, fmt=("json", "csv"))

    sp = sub.add_parser("critical", help="critical levels C_i(a)")
    common(sp, level=False, fmt=("json", "csv"))

    sp = sub.add_parser("delta-theta", help="angle advance of one band")
    common(sp, band=True, fmt=("json",))

    sp = sub.add_parser("trace", help="trace and assemble a profile curve")
    common(sp, band=True, fmt=("csv", "json", "svg"))
    sp.add_argument("--pieces", type=int, help="open assembly of this many pieces")
    sp.add_argument("--circle", type=int, help="trace the 1-based circle instead of a band")
    sp.add_argument("--samples", type=int, default=1025, help="samples per piece")
    sp.add_argument("--max-arclength", type=_positive, default=500.0, help="cap for exceptional traces")
    sp.add_argument("--summary", type=Path, help="write the JSON summary here")
    sp.add_argument("--figure", type=Path, help="also write a matplotlib figure (png, svg, pdf)")

    sp = sub.add_parser("scan", help="classify a grid of (a, C)")
    sp.add_argument("--grid", type=_grid, required=True, help="a_lo:a_hi:n_a,C_lo:C_hi:n_C")
    sp.add_argument("--lambda0", type=_number, default=1.0)
    sp.add_argument("--out", type=Path)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--tol", type=_positive, default=1e-6)
    sp.add_argument("--max-denominator", type=int, default=64)
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp.add_argument("--figure", type=Path, help="also write a moduli-map figure")

    sp = sub.add_parser("stability", help="stability report for a cylinder of height h")
    common(sp, level=False, band=True, fmt=("json",))
    sp.add_argument("--C", type=_level, help="level of a non-circular profile")
    sp.add_argument("--circle", type=int, help="1-based circle index for a round cylinder")
    sp.add_argument("--R", type=_positive, help="radius of a round cylinder")
    sp.add_argument("--h", type=_positive, required=True, help="height")
    sp.add_argument("--problem", choices=("free", "fixed"), default="free")

    sp = sub.add_parser("render", help="SVG line art from a trace CSV")
    sp.add_argument("input", type=Path)
    sp.add_argument("--out", type=Path)
    sp.add_argument("--format", choices=("svg",), default="svg")
    sp.add_argument("--overlay", action="store_true", help="circles at R_min and R_max")
    sp.add_argument("--limit-R", type=_positive, help="dashed limit circle")
    return p


# ---------------------------------------------------------------------------


def _params(args) -> DropParams:
    C = args.C
    if isinstance(C, str):
        C = critical_levels(args.a).get(int(C[1])).C
    try:
        return DropParams(args.a, args.lambda0, C)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _params_json(p: DropParams) -> dict:
    return {"a": p.a, "lambda0": p.lambda0, "C": p.C}


def _symmetry_json(sym) -> dict:
    if sym.kind == "Rational":
        return {"kind": "Rational", "rotation": export.rational(sym.m, sym.k), "order": sym.order}
    return {"kind": sym.kind}


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_classify(args):
    p = _params(args)
    label = classify(p)
    crit = critical_levels(p.a) if p.a != 0 and p.lambda0 != 0 else None
    if args.format == "csv":
        _emit(export.csv_text(("r", "multiplicity"), list(label.roots)), args.out)
        return 0
    doc = {
        "command": "classify",
        "params": _params_json(label.params),
        "case": label.case,
        "region": label.region,
        "root_count": label.root_count,
        "roots": [[r, m] for r, m in label.roots],
        "bands": [{"r_lo": b.r_lo, "r_hi": b.r_hi, "mult_lo": b.mult_lo, "mult_hi": b.mult_hi} for b in label.bands],
        "circles": [{"R": R, "orientation": o, "multiplicity": m} for R, o, m in circle_radii(label.params)]
        if label.params.canonical else [],
        "critical_levels": [{"index": e.index, "R": e.R, "r": e.r, "C": e.C} for e in crit.entries] if crit else [],
        "notes": list(label.notes),
    }
    _emit(export.json_document(doc), args.out)
    return 0


def cmd_critical(args):
    crit = critical_levels(args.a)
    rows = [(e.index, e.R, e.r, e.C) for e in crit.entries]
    if args.format == "csv":
        _emit(export.csv_text(("index", "R", "r", "C"), rows), args.out)
    else:
        doc = {"command": "critical", "a": args.a, "levels": [dict(zip(("index", "R", "r", "C"), r)) for r in rows]}
        _emit(export.json_document(doc), args.out)
    return 0


def _band_of(p: DropParams, index: int):
    label = classify(p)
    if index >= len(label.bands):
        raise UsageError(f"band {index + 1} does not exist at {p} ({len(label.bands)} band(s))")
    return label, label.bands[index]


def cmd_delta_theta(args):
    p = _params(args)
    label, band = _band_of(p, args.band)
    res = delta_theta(label.params, band, allow_divergent=True)
    doc = {
        "command": "delta-theta",
        "params": _params_json(label.params),
        "band": {"r_lo": band.r_lo, "r_hi": band.r_hi},
        "delta_theta": res.delta_theta if res.convergent else None,
        "est_error": res.est_error,
        "convergent": res.convergent,
    }
    if res.convergent:
        doc["length"] = arc_length(label.params, band)
        doc["symmetry"] = _symmetry_json(symmetry_type(res.delta_theta, args.tol, args.max_denominator))
    _emit(export.json_document(doc), args.out)
    return 0


def trace_summary(args):
    """Build (rows, summary, drawing) for ``trace``; shared with tests."""
    p = DropParams(args.a, args.lambda0, 0.0) if args.circle else _params(args)
    if args.circle:
        circles = circle_radii(p)
        if not 1 <= args.circle <= len(circles):
            raise UsageError(f"circle {args.circle} does not exist ({len(circles)} circle(s))")
        R, orient, _ = circles[args.circle - 1]
        curve = circle_curve(p, R, orient, n_samples=args.samples)
        summary = {
            "kind": "circle", "R": R, "orientation": orient,
            "delta_theta": curve.symmetry.delta_theta, "length": curve.length,
            "symmetry": _symmetry_json(curve.symmetry), "closed": True, "embedded": True,
            "exceptional": False,
        }
        return curve.rows(), summary, (curve.x, curve.y, True, (), ())
    label, band = _band_of(p, args.band)
    if not band.simple:
        tr = exceptional_trace(label.params, band, max_arclength=args.max_arclength, n_samples=4 * args.samples)
        sm = tr.samples
        rows = np.column_stack([sm.s, sm.x, sm.y, sm.theta, sm.xi1, sm.xi2, sm.kappa])
        summary = {
            "kind": "exceptional", "exceptional": True, "delta_theta": None, "convergent": False,
            "limit_R": tr.limit_R, "R_end": tr.R_end, "monotone_R": tr.monotone, "winding": tr.winding,
            "length": float(sm.s[-1]), "closed": False, "embedded": None,
        }
        return rows, summary, (sm.x, sm.y, False, (), (tr.limit_R,))
    tr = trace_band(label.params, args.band, n_samples=args.samples, tol=args.tol,
                    max_denominator=args.max_denominator, pieces=args.pieces)
    curve, pc = tr.curve, tr.piece
    summary = {
        "kind": "band", "exceptional": False,
        "band": {"r_lo": band.r_lo, "r_hi": band.r_hi},
        "delta_theta": pc.delta_theta_measured,
        "delta_theta_quadrature": delta_theta(label.params, band).delta_theta,
        "piece_length": pc.length, "length": curve.length, "pieces": curve.n_pieces,
        "symmetry": _symmetry_json(tr.symmetry), "closed": curve.closed,
        "embedded": is_embedded(curve) if curve.closed else None,
        "R_min": math.sqrt(pc.r_min), "R_max": math.sqrt(pc.r_max),
        "hamiltonian_drift": float(np.max(np.abs(
            2 * pc.samples.xi2 + label.params.lambda0 * pc.samples.r - 0.25 * label.params.a * pc.samples.r**2
            - label.params.C))),
    }
    rows = curve.rows()
    if curve.closed:
        rows = np.vstack([rows, rows[:1]])
        rows[-1, 0] = curve.length
    return rows, summary, (curve.x, curve.y, curve.closed, (summary["R_min"], summary["R_max"]), ())


def cmd_trace(args):
    p_json = _params_json(DropParams(args.a, args.lambda0, 0.0) if args.circle else _params(args))
    rows, summary, (x, y, closed, circles, dashed) = trace_summary(args)
    doc = {"command": "trace", "params": p_json, **summary}
    if args.format == "csv":
        _emit(export.curve_csv(rows), args.out)
        target = args.summary or (args.out.with_suffix(".json") if args.out else None)
        if target is not None:
            target.write_text(export.json_document(doc))
    elif args.format == "json":
        doc["samples"] = {c: rows[:, i] for i, c in enumerate(export.CURVE_COLUMNS)}
        _emit(export.json_document(doc), args.out)
    else:
        _emit(export.svg_curve(x, y, closed, circles, dashed), args.out)
    if args.figure:
        from .plotting import plot_curve

        plot_curve(x, y, args.figure, title=f"a={args.a:g}, C={doc['params']['C']:g}", circles=circles, dashed=dashed)
    return 0


SCAN_COLUMNS = (
    "a", "C", "case", "region", "root_count", "bands",
    "delta_theta_1", "delta_theta_2", "divergent_1", "divergent_2",
    "symmetry_1", "symmetry_2", "error",
)


def scan_cell(a: float, C: float, lambda0: float = 1.0, tol: float = 1e-6, max_denominator: int = 64) -> dict:
    """One row of the moduli scan; errors are recorded, never raised."""
    row = dict.fromkeys(SCAN_COLUMNS)
    row.update(a=a, C=C)
    try:
        label = classify(DropParams(a, lambda0, C))
        row.update(case=label.case, region=label.region, root_count=label.root_count, bands=len(label.bands))
        for i, band in enumerate(label.bands[:2], start=1):
            res = delta_theta(label.params, band, allow_divergent=True)
            row[f"divergent_{i}"] = not res.convergent
            if res.convergent:
                row[f"delta_theta_{i}"] = res.delta_theta
                sym = symmetry_type(res.delta_theta, tol, max_denominator)
                row[f"symmetry_{i}"] = sym.kind if sym.kind != "Rational" else f"Rational({sym.m}/{sym.k})"
            else:
                row[f"symmetry_{i}"] = "Exceptional"
    except (DropError, ValueError, ArithmeticError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _scan_task(args):
    return scan_cell(*args)


def run_scan(a_axis: Axis, c_axis: Axis, lambda0=1.0, tol=1e-6, max_denominator=64, jobs=1) -> list[dict]:
    tasks = [(a, C, lambda0, tol, max_denominator) for a in a_axis.values() for C in c_axis.values()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_scan_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_scan_task(t) for t in tasks]


def cmd_scan(args):
    a_axis, c_axis = args.grid
    rows = run_scan(a_axis, c_axis, args.lambda0, args.tol, args.max_denominator, args.jobs)
    if args.format == "csv":
        _emit(export.csv_text(SCAN_COLUMNS, [[r[c] for c in SCAN_COLUMNS] for r in rows]), args.out)
    else:
        _emit(export.json_document({"command": "scan", "lambda0": args.lambda0, "cells": rows}), args.out)
    if args.figure:
        from .plotting import plot_scan

        plot_scan([r["a"] for r in rows], [r["C"] for r in rows], [r["region"] or "error" for r in rows], args.figure)
    return 0


def _report_json(rep: stability.StabilityReport) -> dict:
    return {
        "problem": rep.problem,
        "h": rep.h,
        "overall": rep.overall,
        "mu": list(rep.mu),
        "J": rep.J,
        "morse_index_lower_bound": rep.morse_index_lower_bound,
        "verdicts": [v.to_json() for v in rep.verdicts],
        "h_max_bounds": rep.h_max_bounds,
        "notes": list(rep.notes),
    }


def cmd_stability(args):
    if sum(x is not None for x in (args.C, args.circle, args.R)) != 1:
        raise UsageError("give exactly one of --C, --circle, --R")
    doc = {"command": "stability"}
    if args.C is None:
        p = DropParams(args.a, args.lambda0, 0.0)
        if args.circle is not None:
            circles = circle_radii(p)
            if not 1 <= args.circle <= len(circles):
                raise UsageError(f"circle {args.circle} does not exist ({len(circles)} circle(s))")
            R = circles[args.circle - 1][0]
        else:
            R = args.R
        rep = stability.round_cylinder_report(args.a, args.lambda0, R, args.h, args.problem)
        doc.update(params={"a": args.a, "lambda0": args.lambda0}, shape="round", R=R)
    else:
        p = _params(args)
        label, band = _band_of(p, args.band)
        tr = trace_band(label.params, args.band, tol=args.tol, max_denominator=args.max_denominator)
        if not tr.curve.closed:
            raise DropError("profile curve does not close (irrational angle advance)")
        rep = stability.curve_report(tr.curve, args.h, args.problem)
        doc.update(params=_params_json(label.params), shape="profile", symmetry=_symmetry_json(tr.symmetry))
    doc.update(_report_json(rep))
    _emit(export.json_document(doc), args.out)
    return 0


def cmd_render(args):
    try:
        data = export.read_curve_csv(args.input.read_text())
    except (OSError, ValueError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None
    x, y = data[:, 1], data[:, 2]
    closed = len(x) > 2 and math.hypot(x[0] - x[-1], y[0] - y[-1]) <= 1e-9 * (1 + np.max(np.hypot(x, y)))
    if closed:
        x, y = x[:-1], y[:-1]
    R = np.hypot(x, y)
    circles = (float(R.min()), float(R.max())) if args.overlay else ()
    dashed = ()
    if args.limit_R:
        dashed = (args.limit_R,)
    else:
        side = args.input.with_suffix(".json")
        if side.exists():
            try:
                meta = json.loads(side.read_text())
                if meta.get("exceptional") and isinstance(meta.get("limit_R"), float):
                    dashed = (meta["limit_R"],)
            except (ValueError, AttributeError):
                pass
    _emit(export.svg_curve(x, y, closed, circles, dashed), args.out)
    return 0


COMMANDS = {
    "classify": cmd_classify,
    "critical": cmd_critical,
    "delta-theta": cmd_delta_theta,
    "trace": cmd_trace,
    "scan": cmd_scan,
    "stability": cmd_stability,
    "render": cmd_render,
}


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(export.json_document({"error": {"type": kind, "message": message, "exit_code": code}}))
    return code


_NEGATIVE = re.compile(r"^-[\d.]")


def _glue_negatives(argv: list[str]) -> list[str]:
    """Let ``--C -9/8`` mean ``--C=-9/8``; argparse only accepts plain negatives."""
    out = []
    for tok in argv:
        if out and _NEGATIVE.match(tok) and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue_negatives(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail(2, "UsageError", str(exc))
    except DropError as exc:
        return _fail(1, type(exc).__name__, str(exc))
    except (ValueError, ArithmeticError) as exc:
        return _fail(1, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
