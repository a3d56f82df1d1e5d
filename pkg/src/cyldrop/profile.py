"""Profile curves: ODE tracing, fundamental pieces, TreadmillSled coordinates,
assembly under the rotation group and the embeddedness test."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from .core import Band, DropParams, classify, eval_G, xi2_of_r
from .errors import (
    Degenerate,
    ExceptionalBand,
    InsufficientResolution,
    NonClosure,
    NotClosed,
    ToleranceFailure,
)
from .quadrature import arc_length

RTOL = 1e-12
ATOL = 1e-12


@dataclass(frozen=True)
class CurveSamples:
    """Samples of a traced profile curve (struct of arrays)."""

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    params: DropParams
    polar: np.ndarray | None = None

    @property
    def xi1(self) -> np.ndarray:
        return self.x * np.cos(self.theta) + self.y * np.sin(self.theta)

    @property
    def xi2(self) -> np.ndarray:
        return self.x * np.sin(self.theta) - self.y * np.cos(self.theta)

    @property
    def r(self) -> np.ndarray:
        return self.x**2 + self.y**2

    @property
    def kappa(self) -> np.ndarray:
        return self.params.lambda0 - 0.5 * self.params.a * self.r

    def __len__(self):
        return len(self.s)

    def rows(self):
        """Columns s, x, y, theta, xi1, xi2, kappa as one (n, 7) array."""
        return np.column_stack([self.s, self.x, self.y, self.theta, self.xi1, self.xi2, self.kappa])


def treadmill_sled(samples: CurveSamples):
    """TreadmillSled ``(x cos th + y sin th, x sin th - y cos th)`` pointwise."""
    return samples.xi1, samples.xi2


def _rhs(params: DropParams):
    lam, half_a = params.lambda0, 0.5 * params.a

    def f(s, u):
        x, y, th = u[0], u[1], u[2]
        r = x * x + y * y
        out = [math.cos(th), math.sin(th), -lam + half_a * r]
        if len(u) == 4:
            out.append((x * math.sin(th) - y * math.cos(th)) / r)
        return out

    return f


def _initial(start, track_polar: bool):
    xi1, xi2 = start
    u0 = [xi1, -xi2, 0.0]
    if track_polar:
        u0.append(math.atan2(-xi2, xi1))
    return u0


def _solve(params, u0, s_end, events=None, rtol=RTOL, atol=ATOL):
    sol = solve_ivp(
        _rhs(params), (0.0, s_end), u0, method="DOP853", rtol=rtol, atol=atol,
        dense_output=True, events=events,
    )
    if sol.status < 0:
        raise ToleranceFailure(sol.message)
    return sol


def _sample(sol, params, s_grid, track_polar) -> CurveSamples:
    u = sol.sol(s_grid)
    return CurveSamples(
        s_grid, u[0], u[1], u[2], params, u[3] if track_polar else None
    )


def integrate_profile(
    params: DropParams,
    start: tuple[float, float],
    max_arclength: float,
    n_samples: int = 2001,
    rtol: float = RTOL,
    atol: float = ATOL,
    level_tol: float = 1e-8,
    track_polar: bool = True,
) -> CurveSamples:
    """Trace ``x' = cos th, y' = sin th, th' = -lambda0 + a (x^2 + y^2) / 2``.

    The curve is seeded at ``(x, y, th) = (xi1, -xi2, 0)`` so that its
    TreadmillSled starts at ``start``.
    """
    g = float(eval_G(start[0], start[1], params))
    if abs(g - params.C) > level_tol * (1.0 + abs(params.C)):
        raise ValueError(f"start point has G = {g}, not on the level C = {params.C}")
    if track_polar and start[0] == 0.0 and start[1] == 0.0:
        track_polar = False
    sol = _solve(params, _initial(start, track_polar), max_arclength, rtol=rtol, atol=atol)
    return _sample(sol, params, np.linspace(0.0, max_arclength, n_samples), track_polar)


@dataclass(frozen=True)
class FundamentalPiece:
    samples: CurveSamples
    delta_theta_measured: float
    length: float
    r_min: float
    r_max: float
    band: Band
    ts_closure_error: float

    @property
    def params(self) -> DropParams:
        return self.samples.params


def fundamental_piece(
    params: DropParams,
    band: Band,
    n_samples: int = 1025,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> FundamentalPiece:
    """Trace one fundamental piece starting at the TreadmillSled point over r_lo.

    The piece ends where xi1 next crosses zero upwards, i.e. where the
    TreadmillSled is back at its start.  Samples are uniform in arc length,
    both endpoints included.
    """
    if band.width <= 0.0:
        raise Degenerate("zero-width band: the profile curve is a circle")
    if not band.simple:
        raise ExceptionalBand("band has a multiple endpoint: exceptional drop")
    estimate = arc_length(params, band)
    start = (0.0, float(xi2_of_r(band.r_lo, params)))
    track_polar = band.r_lo > 0.0

    def up(s, u):
        return u[0] * math.cos(u[2]) + u[1] * math.sin(u[2])

    up.direction = 1.0

    def down(s, u):
        return u[0] * math.cos(u[2]) + u[1] * math.sin(u[2])

    down.direction = -1.0

    s_end = None
    for factor in (1.1, 10.0):
        sol = _solve(params, _initial(start, track_polar), factor * estimate, events=[up, down], rtol=rtol, atol=atol)
        hits = [s for s in sol.t_events[0] if s > 1e-6 * estimate]
        if hits:
            s_end = float(hits[0])
            break
    if s_end is None:
        raise NonClosure("TreadmillSled did not return to its start within 10x the quadrature length")

    samples = _sample(sol, params, np.linspace(0.0, s_end, n_samples), track_polar)
    u_end = sol.sol(s_end)
    tops = [s for s in sol.t_events[1] if 0.0 < s < s_end]
    r_max = max(
        [float(np.sum(sol.sol(s)[:2] ** 2)) for s in tops] + [float(np.max(samples.r))]
    )
    xi_end = (
        u_end[0] * math.cos(u_end[2]) + u_end[1] * math.sin(u_end[2]),
        u_end[0] * math.sin(u_end[2]) - u_end[1] * math.cos(u_end[2]),
    )
    closure = math.hypot(xi_end[0] - start[0], xi_end[1] - start[1])
    if track_polar:
        dtheta = float(u_end[3] - samples.polar[0])
    else:
        # both ends at the origin: the rotation is the turning of the tangent
        dtheta = float(u_end[2])
    return FundamentalPiece(
        samples, dtheta, s_end, float(np.min(samples.r)), r_max, band, closure
    )


def _polar_change(samples: CurveSamples) -> float:
    phi = np.unwrap(np.arctan2(samples.y, samples.x))
    return float(phi[-1] - phi[0])


# ---------------------------------------------------------------------------
# symmetry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetryType:
    """Rotation behaviour of the assembled curve.

    For ``kind == "Rational"`` the angle advance is ``2 pi m / k`` with
    ``gcd(m, k) = 1`` and ``order = k`` pieces close the curve.
    """

    kind: str
    m: int = 0
    k: int = 0
    delta_theta: float = math.nan

    @property
    def order(self) -> int | None:
        return self.k if self.kind == "Rational" else None

    @property
    def pi_fraction(self) -> Fraction | None:
        """Angle advance as a multiple of pi (lowest terms)."""
        if self.kind != "Rational":
            return None
        return Fraction(2 * self.m, self.k)

    def to_json(self) -> dict:
        if self.kind == "Rational":
            return {"kind": "Rational", "num": self.m, "den": self.k, "of": "2pi", "order": self.k}
        return {"kind": self.kind}


def pieces_to_close(pi_fraction: Fraction) -> int:
    """Number of pieces when the advance is ``(m/k) pi``: k for even m, 2k for odd."""
    m, k = pi_fraction.numerator, pi_fraction.denominator
    return k if m % 2 == 0 else 2 * k


def symmetry_type(delta_theta: float, tol: float = 1e-9, max_denominator: int = 64) -> SymmetryType:
    """Rational or irrational rotation, by best rational approximation of
    ``delta_theta / 2 pi`` with denominator at most ``max_denominator``."""
    if not math.isfinite(delta_theta):
        return SymmetryType("Exceptional")
    x = delta_theta / (2.0 * math.pi)
    frac = Fraction(x).limit_denominator(max_denominator)
    if abs(x - float(frac)) <= tol:
        return SymmetryType("Rational", frac.numerator, frac.denominator, delta_theta)
    return SymmetryType("Irrational", delta_theta=delta_theta)


# ---------------------------------------------------------------------------
# assembled curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProfileCurve:
    """Profile curve built from rotated copies of a piece.

    For closed curves the samples are periodic: the last sample is not a
    repeat of the first and ``s`` runs over ``[0, length)``.
    """

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    params: DropParams
    closed: bool
    n_pieces: int
    length: float
    symmetry: SymmetryType | None = None
    piece_length: float | None = None

    @property
    def xi1(self):
        return self.x * np.cos(self.theta) + self.y * np.sin(self.theta)

    @property
    def xi2(self):
        return self.x * np.sin(self.theta) - self.y * np.cos(self.theta)

    @property
    def r(self):
        return self.x**2 + self.y**2

    @property
    def kappa(self):
        return self.params.lambda0 - 0.5 * self.params.a * self.r

    @property
    def ds(self) -> float:
        return self.length / len(self.s)

    def rows(self):
        return np.column_stack([self.s, self.x, self.y, self.theta, self.xi1, self.xi2, self.kappa])

    def signed_area(self) -> float:
        """Algebraic area, ``(1/2) int xi2 ds`` for closed curves (shoelace otherwise)."""
        if self.closed:
            return 0.5 * float(np.sum(self.xi2)) * self.ds
        x, y = self.x, self.y
        return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))

    def is_circle(self, tol: float = 1e-7) -> bool:
        r = np.sqrt(self.r)
        return float(np.ptp(r)) <= tol * max(1.0, float(np.max(r)))


def _rotate(x, y, angle):
    c, s = math.cos(angle), math.sin(angle)
    return c * x - s * y, s * x + c * y


def assemble_curve(
    piece: FundamentalPiece,
    symmetry: SymmetryType,
    copies: int | None = None,
    snap_tol: float = 1e-4,
) -> ProfileCurve:
    """Union of the piece rotated by ``n * delta_theta``, n = 0..order-1.

    Rational symmetries rotate by the exact angle ``2 pi m / k`` and check
    that consecutive copies meet within ``snap_tol`` (relative to the
    curve's extent).  Passing ``copies`` (required for irrational advances) requests an open
    partial assembly rotating by the measured angle.
    """
    sm = piece.samples
    if symmetry.kind == "Rational" and copies is None:
        n = symmetry.k
        angle = 2.0 * math.pi * symmetry.m / symmetry.k
        extent = math.sqrt(piece.r_max)
        gap = abs(angle - piece.delta_theta_measured) * extent
        joint = math.hypot(*(np.array(_rotate(sm.x[0], sm.y[0], piece.delta_theta_measured)) - [sm.x[-1], sm.y[-1]]))
        if gap + joint > snap_tol * extent:
            raise NotClosed(
                f"pieces do not meet: rotation mismatch {gap:.3e}, joint {joint:.3e}"
            )
        closed = True
    else:
        if copies is None:
            raise NotClosed(f"{symmetry.kind} rotation: the curve does not close; pass copies=N for a partial assembly")
        n = copies
        angle = piece.delta_theta_measured
        closed = False
    L = piece.length
    xs, ys, ts, ss = [], [], [], []
    body = slice(0, -1) if closed else slice(None)
    for j in range(n):
        x, y = _rotate(sm.x[body], sm.y[body], j * angle)
        xs.append(x)
        ys.append(y)
        ts.append(sm.theta[body] + j * angle)
        ss.append(sm.s[body] + j * L)
    if not closed:
        # drop duplicated joints
        keep = [np.ones(len(xs[0]), bool)] + [np.r_[False, np.ones(len(xs[0]) - 1, bool)] for _ in range(n - 1)]
        xs = [a[k] for a, k in zip(xs, keep)]
        ys = [a[k] for a, k in zip(ys, keep)]
        ts = [a[k] for a, k in zip(ts, keep)]
        ss = [a[k] for a, k in zip(ss, keep)]
    return ProfileCurve(
        np.concatenate(ss), np.concatenate(xs), np.concatenate(ys), np.concatenate(ts),
        sm.params, closed, n, n * L, symmetry, L,
    )


def circle_curve(params: DropParams, R: float, orientation: int, n_samples: int = 1024) -> ProfileCurve:
    """Closed circular equilibrium traced from its TreadmillSled point (0, -orientation R)."""
    start = (0.0, -orientation * R)
    L = 2.0 * math.pi * R
    sol = _solve(params, _initial(start, False), L)
    s = np.arange(n_samples) * (L / n_samples)
    u = sol.sol(s)
    sym = SymmetryType("Rational", -orientation, 1, -2.0 * math.pi * orientation)
    return ProfileCurve(s, u[0], u[1], u[2], params, True, 1, L, sym, L)


def curve_from_samples(samples: CurveSamples) -> ProfileCurve:
    """Closed curve from a sampled loop whose last sample repeats the first."""
    L = float(samples.s[-1] - samples.s[0])
    return ProfileCurve(
        samples.s[:-1] - samples.s[0], samples.x[:-1], samples.y[:-1], samples.theta[:-1],
        samples.params, True, 1, L,
    )


# ---------------------------------------------------------------------------
# exceptional drops
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExceptionalTrace:
    samples: CurveSamples
    limit_R: float
    R_end: float
    monotone: bool
    winding: float


def exceptional_trace(
    params: DropParams,
    band: Band,
    max_arclength: float = 500.0,
    n_samples: int = 4001,
    stop_tol: float = 1e-5,
) -> ExceptionalTrace:
    """Trace a drop whose band ends at a multiple root.

    The curve starts over the simple endpoint and spirals towards the circle
    of radius sqrt(double root).  The trace stops once R is within
    ``stop_tol`` (relative) of that circle: closer in, rounding error pushes
    the solution off the separatrix, so the trace also stops at the first
    turning point of R should one occur.
    """
    if band.mult_lo == 1 and band.mult_hi == 1:
        raise ValueError("band has simple endpoints; use fundamental_piece")
    if band.mult_lo == 1:
        r0, target = band.r_lo, band.r_hi
    else:
        r0, target = band.r_hi, band.r_lo
    start = (0.0, float(xi2_of_r(r0, params)))
    track_polar = r0 > 0.0
    R_target = math.sqrt(target)

    def near(s, u):
        return abs(math.hypot(u[0], u[1]) - R_target) - stop_tol * R_target

    near.terminal = True

    def turn(s, u):
        return u[0] * math.cos(u[2]) + u[1] * math.sin(u[2]) if s > 1e-9 else (1.0 if r0 < target else -1.0)

    turn.terminal = True
    sol = _solve(params, _initial(start, track_polar), max_arclength, events=[near, turn])
    s_stop = float(sol.t[-1])
    sm = _sample(sol, params, np.linspace(0.0, s_stop, n_samples), track_polar)
    R = np.sqrt(sm.r)
    d = np.diff(R)
    monotone = bool(np.all(d >= 0.0) or np.all(d <= 0.0))
    limit = _aitken_limit(R[len(R) // 4 :])
    winding = (
        float(sm.polar[-1] - sm.polar[0]) if track_polar else _polar_change(sm)
    ) / (2.0 * math.pi)
    return ExceptionalTrace(
        sm, limit if math.isfinite(limit) else float(R[-1]), float(R[-1]), monotone, winding
    )


def _aitken_limit(seq: np.ndarray) -> float:
    n = len(seq)
    x0, x1, x2 = seq[0], seq[n // 2], seq[-1]
    den = x2 - 2 * x1 + x0
    if abs(den) < 1e-300:
        return float(x2)
    return float(x2 - (x2 - x1) ** 2 / den)


# ---------------------------------------------------------------------------
# embeddedness
# ---------------------------------------------------------------------------


def _orient(ax, ay, bx, by, cx, cy):
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (v > 0) - (v < 0)


def _crossing_pairs(X: np.ndarray, Y: np.ndarray, closed: bool):
    """Candidate non-adjacent segment pairs via a uniform hash grid."""
    n = len(X)
    m = n if closed else n - 1
    i = np.arange(m)
    j = (i + 1) % n
    seg_len = np.hypot(X[j] - X[i], Y[j] - Y[i]).astype(float)
    h = max(float(seg_len.max()), 1.0)
    mx = np.floor((X[i] + X[j]) / (2.0 * h)).astype(np.int64)
    my = np.floor((Y[i] + Y[j]) / (2.0 * h)).astype(np.int64)
    cells = defaultdict(list)
    for k in range(m):
        cells[(int(mx[k]), int(my[k]))].append(k)
    pairs = []
    for (cx, cy), members in cells.items():
        near = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                near.extend(cells.get((cx + dx, cy + dy), ()))
        for a in members:
            for b in near:
                if b <= a:
                    continue
                if b - a == 1 or (closed and a == 0 and b == m - 1):
                    continue
                pairs.append((a, b))
    return pairs, i, j


def _intersections(X, Y, closed):
    """(crossed, ambiguous) on integer coordinates with exact predicates."""
    pairs, I, J = _crossing_pairs(X, Y, closed)
    crossed = ambiguous = False
    for a, b in pairs:
        p1, p2, p3, p4 = I[a], J[a], I[b], J[b]
        x1, y1, x2, y2 = int(X[p1]), int(Y[p1]), int(X[p2]), int(Y[p2])
        x3, y3, x4, y4 = int(X[p3]), int(Y[p3]), int(X[p4]), int(Y[p4])
        if max(x1, x2) < min(x3, x4) or max(x3, x4) < min(x1, x2):
            continue
        if max(y1, y2) < min(y3, y4) or max(y3, y4) < min(y1, y2):
            continue
        d1 = _orient(x3, y3, x4, y4, x1, y1)
        d2 = _orient(x3, y3, x4, y4, x2, y2)
        d3 = _orient(x1, y1, x2, y2, x3, y3)
        d4 = _orient(x1, y1, x2, y2, x4, y4)
        if d1 * d2 < 0 and d3 * d4 < 0:
            crossed = True
            break
        if 0 in (d1, d2, d3, d4) and d1 * d2 <= 0 and d3 * d4 <= 0:
            ambiguous = True
    return crossed, ambiguous


def is_embedded(
    curve: ProfileCurve, resolution: int = 2**24, max_resolution: int = 2**40, strict: bool = True
) -> bool:
    """True iff the closed polyline has no crossing between non-adjacent segments.

    Coordinates are rounded to a grid of ``extent / resolution``; contacts that
    are degenerate on that grid trigger refinement by factors of 16.  A contact
    that survives ``max_resolution`` raises :class:`InsufficientResolution`;
    with ``strict=False`` it is counted as a self-intersection instead.
    Samples that coincide exactly always count as one.
    """
    x, y = np.asarray(curve.x), np.asarray(curve.y)
    if len(np.unique(np.column_stack([x, y]), axis=0)) < len(x):
        return False  # the curve visits the same sample point twice
    extent = max(float(np.ptp(x)), float(np.ptp(y)), 1e-300)
    res = resolution
    while res <= max_resolution:
        g = extent / res
        X = np.rint((x - x.min()) / g).astype(np.int64)
        Y = np.rint((y - y.min()) / g).astype(np.int64)
        crossed, ambiguous = _intersections(X, Y, curve.closed)
        if crossed:
            return False
        if not ambiguous:
            return True
        res *= 16
    if strict:
        raise InsufficientResolution("segment contacts remain degenerate at the finest grid")
    return False


@dataclass(frozen=True)
class Trace:
    piece: FundamentalPiece
    symmetry: SymmetryType
    curve: ProfileCurve


def trace_band(
    params: DropParams,
    band_index: int = 0,
    n_samples: int = 1025,
    tol: float = 1e-6,
    max_denominator: int = 64,
    pieces: int | None = None,
) -> Trace:
    """Trace the fundamental piece over a band and assemble its rotation orbit.

    Closed curves are assembled for rational advances; otherwise ``pieces``
    copies are laid end to end (default 1).
    """
    label = classify(params)
    if not label.bands:
        if label.circles:
            raise Degenerate(f"level {params.C} is a circle")
        raise ExceptionalBand(f"no positivity band at {params}")
    band = label.bands[band_index]
    piece = fundamental_piece(label.params, band, n_samples=n_samples)
    sym = symmetry_type(piece.delta_theta_measured, tol=tol, max_denominator=max_denominator)
    if sym.kind == "Rational" and pieces is None:
        curve = assemble_curve(piece, sym)
    else:
        curve = assemble_curve(piece, sym, copies=pieces or 1)
    return Trace(piece, sym, curve)


def rotation_returns(delta_theta: float, max_pieces: int = 200, tol: float = 1e-3) -> int | None:
    """Smallest n <= max_pieces with ``n * delta_theta`` within tol of a multiple of 2 pi."""
    for n in range(1, max_pieces + 1):
        x = n * delta_theta / (2.0 * math.pi)
        if abs(x - round(x)) * 2.0 * math.pi <= tol:
            return n
    return None


def annulus_occupancy(curve: ProfileCurve, r_min: float, r_max: float, n_r: int = 10, n_phi: int = 72) -> float:
    """Fraction of polar cells of the annulus ``r_min <= R <= r_max`` visited by the samples."""
    R = np.hypot(curve.x, curve.y)
    phi = np.mod(np.arctan2(curve.y, curve.x), 2.0 * math.pi)
    i = np.clip(((R - r_min) / (r_max - r_min) * n_r).astype(int), 0, n_r - 1)
    j = np.clip((phi / (2.0 * math.pi) * n_phi).astype(int), 0, n_phi - 1)
    hit = np.zeros((n_r, n_phi), bool)
    hit[i, j] = True
    return float(hit.mean())
