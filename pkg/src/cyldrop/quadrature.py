"""Singular integrals over a positivity band of q.

Both the polar-angle advance of a fundamental piece and its length are
integrals of the form ``int f(r) / sqrt(q(r)) dr`` between two simple roots
of q.  With ``r = r_lo + w sin^2 t`` the square-root singularities cancel
against ``dr``: ``dr / sqrt(q) = 2 dt / sqrt(p(r))`` where ``p`` is q divided
by ``(r - r_lo)(r_hi - r)``, obtained by exact polynomial deflation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .core import (
    C0_CASE_I,
    Band,
    DropParams,
    build_q,
    classify,
    critical_level,
    xi2_of_r,
)
from .errors import BranchUndefined, Degenerate, Divergent, IntegrandPole, OutsideBand, WrongRegion

QUAD_TOL = 1e-10


@dataclass(frozen=True)
class AngleResult:
    delta_theta: float
    est_error: float
    convergent: bool = True


def rho(r, params: DropParams, tol: float = 1e-9):
    """Right half (xi1 >= 0) of the level set ``G = C`` parametrised by r."""
    q = build_q(params)
    r = np.asarray(r, dtype=float)
    qv = q(r)
    scale = 64.0 * np.maximum(1.0, np.abs(r)) ** 4 * max(1.0, abs(params.a)) ** 2
    if np.any(qv < -tol * scale):
        raise OutsideBand(f"q(r) < 0 at r={r}")
    xi1 = np.sqrt(np.maximum(qv, 0.0)) / 8.0
    xi2 = xi2_of_r(r, params)
    if xi1.ndim == 0:
        return float(xi1), float(xi2)
    return xi1, xi2


@lru_cache(maxsize=64)
def _nodes(n: int):
    return np.polynomial.legendre.leggauss(n)


def _gauss(f, lo: float, hi: float, n: int) -> float:
    x, w = _nodes(n)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return half * float(np.dot(w, f(mid + half * x)))


def adaptive_gauss(f, lo: float, hi: float, tol: float = QUAD_TOL, n: int = 24, max_panels: int = 4000):
    """Composite Gauss-Legendre with panel bisection.

    Each panel's error is estimated by comparing ``n`` and ``2n`` nodes;
    panels failing their share of ``tol`` are split.  Returns
    ``(value, error_estimate)``.
    """
    total, err = 0.0, 0.0
    stack = [(lo, hi)]
    panels = 0
    while stack:
        a, b = stack.pop()
        coarse = _gauss(f, a, b, n)
        fine = _gauss(f, a, b, 2 * n)
        e = abs(fine - coarse)
        panels += 1
        share = tol * (b - a) / (hi - lo)
        if e <= max(share, 1e-15 * abs(fine)) or panels >= max_panels:
            total += fine
            err += e
        else:
            m = 0.5 * (a + b)
            stack.append((m, b))
            stack.append((a, m))
    return total, err


def _deflated(params: DropParams, band: Band):
    """Polynomial p with q = (r - r_lo)(r_hi - r) p, ascending coefficients."""
    q = build_q(params)
    c = np.asarray(q.coeffs, dtype=float)
    # divide by (r - lo) then by (r - hi) with synthetic division (descending)
    desc = c[::-1]
    for root in (band.r_lo, band.r_hi):
        out = [desc[0]]
        for coef in desc[1:-1]:
            out.append(coef + root * out[-1])
        desc = np.array(out)
    # q = (r-lo)(r-hi) s  =>  p = -s
    return -desc[::-1]


def _check_band(band: Band) -> None:
    if band.width <= 0.0:
        raise Degenerate("zero-width band: the level set is a point (circle)")
    if not band.simple:
        raise Divergent(
            f"band endpoint with multiplicity {max(band.mult_lo, band.mult_hi)}: "
            "exceptional drop, integral diverges"
        )


def _substituted(params: DropParams, band: Band):
    p = _deflated(params, band)
    lo, w = band.r_lo, band.width

    def r_of(t):
        return lo + w * np.sin(t) ** 2

    def inv_sqrt_p(r):
        pv = np.polynomial.polynomial.polyval(r, p)
        return 1.0 / np.sqrt(np.maximum(pv, 1e-300))

    return r_of, inv_sqrt_p


def delta_theta(params: DropParams, band: Band, tol: float = QUAD_TOL, allow_divergent: bool = False) -> AngleResult:
    """Polar-angle advance over one fundamental piece.

    ``int_{r_lo}^{r_hi} (4C + a r^2 - 4 lambda0 r) / (r sqrt(q)) dr``, signed.
    """
    try:
        _check_band(band)
    except Divergent:
        if allow_divergent:
            return AngleResult(math.nan, math.inf, False)
        raise
    C, a, lam = params.C, params.a, params.lambda0
    if band.r_lo == 0.0 and C != 0.0:
        raise IntegrandPole("band starts at r = 0 with C != 0")
    r_of, inv_sqrt_p = _substituted(params, band)

    def integrand(t):
        r = r_of(t)
        f = a * r - 4.0 * lam
        if C != 0.0:
            f = f + 4.0 * C / r
        return 2.0 * f * inv_sqrt_p(r)

    value, err = adaptive_gauss(integrand, 0.0, 0.5 * math.pi, tol)
    if C == 0.0 and band.r_lo == 0.0:
        # the piece passes through the origin; report the limit from C < 0,
        # which is the turning of the tangent (the integral itself sits
        # halfway between the one-sided limits)
        value -= math.pi
    return AngleResult(value, err, True)


def arc_length(params: DropParams, band: Band, tol: float = QUAD_TOL) -> float:
    """Length of one fundamental piece, ``int 8 / sqrt(q) dr`` over the band."""
    _check_band(band)
    r_of, inv_sqrt_p = _substituted(params, band)
    value, _ = adaptive_gauss(lambda t: 16.0 * inv_sqrt_p(r_of(t)), 0.0, 0.5 * math.pi, tol)
    return value


def half_angle_profile(params: DropParams, band: Band, r):
    """Partial polar-angle advance from r_lo to r along the xi1 >= 0 half.

    This is the integral of ``(4C + a r^2 - 4 lambda0 r) / (2 r sqrt(q))``.
    """
    _check_band(band)
    r_of, inv_sqrt_p = _substituted(params, band)
    C, a, lam = params.C, params.a, params.lambda0

    def integrand(t):
        rr = r_of(t)
        f = a * rr - 4.0 * lam + (4.0 * C / rr if C != 0.0 else 0.0)
        return f * inv_sqrt_p(rr)

    out = []
    for rv in np.atleast_1d(r):
        s = min(max((rv - band.r_lo) / band.width, 0.0), 1.0)
        t_end = math.asin(math.sqrt(s))
        out.append(adaptive_gauss(integrand, 0.0, t_end, QUAD_TOL)[0] if t_end > 0 else 0.0)
    return np.array(out)


@dataclass(frozen=True)
class PairCheck:
    lhs: float
    rhs: float
    shift: float
    discrepancy: float


def delta_theta_band_pair_check(params: DropParams, band1: Band | None = None, band2: Band | None = None) -> PairCheck:
    """Compare the two bands of a four-root level.

    For ``C <= 0`` the outer band turns by exactly 2 pi more than the inner
    one, above zero they agree.  (At ``C == 0`` the inner angle is its limit
    from below, see ``delta_theta``.)
    """
    label = classify(params)
    if label.region != "Ω2":
        raise WrongRegion(f"two-band identity needs region Ω2, got {label.region}")
    if band1 is None or band2 is None:
        band1, band2 = label.bands
    lhs = delta_theta(params, band2).delta_theta
    rhs = delta_theta(params, band1).delta_theta
    C = params.C
    shift = 2.0 * math.pi if C <= 0 else 0.0
    return PairCheck(lhs, rhs, shift, abs(lhs - rhs - shift))


def limit_delta_theta(a: float, branch: int = 1, lambda0: float = 1.0) -> float:
    """Limit of the angle advance as the band collapses onto a double root.

    Case I gives ``-2 pi / sqrt(3)``; for lambda0 = 1 the limit at branch i is
    ``pi (4 C_i + r_i (a r_i - 4)) / (r_i sqrt(16 + 8 a (C_i - 3 r_i) + 6 a^2 r_i^2))``.
    """
    if lambda0 == 0.0:
        if a != -1.0:
            raise ValueError("lambda0 = 0 is only defined in the a = -1 gauge")
        return -2.0 * math.pi / math.sqrt(3.0)
    if branch not in (1, 2):
        raise ValueError("branch must be 1 or 2")
    if branch == 2 and not a > 0:
        raise BranchUndefined("branch 2 limit needs 0 < a < 8/27")
    crit = critical_level(a, branch)
    r, C = crit.r, crit.C
    A = 16.0 + 8.0 * a * (C - 3.0 * r) + 6.0 * a * a * r * r
    return math.pi * (4.0 * C + r * (a * r - 4.0)) / (r * math.sqrt(A))


def limit_side(a: float, branch: int, lambda0: float = 1.0) -> int:
    """+1 if the limit is approached from above the critical level, else -1."""
    if lambda0 == 0.0:
        return 1
    if branch == 1:
        return 1 if a < 0 else -1
    return 1


def critical_level_value(a: float, branch: int, lambda0: float = 1.0) -> float:
    if lambda0 == 0.0:
        return C0_CASE_I
    return critical_level(a, branch).C


def band_for_branch(params: DropParams, branch: int) -> Band:
    """Band that collapses onto the branch's double root (always the first)."""
    label = classify(params)
    if not label.bands:
        raise OutsideBand(f"no band at {params}")
    return label.bands[0]


def solve_level_for_angle(a: float, target: float, C_lo: float, C_hi: float, lambda0: float = 1.0, band_index: int = 0, tol: float = 1e-13) -> float:
    """Level C in [C_lo, C_hi] at which the band's angle advance equals target."""

    def f(C):
        label = classify(DropParams(a, lambda0, C))
        return delta_theta(label.params, label.bands[band_index]).delta_theta - target

    return brentq(f, C_lo, C_hi, xtol=tol, rtol=1e-15)
