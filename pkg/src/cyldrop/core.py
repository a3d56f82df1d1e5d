"""Algebraic layer: the level function G, the quartic q, its real roots and
the classification of (a, lambda0, C) into moduli-space regions.

Cylindrical drops satisfy ``2H = lambda0 - a R^2 / 2``.  The TreadmillSled
(xi1, xi2) of an equilibrium profile curve lies on a level set ``G = C``; in
the variable ``r = xi1^2 + xi2^2`` that level set is governed by the quartic
``q(r)``, whose positivity bands are the squared-radius ranges swept by the
curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.optimize import brentq

from .errors import BranchUndefined, IllConditioned

#: Case I (lambda0 = 0, a = -1) threshold level and its double root.
C0_CASE_I = -3.0 * 2.0 ** (-2.0 / 3.0)
R0_CASE_I = 2.0 ** (2.0 / 3.0)

#: a at which the two positive roots of aR^3 - 2R + 2 merge at R = 3/2.
A_CUSP = 8.0 / 27.0

SNAP_TOL = 1e-10
DEFAULT_TOL_MULT = 1e-10


@dataclass(frozen=True)
class DropParams:
    """One level-set problem: rotation coefficient, multiplier, level."""

    a: float
    lambda0: float
    C: float

    def __post_init__(self):
        for name in ("a", "lambda0", "C"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")

    @property
    def canonical(self) -> bool:
        return self.lambda0 == 1.0 or (self.lambda0 == 0.0 and self.a == -1.0)

    def require_canonical(self) -> None:
        if not self.canonical:
            raise ValueError(
                "parameters must be in canonical gauge "
                "(lambda0 = 1, or lambda0 = 0 with a = -1); "
                f"got a={self.a}, lambda0={self.lambda0}"
            )

    def with_level(self, C: float) -> "DropParams":
        return DropParams(self.a, self.lambda0, C)


def eval_G(xi1, xi2, params: DropParams):
    """Level function ``2 xi2 + lambda0 r - (a/4) r^2`` with ``r = xi1^2 + xi2^2``."""
    r = np.square(xi1) + np.square(xi2)
    return 2.0 * xi2 + params.lambda0 * r - 0.25 * params.a * r * r


@dataclass(frozen=True)
class QuarticQ:
    """``q(r) = 64 (r - xi2(r)^2)`` with coefficients c0..c4 (ascending)."""

    coeffs: tuple
    params: DropParams

    def __call__(self, r):
        return np.polynomial.polynomial.polyval(r, self.coeffs)

    def derivative(self, r, k: int = 1):
        return np.polynomial.polynomial.polyval(
            r, np.polynomial.polynomial.polyder(self.coeffs, k)
        )

    @property
    def degree(self) -> int:
        return len(_trim(self.coeffs)) - 1


def build_q(params: DropParams) -> QuarticQ:
    a, lam, C = params.a, params.lambda0, params.C
    coeffs = (
        -16.0 * C * C,
        64.0 + 32.0 * C * lam,
        -16.0 * lam * lam - 8.0 * a * C,
        8.0 * a * lam,
        -a * a,
    )
    return QuarticQ(coeffs, params)


def xi2_of_r(r, params: DropParams):
    """Second TreadmillSled coordinate on the level set ``G = C`` at ``r``."""
    return (4.0 * params.C + r * (params.a * r - 4.0 * params.lambda0)) / 8.0


# ---------------------------------------------------------------------------
# real roots with multiplicity
# ---------------------------------------------------------------------------


def _trim(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    nz = np.nonzero(c)[0]
    if len(nz) == 0:
        return np.zeros(1)
    return c[: nz[-1] + 1]


def _abs_scale(coeffs, r: float) -> float:
    """Sum of absolute term magnitudes; the floating-point scale of p(r)."""
    c = np.abs(np.asarray(coeffs, dtype=float))
    return float(np.polynomial.polynomial.polyval(abs(r), c)) + 1e-300


def real_roots(coeffs, tol_mult: float = DEFAULT_TOL_MULT) -> list[tuple[float, int]]:
    """Real roots of a polynomial (ascending coefficients) with multiplicities.

    Works recursively through the derivatives: the critical points split the
    line into monotone intervals, each holding at most one simple root
    (bracketed and solved by Brent's method).  A critical point at which
    ``|p|`` is below ``tol_mult`` times the term scale is a multiple root, of
    multiplicity one more than it has as a root of ``p'``.
    """
    c = _trim(coeffs)
    deg = len(c) - 1
    if deg <= 0:
        return []
    if deg == 1:
        return [(-c[0] / c[1], 1)]

    def p(x):
        return float(np.polynomial.polynomial.polyval(x, c))

    crit = real_roots(np.polynomial.polynomial.polyder(c), tol_mult)
    roots: list[tuple[float, int]] = []
    zero_at: list[bool] = []
    for x, m in crit:
        is_root = abs(p(x)) <= tol_mult * _abs_scale(c, x)
        zero_at.append(is_root)
        if is_root:
            roots.append((x, m + 1))

    bound = 1.0 + float(np.max(np.abs(c[:-1] / c[-1])))
    nodes = [-bound] + [x for x, _ in crit] + [bound]
    is_zero = [False] + zero_at + [False]
    for lo, hi, z_lo, z_hi in zip(nodes[:-1], nodes[1:], is_zero[:-1], is_zero[1:]):
        if z_lo or z_hi or hi <= lo:
            continue
        f_lo, f_hi = p(lo), p(hi)
        if f_lo == 0.0 or f_hi == 0.0 or (f_lo > 0) == (f_hi > 0):
            continue
        if lo < 0.0 < hi:
            # tiny roots next to 0 need relative, not absolute, resolution
            f0 = p(0.0)
            if f0 == 0.0:
                roots.append((0.0, 1))
                continue
            if (f0 > 0) == (f_lo > 0):
                lo = 0.0
            else:
                hi = 0.0
        try:
            x = brentq(p, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=4000)
        except (RuntimeError, ValueError) as exc:
            raise IllConditioned(f"root bracketing failed on [{lo}, {hi}]") from exc
        roots.append((x, 1))
    roots.sort()
    return roots


@dataclass(frozen=True)
class RootList:
    """Non-negative real roots of q, increasing, with multiplicities."""

    roots: tuple

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]

    @property
    def values(self) -> list[float]:
        return [r for r, _ in self.roots]


def positive_roots(
    q: QuarticQ, tol_root: float = 1e-8, tol_mult: float = DEFAULT_TOL_MULT
) -> RootList:
    """Roots of ``q`` with ``r >= 0``.

    ``q(0) = -16 C^2``, so ``r = 0`` is a root only when ``C = 0``; it is kept
    because the band it bounds is a genuine component of the level set.
    Roots closer than ``tol_root`` (relative) are merged, multiplicities added.
    """
    found = real_roots(q.coeffs, tol_mult)
    out: list[list] = []
    for r, m in found:
        if r < -tol_root:
            continue
        r = max(r, 0.0)
        if out and abs(r - out[-1][0]) <= tol_root * max(1.0, abs(r)):
            out[-1][1] += m
            continue
        out.append([r, m])
    return RootList(tuple((float(r), int(m)) for r, m in out))


# ---------------------------------------------------------------------------
# circles and critical levels
# ---------------------------------------------------------------------------


def circle_radii(params: DropParams, tol_mult: float = DEFAULT_TOL_MULT) -> list[tuple[float, int, int]]:
    """Radii of circular profile curves centred at the origin.

    Returns ``(R, orientation, multiplicity)`` where ``orientation`` is the
    sign of the root of ``a R^3 - 2 lambda0 R + 2``.  Orientation +1 means
    ``1/R = lambda0 - a R^2/2``, orientation -1 means ``-1/R = ...``.
    """
    params.require_canonical()
    coeffs = (2.0, -2.0 * params.lambda0, 0.0, params.a)
    out = []
    for R, m in real_roots(coeffs, tol_mult):
        if R == 0.0:
            continue
        out.append((abs(R), 1 if R > 0 else -1, m))
    out.sort()
    return out


def h_of_R(R):
    """``h(R) = 2 (R - 1) / R^3``; circle radii solve ``h(R) = a``."""
    return 2.0 * (R - 1.0) / R**3


def _invert_h(a: float, lo: float, hi: float) -> float:
    f = lambda R: h_of_R(R) - a  # noqa: E731
    return brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)


def level_at(r: float, a: float) -> float:
    """Level C at which ``r`` is a double root of q (lambda0 = 1)."""
    return (16.0 - 8.0 * r + 6.0 * a * r * r - a * a * r**3) / (4.0 * (-2.0 + a * r))


@dataclass(frozen=True)
class CriticalLevel:
    index: int
    R: float
    r: float
    C: float


@dataclass(frozen=True)
class CriticalLevels:
    """Critical levels ``C_i(a)`` of the lambda0 = 1 family, where defined."""

    a: float
    entries: tuple = field(default_factory=tuple)

    def get(self, i: int) -> CriticalLevel:
        for e in self.entries:
            if e.index == i:
                return e
        raise BranchUndefined(f"C_{i} is not defined for a={self.a}")

    def has(self, i: int) -> bool:
        return any(e.index == i for e in self.entries)

    def C(self, i: int) -> float:
        return self.get(i).C


def _branch_R(a: float, i: int) -> float:
    if a == 0.0:
        raise BranchUndefined("critical levels need a != 0")
    if i == 1:
        if a < 0:
            # h increases from -inf to 0 on (0, 1)
            return _invert_h(a, _lower_positive(a), 1.0)
        # h increases from 0+ to +inf on (-inf, 0)
        lo = -1.0
        while h_of_R(lo) > a:
            lo *= 2.0
        hi = -1e-3
        while h_of_R(hi) < a:
            hi /= 2.0
        return _invert_h(a, lo, hi)
    if not 0.0 < a <= A_CUSP * (1.0 + 1e-15):
        raise BranchUndefined(f"C_{i} is defined only for 0 < a <= 8/27, got a={a}")
    if a >= A_CUSP * (1.0 - 1e-14):
        return 1.5
    if i == 2:
        return _invert_h(a, 1.0, 1.5)
    if i == 3:
        hi = 3.0
        while h_of_R(hi) > a:
            hi *= 2.0
        return _invert_h(a, 1.5, hi)
    raise BranchUndefined(f"no branch {i}")


def _lower_positive(a: float) -> float:
    lo = 0.5
    while h_of_R(lo) > a:
        lo /= 2.0
    return lo


def critical_level(a: float, i: int) -> CriticalLevel:
    R = _branch_R(a, i)
    r = R * R
    return CriticalLevel(i, R, r, level_at(r, a))


def critical_levels(a: float) -> CriticalLevels:
    """All branches ``(i, R_i, r_i, C_i)`` defined at ``a``."""
    if a == 0.0:
        raise BranchUndefined("critical levels need a != 0")
    entries = [critical_level(a, 1)]
    if 0.0 < a <= A_CUSP * (1.0 + 1e-15):
        entries += [critical_level(a, 2), critical_level(a, 3)]
    return CriticalLevels(a, tuple(entries))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Band:
    """Consecutive roots of q with q > 0 strictly between them."""

    r_lo: float
    r_hi: float
    mult_lo: int = 1
    mult_hi: int = 1

    @property
    def width(self) -> float:
        return self.r_hi - self.r_lo

    @property
    def simple(self) -> bool:
        return self.mult_lo == 1 and self.mult_hi == 1


@dataclass(frozen=True)
class ClassLabel:
    case: str
    region: str
    bands: tuple
    circles: tuple
    roots: RootList
    params: DropParams
    notes: tuple = ()

    @property
    def root_count(self) -> int:
        return len(self.roots)


def bands_of(q: QuarticQ, roots: RootList) -> tuple:
    out = []
    for (lo, m_lo), (hi, m_hi) in zip(roots.roots[:-1], roots.roots[1:]):
        if q(0.5 * (lo + hi)) > 0:
            out.append(Band(lo, hi, m_lo, m_hi))
    return tuple(out)


def _snap(C: float, targets: list[float]) -> float:
    for t in targets:
        if abs(C - t) < SNAP_TOL:
            return t
    return C


def _case_one(params: DropParams) -> tuple[str, str, DropParams]:
    C = _snap(params.C, [C0_CASE_I])
    p = params.with_level(C)
    if C < C0_CASE_I:
        return "Empty", "none", p
    if C == C0_CASE_I:
        return "CaseI-Circle", "caseI-semiline", p
    return "CaseI-Band", "caseI-semiline", p


def _case_two(params: DropParams) -> tuple[str, str, DropParams]:
    a = params.a
    crit = critical_levels(a)
    targets = [e.C for e in crit.entries]
    C = _snap(params.C, targets)
    p = params.with_level(C)
    C1 = crit.C(1)
    if a < 0:
        if C < C1:
            return "Empty", "none", p
        if C == C1:
            return "CircleOnly", "β1", p
        return "SingleBand", "Ω1", p
    if C > C1:
        return "Empty", "none", p
    if C == C1:
        return "CircleOnly", "β1", p
    C2, C3 = crit.C(2), crit.C(3)
    if C2 == C3:
        if C == C2:
            return "ExceptionalCusp", "special-point", p
        return "SingleBand", "Ω3", p
    if C > C3:
        return "SingleBand", "Ω3", p
    if C == C3:
        return "Exceptional", "β3", p
    if C > C2:
        return "TwoBands", "Ω2", p
    if C == C2:
        return "CircleAndBand", "β2", p
    return "SingleBand", "Ω3", p


def classify(params: DropParams, tol_mult: float = DEFAULT_TOL_MULT) -> ClassLabel:
    """Moduli-space case and region of a canonical parameter triple.

    Levels within ``SNAP_TOL`` of a critical level are snapped onto it so
    that double roots are not reported as two nearby simple roots.
    """
    params.require_canonical()
    notes = []
    if params.lambda0 == 0.0:
        case, region, p = _case_one(params)
    elif params.a == 0.0:
        case, region, p = "Unclassified", "none", params
        notes.append("a = 0 is the constant mean curvature family; not classified")
    else:
        case, region, p = _case_two(params)
    if p.C != params.C:
        notes.append(f"level snapped from {params.C!r} to critical value {p.C!r}")
    q = build_q(p)
    roots = positive_roots(q, tol_mult=tol_mult)
    bands = bands_of(q, roots)
    circles = tuple(math.sqrt(r) for r, m in roots if m >= 2)
    if case == "Unclassified":
        case = {0: "Empty", 1: "SingleBand", 2: "TwoBands"}.get(len(bands), "Unclassified")
    return ClassLabel(case, region, bands, circles, roots, p, tuple(notes))


def multiplicity_scale(coeffs, r: float, k: int) -> float:
    """Term scale of the k-th derivative at r (for tolerance checks)."""
    c = np.asarray(coeffs, dtype=float)
    d = np.array([abs(c[j]) * factorial(j) / factorial(j - k) for j in range(k, len(c))])
    return float(np.polynomial.polynomial.polyval(abs(r), d)) + 1e-300
