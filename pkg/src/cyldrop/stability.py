"""Stability of cylinders alpha x [-h/2, h/2] for the free and fixed
boundary problems.

Separating ``psi = u(s) f(z)`` in the second variation leaves the periodic
Hill operator ``-u'' - (kappa^2 + a xi2) u`` on the closed profile curve;
most verdicts here are read off its spectrum or from test functions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import brentq
from scipy.signal import resample
from scipy.sparse.linalg import eigsh

from .core import DropParams, circle_radii
from .errors import CircularInput, MeanValueViolation, NonEquilibriumRadius, NotConverged
from .profile import ProfileCurve, is_embedded

ZERO_TOL = 1e-6


# ---------------------------------------------------------------------------
# Hill spectrum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HillProblem:
    """``-u'' - V u = mu u`` on a circle of circumference ``period``.

    ``potential`` holds V on the fine grid (2N uniform periodic samples); the
    solver also uses every other sample as the coarse grid N.
    """

    period: float
    potential: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.potential, dtype=float)
        if len(v) % 2 == 1 and abs(v[0] - v[-1]) <= 1e-9 * (1.0 + abs(v[0])):
            v = v[:-1]
        if len(v) % 2 or len(v) // 2 < 64:
            raise ValueError("potential needs an even number >= 128 of periodic samples")
        object.__setattr__(self, "potential", v)

    @property
    def n(self) -> int:
        return len(self.potential) // 2

    @classmethod
    def from_curve(cls, curve: ProfileCurve, n: int | None = None) -> "HillProblem":
        """Potential ``kappa^2 + a xi2`` of a closed curve, resampled to 2n points.

        The default ``n`` is 512 per fundamental piece.
        """
        if not curve.closed:
            raise ValueError("Hill problem needs a closed curve")
        if n is None:
            n = 512 * max(1, curve.n_pieces)
        V = curve.kappa**2 + curve.params.a * curve.xi2
        return cls(curve.length, resample(V, 2 * n))


@dataclass(frozen=True)
class HillSpectrum:
    values: np.ndarray
    error: np.ndarray
    vectors: np.ndarray
    grid: np.ndarray

    def negative_count(self, zero_tol: float = ZERO_TOL) -> int:
        return int(np.sum(self.values < -zero_tol))


def _hill_matrix(V: np.ndarray, period: float):
    n = len(V)
    h = period / n
    main = 2.0 / h**2 - V
    off = -np.ones(n - 1) / h**2
    A = sparse.diags([off, main, off], [-1, 0, 1], format="lil")
    A[0, n - 1] = -1.0 / h**2
    A[n - 1, 0] = -1.0 / h**2
    return A.tocsc()


def _lowest(V: np.ndarray, period: float, k: int):
    A = _hill_matrix(V, period)
    sigma = -float(np.max(V)) - 1.0
    k = min(k, len(V) - 2)
    vals, vecs = eigsh(A, k=k, sigma=sigma, which="LM", v0=np.ones(len(V)))
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def hill_eigenvalues(problem: HillProblem, n_modes: int = 8, tol: float = 1e-5) -> HillSpectrum:
    """Lowest ``n_modes`` periodic eigenvalues, second-order differences on
    N and 2N points combined by Richardson extrapolation."""
    fine_V = problem.potential
    coarse_V = fine_V[::2]
    mu_c, _ = _lowest(coarse_V, problem.period, n_modes)
    mu_f, vec = _lowest(fine_V, problem.period, n_modes)
    mu = (4.0 * mu_f - mu_c) / 3.0
    err = np.abs(mu - mu_f)
    if np.any(err > tol * (1.0 + np.abs(mu)) * 1e3):
        raise NotConverged(f"Richardson disagreement {err.max():.3e}")
    grid = np.arange(len(fine_V)) * (problem.period / len(fine_V))
    return HillSpectrum(mu, err, vec, grid)


def sign_changes(values: np.ndarray, cyclic: bool = True) -> int:
    v = np.asarray(values, dtype=float)
    v = v[v != 0.0]
    if len(v) < 2:
        return 0
    s = np.sign(v)
    n = int(np.sum(s[1:] != s[:-1]))
    if cyclic and s[0] != s[-1]:
        n += 1
    return n


def zero_mode_similarity(spectrum: HillSpectrum, curve: ProfileCurve, zero_tol: float = 1e-4) -> float:
    """Cosine similarity between xi1 and the eigenspace of eigenvalues near 0."""
    xi1 = resample(curve.xi1, len(spectrum.grid))
    near = np.abs(spectrum.values) <= zero_tol
    if not np.any(near):
        return 0.0
    basis = spectrum.vectors[:, near]
    q, _ = np.linalg.qr(basis)
    proj = q @ (q.T @ xi1)
    return float(np.linalg.norm(proj) / np.linalg.norm(xi1))


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    """Outcome of one rule; ``h_range`` is the set of heights it covers."""

    rule: str
    outcome: str
    h_range: tuple = (0.0, math.inf)
    detail: str = ""

    def to_json(self) -> dict:
        return {"rule": self.rule, "outcome": self.outcome, "h_range": list(self.h_range), "detail": self.detail}


@dataclass(frozen=True)
class StabilityReport:
    problem: str
    mu: tuple = ()
    J: int = 0
    morse_index_lower_bound: int = 0
    verdicts: tuple = ()
    h_max_bounds: dict = field(default_factory=dict)
    notes: tuple = ()
    h: float | None = None

    @property
    def overall(self) -> str:
        """Unstable if any rule says so at this h, Stable if a sufficient rule
        holds, otherwise Inconclusive."""
        outcomes = [v.outcome for v in self.verdicts if _covers(v, self.h)]
        if "Unstable" in outcomes:
            return "Unstable"
        if "Stable" in outcomes:
            return "Stable"
        return "Inconclusive"

    def verdict(self, rule: str) -> Verdict:
        for v in self.verdicts:
            if v.rule == rule:
                return v
        raise KeyError(rule)


def _covers(v: Verdict, h) -> bool:
    if h is None:
        return v.h_range == (0.0, math.inf)
    lo, hi = v.h_range
    return lo < h <= hi or (lo == 0.0 and h <= hi)


# ---------------------------------------------------------------------------
# round cylinders
# ---------------------------------------------------------------------------


def _orientation(a: float, lambda0: float, R: float, tol: float = 1e-6):
    for radius, orient, _ in circle_radii(DropParams(a, lambda0, 0.0)):
        if abs(radius - R) <= tol * max(1.0, R):
            return orient
    return None


def critical_radii(a: float, h: float) -> list[float]:
    """Radii R0 > 0 with ``pi^2 / h^2 = a R0 + 1 / R0^2``."""
    target = math.pi**2 / h**2
    f = lambda R: a * R + 1.0 / R**2 - target  # noqa: E731
    out = []
    if a < 0:
        lo, hi = 1e-6, 1.0
        while f(hi) > 0:
            hi *= 2.0
        while f(lo) < 0:
            lo /= 2.0
        out.append(brentq(f, lo, hi, xtol=1e-15))
    else:
        Rm = (2.0 / a) ** (1.0 / 3.0)
        if f(Rm) < 0:
            lo = Rm / 2.0
            while f(lo) < 0:
                lo /= 2.0
            hi = Rm * 2.0
            while f(hi) < 0:
                hi *= 2.0
            out += [brentq(f, lo, Rm, xtol=1e-15), brentq(f, Rm, hi, xtol=1e-15)]
        elif f(Rm) == 0:
            out.append(Rm)
    return out


def _oriented_free(a: float, R: float, orient: int) -> list[Verdict]:
    V = 1.0 / R**2 - orient * a * R
    tilt = 1.0 / R**2 - V
    if tilt < 0:
        return [Verdict("ROUND_FREE_ORIENTED", "Unstable", detail=f"nu_1 mode: 1/R^2 - V = {tilt!r} < 0")]
    if V <= 0:
        return [Verdict("ROUND_FREE_ORIENTED", "Stable", detail=f"V = {V!r} <= 0")]
    h_max = math.pi / math.sqrt(V)
    return [
        Verdict("ROUND_FREE_ORIENTED", "Stable", (0.0, h_max), f"V = {V!r}"),
        Verdict("ROUND_FREE_ORIENTED", "Unstable", (h_max, math.inf), f"V = {V!r}"),
    ]


def _oriented_fixed(a: float, R: float, orient: int) -> list[Verdict]:
    V = 1.0 / R**2 - orient * a * R
    h1 = 2.0 * math.pi / math.sqrt(V) if V > 0 else math.inf
    t = V - 1.0 / R**2
    h2 = math.pi / math.sqrt(t) if t > 0 else math.inf
    h_ok = min(h1, h2)
    out = [Verdict("FIXED_ORIENTED", "Stable", (0.0, h_ok), f"V = {V!r}")]
    if h_ok < math.inf:
        out.append(Verdict("FIXED_ORIENTED", "Unstable", (h_ok, math.inf), f"V = {V!r}"))
    return out


def round_cylinder_report(
    a: float, lambda0: float, R: float, h: float | None = None, problem: str = "free"
) -> StabilityReport:
    """Verdicts for a round cylinder of radius R.

    ROUND_FREE, FIXED_C1 and FIXED_C2 use ``S = a R + 1/R^2``, which takes
    the support function on the circle to be +R.  ROUND_FREE_ORIENTED uses
    the support function the equilibrium equation actually gives (``-R``
    for circles from positive roots of ``a R^3 - 2 R + 2``) and decides the
    free problem exactly by Fourier modes.
    """
    if problem not in ("free", "fixed"):
        raise ValueError("problem must be 'free' or 'fixed'")
    notes = []
    orient = _orientation(a, lambda0, R)
    if orient is None:
        warnings.warn(f"R={R} is not an equilibrium radius for a={a}, lambda0={lambda0}", NonEquilibriumRadius)
        notes.append("radius is not an equilibrium radius")
    S = a * R + 1.0 / R**2
    verdicts = []
    bounds = {}

    if problem == "free":
        if a > 0:
            verdicts.append(Verdict("PROP_A", "Unstable", detail="a > 0: no stable embedded free-boundary equilibria"))
        else:
            verdicts.append(Verdict("PROP_A", "NotApplicable", detail="a <= 0"))
        if a > 0:
            verdicts.append(Verdict("ROUND_FREE", "Unstable", detail="a > 0: the nu_1 mode is negative"))
        elif S <= 0:
            verdicts.append(Verdict("ROUND_FREE", "Stable", detail="a R + 1/R^2 <= 0: stable for every h"))
            bounds["ROUND_FREE"] = math.inf
        else:
            h_max = math.pi / math.sqrt(S)
            bounds["ROUND_FREE"] = h_max
            verdicts.append(Verdict("ROUND_FREE", "Stable", (0.0, h_max), f"stable iff h <= {h_max!r}"))
            verdicts.append(Verdict("ROUND_FREE", "Unstable", (h_max, math.inf), "sin(pi z/h) mode negative"))
        if orient is not None:
            verdicts += _oriented_free(a, R, orient)
            if any(v.rule == "ROUND_FREE_ORIENTED" and v.outcome != "Unstable" for v in verdicts) and a > 0:
                notes.append("PROP_A assumes the normal points out of the enclosed region; this circle runs clockwise")
            elif a < 0 and orient > 0:
                notes.append("ROUND_FREE takes the support function to be +R; the equilibrium circle has -R")
        for R0 in critical_radii(a, h) if h else []:
            notes.append(f"bifurcation radius R0={R0!r} (pi^2/h^2 = a R0 + 1/R0^2)")
    else:
        h1 = 2.0 * math.pi / math.sqrt(S) if S > 0 else math.inf
        h2 = math.pi / math.sqrt(a * R) if a * R > 0 else math.inf
        bounds["FIXED_C1"] = h1
        bounds["FIXED_C2"] = h2
        verdicts.append(Verdict("FIXED_C1", "Unstable", (h1, math.inf), "4 pi^2/h^2 < a R + 1/R^2"))
        verdicts.append(Verdict("FIXED_C2", "Unstable", (h2, math.inf), "pi^2/h^2 < a R"))
        h_ok = min(h1, h2)
        verdicts.append(Verdict("FIXED_C1_C2", "Stable", (0.0, h_ok), "both round-cylinder conditions hold"))
        flag = a > 0 and R**3 >= 1.0 / (3.0 * a)
        verdicts.append(Verdict(
            "BIFURCATION_FLAG", "Flag" if flag else "NoFlag",
            detail="R^3 >= 1/(3a): (c2) fails before (c1), symmetry-breaking bifurcation" if flag else "",
        ))
        if orient is not None:
            verdicts += _oriented_fixed(a, R, orient)
    V = S if orient is None else 1.0 / R**2 - orient * a * R
    mu = tuple((j / R) ** 2 - V for j in range(0, 4) for _ in ((0,) if j == 0 else (0, 1)))
    J = sum(1 for m in mu if m < -ZERO_TOL)
    return StabilityReport(problem, mu, J, max(J - 1, 0), tuple(verdicts), bounds, tuple(notes), h)


# ---------------------------------------------------------------------------
# non-circular curves
# ---------------------------------------------------------------------------


def cp_instability_test(curve: ProfileCurve, spectrum: HillSpectrum | None = None, embedded: bool | None = None) -> list[Verdict]:
    """Instability rules from critical points of R^2 and the Hill ground state."""
    a = curve.params.a
    if curve.is_circle():
        return [
            Verdict("CP_MULTI_CRIT", "NotApplicable", detail="circle"),
            Verdict("CP_LARGE_H", "NotApplicable", detail="circle"),
        ]
    if embedded is None:
        embedded = is_embedded(curve)
    out = []
    zeros = sign_changes(curve.xi1)
    if zeros >= 4:
        out.append(Verdict("CP_MULTI_CRIT", "Unstable", detail=f"xi1 has {zeros} sign changes"))
    elif embedded:
        out.append(Verdict("CP_MULTI_CRIT", "Unstable", detail="embedded non-circular (four vertex theorem)"))
    else:
        out.append(Verdict("CP_MULTI_CRIT", "NotApplicable", detail=f"xi1 has {zeros} sign changes"))
    if spectrum is None:
        spectrum = hill_eigenvalues(HillProblem.from_curve(curve), n_modes=max(8, zeros + 4))
    mu1 = float(spectrum.values[0])
    if mu1 < 0:
        h_star = math.pi / math.sqrt(-mu1)
        out.append(Verdict("CP_LARGE_H", "Unstable", (h_star, math.inf), f"pi^2/h^2 + mu1 < 0 for h > {h_star!r}"))
    else:
        out.append(Verdict("CP_LARGE_H", "NotApplicable", detail=f"mu1 = {mu1!r} >= 0"))
    if a > 0:
        if embedded or a * curve.signed_area() > 0:
            out.append(Verdict("PROP_A", "Unstable", detail="a > 0 with positive enclosed (signed) volume"))
        else:
            out.append(Verdict("PROP_A", "Inconclusive", detail="immersed with non-positive signed area"))
    else:
        out.append(Verdict("PROP_A", "NotApplicable", detail="a <= 0"))
    return out


@dataclass(frozen=True)
class HeightBounds:
    middle: float
    left: float
    h_max: float
    xi1_max: float
    xi1_min: float
    max_G_xi2: float
    length: float
    denominator: float


def _periodic_integral(values, curve: ProfileCurve) -> float:
    return float(np.sum(values) * curve.ds)


def height_bounds(curve: ProfileCurve, problem: str = "fixed") -> HeightBounds:
    """Largest stable height allowed by the xi1-exponential test function.

    ``middle = e^{2(max xi1 - min xi1)} L / int (1 + kappa xi2)^2 ds`` must not
    exceed ``4 pi^2 / h^2`` (fixed) or ``pi^2 / h^2`` (free);
    ``left = 4 e^{4 max xi1} / max |G_xi2|^2`` bounds it from below.
    """
    if problem not in ("free", "fixed"):
        raise ValueError("problem must be 'free' or 'fixed'")
    g = 1.0 + curve.kappa * curve.xi2
    den = _periodic_integral(g * g, curve)
    if curve.is_circle() or den <= 1e-12 * curve.length:
        raise CircularInput("round cylinders have int (1 + kappa xi2)^2 ds = 0")
    xi1 = curve.xi1
    hi, lo = float(xi1.max()), float(xi1.min())
    maxG = float(np.max(np.abs(2.0 * g)))
    middle = math.exp(2.0 * (hi - lo)) * curve.length / den
    left = 4.0 * math.exp(4.0 * hi) / maxG**2
    num = 2.0 * math.pi if problem == "fixed" else math.pi
    return HeightBounds(middle, left, num / math.sqrt(middle), hi, lo, maxG, curve.length, den)


def fixed_necessary_conditions(curve: ProfileCurve, h: float, embedded: bool | None = None) -> list[Verdict]:
    """Test function ``sin(2 pi z / h)``, constant along the curve.

    Stability requires ``4 pi^2 / h^2 >= (int kappa^2 ds + 2 a A) / L``; for
    embedded curves ``int kappa^2 ds >= 4 pi^2 / L`` gives the weaker
    ``4 pi^2 / h^2 >= 4 pi^2 / L^2 + 2 a A / L``.
    """
    a, L, A = curve.params.a, curve.length, curve.signed_area()
    lhs = 4.0 * math.pi**2 / h**2
    rhs = (_periodic_integral(curve.kappa**2, curve) + 2.0 * a * A) / L
    out = [Verdict("FIXED_CURV", "Unstable" if lhs < rhs else "Inconclusive", (h, h), f"rhs={rhs!r}")]
    if embedded is None:
        embedded = is_embedded(curve)
    if embedded:
        rhs2 = 4.0 * math.pi**2 / L**2 + 2.0 * a * A / L
        out.append(Verdict("FIXED_CURV_EMBEDDED", "Unstable" if lhs < rhs2 else "Inconclusive", (h, h), f"rhs={rhs2!r}"))
    return out


def _spectral_derivative(u: np.ndarray, length: float) -> np.ndarray:
    n = len(u)
    k = np.fft.rfftfreq(n, d=length / n) * 2.0 * math.pi
    return np.fft.irfft(1j * k * np.fft.rfft(u), n)


def second_variation(curve: ProfileCurve, u: np.ndarray, mode: str = "const", h: float = 1.0, k: int = 1, mv_tol: float = 1e-8) -> float:
    """``int int psi_s^2 + psi_z^2 - (kappa^2 + a xi2) psi^2`` for ``psi = u(s) f(z)``.

    ``mode`` is ``const``, ``sin`` (``sin(k pi z / h)``) or ``cos``; the z
    integrals are done in closed form on ``[-h/2, h/2]``.
    """
    u = np.asarray(u, dtype=float)
    if mode == "const":
        f2, fz2, fint = h, 0.0, h
    elif mode == "sin":
        f2, fz2, fint = h / 2.0, (k * math.pi / h) ** 2 * h / 2.0, 0.0
    elif mode == "cos":
        f2 = h / 2.0 + h / (2.0 * k * math.pi) * math.sin(k * math.pi)
        fz2 = (k * math.pi / h) ** 2 * (h / 2.0 - h / (2.0 * k * math.pi) * math.sin(k * math.pi))
        fint = 2.0 * h / (k * math.pi) * math.sin(k * math.pi / 2.0)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    V = curve.kappa**2 + curve.params.a * curve.xi2
    us = _spectral_derivative(u, curve.length)
    mean = _periodic_integral(u, curve) * fint
    scale = math.sqrt(_periodic_integral(u * u, curve) * curve.length) * h
    if abs(mean) > mv_tol * max(scale, 1e-300):
        warnings.warn(f"test function has nonzero mean {mean!r}", MeanValueViolation)
    return f2 * _periodic_integral(us * us - V * u * u, curve) + fz2 * _periodic_integral(u * u, curve)


def curve_energy(curve: ProfileCurve) -> float:
    """``L - (a/2) int R^2 dA + lambda0 A`` with signed areas.

    Green's theorem turns both area integrals into ``int xi2 ds`` and
    ``int R^2 xi2 ds / 4``.
    """
    p = curve.params
    xi2, ds = curve.xi2, curve.ds
    A = 0.5 * float(np.sum(xi2)) * ds
    I = 0.25 * float(np.sum(curve.r * xi2)) * ds
    return curve.length - 0.5 * p.a * I + p.lambda0 * A


def circle_energy(R: float, a: float, lambda0: float, orientation: int = -1) -> float:
    """Energy of a circle traversed counterclockwise (orientation -1) or clockwise."""
    sgn = 1.0 if orientation < 0 else -1.0
    return 2.0 * math.pi * R + sgn * (lambda0 * math.pi * R**2 - a * math.pi * R**4 / 4.0)


# ---------------------------------------------------------------------------
# full report for a traced curve
# ---------------------------------------------------------------------------


def curve_report(curve: ProfileCurve, h: float | None = None, problem: str = "free") -> StabilityReport:
    """Rule-based verdicts for a closed non-circular curve."""
    if problem not in ("free", "fixed"):
        raise ValueError("problem must be 'free' or 'fixed'")
    embedded = is_embedded(curve)
    zeros = sign_changes(curve.xi1)
    spectrum = hill_eigenvalues(HillProblem.from_curve(curve), n_modes=max(8, zeros + 4))
    J = spectrum.negative_count()
    notes = [f"embedded={embedded}", f"xi1 sign changes={zeros}"]
    verdicts = []
    bounds = {}
    if problem == "free":
        verdicts += cp_instability_test(curve, spectrum, embedded)
        for v in verdicts:
            if v.rule == "CP_LARGE_H" and v.outcome == "Unstable":
                bounds["CP_LARGE_H"] = v.h_range[0]
    hb = height_bounds(curve, problem)
    bounds["HEIGHT_BOUND"] = hb.h_max
    verdicts.append(Verdict("HEIGHT_BOUND", "Unstable", (hb.h_max, math.inf), f"middle={hb.middle!r}"))
    if problem == "fixed" and h is not None:
        verdicts += fixed_necessary_conditions(curve, h, embedded)
    return StabilityReport(problem, tuple(float(m) for m in spectrum.values), J, max(J - 1, 0), tuple(verdicts), bounds, tuple(notes), h)
