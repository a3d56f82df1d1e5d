import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EMBEDDED, FULL_TURN, IMMERSED, closed_trace, golden_fraction
from cyldrop.core import A_CUSP, C0_CASE_I, Band, DropParams, classify, critical_level, eval_G
from cyldrop.errors import Degenerate, ExceptionalBand, InsufficientResolution, NotClosed, ToleranceFailure
from cyldrop.profile import (
    ProfileCurve,
    SymmetryType,
    annulus_occupancy,
    assemble_curve,
    circle_curve,
    exceptional_trace,
    fundamental_piece,
    integrate_profile,
    is_embedded,
    pieces_to_close,
    rotation_returns,
    symmetry_type,
    trace_band,
    treadmill_sled,
)
from cyldrop.quadrature import arc_length, delta_theta, solve_level_for_angle

# --- integration ------------------------------------------------------------------


def test_cusp_circle():
    p = DropParams(A_CUSP, 1.0, -9 / 8)
    sm = integrate_profile(p, (0.0, -1.5), 20.0)
    R = np.sqrt(sm.r)
    assert np.max(np.abs(R - 1.5)) <= 1e-8
    assert np.allclose(sm.kappa, 2 / 3, atol=1e-12)
    xi1, xi2 = treadmill_sled(sm)
    assert np.allclose(xi1, 0.0, atol=1e-8) and np.allclose(xi2, -1.5, atol=1e-8)


def test_case_one_circle():
    p = DropParams(-1.0, 0.0, C0_CASE_I)
    sm = integrate_profile(p, (0.0, -(2 ** (1 / 3))), 15.0)
    assert np.max(np.abs(np.sqrt(sm.r) - 2 ** (1 / 3))) <= 1e-8


def test_start_must_lie_on_level():
    with pytest.raises(ValueError):
        integrate_profile(DropParams(0.2, 1.0, 1.0), (0.0, 3.0), 1.0)


@pytest.mark.parametrize("a,C", [(0.2, 5.74356), (-1.0, 0.5), (0.1, 0.0), (-2.0, 3.0)])
def test_level_conserved(a, C):
    p = DropParams(a, 1.0, C)
    b = classify(p).bands[-1]
    piece = fundamental_piece(p, b)
    xi1, xi2 = treadmill_sled(piece.samples)
    assert np.max(np.abs(eval_G(xi1, xi2, p) - C)) <= 1e-8 * (1 + abs(C))


def test_treadmill_sled_translation():
    # shifting the curve by d changes (xi1, xi2) by (d.T, d.N) with T, N at theta
    p = DropParams(0.2, 1.0, 3.0)
    piece = fundamental_piece(p, classify(p).bands[0], n_samples=65)
    sm = piece.samples
    d = np.array([0.3, -0.7])
    xi1, xi2 = treadmill_sled(sm)
    shifted = type(sm)(sm.s, sm.x + d[0], sm.y + d[1], sm.theta, sm.params)
    s1, s2 = treadmill_sled(shifted)
    assert np.allclose(s1 - xi1, d[0] * np.cos(sm.theta) + d[1] * np.sin(sm.theta), atol=1e-14)
    assert np.allclose(s2 - xi2, d[0] * np.sin(sm.theta) - d[1] * np.cos(sm.theta), atol=1e-14)


# --- fundamental pieces ------------------------------------------------------------


def test_quarter_turn_piece():
    p = DropParams(0.2, 1.0, 5.74356)
    b = classify(p).bands[0]
    piece = fundamental_piece(p, b)
    assert abs(piece.delta_theta_measured - math.pi / 2) <= 1e-5
    assert piece.length == pytest.approx(arc_length(p, b), abs=1e-6)
    assert piece.ts_closure_error < 1e-9


def test_zero_width_band():
    with pytest.raises(Degenerate):
        fundamental_piece(DropParams(0.2, 1.0, 1.0), Band(2.0, 2.0))


def test_exceptional_band_refused():
    p = DropParams(0.2, 1.0, critical_level(0.2, 3).C)
    label = classify(p)
    with pytest.raises(ExceptionalBand):
        fundamental_piece(label.params, label.bands[0])


def test_outer_band_at_zero_level():
    p = DropParams(0.1, 1.0, 0.0)
    piece = fundamental_piece(p, classify(p).bands[1])
    assert math.isfinite(piece.length) and piece.length > 0


@given(st.floats(-2.0, 0.28).filter(lambda a: abs(a) > 0.02), st.floats(0.3, 8.0))
@settings(max_examples=15, deadline=None)
def test_piece_matches_quadrature(a, C):
    p = DropParams(a, 1.0, C)
    label = classify(p)
    for b in label.bands:
        if not b.simple or b.width < 1e-3:
            continue
        piece = fundamental_piece(label.params, b)
        assert piece.delta_theta_measured == pytest.approx(delta_theta(label.params, b).delta_theta, abs=1e-6)
        assert piece.length == pytest.approx(arc_length(label.params, b), abs=1e-6)


# --- symmetry -----------------------------------------------------------------------


@pytest.mark.parametrize(
    "dtheta,kind,m,k",
    [
        (math.pi / 2, "Rational", 1, 4),
        (2 * math.pi, "Rational", 1, 1),
        (-2 * math.pi / 5 * 2, "Rational", -2, 5),
        (2 * math.pi * golden_fraction(), "Irrational", 0, 0),
        (math.nan, "Exceptional", 0, 0),
    ],
)
def test_symmetry_type(dtheta, kind, m, k):
    sym = symmetry_type(dtheta, tol=1e-9, max_denominator=64)
    assert sym.kind == kind
    if kind == "Rational":
        assert (sym.m, sym.k, sym.order) == (m, k, k)


def test_symmetry_json():
    assert symmetry_type(math.pi / 2).to_json() == {"kind": "Rational", "num": 1, "den": 4, "of": "2pi", "order": 4}


@pytest.mark.parametrize("frac,pieces", [(Fraction(1, 2), 4), (Fraction(2, 5), 5), (Fraction(1, 3), 6), (Fraction(4, 7), 7)])
def test_pieces_to_close(frac, pieces):
    assert pieces_to_close(frac) == pieces
    sym = symmetry_type(float(frac) * math.pi)
    assert sym.order == pieces


@given(st.integers(-20, 20).filter(lambda m: m != 0), st.integers(1, 40))
def test_symmetry_roundtrip(m, k):
    f = Fraction(m, k)
    sym = symmetry_type(2 * math.pi * float(f))
    assert (sym.m, sym.k) == (f.numerator, f.denominator)


# --- assembly -----------------------------------------------------------------------


def test_four_fold_curve():
    tr = trace_band(DropParams(0.2, 1.0, 5.74356), tol=1e-5)
    c = tr.curve
    assert tr.symmetry.order == 4 and c.closed and c.n_pieces == 4
    # rotating the sample set by a quarter turn maps it onto itself
    n = len(c.x) // 4
    x2 = np.cos(math.pi / 2) * c.x - np.sin(math.pi / 2) * c.y
    y2 = np.sin(math.pi / 2) * c.x + np.cos(math.pi / 2) * c.y
    assert np.max(np.hypot(np.roll(x2, n) - c.x, np.roll(y2, n) - c.y)) < 1e-5


def test_irrational_assembly():
    p = DropParams(-1.0, 1.0, 1.591840867671923)
    piece = fundamental_piece(p, classify(p).bands[0], n_samples=129)
    sym = symmetry_type(piece.delta_theta_measured)
    assert sym.kind == "Irrational"
    with pytest.raises(NotClosed):
        assemble_curve(piece, sym)
    part = assemble_curve(piece, sym, copies=5)
    assert not part.closed and part.n_pieces == 5


def test_wrong_rational_refused():
    p = DropParams(0.2, 1.0, 3.0)
    piece = fundamental_piece(p, classify(p).bands[0], n_samples=129)
    with pytest.raises(NotClosed):
        assemble_curve(piece, SymmetryType("Rational", 1, 4, math.pi / 2))


def test_circle_curve():
    p = DropParams(A_CUSP, 1.0, 0.0)
    c = circle_curve(p, 1.5, 1)
    assert c.is_circle() and c.closed
    assert np.ptp(np.hypot(c.x, c.y)) < 1e-9
    assert c.signed_area() == pytest.approx(-math.pi * 2.25, rel=1e-10)
    assert is_embedded(c)


# --- embeddedness -------------------------------------------------------------------


def _segments_cross(x, y):
    """All-pairs proper segment intersection for a closed polyline."""
    P = np.column_stack([x, y])
    Q = np.roll(P, -1, axis=0)
    n = len(P)

    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if len(j) == 0:
            continue
        a, b = P[i], Q[i]
        c, d = P[j], Q[j]
        o1 = orient(a[None], b[None], c)
        o2 = orient(a[None], b[None], d)
        o3 = orient(c, d, a[None])
        o4 = orient(c, d, b[None])
        if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
            return True
    return False


def test_full_turn_curve_not_embedded():
    a, C, frac = FULL_TURN
    tr = closed_trace(a, C)
    assert tr.symmetry.order == 1 and tr.piece.delta_theta_measured == pytest.approx(frac * math.pi, abs=1e-6)
    assert not is_embedded(tr.curve)
    assert _segments_cross(tr.curve.x, tr.curve.y)


@pytest.mark.parametrize("a,C,frac", EMBEDDED[:3] + IMMERSED[:2], ids=lambda v: str(v))
def test_embedded_against_brute_force(a, C, frac):
    c = closed_trace(a, C).curve
    assert is_embedded(c) == (not _segments_cross(c.x, c.y))


def test_embedded_stable_in_resolution():
    c = closed_trace(0.2, 5.743552608425723).curve
    assert is_embedded(c, resolution=2**20) == is_embedded(c, resolution=2**30) is True


def _figure_eight(offset):
    t = np.linspace(0, 2 * np.pi, 400, endpoint=False) + offset * 2 * np.pi / 400
    return ProfileCurve(t, np.sin(t), np.sin(t) * np.cos(t), t, DropParams(0.0, 1.0, 0.0), True, 1, 2 * np.pi)


def test_figure_eight_not_embedded():
    assert not is_embedded(_figure_eight(0.3))


def test_contact_below_grid_is_reported():
    # samples land within 1e-16 of the double point: ambiguous at every grid
    c = _figure_eight(0.0)
    with pytest.raises(InsufficientResolution):
        is_embedded(c)
    assert not is_embedded(c, strict=False)


def test_repeated_vertex_not_embedded():
    x = np.array([0.0, 1.0, 1.0, 0.0, -1.0, -1.0])
    y = np.array([0.0, 1.0, -1.0, 0.0, 1.0, -1.0])
    c = ProfileCurve(np.arange(6.0), x, y, np.zeros(6), DropParams(0.0, 1.0, 0.0), True, 1, 6.0)
    assert not is_embedded(c)


# --- exceptional drops and density ------------------------------------------------


@pytest.mark.parametrize("band", [0, 1])
def test_exceptional_trace_spirals_to_limit(band):
    p = DropParams(0.2, 1.0, critical_level(0.2, 3).C)
    label = classify(p)
    tr = exceptional_trace(label.params, label.bands[band])
    assert tr.monotone
    assert tr.limit_R == pytest.approx(2.42362, abs=5e-5)


def test_cusp_exceptional_trace():
    label = classify(DropParams(A_CUSP, 1.0, -9 / 8))
    tr = exceptional_trace(label.params, label.bands[0])
    assert tr.monotone and abs(tr.R_end - 1.5) < 1e-3


def test_irrational_curve_fills_annulus():
    g = golden_fraction()
    C = solve_level_for_angle(-1.0, 2 * math.pi * g / 8, 0.5, 5.0)
    tr = trace_band(DropParams(-1.0, 1.0, C), pieces=200, n_samples=257)
    assert tr.symmetry.kind == "Irrational"
    assert rotation_returns(tr.piece.delta_theta_measured, 200) is None
    occ = annulus_occupancy(tr.curve, math.sqrt(tr.piece.r_min), math.sqrt(tr.piece.r_max))
    assert occ >= 0.95


def test_rotation_returns_for_rational():
    assert rotation_returns(2 * math.pi * 3 / 7) == 7
