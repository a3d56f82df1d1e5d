import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from cyldrop.core import C0_CASE_I, Band, DropParams, build_q, classify, critical_level, critical_levels
from cyldrop.errors import BranchUndefined, Degenerate, Divergent, OutsideBand, WrongRegion
from cyldrop.profile import fundamental_piece
from cyldrop.quadrature import (
    adaptive_gauss,
    arc_length,
    critical_level_value,
    delta_theta,
    delta_theta_band_pair_check,
    half_angle_profile,
    limit_delta_theta,
    limit_side,
    rho,
)


def _band(p, i=0):
    return classify(p).bands[i]


def test_adaptive_gauss_smooth():
    val, err = adaptive_gauss(np.cos, 0.0, math.pi / 2)
    assert val == pytest.approx(1.0, abs=1e-14)


def test_rho_outside_band():
    with pytest.raises(OutsideBand):
        rho(100.0, DropParams(0.2, 1.0, 5.74356))


@pytest.mark.parametrize(
    "params,band,target",
    [
        (DropParams(0.2, 1.0, 5.74356), (2.791596, 23.35858), math.pi / 2),
        (DropParams(-1.0, 1.0, 0.164021), None, math.pi / 4),
    ],
)
def test_angle_anchors(params, band, target):
    b = _band(params)
    if band is not None:
        assert b.r_lo == pytest.approx(band[0], abs=1e-6)
        assert b.r_hi == pytest.approx(band[1], abs=1e-5)
    assert abs(delta_theta(params, b).delta_theta - target) <= 1e-4


@pytest.mark.parametrize(
    "params,band",
    [(DropParams(-1.0, 0.0, 1.0), 0), (DropParams(-2.0, 1.0, 0.5), 0), (DropParams(0.1, 1.0, 0.0), 1)],
)
def test_angle_and_length_match_traced_piece(params, band):
    b = _band(params, band)
    piece = fundamental_piece(params, b)
    assert delta_theta(params, b).delta_theta == pytest.approx(piece.delta_theta_measured, abs=1e-6)
    assert arc_length(params, b) == pytest.approx(piece.length, abs=1e-6)


@pytest.mark.parametrize("a,lam", [(-1.0, 0.0), (0.1, 1.0), (0.2, 1.0), (-2.0, 1.0)])
def test_piece_through_origin(a, lam):
    # at C = 0 the polar angle is undefined at the origin: the advance is
    # the C -> 0- limit, and the traced piece agrees modulo 2 pi
    p = DropParams(a, lam, 0.0)
    b = _band(p)
    assert b.r_lo == 0.0
    value = delta_theta(p, b).delta_theta
    below = DropParams(a, lam, -1e-9)
    assert value == pytest.approx(delta_theta(below, _band(below)).delta_theta, abs=1e-6)
    piece = fundamental_piece(p, b)
    turns = (value - piece.delta_theta_measured) / (2 * math.pi)
    assert abs(turns - round(turns)) < 1e-8


def test_angle_against_scipy_quad():
    # independent route: plain r-integral with scipy's algebraic-weight rule
    p = DropParams(-2.0, 1.0, 1.0)
    b = _band(p)
    q = build_q(p)
    lo, hi = b.r_lo, b.r_hi

    quotient, _ = np.polydiv(np.asarray(q.coeffs)[::-1], np.poly1d([-1.0, lo + hi, -lo * hi]).coeffs)

    def deflated(r):
        return np.polyval(quotient, r)

    f = lambda r: (4 * p.C + p.a * r * r - 4 * p.lambda0 * r) / (r * math.sqrt(deflated(r)))  # noqa: E731
    val, _ = quad(f, lo, hi, weight="alg", wvar=(-0.5, -0.5), epsabs=1e-13, epsrel=1e-13)
    assert delta_theta(p, b).delta_theta == pytest.approx(val, abs=1e-10)


def test_half_angle_is_half_of_total():
    p = DropParams(0.2, 1.0, 3.0)
    b = _band(p)
    half = half_angle_profile(p, b, [b.r_hi])[0]
    assert 2 * half == pytest.approx(delta_theta(p, b).delta_theta, abs=1e-10)


def test_half_angle_derivative():
    p = DropParams(0.2, 1.0, 3.0)
    b = _band(p)
    r = 0.5 * (b.r_lo + b.r_hi)
    eps = 1e-4
    num = (half_angle_profile(p, b, [r + eps])[0] - half_angle_profile(p, b, [r - eps])[0]) / (2 * eps)
    q = build_q(p)
    exact = (4 * p.C + p.a * r * r - 4 * r) / (2 * r * math.sqrt(q(r)))
    assert num == pytest.approx(exact, rel=1e-7)


def test_zero_width_band_degenerate():
    p = DropParams(0.2, 1.0, 1.0)
    with pytest.raises(Degenerate):
        arc_length(p, Band(2.0, 2.0))
    with pytest.raises(Degenerate):
        delta_theta(p, Band(2.0, 2.0))


def test_exceptional_band_divergent():
    p = DropParams(0.2, 1.0, critical_level(0.2, 3).C)
    label = classify(p)
    for b in label.bands:
        with pytest.raises(Divergent):
            arc_length(label.params, b)
        res = delta_theta(label.params, b, allow_divergent=True)
        assert not res.convergent and math.isnan(res.delta_theta)


# --- two-band identity ---------------------------------------------------------


@pytest.mark.parametrize(
    "a,C,shift",
    [(0.2, -0.9, 2 * math.pi), (0.2, -0.75, 2 * math.pi), (0.1, 0.5, 0.0), (0.1, 1.2, 0.0), (0.05, -0.6, 2 * math.pi)],
)
def test_two_band_identity(a, C, shift):
    chk = delta_theta_band_pair_check(DropParams(a, 1.0, C))
    assert chk.shift == shift
    assert chk.discrepancy <= 1e-6


def test_two_band_identity_at_zero_level():
    p = DropParams(0.1, 1.0, 0.0)
    chk = delta_theta_band_pair_check(p)
    assert chk.shift == 2 * math.pi and chk.discrepancy <= 1e-6
    # the inner band angle jumps by 2 pi across C = 0, the outer one does not
    left = delta_theta(DropParams(0.1, 1.0, -1e-7), _band(DropParams(0.1, 1.0, -1e-7))).delta_theta
    right = delta_theta(DropParams(0.1, 1.0, 1e-7), _band(DropParams(0.1, 1.0, 1e-7))).delta_theta
    assert right - left == pytest.approx(2 * math.pi, abs=1e-4)


def test_two_band_identity_wrong_region():
    with pytest.raises(WrongRegion):
        delta_theta_band_pair_check(DropParams(-1.0, 1.0, 0.5))


@given(st.floats(0.02, 0.28), st.floats(0.05, 0.95))
@settings(max_examples=20, deadline=None)
def test_two_band_identity_property(a, t):
    crit = critical_levels(a)
    C = crit.C(2) + t * (crit.C(3) - crit.C(2))
    if abs(C) < 1e-3:
        return
    chk = delta_theta_band_pair_check(DropParams(a, 1.0, C))
    assert chk.discrepancy <= 1e-6


# --- limits ---------------------------------------------------------------------


def _extrapolated(a, branch, lam=1.0):
    C0 = critical_level_value(a, branch, lam)
    side = limit_side(a, branch, lam)
    vals = []
    for k in (3, 4, 5, 6):
        p = DropParams(a, lam, C0 + side * 10.0**-k)
        vals.append(delta_theta(p, classify(p).bands[0]).delta_theta)
    # error is linear in the offset: Richardson with ratio 10
    return (10 * vals[-1] - vals[-2]) / 9


def test_case_one_limit():
    assert limit_delta_theta(-1.0, lambda0=0.0) == pytest.approx(-2 * math.pi / math.sqrt(3), abs=1e-15)
    assert _extrapolated(-1.0, 1, 0.0) == pytest.approx(-2 * math.pi / math.sqrt(3), abs=1e-4)
    assert critical_level_value(-1.0, 1, 0.0) == C0_CASE_I


@pytest.mark.parametrize("a,branch", [(-1.0, 1), (-2.0, 1), (0.1, 1), (0.1, 2), (0.2, 1), (0.2, 2)])
def test_limit_formula(a, branch):
    assert limit_delta_theta(a, branch) == pytest.approx(_extrapolated(a, branch), abs=1e-4)


def test_branch_two_needs_positive_a():
    with pytest.raises(BranchUndefined):
        limit_delta_theta(-1.0, 2)
