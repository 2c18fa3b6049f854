import json
import math

import numpy as np
import pytest

from thinwall.corner import (CornerFrame, SingularExponents,
                             solve_angular_profile, w_base)
from thinwall.cutoff import make_cutoff
from thinwall.nearfield import (_window_panels, arc_data, blended_w1,
                                extract_L, solve_S)
from thinwall.params import HoleSpec

THETA = 1.5 * math.pi
EXPS = SingularExponents(THETA)
CUT = make_cutoff("exp")


class StubConstants:
    D1, D2, N2, N3 = 0.0, 0.15, 0.13, 0.0


def _w1(side):
    return solve_angular_profile(1, 1, side, 0.4 - 0.1j, 0.2j, EXPS)


def test_blended_w1_branches_and_continuity():
    w1 = _w1("plus")
    thetas = np.full(5, math.pi - 0.3)
    # far above the layer: pure upper branch; far below: same angle still
    # picks the upper cosine piece, so blending only acts inside the layer
    up = blended_w1(w1, thetas, np.full(5, 5.0), CUT)
    np.testing.assert_allclose(up, w1(thetas))
    lo_angle = np.full(5, math.pi + 0.3)
    low = blended_w1(w1, lo_angle, np.full(5, -5.0), CUT)
    amp_low = w1.pieces[1][2]
    expect = amp_low * np.cos(w1.pieces[1][3] * (lo_angle - w1.pieces[1][4]))
    np.testing.assert_allclose(low, expect)
    # at y = 0 the two branches are averaged -> continuous across the row
    mid_up = blended_w1(w1, thetas, np.zeros(5), CUT)
    mid_low = blended_w1(w1, thetas, -1e-14 * np.ones(5), CUT)
    np.testing.assert_allclose(mid_up, mid_low, atol=1e-12)
    # a jump-free profile passes through unchanged
    w0 = w_base(1, "plus", EXPS)
    np.testing.assert_allclose(blended_w1(w0, thetas, np.full(5, -5.0), CUT),
                               w0(thetas))


def test_arc_data_continuous_across_layer():
    frame = CornerFrame("plus", 0.0, THETA)
    w0 = w_base(1, "plus", EXPS)
    data = arc_data(1, frame, w0, _w1("plus"), CUT)
    R = 20.0
    x = -math.sqrt(R * R - 1e-8)
    assert abs(data(np.array([x]), np.array([1e-4]))[0]
               - data(np.array([x]), np.array([-1e-4]))[0]) < 1e-3


@pytest.mark.parametrize("side", ["plus", "minus"])
def test_window_panels_avoid_layer(side):
    frame = CornerFrame(side, 0.0, THETA)
    R, exclude = 8.0, 3.0
    panels = _window_panels(frame, R, exclude)
    assert panels
    total = 0.0
    a, b = frame.interval
    for thetas, wts in panels:
        assert np.all(np.abs(R * np.sin(thetas)) > exclude)
        assert np.all((thetas > a) & (thetas < b))
        total += wts.sum()
    # three excluded arcs of half-width asin(exclude/R) land in the sector
    expected = (b - a) - 3.0 * math.asin(exclude / R)
    np.testing.assert_allclose(total, expected, rtol=1e-12)


@pytest.mark.parametrize("side", ["plus", "minus"])
def test_extract_L_synthetic_injection(side):
    frame = CornerFrame(side, 0.0, THETA)
    w0 = w_base(1, side, EXPS)
    w1 = _w1(side)
    lam1 = EXPS.lambda_n(1)
    amps = {0: 0.31, 1: -0.042, 2: 0.0075, 3: -0.0011}
    modes = {m: w_base(m, side, EXPS) for m in amps}

    def u(pts):
        r, th = frame.polar(pts[:, 0], pts[:, 1])
        out = r ** lam1 * w0(th) + r ** (lam1 - 1.0) * w1(th)
        for m, a in amps.items():
            out = out + a * r ** (-EXPS.lambda_n(m)) * modes[m](th)
        return out

    ell, res, logc = extract_L(u, frame, 1, w0, w1, 40.0)
    for m, a in amps.items():
        np.testing.assert_allclose(ell[m], a, rtol=1e-6)
        assert res[m] < 1e-8
        assert logc[m] < 1e-3


def test_solve_S_smoke_and_serialization():
    sol = solve_S("plus", 1, StubConstants, HoleSpec(), Rmax=20.0,
                  h0=0.6, degree=2)
    assert sol.ndof > 0
    assert set(sol.ell) == {0, 1, 2, 3}
    # the leading decaying amplitude is a clean O(0.01-0.1) real number
    assert 1e-3 < abs(sol.ell[1]) < 0.5
    assert abs(sol.ell[1].imag) < 1e-3 * abs(sol.ell[1])
    assert sol.radial_residual[1] < 0.05
    json.dumps(sol.as_dict())
