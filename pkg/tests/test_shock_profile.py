import numpy as np
import pytest

from compwave.hugoniot import shock_curve_point
from compwave.shock_profile import (
    NotLaxProfileError,
    layer_coordinate,
    solve_profile,
    verify_profile_structure,
)


def closed_form(u_L, u_R, xi):
    return 0.5 * (u_L + u_R) - 0.5 * (u_L - u_R) * np.tanh((u_L - u_R) * xi / 4)


@pytest.fixture(scope="module")
def burgers_profile(burgers, burgers_frame):
    conn = shock_curve_point(burgers, burgers_frame, [1.0], 1, 1.0, delta0=1.0)
    return solve_profile(burgers, conn, np.arange(-30.0, 30.005, 0.01), burgers_frame)


@pytest.fixture(scope="module")
def bns_profile(bns1, frame1):
    conn = shock_curve_point(bns1, frame1, frame1.base, 1, 0.05)
    return conn, solve_profile(bns1, conn, None, frame1)


def test_burgers_closed_form(burgers_profile):
    p = burgers_profile
    assert np.max(np.abs(p.S[0] - closed_form(1.0, 0.0, p.xi))) <= 1e-8
    # derivative of the closed form
    np.testing.assert_allclose(p.dS[0], -0.125 / np.cosh(p.xi / 4) ** 2, atol=1e-8)


def test_burgers_layer_coordinate(burgers_profile):
    p = burgers_profile
    k = layer_coordinate(p)
    np.testing.assert_allclose(k, 0.5 * (1 + np.tanh(p.xi / 4)), atol=1e-8)
    j0 = np.argmin(np.abs(p.xi))
    assert k[j0] == pytest.approx(0.5, abs=1e-9)
    assert k[0] < 1e-5 and k[-1] > 1 - 1e-5


def test_burgers_structure_residuals(burgers_profile, burgers, burgers_frame):
    rep = verify_profile_structure(burgers_profile, burgers_frame, burgers)
    # dk = k(1-k)/2 exactly and S - U_L is a multiple of r
    assert rep.logistic_const < 1e-6
    assert rep.leading_const < 1e-12


def test_evaluate_matches_samples_and_tails(burgers_profile):
    p = burgers_profile
    S, dS = p.evaluate(p.xi[::97])
    np.testing.assert_allclose(S, p.S[:, ::97], atol=1e-14)
    # far tails follow the exponential continuation without cancellation
    dev = p.deviation(np.array([-200.0]), "L")[0, 0]
    assert dev == pytest.approx(-np.exp(-200 / 2), rel=1e-3)
    dev = p.deviation(np.array([200.0]), "R")[0, 0]
    assert dev == pytest.approx(np.exp(-200 / 2), rel=1e-3)
    with pytest.raises(ValueError):
        p.deviation(np.zeros(1), "M")


def test_bns_profile_endpoints_and_tails(bns_profile, bns1):
    conn, p = bns_profile
    tol = 1e-8 * conn.strength
    assert np.linalg.norm(p.S[:, 0] - conn.U_L) < 10 * tol + 1e-6 * conn.strength
    assert np.linalg.norm(p.S[:, -1] - conn.U_R) < 10 * tol + 1e-6 * conn.strength
    assert conn.rh_residual(bns1) <= 1e-10
    assert np.all(np.diff(p.k) >= -1e-12)
    # tail exponent from a regression on log|S - U_L|
    left = (p.k > 1e-6) & (p.k < 1e-3)
    dev = np.linalg.norm(p.S[:, left] - conn.U_L[:, None], axis=0)
    rate = np.polyfit(p.xi[left], np.log(dev), 1)[0]
    assert 0.5 < rate / p.kappa_L < 2.0
    assert 0.1 * conn.strength < p.kappa_L < 10 * conn.strength


def test_bns_profile_domain_doubling(bns_profile, bns1, frame1):
    conn, p = bns_profile
    wide = np.linspace(2 * p.xi[0], 2 * p.xi[-1], 2 * p.xi.size - 1)
    q = solve_profile(bns1, conn, wide, frame1)
    S, _ = q.evaluate(p.xi)
    assert np.max(np.abs(S - p.S)) < 1e-7 * conn.strength


def test_bns_structure_constants_stable(bns1, frame1):
    consts = []
    for delta in (0.05, 0.025):
        conn = shock_curve_point(bns1, frame1, frame1.base, 1, delta)
        rep = verify_profile_structure(solve_profile(bns1, conn, None, frame1), frame1, bns1)
        consts.append((rep.logistic_const, rep.leading_const))
    for a, b in zip(*consts):
        assert 0.5 <= a / b <= 2.0


def test_non_lax_connection_rejected(burgers, burgers_frame):
    conn = shock_curve_point(burgers, burgers_frame, [1.0], 1, 0.5, delta0=1.0)
    # swap the end states: an expansion shock has no viscous profile
    from dataclasses import replace

    bad = replace(conn, U_L=conn.U_R, U_R=conn.U_L)
    with pytest.raises(NotLaxProfileError):
        solve_profile(burgers, bad, np.linspace(-10, 10, 101), burgers_frame)
