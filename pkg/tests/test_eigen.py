import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compwave.eigen import (
    GenuineNonlinearityError,
    HyperbolicityError,
    eigen_frame,
    flux_hessian_contraction,
    genuine_nonlinearity_coeff,
)
from compwave.model import BnsParameters, make_bns_model, make_linear_model


def test_burgers_frame(burgers):
    fr = eigen_frame(burgers, [0.7])
    assert fr.lam[0] == pytest.approx(0.7)
    assert fr.r[0, 0] == pytest.approx(-1.0)
    assert fr.l[0, 0] == pytest.approx(-1.0)
    assert fr.r[0] @ fr.l[0] == pytest.approx(1.0)
    assert fr.c_f[0] == pytest.approx(-1.0, rel=1e-8)
    assert genuine_nonlinearity_coeff(burgers, [0.7], fr, 1) == pytest.approx(-1.0, rel=1e-8)


def test_bns_gamma2_speeds():
    # c^2 = gamma rho^(gamma-1) = 2
    model = make_bns_model(BnsParameters(gamma=2.0))
    fr = eigen_frame(model, [1.0, 0.0])
    np.testing.assert_allclose(fr.lam, [-np.sqrt(2), np.sqrt(2)], rtol=1e-12)


def test_bns_gn_coefficient_matches_bilinear_form(bns1, frame1):
    # c_f = (f''(U) : r r) . l, with f'' from differences of f'
    for i in (1, 2):
        r, l = frame1.r[i - 1], frame1.l[i - 1]
        bil = flux_hessian_contraction(bns1, frame1.base, r) @ l
        assert frame1.c_f[i - 1] == pytest.approx(bil, rel=1e-6)
        assert frame1.c_f[i - 1] < 0


@settings(max_examples=40, deadline=None)
@given(rho=st.floats(0.3, 3.0), u=st.floats(-1.0, 1.0), v=st.floats(-1.0, 1.0))
def test_frame_invariants(bns2, rho, u, v):
    U = np.array([rho, rho * u, rho * v])
    fr = eigen_frame(bns2, U)
    H = bns2.entropy_hess(U)
    A = bns2.flux_jacobian(U, 0)
    assert np.all(np.diff(fr.lam) > 0)
    for i in range(3):
        np.testing.assert_allclose(A @ fr.r[i], fr.lam[i] * fr.r[i], atol=1e-10)
        np.testing.assert_allclose(fr.l[i], H @ fr.r[i], atol=1e-12)
        assert fr.r[i] @ fr.l[i] == pytest.approx(1.0)
    G = fr.r @ H @ fr.r.T
    np.testing.assert_allclose(G - np.diag(np.diag(G)), 0, atol=1e-9)
    assert fr.c_f[0] < 0 and fr.c_f[-1] < 0
    # the shear family is linearly degenerate and only reported
    assert fr.gn_failed == (2,)


def test_linear_flux_is_not_genuinely_nonlinear():
    model = make_linear_model(np.diag([-1.0, 1.0]))
    with pytest.raises(GenuineNonlinearityError) as err:
        eigen_frame(model, [0.5, 0.5])
    assert err.value.families == (1, 2)
    fr = eigen_frame(model, [0.5, 0.5], require_gn=False)
    np.testing.assert_allclose(fr.c_f, 0, atol=1e-9)


def test_repeated_eigenvalues_rejected():
    model = make_linear_model(np.eye(2))
    with pytest.raises(HyperbolicityError):
        eigen_frame(model, [0.0, 0.0], require_gn=False)
