import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compwave.model import (
    BnsParameters,
    InadmissibleStateError,
    check_entropy_compatibility,
    make_bns_model,
    make_linear_model,
)

rho_st = st.floats(0.2, 5.0)
vel_st = st.floats(-2.0, 2.0)


def test_bns_viscosity_d3_at_rest():
    model = make_bns_model(BnsParameters(nu=0.1, d=3))
    B = model.viscosity(np.array([1.0, 0.0, 0.0, 0.0]))
    np.testing.assert_allclose(B, np.diag([1.0, 0.1, 0.1, 0.1]), atol=0)
    assert np.linalg.det(B) == pytest.approx(0.1**3, rel=1e-12)


def test_bns_viscosity_det_1d(bns1):
    # det [[1, u], [u, u^2 + nu]] = nu
    B = bns1.viscosity(np.array([1.0, 0.3]))
    assert np.linalg.det(B) == pytest.approx(0.1, rel=1e-12)


def test_bns_compatibility_moving_state(bns1):
    assert check_entropy_compatibility(bns1, [1.0, 0.3], h=1e-5) < 1e-6


def test_bns_entropy_compatibility_equal_states_linear_directions():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    model = make_linear_model(A)
    assert check_entropy_compatibility(model, [0.3, -0.2]) < 1e-12


@settings(max_examples=60, deadline=None)
@given(rho=rho_st, u=vel_st, v=vel_st)
def test_bns_entropy_compatibility_property(bns2, rho, u, v):
    assert check_entropy_compatibility(bns2, [rho, rho * u, rho * v], h=1e-5) < 1e-6


@settings(max_examples=60, deadline=None)
@given(rho=rho_st, u=vel_st, v=vel_st)
def test_bns_viscosity_positive_definite(bns2, rho, u, v):
    B = bns2.viscosity(np.array([rho, rho * u, rho * v]))
    assert np.allclose(B, B.T)
    assert np.linalg.eigvalsh(B).min() > 0


@settings(max_examples=60, deadline=None)
@given(rho=rho_st, u=vel_st)
def test_bns_entropy_convex_and_hessian_matches_gradient(bns1, rho, u):
    U = np.array([rho, rho * u])
    H = bns1.entropy_hess(U)
    assert np.linalg.eigvalsh(H).min() > 0
    h = 1e-6
    fd = np.column_stack(
        [(bns1.entropy_grad(U + h * e) - bns1.entropy_grad(U - h * e)) / (2 * h) for e in np.eye(2)]
    )
    np.testing.assert_allclose(fd, H, rtol=1e-6, atol=1e-6)


def test_bns_symmetrizer(bns2):
    # eta'' f_j' is symmetric for every direction
    U = np.array([1.3, 0.4, -0.7])
    H = bns2.entropy_hess(U)
    for j in range(2):
        M = H @ bns2.flux_jacobian(U, j)
        np.testing.assert_allclose(M, M.T, atol=1e-13)


def test_bns_rejects_vacuum(bns1):
    with pytest.raises(InadmissibleStateError):
        check_entropy_compatibility(bns1, [0.0, 0.0])
    with pytest.raises(InadmissibleStateError):
        bns1.check_admissible(np.array([-1.0, 0.0]))


def test_bns_parameter_errors():
    with pytest.raises(ValueError):
        BnsParameters(nu=0.0)
    with pytest.raises(ValueError):
        BnsParameters(gamma=1.0)
    with pytest.raises(ValueError):
        BnsParameters(d=4)


@given(u=st.floats(-10, 10))
def test_burgers_identities(burgers, u):
    U = np.array([u])
    assert burgers.entropy_grad(U)[0] == u
    assert burgers.entropy_flux(U)[()] == pytest.approx(u**3 / 3)
    assert burgers.viscosity(U)[0, 0] == 1.0
    assert check_entropy_compatibility(burgers, U) <= 1e-10 * max(1.0, u * u)


def test_linear_model_flux(rng):
    A = np.array([[1.0, 2.0], [2.0, -1.0]])
    model = make_linear_model(A)
    U = rng.normal(size=(2, 7))
    np.testing.assert_allclose(model.flux(U), A @ U)
