import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compwave.grid import Grid
from compwave.model import make_linear_model
from compwave.superposition import (
    ansatz_error_fields,
    build_composite,
    shift_rhs,
    superposition_wave,
    weight_field,
)


@pytest.fixture(scope="module")
def shock_rar(bns1):
    return build_composite(bns1, [1.0, 0.0], "shock-rarefaction", 0.05, 0.05, lam_S1=10.0)


@pytest.fixture(scope="module")
def shock_shock(bns1):
    return build_composite(bns1, [1.0, 0.0], "shock-shock", 0.05, 0.05, lam_S1=10.0)


@pytest.fixture(scope="module")
def burgers_shock(burgers):
    return build_composite(burgers, [1.0], "single-shock", 1.0, 0.0, lam_S1=0.25)


def test_degenerate_second_wave_is_the_shock(bns1):
    single = build_composite(bns1, [1.0, 0.0], "single-shock", 0.05)
    flat = build_composite(bns1, [1.0, 0.0], "shock-rarefaction", 0.05, 0.0)
    x = np.linspace(-400, 400, 401)
    S, _ = single.shock1.evaluate(x - single.shock1.sigma * 3.0)
    np.testing.assert_allclose(superposition_wave(single, 3.0, x), S, atol=0)
    np.testing.assert_allclose(superposition_wave(flat, 3.0, x), S, atol=1e-15)
    z = ansatz_error_fields(flat, 3.0, x)
    np.testing.assert_allclose(z[1], 0, atol=1e-15)
    np.testing.assert_allclose(z[2], 0, atol=1e-15)


def test_far_field_states(shock_rar):
    x = np.array([-1e4, 1e4])
    Ut = superposition_wave(shock_rar, 10.0, x)
    np.testing.assert_allclose(Ut[:, 0], shock_rar.U_minus, atol=1e-12)
    np.testing.assert_allclose(Ut[:, 1], shock_rar.U_plus, atol=1e-12)


def test_weight_bounds(shock_rar, shock_shock):
    x = np.linspace(-1000, 1000, 4001)
    for ans in (shock_rar, shock_shock):
        a = weight_field(ans, 50.0, x)
        lo = 2 - ans.lam_S1 * ans.delta_S1
        hi = 2 + ans.lam_Wn * ans.delta_Wn
        assert np.all(a >= lo - 1e-12) and np.all(a <= hi + 1e-12)
        assert a[0] == pytest.approx(2.0, abs=1e-9)


def test_zero_weight_amplitude(bns1):
    ans = build_composite(bns1, [1.0, 0.0], "shock-shock", 0.05, 0.05, lam_S1=0.0)
    np.testing.assert_array_equal(weight_field(ans, 0.0, np.linspace(-100, 100, 51)), 2.0)


def test_weight_amplitude_limit(bns1):
    with pytest.raises(ValueError):
        build_composite(bns1, [1.0, 0.0], "single-shock", 0.05, lam_S1=20.0)
    with pytest.raises(ValueError):
        build_composite(bns1, [1.0, 0.0], "two-shocks", 0.05)


def test_shift_rhs_zero_at_ansatz(shock_shock):
    g = Grid(400.0, 801)
    F = shock_shock.fields(0.0, g.x)
    U = F.U_tilde[:, None, :]
    assert shift_rhs(shock_shock, U, F.U_tilde, F.a, F.dS1, g, 1) == 0.0
    assert shift_rhs(shock_shock, U, F.U_tilde, F.a, F.dW, g, 2) == 0.0


def test_shift_rhs_orthogonal_perturbation(shock_rar, bns1):
    g = Grid(400.0, 801)
    F = shock_rar.fields(0.0, g.x)
    H = bns1.entropy_hess(F.U_tilde)
    Hd = np.einsum("ijx,jx->ix", H, F.dS1)
    # rotate eta'' dS by 90 degrees pointwise
    psi = 1e-3 * np.stack([-Hd[1], Hd[0]])
    val = shift_rhs(shock_rar, (F.U_tilde + psi)[:, None, :], F.U_tilde, F.a, F.dS1, g, 1)
    assert abs(val) < 1e-16


def test_shift_rhs_quadrature_oracle(burgers_shock):
    from scipy.integrate import quad

    g = Grid(40.0, 8001)
    F = burgers_shock.fields(0.0, g.x)
    phi = 0.01 * np.exp(-(g.x**2))
    val = shift_rhs(burgers_shock, (F.U_tilde + phi)[:, None, :], F.U_tilde, F.a, F.dS1, g, 1)

    def integrand(x):
        f = burgers_shock.fields(0.0, np.array([x]))
        return f.a[0] * 0.01 * np.exp(-x * x) * f.dS1[0, 0]

    ref = burgers_shock.gain1 / burgers_shock.delta_S1 * quad(integrand, -40, 40, epsabs=1e-15, limit=200)[0]
    assert val == pytest.approx(ref, rel=1e-8)


def test_linear_flux_has_no_flux_interaction():
    A = np.diag([-1.0, 1.0])
    model = make_linear_model(A)
    U = np.random.default_rng(0).normal(size=(2, 64))
    # E1 = d_x (f(U~) - f(S) - f(W)) with U~ = S + W - U_m is d_x(-A U_m) = 0
    from compwave.grid import ddx

    S, W, Um = U, 2 * U, np.array([0.3, 0.4])
    E1 = ddx(model.flux(S + W - Um[:, None]) - model.flux(S) - model.flux(W) + model.flux(Um[:, None] + 0 * U), 0.1)
    np.testing.assert_allclose(E1, 0, atol=1e-13)


@settings(max_examples=10, deadline=None)
@given(t=st.floats(0.0, 100.0), X1=st.floats(-5.0, 5.0))
def test_shift_translates_shock(shock_rar, t, X1):
    x = np.linspace(-300, 300, 121)
    F = shock_rar.fields(t, x, X1)
    G = shock_rar.fields(t, x + X1, 0.0)
    np.testing.assert_allclose(F.S1, G.S1, atol=1e-14)


@pytest.mark.parametrize("kind", ["shock-rarefaction", "shock-shock"])
def test_superposition_equation_residual(bns1, kind, shock_rar, shock_shock):
    # d_t U~ + d_x f(U~) - d_x(B d_x eta'(U~)) = E1 + E2 up to O(h^2) when the shifts are frozen
    from compwave.grid import ddx

    ans = shock_rar if kind == "shock-rarefaction" else shock_shock
    t, res = 20.0, []
    for h in (0.8, 0.4, 0.2):
        x = np.arange(-200.0, 200.0 + h / 2, h)
        dUt = (superposition_wave(ans, t + h, x) - superposition_wave(ans, t - h, x)) / (2 * h)
        V = superposition_wave(ans, t, x)
        visc = ddx(np.einsum("ijx,jx->ix", bns1.viscosity(V, 0), ddx(bns1.entropy_grad(V), h)), h)
        _, E1, E2 = ansatz_error_fields(ans, t, x)
        R = dUt + ddx(bns1.flux(V), h) - visc - E1 - E2
        res.append(np.max(np.abs(R[:, 5:-5])))
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders > 1.7)


def test_flux_error_decays_exponentially(shock_rar):
    from compwave.diagnostics import fit_exponential

    x = np.linspace(-800, 800, 16001)
    ts = np.linspace(50, 250, 6)
    e = [np.trapezoid(np.linalg.norm(ansatz_error_fields(shock_rar, t, x)[1], axis=0), dx=x[1] - x[0]) for t in ts]
    fit = fit_exponential(ts, e)
    assert fit.r2 >= 0.98
    assert 1 / 3 < fit.rate / shock_rar.delta_S1 < 3


def test_shift_rhs_ignores_far_field(burgers_shock):
    g = Grid(100.0, 2001)
    F = burgers_shock.fields(0.0, g.x)
    far = np.linalg.norm(F.dS1, axis=0) < 1e-14
    assert far.sum() > 100
    rng = np.random.default_rng(3)
    psi = 1e-3 * np.exp(-((g.x + 1) / 2) ** 2)
    extra = np.where(far, 1e-3 * rng.normal(size=g.N1), 0.0)
    base = shift_rhs(burgers_shock, (F.U_tilde + psi)[:, None, :], F.U_tilde, F.a, F.dS1, g)
    moved = shift_rhs(burgers_shock, (F.U_tilde + psi + extra)[:, None, :], F.U_tilde, F.a, F.dS1, g)
    assert moved == pytest.approx(base, rel=1e-9)


def test_weight_monotone(shock_shock):
    F = shock_shock.fields(30.0, np.linspace(-600, 600, 2401))
    assert np.all(np.diff(F.a_S1) <= 1e-15)
    assert np.all(np.diff(F.a_W) >= -1e-15)
