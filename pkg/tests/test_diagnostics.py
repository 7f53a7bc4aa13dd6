import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compwave.diagnostics import (
    DiagnosticsRecord,
    build_dissipation_basis,
    contraction_inequality_check,
    contraction_summary,
    energy_terms,
    fit_exponential,
    interaction_norms,
    poincare_check,
    project_entropic,
    relative_entropy,
    relative_entropy_flux,
    relative_flux,
    transverse_mode_amplitude,
)
from compwave.grid import Grid
from compwave.model import make_linear_model
from compwave.solver import SimState
from compwave.superposition import build_composite

FUNCTIONALS = ("weighted_rel_entropy", "rel_entropy", "sup_dev", "G_S1", "G_Wn", "Y", "D_0", "D_1",
               "H_C", "H_S1", "H_Wn", "D_p", "D_r", "D_y", "Z", "interaction_work")


@pytest.fixture(scope="module")
def ansatz(bns1):
    return build_composite(bns1, [1.0, 0.0], "shock-rarefaction", 0.05, 0.05, lam_S1=10.0)


@pytest.fixture(scope="module")
def bases(bns1, frame1):
    return build_dissipation_basis(bns1, frame1, 1), build_dissipation_basis(bns1, frame1, 2)


# ---------------------------------------------------------------- relative quantities


def test_relative_quantities_vanish_on_diagonal(bns2, rng):
    U = np.stack([rng.uniform(0.5, 2, 20), rng.normal(size=20), rng.normal(size=20)])
    np.testing.assert_array_equal(relative_entropy(bns2, U, U), 0.0)
    np.testing.assert_allclose(relative_flux(bns2, U, U), 0.0, atol=0)
    np.testing.assert_allclose(relative_entropy_flux(bns2, U, U), 0.0, atol=0)


def test_burgers_relative_quantities(burgers):
    u, v = np.array([[1.0]]), np.array([[0.0]])
    assert relative_entropy_flux(burgers, u, v)[0] == pytest.approx(1 / 3)
    assert relative_entropy(burgers, u, v)[0] == pytest.approx(0.5)
    assert relative_flux(burgers, u, v)[0, 0] == pytest.approx(0.5)


def test_linear_relative_flux_vanishes(rng):
    model = make_linear_model(np.array([[0.0, 2.0], [2.0, 1.0]]))
    U, V = rng.normal(size=(2, 10)), rng.normal(size=(2, 10))
    np.testing.assert_allclose(relative_flux(model, U, V), 0, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(
    rho=st.floats(0.5, 2.0),
    m=st.floats(-1.0, 1.0),
    scale=st.floats(1e-9, 0.3),
    angle=st.floats(0, 2 * np.pi),
)
def test_relative_entropy_integral_form(bns1, rho, m, scale, angle):
    # both evaluation routes agree and the value is nonnegative
    V = np.array([[rho], [m]])
    U = V + scale * np.array([[np.cos(angle)], [np.sin(angle)]]) * min(rho, 1.0) * 0.5
    got = relative_entropy(bns1, U, V)[0]
    psi = (U - V)[:, 0]
    H = bns1.entropy_hess(V[:, 0])
    assert got >= 0
    assert got == pytest.approx(0.5 * psi @ H @ psi, rel=0.3 * scale / min(rho, 1.0) + 1e-9)
    direct = (bns1.entropy(U) - bns1.entropy(V) - bns1.entropy_grad(V)[:, 0] @ psi)[0]
    # the direct form loses about 1e-16 times the entropy itself to cancellation
    assert got == pytest.approx(direct, rel=1e-6, abs=1e-13)


# ---------------------------------------------------------------- bases and projections


def test_scalar_basis_is_l(burgers, burgers_frame):
    b = build_dissipation_basis(burgers, burgers_frame, 1)
    np.testing.assert_allclose(b.V, burgers_frame.l[:, :1].T)


@pytest.mark.parametrize("family", [1, 2])
def test_basis_orthogonality(bns1, frame1, family):
    b = build_dissipation_basis(bns1, frame1, family)
    assert b.residual() <= 1e-10
    np.testing.assert_allclose(b.V[:, b.designated], frame1.l[family - 1])
    B = bns1.viscosity(frame1.base)
    for i in range(2):
        if i != b.designated:
            assert b.V[:, i] @ B @ b.V[:, i] == pytest.approx(1.0)


def test_basis_orthogonality_2d(bns2):
    from compwave.eigen import eigen_frame

    fr = eigen_frame(bns2, [1.0, 0.2, -0.1])
    for family in (1, 3):
        assert build_dissipation_basis(bns2, fr, family).residual() <= 1e-10


@settings(max_examples=30, deadline=None)
@given(w=st.lists(st.floats(-1, 1), min_size=2, max_size=2))
def test_projection_reconstructs(bns1, bases, w):
    w = np.array(w)
    for b in bases:
        c = np.linalg.solve(b.V, w)
        np.testing.assert_allclose(b.V @ c, w, atol=1e-9)


def test_project_designated_direction(bns1, frame1, bases):
    c = 0.01
    Ut = np.array([[1.0], [0.0]])
    # U with eta'(U) - eta'(U~) = c l_1, found by Newton
    U = Ut.copy()
    target = bns1.entropy_grad(Ut)[:, 0] + c * frame1.l[0]
    for _ in range(30):
        U[:, 0] -= np.linalg.solve(bns1.entropy_hess(U[:, 0]), bns1.entropy_grad(U[:, 0]) - target)
    mu = project_entropic(bns1, U, Ut, bases[0])
    assert mu[0, 0] == pytest.approx(c, rel=1e-10)
    assert mu[1, 0] == pytest.approx(0.0, abs=1e-12)
    assert np.all(project_entropic(bns1, Ut, Ut, bases[0]) == 0)


def test_projection_cross_consistency(bns1, bases, rng):
    # both bases describe the same eta'(U) - eta'(U~)
    Ut = np.stack([1 + 0.1 * rng.random(9), 0.1 * rng.normal(size=9)])
    U = Ut + 1e-3 * rng.normal(size=Ut.shape)
    w = bns1.entropy_grad(U) - bns1.entropy_grad(Ut)
    for b in bases:
        np.testing.assert_allclose(b.V @ project_entropic(bns1, U, Ut, b), w, atol=1e-14)


# ---------------------------------------------------------------- energy terms


def test_energy_terms_vanish_at_ansatz(bns1, frame1, ansatz, bases):
    g = Grid(400.0, 1601)
    F = ansatz.fields(5.0, g.x)
    state = SimState(5.0, F.U_tilde[:, None, :].copy(), g)
    row = energy_terms(bns1, state, ansatz, frame1, bases)
    for k in FUNCTIONALS:
        assert row[k] == 0.0, k


def test_energy_terms_signs_and_dual_route(bns1, frame1, ansatz, bases):
    g = Grid(400.0, 3201)
    F = ansatz.fields(5.0, g.x)
    phi = 1e-3 * np.exp(-(g.x / 5.0) ** 2)
    state = SimState(5.0, (F.U_tilde + phi)[:, None, :], g)
    row = energy_terms(bns1, state, ansatz, frame1, bases, dX1=1e-4)
    assert row["H_S1"] >= 0 and row["H_C"] >= 0
    assert row["rel_entropy"] > 0 and row["weighted_rel_entropy"] > 0
    a = F.a
    # weighted entropy sandwiched by the weight bounds
    assert a.min() * row["rel_entropy"] <= row["weighted_rel_entropy"] <= a.max() * row["rel_entropy"]
    # the projected dissipation is comparable to the direct one
    ratio = (row["D_p"] + row["D_r"]) / row["D_0"]
    assert 0.1 < ratio < 10
    assert row["Y"] == pytest.approx(ansatz.delta_S1 * 1e-8)


def test_burgers_has_no_transverse_terms(burgers, burgers_frame):
    ans = build_composite(burgers, [1.0], "single-shock", 1.0, lam_S1=0.25)
    g = Grid(40.0, 801)
    F = ans.fields(0.0, g.x)
    state = SimState(0.0, (F.U_tilde + 0.01 * np.exp(-g.x**2))[:, None, :], g)
    b = build_dissipation_basis(burgers, burgers_frame, 1)
    row = energy_terms(burgers, state, ans, burgers_frame, (b, b))
    assert row["H_C"] == 0.0 and row["D_r"] == 0.0 and row["D_y"] == 0.0


def test_transverse_mode_amplitude():
    g = Grid(10.0, 101, 16, 2)
    U = np.zeros((1, 16, 101))
    U[0] = 0.3 * np.cos(2 * np.pi * g.y)[:, None]
    assert transverse_mode_amplitude(U, g) == pytest.approx(0.3 * np.sqrt(20.0), rel=1e-12)


# ---------------------------------------------------------------- Poincare


def test_poincare_constant_and_linear():
    lhs, rhs = poincare_check(lambda y: np.full_like(y, 3.0))
    assert (lhs, rhs) == (0.0, 0.0)
    lhs, rhs = poincare_check(lambda y: y)
    assert lhs == pytest.approx(1 / 12, abs=1e-9)
    assert rhs == pytest.approx(1 / 12, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(coef=st.lists(st.floats(-5, 5), min_size=1, max_size=11))
def test_poincare_polynomials(coef):
    p = np.polynomial.Polynomial(coef)
    lhs, rhs = poincare_check(p)
    assert lhs <= rhs * (1 + 1e-9) + 1e-14


def test_poincare_rejects_nonfinite():
    with pytest.raises(ValueError):
        poincare_check(lambda y: np.where(y > 0.5, np.inf, y))


# ---------------------------------------------------------------- interactions and fits


def test_interaction_norms_degenerate(bns1):
    for kind in ("single-shock", "shock-rarefaction"):
        ans = build_composite(bns1, [1.0, 0.0], kind, 0.05, 0.0)
        norms = interaction_norms(ans, 10.0)
        assert all(v == 0.0 for v in norms.values())


def test_interaction_norms_decay(bns1):
    ans = build_composite(bns1, [1.0, 0.0], "shock-shock", 0.05, 0.05)
    tot = [interaction_norms(ans, t)["total"] for t in (0.0, 200.0, 400.0, 600.0)]
    assert tot[0] > 0
    assert np.all(np.diff(tot) < 0)


def test_fit_exponential_exact():
    t = np.linspace(0, 10, 11)
    fit = fit_exponential(t, 3.0 * np.exp(-0.7 * t))
    assert fit.A == pytest.approx(3.0) and fit.rate == pytest.approx(0.7) and fit.r2 == pytest.approx(1.0)


def _row(t, F, **kw):
    base = {"t": t, "weighted_rel_entropy": F, "D_0": 0.0, "G_S1": 0.0, "G_Wn": 0.0, "Y": 0.0,
            "interaction_work": 0.0, "sup_dev": 0.0, "dX1": 0.0}
    base.update(kw)
    return base


def test_contraction_check_steady():
    r = contraction_inequality_check(_row(1.0, 0.0), _row(0.0, 0.0))
    assert r.derivative == 0 and r.majorant == 0 and r.dissipation == 0 and not r.flagged
    with pytest.raises(ValueError):
        contraction_inequality_check(_row(0.0, 0.0), _row(1.0, 0.0))


def test_contraction_summary_counts(ansatz):
    F = [1.0, 0.9, 0.8, 0.85, 0.7]
    rec = DiagnosticsRecord([_row(float(i), f, sup_dev=f, dX1=f, D_0=1.0) for i, f in enumerate(F)])
    s = contraction_summary(rec, ansatz, t_after=0.0)
    assert s.nonincreasing_fraction == pytest.approx(0.75)
    assert s.positive_increase == pytest.approx(0.05)
    assert s.sup_ratio == pytest.approx(0.7)
