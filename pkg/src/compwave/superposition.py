"""Composite ansatz: shifted waves, weight, shift ODE and error fields.

A shift ``X`` acts as ``h^X(t, x) = h(t, x + X(t))``, so the shifted 1-shock
is ``S_1(x + X_1 - sigma_1 t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eigen import EigenFrame, eigen_frame
from .grid import Grid, ddx
from .hugoniot import ShockConnection, rarefaction_curve_point, shock_curve_point
from .model import SystemModel
from .rarefaction import RarefactionWave
from .shock_profile import WaveProfile, solve_profile

KINDS = ("shock-shock", "shock-rarefaction", "single-shock")

DEFAULT_LAMBDA = 10.0
DEFAULT_GAIN = 5.0


@dataclass
class AnsatzFields:
    """The waves and weight sampled on a normal grid at one time.

    Vector fields are ``(n, N1)``, scalar fields ``(N1,)``.
    """

    t: float
    x: np.ndarray
    S1: np.ndarray
    dS1: np.ndarray
    k1: np.ndarray
    dk1: np.ndarray
    W: np.ndarray
    dW: np.ndarray
    kW: np.ndarray
    dkW: np.ndarray
    U_tilde: np.ndarray
    a_S1: np.ndarray
    a_W: np.ndarray

    @property
    def a(self) -> np.ndarray:
        return self.a_S1 + self.a_W


@dataclass
class CompositeAnsatz:
    """Viscous 1-shock plus an n-wave (viscous shock, rarefaction or nothing).

    ``kind == "single-shock"`` keeps ``W_n`` degenerate (``U_+ = U_m``), which
    makes the ansatz the single shifted 1-shock.
    """

    model: SystemModel
    frame: EigenFrame
    kind: str
    shock1: WaveProfile
    wave_n: object
    U_m: np.ndarray
    U_plus: np.ndarray
    lam_S1: float = DEFAULT_LAMBDA
    lam_Wn: float = DEFAULT_LAMBDA
    gain1: float = DEFAULT_GAIN
    gain_n: float = DEFAULT_GAIN
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown composite kind {self.kind!r}")
        for name, lam, delta in (("S1", self.lam_S1, self.delta_S1), ("Wn", self.lam_Wn, self.delta_Wn)):
            if lam < 0 or lam * delta >= 1:
                raise ValueError(f"weight amplitude for {name} must satisfy 0 <= Lambda delta < 1")

    @property
    def U_minus(self) -> np.ndarray:
        return self.shock1.U_L

    @property
    def delta_S1(self) -> float:
        return self.shock1.strength

    @property
    def delta_Wn(self) -> float:
        return 0.0 if self.wave_n is None else self.wave_n.strength

    @property
    def shifts_n(self) -> bool:
        """Whether ``X_n`` is a dynamic variable (only for a second shock)."""
        return self.kind == "shock-shock"

    def _wave_n(self, t, x, Xn):
        n = self.model.n
        if self.wave_n is None:
            z = np.zeros((n, x.size))
            return self.U_m[:, None] + z, z, np.zeros(x.size), np.zeros(x.size)
        if isinstance(self.wave_n, WaveProfile):
            return self.wave_n.sample(x + Xn - self.wave_n.sigma * t)
        W, dW = self.wave_n.evaluate(t, x)
        delta = self.wave_n.strength
        if delta == 0:
            return W, dW, np.zeros(x.size), np.zeros(x.size)
        l = self.frame.l[-1]
        k = -((W - self.U_m[:, None]).T @ l) / delta
        dk = -(dW.T @ l) / delta
        return W, dW, k, dk

    def fields(self, t: float, x, X1: float = 0.0, Xn: float = 0.0) -> AnsatzFields:
        x = np.asarray(x, dtype=float)
        if not self.shifts_n:
            Xn = 0.0
        xi1 = x + X1 - self.shock1.sigma * t
        S1, dS1, k1, dk1 = self.shock1.sample(xi1)
        W, dW, kW, dkW = self._wave_n(t, x, Xn)
        return AnsatzFields(
            t=t,
            x=x,
            S1=S1,
            dS1=dS1,
            k1=k1,
            dk1=dk1,
            W=W,
            dW=dW,
            kW=kW,
            dkW=dkW,
            U_tilde=S1 + W - self.U_m[:, None],
            a_S1=1.0 - self.lam_S1 * self.delta_S1 * k1,
            a_W=1.0 + self.lam_Wn * self.delta_Wn * kW,
        )


def superposition_wave(ansatz: CompositeAnsatz, t: float, x, X1: float = 0.0, Xn: float = 0.0) -> np.ndarray:
    """``U~ = S_1^{X_1} + W_n^{X_n} - U_m`` on the normal grid."""
    return ansatz.fields(t, x, X1, Xn).U_tilde


def weight_field(ansatz: CompositeAnsatz, t: float, x, X1: float = 0.0, Xn: float = 0.0) -> np.ndarray:
    """``a = a_{S1}^{X_1} + a_{Wn}^{X_n}``."""
    return ansatz.fields(t, x, X1, Xn).a


def shift_rhs(ansatz: CompositeAnsatz, U, U_tilde, a, dS, grid: Grid, i: int = 1) -> float:
    """``dX_i/dt = (C_i / delta_i) int a eta''(U~)(U - U~) . d_x S_i^{X_i} dx``.

    ``U`` is ``(n, N2, N1)``; ``U_tilde``, ``dS`` are ``(n, N1)``; ``a`` is ``(N1,)``.
    The transverse integral is included for ``d = 2``.
    """
    if i == 1:
        gain, delta = ansatz.gain1, ansatz.delta_S1
    else:
        if not ansatz.shifts_n:
            return 0.0
        gain, delta = ansatz.gain_n, ansatz.delta_Wn
    H = ansatz.model.entropy_hess(U_tilde)
    # eta''(U~) dS, symmetric so the contraction order does not matter
    Hd = np.einsum("ijx,jx->ix", H, dS)
    psi = np.asarray(U, dtype=float) - U_tilde[:, None, :]
    integrand = a[None, :] * np.einsum("ix,iyx->yx", Hd, psi)
    return float(gain / delta * np.sum(grid.integrate(integrand)))


def ansatz_error_fields(ansatz: CompositeAnsatz, t: float, x, X1=0.0, Xn=0.0, dX1=0.0, dXn=0.0, fields=None):
    """``(Z, E1, E2)`` on the normal grid; derivatives by 4th-order differences."""
    model = ansatz.model
    F = ansatz.fields(t, x, X1, Xn) if fields is None else fields
    h = float(x[1] - x[0])

    def visc(V):
        dE = ddx(model.entropy_grad(V), h)
        return ddx(np.einsum("ijx,jx->ix", model.viscosity(V, 0), dE), h)

    Z = dX1 * F.dS1
    if ansatz.delta_Wn == 0:
        # U~ is the single shock, so both errors vanish identically
        return Z, np.zeros_like(Z), np.zeros_like(Z)
    E1 = ddx(model.flux(F.U_tilde) - model.flux(F.S1) - model.flux(F.W), h)
    E2 = visc(F.S1) - visc(F.U_tilde)
    if ansatz.kind == "shock-shock":
        Z = Z + dXn * F.dW
        E2 = E2 + visc(F.W)
    return Z, E1, E2


def build_composite(
    model: SystemModel,
    U_minus,
    kind: str,
    delta_S1: float,
    delta_Wn: float = 0.0,
    lam_S1: float = DEFAULT_LAMBDA,
    lam_Wn: float | None = None,
    gain1: float = DEFAULT_GAIN,
    gain_n: float | None = None,
    delta0: float | None = None,
    profile_grids=(None, None),
) -> CompositeAnsatz:
    """Solve both waves of the composite starting at ``U_-``.

    ``delta0`` caps the strengths (defaults to the larger requested strength,
    so strong scalar shocks are allowed for verification runs).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown composite kind {kind!r}")
    U_minus = model.check_admissible(np.asarray(U_minus, dtype=float).reshape(model.n))
    cap = max(delta_S1, delta_Wn) if delta0 is None else delta0
    frame = eigen_frame(model, U_minus)
    conn1 = shock_curve_point(model, frame, U_minus, 1, delta_S1, delta0=cap)
    shock1 = solve_profile(model, conn1, profile_grids[0], frame)
    U_m = conn1.U_R
    meta = {"connection1": conn1}
    if kind == "shock-shock":
        conn_n = shock_curve_point(model, frame, U_m, model.n, delta_Wn, delta0=cap)
        wave_n = solve_profile(model, conn_n, profile_grids[1], frame)
        U_plus = conn_n.U_R
        meta["connection_n"] = conn_n
    elif kind == "shock-rarefaction":
        curve = rarefaction_curve_point(model, frame, U_m, delta_Wn, delta0=cap)
        wave_n = RarefactionWave.from_curve(curve)
        U_plus = curve.U_plus
        meta["curve"] = curve
    else:
        wave_n, U_plus = None, U_m.copy()
    return CompositeAnsatz(
        model=model,
        frame=frame,
        kind=kind,
        shock1=shock1,
        wave_n=wave_n,
        U_m=U_m.copy(),
        U_plus=U_plus.copy(),
        lam_S1=lam_S1,
        lam_Wn=lam_S1 if lam_Wn is None else lam_Wn,
        gain1=gain1,
        gain_n=gain1 if gain_n is None else gain_n,
        meta=meta,
    )


def connection_of(ansatz: CompositeAnsatz) -> ShockConnection:
    return ansatz.meta["connection1"]
