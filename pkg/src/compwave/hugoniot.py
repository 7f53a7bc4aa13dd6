"""Shock curves and rarefaction curves through a state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .eigen import EigenFrame, eigenvalue, left_eigenvectors, right_eigenvector
from .model import SystemModel

DELTA0 = 0.1


class ShockCurveError(RuntimeError):
    pass


class RarefactionCurveError(RuntimeError):
    pass


@dataclass(frozen=True)
class ShockConnection:
    """Lax ``i``-shock ``U_L -> U_R`` with speed ``sigma``.

    ``strength = (U_R - U_L) . l`` where ``l`` is the frame's ``l_i``.
    """

    U_L: np.ndarray
    U_R: np.ndarray
    sigma: float
    family: int
    strength: float
    l: np.ndarray
    r: np.ndarray

    def rh_residual(self, model: SystemModel) -> float:
        res = -self.sigma * (self.U_R - self.U_L) + model.flux(self.U_R) - model.flux(self.U_L)
        return float(np.linalg.norm(res))


def shock_curve_point(
    model: SystemModel,
    frame: EigenFrame,
    U_L,
    family: int,
    strength: float,
    delta0: float = DELTA0,
    tol: float = 1e-12,
    maxiter: int = 50,
) -> ShockConnection:
    """Point on the ``family``-shock curve of ``U_L`` at the given strength.

    Newton's method on the Rankine-Hugoniot equations plus the strength
    normalization, starting from the tangent predictor.
    """
    if not 0 < strength <= delta0:
        raise ValueError(f"strength {strength} outside (0, {delta0}]")
    U_L = model.check_admissible(np.asarray(U_L, dtype=float).reshape(model.n))
    n = model.n
    i = family - 1
    l = frame.l[i]
    r_loc = right_eigenvector(model, U_L, family)
    r_loc = r_loc / (r_loc @ l)
    fL = model.flux(U_L)
    U = U_L + strength * r_loc
    sigma = eigenvalue(model, U_L, family) + 0.5 * frame.c_f[i] * strength
    scale = 1.0 + np.linalg.norm(fL)

    for _ in range(maxiter):
        F = np.empty(n + 1)
        F[:n] = model.flux(U) - fL - sigma * (U - U_L)
        F[n] = (U - U_L) @ l - strength
        if np.linalg.norm(F) <= tol * scale:
            break
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = model.flux_jacobian(U) - sigma * np.eye(n)
        J[:n, n] = -(U - U_L)
        J[n, :n] = l
        step = np.linalg.solve(J, -F)
        U = U + step[:n]
        sigma = sigma + step[n]
        if not np.all(np.isfinite(U)) or np.linalg.norm(U - U_L) > 100 * strength * np.linalg.norm(r_loc):
            raise ShockCurveError(f"Newton diverged at strength {strength}")
    else:
        raise ShockCurveError(f"Newton did not converge at strength {strength}; |F|={np.linalg.norm(F):.3e}")

    model.check_admissible(U)
    lam_L = eigenvalue(model, U_L, family)
    lam_R = eigenvalue(model, U, family)
    if not lam_R < sigma < lam_L:
        raise ShockCurveError(
            f"Lax condition violated: lambda(U_R)={lam_R}, sigma={sigma}, lambda(U_L)={lam_L}"
        )
    return ShockConnection(U_L, U, float(sigma), family, float(strength), l.copy(), r_loc)


@dataclass
class RarefactionCurve:
    """Integral curve of ``r_n`` from ``U_m`` parameterized by strength.

    ``s`` runs over ``[0, strength]`` with ``-(U(s) - U_m) . l_n = s``.
    ``state(lam)`` inverts the strictly increasing map ``s -> lambda_n(U(s))``
    through a dense cubic spline in ``lambda``.
    """

    model: SystemModel
    family: int
    U_m: np.ndarray
    U_plus: np.ndarray
    strength: float
    l: np.ndarray
    lam_m: float
    lam_plus: float
    max_transverse_drift: float
    sol: object = field(repr=False)
    _U_of_lam: object = field(repr=False)

    @property
    def lam_span(self) -> float:
        return self.lam_plus - self.lam_m

    def __iter__(self):
        # unpacks as (U_plus, lambda span)
        return iter((self.U_plus, self.lam_span))

    def _check(self, lam):
        lam = np.asarray(lam, dtype=float)
        tol = 1e-9 * max(1.0, abs(self.lam_span))
        if np.any(lam < self.lam_m - tol) or np.any(lam > self.lam_plus + tol):
            raise RarefactionCurveError("characteristic speed outside the rarefaction fan")
        return np.clip(lam, self.lam_m, self.lam_plus)

    def state(self, lam):
        """States on the curve at characteristic speed ``lam`` (array ok)."""
        lam = self._check(lam)
        if self.strength == 0:
            return np.broadcast_to(self.U_m.reshape((-1,) + (1,) * lam.ndim), (self.model.n,) + lam.shape).copy()
        return self._U_of_lam(lam)

    def dstate_dlam(self, lam):
        """``dU/dlambda`` along the curve."""
        lam = self._check(lam)
        if self.strength == 0:
            return np.zeros((self.model.n,) + lam.shape)
        return self._U_of_lam(lam, 1)


def _integral_curve_rhs(model, U, family, l):
    r = right_eigenvector(model, U, family)
    return -r / (r @ l)


def rarefaction_curve_point(
    model: SystemModel,
    frame: EigenFrame,
    U_m,
    strength: float,
    family: int | None = None,
    delta0: float = DELTA0,
    samples: int = 2049,
) -> RarefactionCurve:
    """Integrate the ``n``-integral curve from ``U_m`` to the given strength.

    Strength is ``-(U_+ - U_m) . l_n``; the returned object unpacks as
    ``(U_plus, lambda_span)`` and also carries the speed-parameterized map
    reused by the rarefaction builder.
    """
    family = model.n if family is None else family
    if not 0 <= strength <= delta0:
        raise ValueError(f"strength {strength} outside [0, {delta0}]")
    U_m = model.check_admissible(np.asarray(U_m, dtype=float).reshape(model.n))
    l = frame.l[family - 1]
    lam_m = eigenvalue(model, U_m, family)

    if strength == 0:
        return RarefactionCurve(model, family, U_m, U_m.copy(), 0.0, l.copy(), lam_m, lam_m, 0.0, None, None)

    res = solve_ivp(
        lambda s, U: _integral_curve_rhs(model, U, family, l),
        (0.0, strength),
        U_m,
        method="DOP853",
        rtol=1e-13,
        atol=1e-15,
        dense_output=True,
    )
    if not res.success:
        raise RarefactionCurveError(f"integral curve integration failed: {res.message}")
    sol = res.sol
    s_grid = np.linspace(0.0, strength, samples)
    U_grid = sol(s_grid)
    lam_grid = np.array([eigenvalue(model, U_grid[:, k], family) for k in range(samples)])
    if np.any(np.diff(lam_grid) <= 0):
        raise RarefactionCurveError("characteristic speed not increasing along the curve")

    drift = 0.0
    for k in range(0, samples, max(1, samples // 64)):
        L = left_eigenvectors(model, U_grid[:, k])
        dU = _integral_curve_rhs(model, U_grid[:, k], family, l)
        others = [j for j in range(model.n) if j != family - 1]
        if others:
            drift = max(drift, float(np.max(np.abs(L[others] @ dU))))

    U_plus = U_grid[:, -1].copy()
    model.check_admissible(U_plus)
    return RarefactionCurve(
        model,
        family,
        U_m,
        U_plus,
        float(strength),
        l.copy(),
        float(lam_grid[0]),
        float(lam_grid[-1]),
        drift,
        sol,
        CubicSpline(lam_grid, U_grid, axis=1),
    )
