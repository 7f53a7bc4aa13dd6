"""Viscous system instances of the form

    U_t + f(U)_x1 + sum_j g_j(U)_xj = sum_j (B_j(U) eta'(U)_xj)_xj

All evaluators take state arrays with the component axis first, shape
``(n, ...)``, and broadcast over the trailing axes. Matrix-valued
evaluators return ``(n, n, ...)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


# period of the transverse torus T^{d-1}
TRANSVERSE_PERIOD = 1.0


class InadmissibleStateError(ValueError):
    """Raised when a state lies outside the phase space of a model."""


@dataclass(frozen=True)
class SystemModel:
    """A viscous system ``(n, d, f, g_j, B_j, eta, q_j)``.

    Direction indices ``j`` are 0-based: ``j = 0`` is the normal direction
    ``x1`` (flux ``f``), ``j >= 1`` are the transverse fluxes ``g_{j+1}``.
    """

    name: str
    n: int
    d: int
    flux: Callable[[np.ndarray, int], np.ndarray]
    flux_jacobian: Callable[[np.ndarray, int], np.ndarray]
    viscosity: Callable[[np.ndarray, int], np.ndarray]
    entropy: Callable[[np.ndarray], np.ndarray]
    entropy_grad: Callable[[np.ndarray], np.ndarray]
    entropy_hess: Callable[[np.ndarray], np.ndarray]
    entropy_flux: Callable[[np.ndarray, int], np.ndarray]
    admissible: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def check_admissible(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        ok = np.asarray(self.admissible(U))
        if not np.all(ok) or not np.all(np.isfinite(U)):
            bad = np.argwhere(~ok | ~np.all(np.isfinite(U), axis=0))
            raise InadmissibleStateError(
                f"{self.name}: state outside phase space at index {tuple(bad[0])}"
            )
        return U

    def eigenvalues(self, U, j: int = 0) -> np.ndarray:
        """Sorted real parts of the eigenvalues of ``f_j'(U)`` for one state."""
        A = self.flux_jacobian(np.asarray(U, dtype=float), j)
        return np.sort(np.linalg.eigvals(A).real)


@dataclass(frozen=True)
class BnsParameters:
    nu: float = 0.1
    gamma: float = 1.4
    d: int = 1
    rho_min: float = 1e-8

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"viscosity nu must be positive, got {self.nu}")
        if not self.gamma > 1:
            raise ValueError(f"adiabatic exponent must exceed 1, got {self.gamma}")
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")


def make_bns_model(params: BnsParameters) -> SystemModel:
    """Barotropic Brenner-Navier-Stokes in conserved variables ``(rho, rho u)``.

    Pressure ``p = rho^gamma``, ``Q(rho) = rho^gamma / (gamma - 1)``, entropy
    ``eta = rho |u|^2 / 2 + Q`` and viscosity matrix
    ``B_j = [[1, u^T], [u, u u^T + nu I]]`` for every direction.
    """
    g, nu, d = params.gamma, params.nu, params.d
    n = d + 1
    rho_min = params.rho_min

    def _split(U):
        U = np.asarray(U, dtype=float)
        rho = U[0]
        u = U[1:] / rho
        return rho, u

    def admissible(U):
        return np.asarray(U, dtype=float)[0] > rho_min

    def flux(U, j=0):
        rho, u = _split(U)
        m = np.asarray(U, dtype=float)[1:]
        p = rho**g
        F = np.empty_like(np.asarray(U, dtype=float))
        F[0] = m[j]
        F[1:] = m[j] * u
        F[1 + j] = F[1 + j] + p
        return F

    def flux_jacobian(U, j=0):
        rho, u = _split(U)
        shape = rho.shape
        A = np.zeros((n, n) + shape)
        A[0, 1 + j] = 1.0
        dp = g * rho ** (g - 1)
        for i in range(d):
            A[1 + i, 0] = -u[i] * u[j]
            A[1 + i, 1 + i] = A[1 + i, 1 + i] + u[j]
            A[1 + i, 1 + j] = A[1 + i, 1 + j] + u[i]
        A[1 + j, 0] = A[1 + j, 0] + dp
        return A

    def viscosity(U, j=0):
        rho, u = _split(U)
        B = np.zeros((n, n) + rho.shape)
        B[0, 0] = 1.0
        for i in range(d):
            B[0, 1 + i] = u[i]
            B[1 + i, 0] = u[i]
            for k in range(d):
                B[1 + i, 1 + k] = u[i] * u[k]
            B[1 + i, 1 + i] = B[1 + i, 1 + i] + nu
        return B

    def entropy(U):
        rho, u = _split(U)
        return 0.5 * rho * np.sum(u * u, axis=0) + rho**g / (g - 1)

    def entropy_grad(U):
        rho, u = _split(U)
        G = np.empty((n,) + rho.shape)
        G[0] = g * rho ** (g - 1) / (g - 1) - 0.5 * np.sum(u * u, axis=0)
        G[1:] = u
        return G

    def entropy_hess(U):
        rho, u = _split(U)
        H = np.zeros((n, n) + rho.shape)
        H[0, 0] = g * rho ** (g - 2) + np.sum(u * u, axis=0) / rho
        for i in range(d):
            H[0, 1 + i] = -u[i] / rho
            H[1 + i, 0] = -u[i] / rho
            H[1 + i, 1 + i] = 1.0 / rho
        return H

    def entropy_flux(U, j=0):
        rho, u = _split(U)
        return (entropy(U) + rho**g) * u[j]

    return SystemModel(
        name="bns",
        n=n,
        d=d,
        flux=flux,
        flux_jacobian=flux_jacobian,
        viscosity=viscosity,
        entropy=entropy,
        entropy_grad=entropy_grad,
        entropy_hess=entropy_hess,
        entropy_flux=entropy_flux,
        admissible=admissible,
        params={"nu": nu, "gamma": g, "d": d, "rho_min": rho_min},
    )


def make_burgers_model() -> SystemModel:
    """Scalar viscous Burgers: ``f = u^2/2``, ``eta = u^2/2``, ``B = 1``."""

    def flux(U, j=0):
        U = np.asarray(U, dtype=float)
        return 0.5 * U * U

    def flux_jacobian(U, j=0):
        U = np.asarray(U, dtype=float)
        return U[None]

    def viscosity(U, j=0):
        U = np.asarray(U, dtype=float)
        return np.ones((1, 1) + U.shape[1:])

    def entropy(U):
        U = np.asarray(U, dtype=float)
        return 0.5 * U[0] ** 2

    def entropy_grad(U):
        return np.array(U, dtype=float)

    def entropy_hess(U):
        U = np.asarray(U, dtype=float)
        return np.ones((1, 1) + U.shape[1:])

    def entropy_flux(U, j=0):
        U = np.asarray(U, dtype=float)
        return U[0] ** 3 / 3.0

    def admissible(U):
        return np.isfinite(np.asarray(U, dtype=float)[0])

    return SystemModel(
        name="burgers",
        n=1,
        d=1,
        flux=flux,
        flux_jacobian=flux_jacobian,
        viscosity=viscosity,
        entropy=entropy,
        entropy_grad=entropy_grad,
        entropy_hess=entropy_hess,
        entropy_flux=entropy_flux,
        admissible=admissible,
    )


def make_linear_model(A, B=None, d: int = 1) -> SystemModel:
    """Linear symmetric system ``f(U) = A U`` with ``eta = |U|^2 / 2``.

    ``A`` must be symmetric so that ``eta'' f'`` is symmetric; transverse
    fluxes (``d = 2``) reuse ``A``. Used for verification only.
    """
    A = np.asarray(A, dtype=float)
    if not np.allclose(A, A.T):
        raise ValueError("linear flux matrix must be symmetric")
    n = A.shape[0]
    B = np.eye(n) if B is None else np.asarray(B, dtype=float)

    def _bcast(M, U):
        return np.broadcast_to(M.reshape(M.shape + (1,) * (U.ndim - 1)), M.shape + U.shape[1:]).copy()

    def flux(U, j=0):
        U = np.asarray(U, dtype=float)
        return np.tensordot(A, U, axes=(1, 0))

    def flux_jacobian(U, j=0):
        return _bcast(A, np.asarray(U, dtype=float))

    def viscosity(U, j=0):
        return _bcast(B, np.asarray(U, dtype=float))

    def entropy(U):
        U = np.asarray(U, dtype=float)
        return 0.5 * np.sum(U * U, axis=0)

    def entropy_grad(U):
        return np.array(U, dtype=float)

    def entropy_hess(U):
        return _bcast(np.eye(n), np.asarray(U, dtype=float))

    def entropy_flux(U, j=0):
        U = np.asarray(U, dtype=float)
        return 0.5 * np.sum(U * np.tensordot(A, U, axes=(1, 0)), axis=0)

    def admissible(U):
        return np.all(np.isfinite(np.asarray(U, dtype=float)), axis=0)

    return SystemModel(
        name="linear",
        n=n,
        d=d,
        flux=flux,
        flux_jacobian=flux_jacobian,
        viscosity=viscosity,
        entropy=entropy,
        entropy_grad=entropy_grad,
        entropy_hess=entropy_hess,
        entropy_flux=entropy_flux,
        admissible=admissible,
    )


def check_entropy_compatibility(model: SystemModel, U, h: float = 1e-5) -> float:
    """Max over ``i, j`` of ``|d_i q_j - sum_l d_l eta d_i (F_j)_l|``.

    Both derivatives are taken by central differences with step ``h``, so
    the residual measures structure, not the analytic Jacobians.
    """
    U = model.check_admissible(np.asarray(U, dtype=float).reshape(model.n))
    grad = model.entropy_grad(U)
    worst = 0.0
    for j in range(model.d):
        for i in range(model.n):
            e = np.zeros(model.n)
            e[i] = h
            Up, Um = U + e, U - e
            model.check_admissible(Up)
            model.check_admissible(Um)
            dq = (model.entropy_flux(Up, j) - model.entropy_flux(Um, j)) / (2 * h)
            dF = (model.flux(Up, j) - model.flux(Um, j)) / (2 * h)
            worst = max(worst, abs(float(dq) - float(grad @ dF)))
    return worst
