"""Characteristic structure of ``f'`` at a reference state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SystemModel

# Tolerance ladder:
#   HYPERBOLIC_TOL  eigenvalues must be real and separated by at least this
#   GN_TOL          |c_f| below this counts as a genuine-nonlinearity failure
#   the 4th-order difference for c_f uses h = 1e-3 * max(1, |U|), giving
#   truncation ~h^4 and roundoff ~1e-16/h, both well below 1e-9
HYPERBOLIC_TOL = 1e-9
GN_TOL = 1e-9


class HyperbolicityError(ValueError):
    pass


class GenuineNonlinearityError(ValueError):
    def __init__(self, families):
        self.families = tuple(families)
        super().__init__(f"genuine nonlinearity fails for families {self.families}")


@dataclass(frozen=True)
class EigenFrame:
    """Eigen data of ``f'(U_-)``; family ``i`` (1-based) lives at index ``i-1``.

    ``r[i-1]`` is scaled so that ``l[i-1] = eta''(U_-) r[i-1]`` and
    ``r[i-1] . l[i-1] = 1``, oriented so that ``c_f[i-1] < 0``.
    """

    base: np.ndarray
    lam: np.ndarray
    r: np.ndarray
    l: np.ndarray
    c_f: np.ndarray
    gn_failed: tuple = ()

    @property
    def n(self) -> int:
        return len(self.lam)


def _sorted_eig(A):
    w, V = np.linalg.eig(A)
    if np.max(np.abs(w.imag), initial=0.0) > HYPERBOLIC_TOL:
        raise HyperbolicityError(f"complex characteristic speeds {w}")
    order = np.argsort(w.real)
    w, V = w.real[order], V.real[:, order]
    if len(w) > 1 and np.min(np.diff(w)) < HYPERBOLIC_TOL:
        raise HyperbolicityError(f"repeated characteristic speeds {w}")
    return w, V


def eigenvalue(model: SystemModel, U, i: int) -> float:
    """The ``i``-th (1-based) sorted characteristic speed at ``U``."""
    return float(model.eigenvalues(U)[i - 1])


def right_eigenvector(model: SystemModel, U, i: int) -> np.ndarray:
    """Unnormalized right eigenvector of family ``i`` at ``U``."""
    _, V = _sorted_eig(model.flux_jacobian(np.asarray(U, dtype=float), 0))
    return V[:, i - 1]


def left_eigenvectors(model: SystemModel, U) -> np.ndarray:
    """Rows ``l_j(U)`` with ``l_j f'(U) = lambda_j l_j`` and ``l_j . r_j = 1``."""
    _, V = _sorted_eig(model.flux_jacobian(np.asarray(U, dtype=float), 0))
    return np.linalg.inv(V)


def genuine_nonlinearity_coeff(model: SystemModel, U, frame: EigenFrame, i: int) -> float:
    """``lambda_i'(U) . r_i`` by 4th-order central differences."""
    U = np.asarray(U, dtype=float)
    r = frame.r[i - 1]
    h = 1e-3 * max(1.0, float(np.linalg.norm(U)))
    lam = [eigenvalue(model, U + s * h * r, i) for s in (-2, -1, 1, 2)]
    return (lam[0] - 8 * lam[1] + 8 * lam[2] - lam[3]) / (12 * h)


def flux_hessian_contraction(model: SystemModel, U, r, h: float = 1e-5) -> np.ndarray:
    """``f''(U) : r (x) r`` from central differences of the analytic Jacobian."""
    U = np.asarray(U, dtype=float)
    r = np.asarray(r, dtype=float)
    Jp = model.flux_jacobian(U + h * r, 0)
    Jm = model.flux_jacobian(U - h * r, 0)
    return (Jp - Jm) @ r / (2 * h)


def eigen_frame(model: SystemModel, U_minus, require_gn: bool = True) -> EigenFrame:
    """Build the eigen frame at ``U_minus``.

    Raises
    ------
    HyperbolicityError
        Complex or repeated eigenvalues.
    GenuineNonlinearityError
        Family 1 or family n has ``|c_f| < GN_TOL`` and ``require_gn`` is
        set. Interior families (shear waves for ``d >= 2``) are only listed in
        ``gn_failed``.
    """
    U = model.check_admissible(np.asarray(U_minus, dtype=float).reshape(model.n))
    lam, V = _sorted_eig(model.flux_jacobian(U, 0))
    H = model.entropy_hess(U)
    r = np.empty((model.n, model.n))
    for i in range(model.n):
        v = V[:, i]
        r[i] = v / np.sqrt(v @ H @ v)
    provisional = EigenFrame(U, lam, r, r @ H.T, np.zeros(model.n))
    c_f = np.array(
        [genuine_nonlinearity_coeff(model, U, provisional, i + 1) for i in range(model.n)]
    )
    failed = tuple(i + 1 for i in range(model.n) if abs(c_f[i]) < GN_TOL)
    extremal = tuple(i for i in failed if i in (1, model.n))
    if extremal and require_gn:
        raise GenuineNonlinearityError(extremal)
    flip = np.where(c_f > 0, -1.0, 1.0)
    r = r * flip[:, None]
    c_f = c_f * flip
    l = r @ H.T
    return EigenFrame(U, lam, r, l, c_f, failed)
