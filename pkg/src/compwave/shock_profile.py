"""Viscous shock profiles and their layer coordinate.

A profile ``S`` solves the once-integrated traveling-wave equation

    B_1(S) eta''(S) S' = f(S) - f(U_L) - sigma (S - U_L),

connecting ``U_L`` at ``xi = -inf`` to ``U_R`` at ``xi = +inf``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .eigen import EigenFrame
from .grid import ddx
from .hugoniot import ShockConnection
from .model import SystemModel

# relative deviation from an end state below which shock tails are exponential
TAIL_FLOOR = 1e-7


class ProfileError(RuntimeError):
    pass


class NotLaxProfileError(ProfileError):
    pass


class ProfileNonexistenceError(ProfileError):
    pass


@dataclass
class WaveProfile:
    """A sampled 1-D wave on a uniform grid.

    For shocks ``xi`` is the comoving coordinate ``x1 - sigma t``; for
    rarefaction snapshots ``xi`` is ``x1`` at time ``time``. Beyond the anchors
    ``xi_a`` the profile continues with exponential tails
    ``U_L + D_L exp(kappa_L (xi - xi_aL))`` and ``U_R + D_R exp(-kappa_R (xi - xi_aR))``.
    For shocks the anchors are the outermost nodes where ``|S - U_end|`` is still
    ``TAIL_FLOOR * strength``, so tail deviations stay accurate far below roundoff
    of ``S`` itself; otherwise they are the grid ends.
    """

    kind: str
    family: int
    U_L: np.ndarray
    U_R: np.ndarray
    sigma: float
    strength: float
    l: np.ndarray
    xi: np.ndarray
    S: np.ndarray
    dS: np.ndarray
    k: np.ndarray
    dk: np.ndarray
    kappa_L: float = 0.0
    kappa_R: float = 0.0
    time: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        h = np.diff(self.xi)
        if h.size < 1 or np.any(np.abs(h - h[0]) > 1e-9 * abs(h[0])):
            raise ValueError("profile grids must be uniform and increasing")
        jL, jR = 0, self.xi.size - 1
        if self.kind == "viscous_shock" and self.strength > 0:
            floor = TAIL_FLOOR * self.strength
            far_L = np.nonzero(np.linalg.norm(self.S - self.U_L[:, None], axis=0) >= floor)[0]
            far_R = np.nonzero(np.linalg.norm(self.S - self.U_R[:, None], axis=0) >= floor)[0]
            if far_L.size and far_R.size and far_L[0] < far_R[-1]:
                jL, jR = int(far_L[0]), int(far_R[-1])
        self._anchor = (jL, jR)
        self._D_L = self.S[:, jL] - self.U_L
        self._D_R = self.S[:, jR] - self.U_R

    @property
    def n(self) -> int:
        return self.S.shape[0]

    @property
    def dxi(self) -> float:
        return float(self.xi[1] - self.xi[0])

    def _tails(self, flat):
        jL, jR = self._anchor
        lo, hi = self.xi[jL], self.xi[jR]
        left, right = flat < lo, flat > hi
        eL = np.exp(self.kappa_L * (flat[left] - lo))
        eR = np.exp(-self.kappa_R * (flat[right] - hi))
        return left, right, self._D_L[:, None] * eL, self._D_R[:, None] * eR

    def evaluate(self, xi):
        """``(S, dS/dxi)`` at arbitrary points, shape ``(n,) + xi.shape``."""
        xi = np.asarray(xi, dtype=float)
        flat = xi.ravel()
        S = np.empty((self.n, flat.size))
        dS = np.empty_like(S)
        left, right, devL, devR = self._tails(flat)
        inside = ~(left | right)
        if np.any(inside):
            S[:, inside], dS[:, inside] = self._hermite(flat[inside])
        S[:, left] = self.U_L[:, None] + devL
        dS[:, left] = self.kappa_L * devL
        S[:, right] = self.U_R[:, None] + devR
        dS[:, right] = -self.kappa_R * devR
        shape = (self.n,) + xi.shape
        return S.reshape(shape), dS.reshape(shape)

    def deviation(self, xi, side: str):
        """``S - U_L`` (``side="L"``) or ``S - U_R`` without cancellation in that tail."""
        xi = np.asarray(xi, dtype=float)
        flat = xi.ravel()
        S, _ = self.evaluate(flat)
        left, right, devL, devR = self._tails(flat)
        if side == "L":
            out = S - self.U_L[:, None]
            out[:, left] = devL
        elif side == "R":
            out = S - self.U_R[:, None]
            out[:, right] = devR
        else:
            raise ValueError(f"side must be 'L' or 'R', got {side!r}")
        return out.reshape((self.n,) + xi.shape)

    def _hermite(self, q):
        # piecewise cubic Hermite on the uniform grid, value and derivative
        h = self.dxi
        s = (q - self.xi[0]) / h
        j = np.clip(np.floor(s).astype(np.intp), 0, self.xi.size - 2)
        u = s - j
        u2 = u * u
        u3 = u2 * u
        y0, y1 = self.S[:, j], self.S[:, j + 1]
        m0, m1 = h * self.dS[:, j], h * self.dS[:, j + 1]
        val = (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 + (3 * u2 - 2 * u3) * y1 + (u3 - u2) * m1
        der = ((6 * u2 - 6 * u) * (y0 - y1) + (3 * u2 - 4 * u + 1) * m0 + (3 * u2 - 2 * u) * m1) / h
        return val, der

    def layer(self, xi):
        """``(k, dk/dxi)`` at arbitrary points."""
        return self.sample(xi)[2:]

    def sample(self, xi):
        """``(S, dS, k, dk)`` from a single evaluation."""
        S, dS = self.evaluate(xi)
        # rarefactions measure progress with the opposite sign of l_n
        c = (1.0 if self.kind == "viscous_shock" else -1.0) / self.strength
        dev = S - self.U_L.reshape((-1,) + (1,) * (S.ndim - 1))
        k = c * np.tensordot(self.l, dev, axes=(0, 0))
        dk = c * np.tensordot(self.l, dS, axes=(0, 0))
        return S, dS, k, dk

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            n = self.n
            w.writerow(["xi"] + [f"S{i}" for i in range(n)] + ["k"] + [f"dS{i}" for i in range(n)])
            for j in range(self.xi.size):
                w.writerow(
                    [repr(float(self.xi[j]))]
                    + [repr(float(v)) for v in self.S[:, j]]
                    + [repr(float(self.k[j]))]
                    + [repr(float(v)) for v in self.dS[:, j]]
                )


def profile_rhs(model: SystemModel, U_L, sigma):
    """Vectorized ``S' = [B_1(S) eta''(S)]^{-1} (f(S) - f(U_L) - sigma (S - U_L))``."""
    U_L = np.asarray(U_L, dtype=float)
    fL = model.flux(U_L)

    def rhs(S):
        S = np.asarray(S, dtype=float)
        tail = (1,) * (S.ndim - 1)
        g = model.flux(S) - fL.reshape((-1,) + tail) - sigma * (S - U_L.reshape((-1,) + tail))
        M = np.einsum("ik...,kj...->ij...", model.viscosity(S, 0), model.entropy_hess(S))
        if S.ndim == 1:
            return np.linalg.solve(M, g)
        Mm = np.moveaxis(M.reshape(M.shape[:2] + (-1,)), -1, 0)
        gm = np.moveaxis(g.reshape(g.shape[0], -1), -1, 0)
        out = np.linalg.solve(Mm, gm[..., None])[..., 0]
        return np.moveaxis(out, 0, -1).reshape(S.shape)

    return rhs


def _linearization(model, U_e, sigma):
    M = model.viscosity(U_e, 0) @ model.entropy_hess(U_e)
    A = model.flux_jacobian(U_e, 0) - sigma * np.eye(model.n)
    w, V = np.linalg.eig(np.linalg.solve(M, A))
    return w.real, V.real


def core_rate(connection: ShockConnection, frame: EigenFrame, model: SystemModel) -> float:
    """Leading-order logistic rate ``-c_f delta / (2 B_1(U_-) l . l)``."""
    i = connection.family - 1
    B = model.viscosity(frame.base, 0)
    l = frame.l[i]
    return float(-frame.c_f[i] * connection.strength / (2 * l @ B @ l))


def default_grid(connection: ShockConnection, frame: EigenFrame, model: SystemModel, points_per_width: float = 50.0):
    """Uniform grid of half-length ``40 / kappa_min`` around the layer."""
    sigma = connection.sigma
    rates = []
    for U_e, sgn in ((connection.U_L, 1), (connection.U_R, -1)):
        w, _ = _linearization(model, U_e, sigma)
        w = w[sgn * w > 0]
        rates.append(np.min(np.abs(w)))
    kappa_min = min(rates)
    half = 40.0 / kappa_min
    h = 1.0 / (points_per_width * core_rate(connection, frame, model))
    N = int(np.ceil(2 * half / h)) + 1
    return np.linspace(-half, half, N)


def solve_profile(
    model: SystemModel,
    connection: ShockConnection,
    grid=None,
    frame: EigenFrame | None = None,
    eps_rel: float = 1e-8,
    end_tol: float = 1e-10,
) -> WaveProfile:
    """Solve the viscous shock profile by shooting and resample it on ``grid``.

    The trajectory leaves along the one-dimensional invariant manifold:
    the unstable manifold of ``U_L`` when it is one-dimensional (n-shocks,
    scalar shocks), otherwise the stable manifold of ``U_R`` integrated
    backward (1-shocks of systems). The result is recentred so ``k(0) = 1/2``.

    Raises
    ------
    NotLaxProfileError
        Neither end state has a one-dimensional invariant manifold.
    ProfileNonexistenceError
        The trajectory leaves a ball of radius ``10 delta`` around ``[U_L, U_R]``
        or fails to reach the other end state.
    """
    U_L, U_R, sigma = connection.U_L, connection.U_R, connection.sigma
    delta = connection.strength
    l = connection.l
    rhs = profile_rhs(model, U_L, sigma)

    wL, VL = _linearization(model, U_L, sigma)
    wR, VR = _linearization(model, U_R, sigma)
    if np.sum(wL > 0) == 1:
        start, target, direction = U_L, U_R, 1.0
        j = int(np.argmax(wL))
        mu, v = wL[j], VL[:, j]
        target_rates = -wR[wR < 0]
    elif np.sum(wR < 0) == 1:
        start, target, direction = U_R, U_L, -1.0
        j = int(np.argmin(wR))
        mu, v = wR[j], VR[:, j]
        target_rates = wL[wL > 0]
    else:
        raise NotLaxProfileError(
            f"no one-dimensional invariant manifold: spectra {wL} at U_L, {wR} at U_R"
        )
    if target_rates.size == 0:
        raise NotLaxProfileError("target end state is not hyperbolic")
    v = v / np.linalg.norm(v)
    if v @ (target - start) < 0:
        v = -v
    eps = eps_rel * delta
    z0 = eps * v
    jump = U_R - U_L
    jump2 = float(jump @ jump)
    span = 50.0 * (np.log(1.0 / eps_rel) / abs(mu) + np.log(1.0 / end_tol) / np.min(target_rates))

    def zrhs(t, z):
        return rhs(start + z)

    def reached(t, z):
        return np.linalg.norm(start + z - target) - end_tol * delta

    reached.terminal = True
    reached.direction = -1

    def escaped(t, z):
        S = start + z
        s = np.clip((S - U_L) @ jump / jump2, 0.0, 1.0)
        return 10.0 * delta - np.linalg.norm(S - U_L - s * jump)

    escaped.terminal = True

    res = solve_ivp(
        zrhs,
        (0.0, direction * span),
        z0,
        # stiff: the viscous fast mode is O(1/nu) against an O(delta) slow mode
        method="LSODA",
        rtol=1e-12,
        atol=1e-6 * eps,
        dense_output=True,
        events=(reached, escaped),
    )
    if res.t_events[1].size:
        raise ProfileNonexistenceError(f"profile trajectory escaped at strength {delta}")
    if not res.t_events[0].size:
        raise ProfileNonexistenceError(f"profile trajectory did not reach the end state: {res.message}")
    t_end = float(res.t_events[0][0])
    lo_t, hi_t = sorted((0.0, t_end))

    def S_at(t):
        return start[:, None] + res.sol(np.atleast_1d(t))

    def k_at(t):
        return float(((S_at(t)[:, 0] - U_L) @ l) / delta)

    center = brentq(lambda t: k_at(t) - 0.5, lo_t, hi_t, xtol=1e-14, rtol=1e-15)
    lo, hi = lo_t - center, hi_t - center

    if grid is None:
        grid = default_grid(connection, frame, model) if frame is not None else np.linspace(lo, hi, 4001)
    xi = np.asarray(grid, dtype=float)

    # tails decay at the slowest linearized rate of each end state
    S_lo, S_hi = S_at(lo_t)[:, 0], S_at(hi_t)[:, 0]
    D_lo, D_hi = S_lo - U_L, S_hi - U_R
    kappa_L = float(np.min(wL[wL > 0]))
    kappa_R = float(np.min(-wR[wR < 0]))

    S = np.empty((model.n, xi.size))
    dS = np.empty_like(S)
    inside = (xi >= lo) & (xi <= hi)
    if np.any(inside):
        S[:, inside] = S_at(xi[inside] + center)
        dS[:, inside] = rhs(S[:, inside])
    left = xi < lo
    if np.any(left):
        e = np.exp(kappa_L * (xi[left] - lo))
        S[:, left] = U_L[:, None] + D_lo[:, None] * e
        dS[:, left] = kappa_L * D_lo[:, None] * e
    right = xi > hi
    if np.any(right):
        e = np.exp(-kappa_R * (xi[right] - hi))
        S[:, right] = U_R[:, None] + D_hi[:, None] * e
        dS[:, right] = -kappa_R * D_hi[:, None] * e

    k = ((S - U_L[:, None]).T @ l) / delta
    dk = (dS.T @ l) / delta
    profile = WaveProfile(
        kind="viscous_shock",
        family=connection.family,
        U_L=U_L.copy(),
        U_R=U_R.copy(),
        sigma=sigma,
        strength=delta,
        l=l.copy(),
        xi=xi,
        S=S,
        dS=dS,
        k=_clamp_unit(k),
        dk=dk,
        kappa_L=kappa_L,
        kappa_R=kappa_R,
        meta={
            "shoot_from": "U_L" if direction > 0 else "U_R",
            "manifold_rate": float(mu),
            "trajectory_range": (lo, hi),
            "start_gap": float(np.linalg.norm(z0)),
            "end_gap": float(np.linalg.norm((S_hi if direction > 0 else S_lo) - target)),
        },
    )
    return profile


def _clamp_unit(k):
    k = np.array(k, dtype=float)
    k[(k < 0) & (k > -1e-12)] = 0.0
    k[(k > 1) & (k < 1 + 1e-12)] = 1.0
    return k


def layer_coordinate(profile: WaveProfile) -> np.ndarray:
    """Samples of ``k = (S - U_L) . l / delta`` on the profile grid."""
    return _clamp_unit(((profile.S - profile.U_L[:, None]).T @ profile.l) / profile.strength)


@dataclass
class ProfileStructureReport:
    """Fitted constants of the structural bounds of one profile.

    ``logistic_const``: max of ``|k' + c delta k(1-k)| / (delta^2 k(1-k))``
    with ``c = c_f / (2 B_1(U_-) l . l)``.
    ``leading_const``: max of ``|S' - delta k' r| / (delta^2 k')``.
    ``higher_consts[j]``: max of ``|d^j S| / (delta |S'|)``.
    ``tail_rates``: linearized decay rates at ``U_L`` and ``U_R`` divided by ``delta``.
    ``tail_amplitude``: smallest ``A`` with ``|S - U_end| <= A delta exp(-kappa |xi|)``
    on the grid, ``kappa`` the slower of the two rates.
    """

    logistic_const: float
    leading_const: float
    higher_consts: dict
    tail_rates: tuple
    tail_amplitude: float
    window: tuple


def verify_profile_structure(
    profile: WaveProfile,
    frame: EigenFrame,
    model: SystemModel,
    k_floor: float = 1e-6,
) -> ProfileStructureReport:
    """Measure the structural constants of a solved profile.

    Ratios are evaluated where ``k(1-k) >= k_floor``; outside that window the
    numerator and denominator are both at roundoff level.
    """
    i = profile.family - 1
    delta = profile.strength
    l = frame.l[i]
    r = frame.r[i]
    B = model.viscosity(frame.base, 0)
    c = frame.c_f[i] / (2 * l @ B @ l)
    k, dk = profile.k, profile.dk
    kk = k * (1 - k)
    win = kk >= k_floor
    logistic = np.max(np.abs(dk[win] + c * delta * kk[win]) / (delta**2 * kk[win]))
    lead_res = np.linalg.norm(profile.dS - delta * dk[None, :] * r[:, None], axis=0)
    leading = np.max(lead_res[win] / (delta**2 * dk[win]))

    h = profile.dxi
    d1 = np.linalg.norm(profile.dS, axis=0)
    d2 = ddx(profile.dS, h)
    d3 = ddx(d2, h)
    higher = {
        2: float(np.max(np.linalg.norm(d2, axis=0)[win] / (delta * d1[win]))),
        3: float(np.max(np.linalg.norm(d3, axis=0)[win] / (delta * d1[win]))),
    }

    # envelope |S - U_end| <= A delta exp(-kappa |xi|) with kappa the slower end rate
    xi = profile.xi
    dev = np.where(
        xi < 0,
        np.linalg.norm(profile.S - profile.U_L[:, None], axis=0),
        np.linalg.norm(profile.S - profile.U_R[:, None], axis=0),
    )
    kappa = min(profile.kappa_L, profile.kappa_R)
    tail_amp = float(np.max(dev * np.exp(kappa * np.abs(xi))) / delta)
    return ProfileStructureReport(
        logistic_const=float(logistic),
        leading_const=float(leading),
        higher_consts=higher,
        tail_rates=(profile.kappa_L / delta, profile.kappa_R / delta),
        tail_amplitude=tail_amp,
        window=(float(xi[win][0]), float(xi[win][-1])),
    )
