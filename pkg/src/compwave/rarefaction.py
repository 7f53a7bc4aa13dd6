"""Smooth approximate rarefaction waves driven by an inviscid Burgers fan."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .eigen import EigenFrame
from .hugoniot import RarefactionCurve
from .model import SystemModel
from .shock_profile import WaveProfile

# time offset: the fan is evaluated at 1 + t so that it is smooth at t = 0
TIME_OFFSET = 1.0


class RarefactionWindowError(RuntimeError):
    pass


@dataclass(frozen=True)
class BurgersFan:
    """Inviscid Burgers solution with data ``(w_m+w_p)/2 + (w_p-w_m)/2 tanh(x)``."""

    w_m: float
    w_p: float

    def __post_init__(self):
        if self.w_p < self.w_m:
            raise ValueError(f"fan needs w_m <= w_p, got {self.w_m} > {self.w_p}")

    def w0(self, xi):
        return self.w_m + (self.w_p - self.w_m) * expit(2.0 * np.asarray(xi, dtype=float))

    def dw0(self, xi):
        # (w_p - w_m)/2 sech^2 without cancellation in the tails
        e = np.exp(-2.0 * np.abs(np.asarray(xi, dtype=float)))
        return 2.0 * (self.w_p - self.w_m) * e / (1.0 + e) ** 2

    def foot(self, t, x, tol: float = 1e-12, maxiter: int = 200):
        """Characteristic foot ``xi`` with ``xi + w0(xi) t = x``.

        Vectorized Newton with a bisection fallback inside the bracket
        ``[x - w_p t, x - w_m t]``.
        """
        if t < 0:
            raise ValueError("fan evaluated at negative time")
        x = np.asarray(x, dtype=float)
        lo = x - self.w_p * t
        hi = x - self.w_m * t
        xi = 0.5 * (lo + hi)
        thresh = tol * (1.0 + np.abs(x))
        prev = np.full(x.shape, np.inf)
        for _ in range(maxiter):
            F = xi + self.w0(xi) * t - x
            done = np.abs(F) <= thresh
            if np.all(done):
                break
            lo = np.where(F < 0, xi, lo)
            hi = np.where(F > 0, xi, hi)
            trial = xi - F / (1.0 + t * self.dw0(xi))
            # bisect when Newton leaves the bracket or stalls (cycling between the flat tails)
            bad = (trial <= lo) | (trial >= hi) | (np.abs(F) > 0.5 * prev)
            prev = np.abs(F)
            xi = np.where(done, xi, np.where(bad, 0.5 * (lo + hi), trial))
        else:
            raise RuntimeError("characteristic foot did not converge")
        return xi


def burgers_eval(fan: BurgersFan, t: float, x, derivative: bool = False):
    """``w(t, x)`` and optionally ``dw/dx = w0'/(1 + t w0')`` at the foot."""
    xi = fan.foot(t, x)
    w = fan.w0(xi)
    if not derivative:
        return w
    d = fan.dw0(xi)
    return w, d / (1.0 + t * d)


@dataclass(frozen=True)
class RarefactionWave:
    """``R(t, x) = U(w(1 + t, x))`` along an n-integral curve."""

    curve: RarefactionCurve
    fan: BurgersFan

    @classmethod
    def from_curve(cls, curve: RarefactionCurve) -> "RarefactionWave":
        return cls(curve, BurgersFan(curve.lam_m, curve.lam_plus))

    @property
    def strength(self) -> float:
        return self.curve.strength

    def evaluate(self, t: float, x):
        """``(R, dR/dx)`` with shape ``(n,) + x.shape``."""
        x = np.asarray(x, dtype=float)
        if self.curve.strength == 0:
            R = self.curve.state(np.full(x.shape, self.curve.lam_m))
            return R, np.zeros_like(R)
        w, wx = burgers_eval(self.fan, TIME_OFFSET + t, x, derivative=True)
        return self.curve.state(w), self.curve.dstate_dlam(w) * wx


def build_rarefaction(
    model: SystemModel,
    frame: EigenFrame,
    curve: RarefactionCurve,
    t: float,
    grid,
    fan: BurgersFan | None = None,
) -> WaveProfile:
    """Snapshot of the smooth rarefaction at time ``t`` on ``grid``.

    ``k = -(R - U_m) . l_n / delta_R`` runs from 0 at ``-inf`` to 1 at ``+inf``.
    """
    fan = BurgersFan(curve.lam_m, curve.lam_plus) if fan is None else fan
    if abs(fan.w_m - curve.lam_m) > 1e-12 or abs(fan.w_p - curve.lam_plus) > 1e-12:
        raise ValueError("fan end speeds must equal lambda_n at the curve end states")
    wave = RarefactionWave(curve, fan)
    xi = np.asarray(grid, dtype=float)
    R, dR = wave.evaluate(t, xi)
    l = frame.l[curve.family - 1]
    delta = curve.strength
    if delta > 0:
        k = -((R - curve.U_m[:, None]).T @ l) / delta
        dk = -(dR.T @ l) / delta
    else:
        k = np.zeros(xi.size)
        dk = np.zeros(xi.size)
    return WaveProfile(
        kind="rarefaction",
        family=curve.family,
        U_L=curve.U_m.copy(),
        U_R=curve.U_plus.copy(),
        sigma=0.0,
        strength=delta,
        l=l.copy(),
        xi=xi,
        S=R,
        dS=dR,
        k=np.clip(k, 0.0, 1.0) if np.all((k > -1e-12) & (k < 1 + 1e-12)) else k,
        dk=dk,
        kappa_L=2.0,
        kappa_R=2.0,
        time=float(t),
    )


@dataclass
class RarefactionDecayReport:
    """Fitted decay of ``||d_x R||_{L^p}`` against ``1 + t``.

    ``slopes[p]`` is the least-squares slope of ``log ||d_x R||_p`` against
    ``log(1 + t)``; ``expected[p] = -1 + 1/p``. ``saturation_time`` is the
    time ``1/delta - 1`` before which the sup bound is flat. ``tail_const`` is
    ``max |R - U_m| exp(2 |x - lambda_m (1+t)|) / delta`` left of the fan.
    """

    times: np.ndarray
    norms: dict
    slopes: dict
    expected: dict
    saturation_time: float
    tail_const: float

    def to_csv(self, path) -> None:
        ps = list(self.norms)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"norm_p{_pname(p)}" for p in ps])
            for j, t in enumerate(self.times):
                w.writerow([repr(float(t))] + [repr(float(self.norms[p][j])) for p in ps])


def _pname(p):
    return "inf" if np.isinf(p) else f"{p:g}"


def lp_norm(values, dx: float, p: float) -> float:
    """Trapezoid ``L^p`` norm of a vector field sampled on a uniform grid."""
    mag = np.linalg.norm(values, axis=0) if values.ndim > 1 else np.abs(values)
    if np.isinf(p):
        return float(np.max(mag))
    return float(np.trapezoid(mag**p, dx=dx) ** (1.0 / p))


def verify_rarefaction_decay(
    model: SystemModel,
    curve: RarefactionCurve,
    times,
    p_list=(1, 2, 4, np.inf),
    dx: float = 0.05,
    margin: float = 30.0,
) -> RarefactionDecayReport:
    """Measure ``||d_x R(t)||_{L^p}`` on ``[w_m(1+t) - margin, w_p(1+t) + margin]``.

    Raises
    ------
    RarefactionWindowError
        The derivative at the window edges is not negligible.
    """
    wave = RarefactionWave.from_curve(curve)
    times = np.asarray(times, dtype=float)
    norms = {p: np.empty(times.size) for p in p_list}
    tail = 0.0
    for j, t in enumerate(times):
        s = TIME_OFFSET + t
        a, b = curve.lam_m * s - margin, curve.lam_plus * s + margin
        N = int(np.ceil((b - a) / dx)) + 1
        x = np.linspace(a, b, N)
        R, dR = wave.evaluate(t, x)
        mag = np.linalg.norm(dR, axis=0)
        if max(mag[0], mag[-1]) > 1e-8 * np.max(mag):
            raise RarefactionWindowError(f"fan not contained in window at t={t}")
        h = x[1] - x[0]
        for p in p_list:
            norms[p][j] = lp_norm(dR, h, p)
        left = x < curve.lam_m * s
        dev = np.linalg.norm(R[:, left] - curve.U_m[:, None], axis=0)
        tail = max(tail, float(np.max(dev * np.exp(2 * np.abs(x[left] - curve.lam_m * s)), initial=0.0)))
    logt = np.log(TIME_OFFSET + times)
    slopes = {p: float(np.polyfit(logt, np.log(norms[p]), 1)[0]) for p in p_list}
    expected = {p: -1.0 + (0.0 if np.isinf(p) else 1.0 / p) for p in p_list}
    return RarefactionDecayReport(
        times=times,
        norms=norms,
        slopes=slopes,
        expected=expected,
        saturation_time=float(1.0 / curve.strength - 1.0) if curve.strength > 0 else float("inf"),
        tail_const=tail / curve.strength if curve.strength > 0 else 0.0,
    )
