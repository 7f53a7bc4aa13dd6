"""Method-of-lines solver for the viscous system coupled to the shift ODEs.

Space: second-order central differences for the fluxes and a compact
three-point stencil ``(B_{j+1/2} (w_{j+1} - w_j) - B_{j-1/2} (w_j - w_{j-1})) / dx^2``
for ``d_x (B d_x eta'(U))`` with face-averaged ``B``. The transverse direction
is periodic; the two boundary nodes in ``x_1`` keep their initial values.
Time: classical RK4, with ``X_1, X_n`` advanced inside the same stages.
"""

from __future__ import annotations

import logging
import time as _time
from dataclasses import dataclass, field, replace

import numpy as np

from .config import RunConfig
from .grid import Grid
from .model import InadmissibleStateError, SystemModel
from .superposition import CompositeAnsatz, build_composite, shift_rhs

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class CFLError(SolverError):
    pass


@dataclass
class SimState:
    t: float
    U: np.ndarray
    grid: Grid
    X1: float = 0.0
    Xn: float = 0.0

    def copy(self) -> "SimState":
        return replace(self, U=self.U.copy())


def _apply(M, v):
    """Pointwise matrix-vector product over trailing grid axes."""
    return np.einsum("ij...,j...->i...", M, v)


class Discretization:
    """Semi-discrete right-hand side ``dU/dt = L(U) + forcing(t, x, y)``."""

    def __init__(self, model: SystemModel, grid: Grid, forcing=None):
        if model.d != grid.d:
            raise ValueError(f"model dimension {model.d} does not match grid dimension {grid.d}")
        self.model = model
        self.grid = grid
        self.forcing = forcing
        self._xx = grid.x[None, :]
        self._yy = grid.y[:, None]

    def rhs(self, t: float, U: np.ndarray) -> np.ndarray:
        model, g = self.model, self.grid
        dx = g.dx
        out = np.zeros_like(U)
        F = model.flux(U, 0)
        out[..., 1:-1] = -(F[..., 2:] - F[..., :-2]) / (2 * dx)

        w = model.entropy_grad(U)
        B = model.viscosity(U, 0)
        Bf = 0.5 * (B[..., 1:] + B[..., :-1])
        q = _apply(Bf, (w[..., 1:] - w[..., :-1]) / dx)
        out[..., 1:-1] += (q[..., 1:] - q[..., :-1]) / dx

        if g.d == 2:
            dy = g.dy
            G = model.flux(U, 1)
            out += -(np.roll(G, -1, -2) - np.roll(G, 1, -2)) / (2 * dy)
            B2 = model.viscosity(U, 1)
            B2f = 0.5 * (np.roll(B2, -1, -2) + B2)
            q2 = _apply(B2f, (np.roll(w, -1, -2) - w) / dy)
            out += (q2 - np.roll(q2, 1, -2)) / dy
            out[..., 0] = 0.0
            out[..., -1] = 0.0

        if self.forcing is not None:
            frc = self.forcing(t, self._xx, self._yy)
            out[..., 1:-1] += frc[..., 1:-1]
        return out

    def stable_dt(self, U, c_hyp: float = 0.8, c_par: float = 0.4) -> float:
        """``min(c_hyp dx / lambda_max, c_par / (b_max sum_j 1/dx_j^2))``."""
        model, g = self.model, self.grid
        n = model.n
        pts = U.reshape(n, -1)
        lam = 0.0
        inv2 = 1.0 / g.dx**2 + (1.0 / g.dy**2 if g.d == 2 else 0.0)
        hyp = []
        for j in range(g.d):
            A = np.moveaxis(model.flux_jacobian(pts, j), -1, 0)
            lam = np.max(np.abs(np.linalg.eigvals(A)))
            h = g.dx if j == 0 else g.dy
            hyp.append(c_hyp * h / max(lam, 1e-12))
        b = 0.0
        for j in range(g.d):
            M = np.moveaxis(_matmul(model.viscosity(pts, j), model.entropy_hess(pts)), -1, 0)
            b = max(b, float(np.max(np.abs(np.linalg.eigvals(M)))))
        return float(min(min(hyp), c_par / (b * inv2)))


def _matmul(A, B):
    return np.einsum("ik...,kj...->ij...", A, B)


class Stepper:
    """RK4 for ``(U, X_1, X_n)``; the shift rates use ``shift_rhs`` at each stage."""

    def __init__(self, disc: Discretization, ansatz: CompositeAnsatz | None = None):
        self.disc = disc
        self.ansatz = ansatz

    def shift_rates(self, t, U, X1, Xn):
        if self.ansatz is None:
            return 0.0, 0.0
        F = self.ansatz.fields(t, self.disc.grid.x, X1, Xn)
        a = F.a
        r1 = shift_rhs(self.ansatz, U, F.U_tilde, a, F.dS1, self.disc.grid, 1)
        rn = shift_rhs(self.ansatz, U, F.U_tilde, a, F.dW, self.disc.grid, 2) if self.ansatz.shifts_n else 0.0
        return r1, rn

    def step(self, state: SimState, dt: float) -> SimState:
        f = self.disc.rhs
        t, U, X1, Xn = state.t, state.U, state.X1, state.Xn
        k1 = f(t, U)
        s1 = self.shift_rates(t, U, X1, Xn)
        U2 = U + 0.5 * dt * k1
        X2 = (X1 + 0.5 * dt * s1[0], Xn + 0.5 * dt * s1[1])
        k2 = f(t + 0.5 * dt, U2)
        s2 = self.shift_rates(t + 0.5 * dt, U2, *X2)
        U3 = U + 0.5 * dt * k2
        X3 = (X1 + 0.5 * dt * s2[0], Xn + 0.5 * dt * s2[1])
        k3 = f(t + 0.5 * dt, U3)
        s3 = self.shift_rates(t + 0.5 * dt, U3, *X3)
        U4 = U + dt * k3
        X4 = (X1 + dt * s3[0], Xn + dt * s3[1])
        k4 = f(t + dt, U4)
        s4 = self.shift_rates(t + dt, U4, *X4)
        Unew = U + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        X1new = X1 + dt / 6.0 * (s1[0] + 2 * s2[0] + 2 * s3[0] + s4[0])
        Xnnew = Xn + dt / 6.0 * (s1[1] + 2 * s2[1] + 2 * s3[1] + s4[1])
        if not np.all(np.isfinite(Unew)):
            bad = np.argwhere(~np.isfinite(Unew))[0]
            raise SolverError(f"non-finite value at t={t + dt:.6g}, index {tuple(bad)}")
        return SimState(t + dt, Unew, state.grid, float(X1new), float(Xnnew))


def step(state: SimState, ansatz: CompositeAnsatz | None, model: SystemModel, dt: float, forcing=None, dt_max=None) -> SimState:
    """One RK4 step; ``dt_max`` (if given) is the CFL bound it must respect."""
    if dt_max is not None and dt > dt_max * (1 + 1e-12):
        raise CFLError(f"dt={dt} exceeds the stability bound {dt_max}")
    new = Stepper(Discretization(model, state.grid, forcing), ansatz).step(state, dt)
    model.check_admissible(new.U)
    return new


# ---------------------------------------------------------------- initial data


def sobolev_index(d: int) -> int:
    """Smallest integer strictly larger than ``d / 2``."""
    return d // 2 + 1


@dataclass
class SmallnessReport:
    """Norms entering the initial smallness condition.

    ``l2_halflines``: ``sum_pm ||U_0 - U_pm||_{L^2}`` over the two half-lines.
    ``hm_U0``: homogeneous ``H^m`` seminorm of ``U_0``.
    ``hm_perturbation``: the same seminorm of ``U_0 - U~(0)``.
    """

    m: int
    l2_halflines: float
    hm_U0: float
    hm_perturbation: float
    l2_perturbation: float


def _hm_seminorm(V, grid: Grid, m: int) -> float:
    from .grid import ddx, ddy_periodic

    total = 0.0
    # all mixed derivatives of order m
    for ky in range(0, m + 1 if grid.d == 2 else 1):
        D = V
        for _ in range(m - ky):
            D = ddx(D, grid.dx)
        for _ in range(ky):
            D = ddy_periodic(D, grid.dy)
        total += float(grid.integrate(np.sum(D * D, axis=0)))
    return float(np.sqrt(total))


def perturbation_field(cfg: RunConfig, grid: Grid, n: int) -> np.ndarray:
    """``phi(x, y)`` of shape ``(n, N2, N1)`` (deterministic given the seed)."""
    x = grid.x[None, :]
    y = grid.y[:, None]
    comps = np.asarray(cfg.components if cfg.components else (1.0,) * n, dtype=float)
    if comps.size != n:
        raise ValueError(f"perturbation.components needs {n} entries")
    if cfg.shape == "gaussian":
        prof = np.exp(-((x - cfg.center) ** 2) / cfg.width**2)
    else:
        rng = np.random.default_rng(cfg.seed)
        centers = cfg.center + rng.uniform(-4, 4, 3) * cfg.width
        signs = rng.choice([-1.0, 1.0], 3)
        amps = rng.uniform(0.5, 1.0, 3)
        prof = sum(s * a * np.exp(-((x - c) ** 2) / cfg.width**2) for s, a, c in zip(signs, amps, centers))
        prof = prof / np.max(np.abs(prof))
    trans = 1.0 + cfg.mode * np.cos(2 * np.pi * y)
    return cfg.eps0 * comps[:, None, None] * (prof * trans)[None]


def make_initial_data(cfg: RunConfig, ansatz: CompositeAnsatz, grid: Grid | None = None):
    """``U_0 = U~(0) + phi`` and its smallness norms."""
    grid = cfg.make_grid() if grid is None else grid
    model = ansatz.model
    Ut = ansatz.fields(0.0, grid.x).U_tilde
    phi = perturbation_field(cfg, grid, model.n)
    U0 = Ut[:, None, :] + phi
    try:
        model.check_admissible(U0)
    except InadmissibleStateError as exc:
        raise SolverError(f"perturbation leaves the phase space: {exc}") from None
    m = sobolev_index(grid.d)
    x = grid.x
    left = np.where(x <= 0, 1.0, 0.0)
    dev_m = np.sum((U0 - ansatz.U_minus[:, None, None]) ** 2, axis=0) * left
    dev_p = np.sum((U0 - ansatz.U_plus[:, None, None]) ** 2, axis=0) * (1.0 - left)
    report = SmallnessReport(
        m=m,
        l2_halflines=float(np.sqrt(grid.integrate(dev_m)) + np.sqrt(grid.integrate(dev_p))),
        hm_U0=_hm_seminorm(U0, grid, m),
        hm_perturbation=_hm_seminorm(phi, grid, m),
        l2_perturbation=float(np.sqrt(grid.integrate(np.sum(phi * phi, axis=0)))),
    )
    return SimState(0.0, U0, grid), report


def build_ansatz(cfg: RunConfig, model: SystemModel | None = None) -> CompositeAnsatz:
    model = cfg.make_model() if model is None else model
    return build_composite(
        model,
        cfg.U_minus,
        cfg.kind,
        cfg.delta_S1,
        cfg.delta_Wn if cfg.kind != "single-shock" else 0.0,
        lam_S1=cfg.Lambda,
        gain1=cfg.gain,
    )


def check_domain(cfg: RunConfig, ansatz: CompositeAnsatz) -> None:
    """Waves must stay inside ``[-L, L]`` until ``T_end``, tails below ``e^{-15} delta`` at the ends."""
    T = cfg.T_end
    s1 = ansatz.shock1
    need = abs(s1.sigma) * T + 15.0 / min(s1.kappa_L, s1.kappa_R)
    w = ansatz.wave_n
    if ansatz.kind == "shock-rarefaction":
        need = max(need, ansatz.meta["curve"].lam_plus * (1 + T) + 30.0, -ansatz.meta["curve"].lam_m * (1 + T) + 30.0)
    elif ansatz.kind == "shock-shock":
        need = max(need, abs(w.sigma) * T + 15.0 / min(w.kappa_L, w.kappa_R))
    if cfg.L < need:
        raise SolverError(f"grid.L={cfg.L} too small: waves need L >= {need:.1f} up to T_end={T}")


# ---------------------------------------------------------------- driver


@dataclass
class RunResult:
    config: RunConfig
    ansatz: CompositeAnsatz
    record: object
    state: SimState
    smallness: SmallnessReport
    dt: float
    steps: int
    wall_time: float
    snapshots: list = field(default_factory=list)


def run(cfg: RunConfig, ansatz: CompositeAnsatz | None = None, check_every: int = 200, progress=None) -> RunResult:
    """Integrate to ``T_end`` and record diagnostics every ``cadence`` time units.

    The step is fixed: ``dt = T_end / ceil(T_end / dt_cfl)`` from the initial
    state, re-checked every ``check_every`` steps.
    """
    from .diagnostics import DiagnosticsRecorder

    cfg.validate()
    t0 = _time.perf_counter()
    model = cfg.make_model()
    ansatz = build_ansatz(cfg, model) if ansatz is None else ansatz
    check_domain(cfg, ansatz)
    grid = cfg.make_grid()
    state, small = make_initial_data(cfg, ansatz, grid)
    disc = Discretization(model, grid)
    stepper = Stepper(disc, ansatz)
    dt_cfl = disc.stable_dt(state.U, cfg.cfl_hyp, cfg.cfl_par)
    # cadence must be a whole number of steps
    per = max(1, int(np.ceil(cfg.cadence / dt_cfl)))
    dt = cfg.cadence / per
    nsteps = int(round(cfg.T_end / dt))
    recorder = DiagnosticsRecorder(model, ansatz, grid)
    snaps_at = sorted(cfg.snapshots)
    snapshots = []

    def rec(st):
        rates = stepper.shift_rates(st.t, st.U, st.X1, st.Xn)
        recorder.record(st, *rates)
        while snaps_at and st.t >= snaps_at[0] - 0.5 * dt:
            snapshots.append(st.copy())
            snaps_at.pop(0)

    rec(state)
    try:
        for k in range(1, nsteps + 1):
            state = stepper.step(state, dt)
            state.t = k * dt
            if k % check_every == 0:
                model.check_admissible(state.U)
                bound = disc.stable_dt(state.U, 0.99, 0.99 * 2.78 / 4)
                if dt > bound:
                    raise CFLError(f"dt={dt:.3g} above the stability bound {bound:.3g} at t={state.t:.4g}")
            if k % per == 0:
                rec(state)
                if progress is not None:
                    progress(state)
    except (SolverError, InadmissibleStateError) as exc:
        recorder.aborted = str(exc)
        log.error("run aborted: %s", exc)
        # callers write the rows recorded so far
        exc.partial_record = recorder.finish()
        exc.snapshots = snapshots
        raise
    record = recorder.finish()
    return RunResult(
        config=cfg,
        ansatz=ansatz,
        record=record,
        state=state,
        smallness=small,
        dt=dt,
        steps=nsteps,
        wall_time=_time.perf_counter() - t0,
        snapshots=snapshots,
    )
