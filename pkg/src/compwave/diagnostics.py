"""Functionals of the weighted relative-entropy method and standalone checks.

All spatial integrals use :meth:`Grid.integrate` (trapezoid in ``x``,
rectangle rule on the periodic ``y``); derivatives use the 4th-order stencils
of :mod:`compwave.grid`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial.legendre import leggauss

from .eigen import EigenFrame
from .grid import Grid, ddx, ddy_periodic
from .model import SystemModel
from .solver import SimState, sobolev_index
from .superposition import AnsatzFields, CompositeAnsatz, ansatz_error_fields


# ---------------------------------------------------------------- relative quantities


def _bshape(v, like):
    v = np.asarray(v, dtype=float)
    return v.reshape(v.shape + (1,) * (np.ndim(like) - v.ndim))


# Gauss-Legendre rule on [0, 1] for the integral form of eta(U|V)
_GL_S, _GL_W = leggauss(6)
_GL_S, _GL_W = 0.5 * (_GL_S + 1.0), 0.5 * _GL_W
# relative size of U - V below which the integral form is used
QUAD_SWITCH = 0.05


def relative_entropy(model: SystemModel, U, V) -> np.ndarray:
    """``eta(U|V) = eta(U) - eta(V) - eta'(V) . (U - V)`` pointwise.

    Where ``|U - V|`` is small the three terms cancel to roundoff, so there the
    equivalent ``int_0^1 (1 - s) psi . eta''(V + s psi) psi ds`` is evaluated
    by Gauss-Legendre; it has no cancellation and is exact for cubic ``eta``.
    """
    U = model.check_admissible(U)
    V = model.check_admissible(np.broadcast_to(_bshape(V, U), np.shape(U)))
    psi = U - V
    out = model.entropy(U) - model.entropy(V) - np.sum(model.entropy_grad(V) * psi, axis=0)
    small = np.sqrt(np.sum(psi * psi, axis=0)) <= QUAD_SWITCH * (1.0 + np.sqrt(np.sum(V * V, axis=0)))
    if np.any(small):
        ps, vs = psi[:, small], V[:, small]
        acc = np.zeros(ps.shape[1:])
        for s, w in zip(_GL_S, _GL_W):
            H = model.entropy_hess(vs + s * ps)
            acc += w * (1.0 - s) * np.einsum("i...,ij...,j...->...", ps, H, ps)
        out[small] = acc
    return out


def relative_flux(model: SystemModel, U, V, j: int = 0) -> np.ndarray:
    """``F_j(U|V) = F_j(U) - F_j(V) - F_j'(V)(U - V)``."""
    U = model.check_admissible(U)
    V = model.check_admissible(np.broadcast_to(_bshape(V, U), np.shape(U)))
    A = model.flux_jacobian(V, j)
    return model.flux(U, j) - model.flux(V, j) - np.einsum("ij...,j...->i...", A, U - V)


def relative_entropy_flux(model: SystemModel, U, V, j: int = 0) -> np.ndarray:
    """``q_j(U;V) = q_j(U) - q_j(V) - eta'(V) . (F_j(U) - F_j(V))``."""
    U = model.check_admissible(U)
    V = model.check_admissible(np.broadcast_to(_bshape(V, U), np.shape(U)))
    dF = model.flux(U, j) - model.flux(V, j)
    return model.entropy_flux(U, j) - model.entropy_flux(V, j) - np.sum(model.entropy_grad(V) * dF, axis=0)


# ---------------------------------------------------------------- bases and projections


@dataclass(frozen=True)
class DissipationBasis:
    """Columns ``V[:, i]`` are ``v_1..v_n``; orthogonal for ``Bt = B_1(U_-) + B_1(U_-)^T``.

    Family 1 puts ``l_1`` first, family n puts ``l_n`` last. Members other
    than the designated ``l`` satisfy ``B_1(U_-) v . v = 1``.
    """

    family: int
    V: np.ndarray
    Bt: np.ndarray
    designated: int

    def residual(self) -> float:
        G = self.V.T @ self.Bt @ self.V
        return float(np.max(np.abs(G - np.diag(np.diag(G)))))


def build_dissipation_basis(model: SystemModel, frame: EigenFrame, family: int) -> DissipationBasis:
    """Gram-Schmidt of the standard basis against the family's ``l``."""
    n = model.n
    B = model.viscosity(frame.base, 0)
    Bt = B + B.T
    np.linalg.cholesky(Bt)
    l = frame.l[family - 1]
    vecs = [l]
    for e in np.eye(n):
        v = e.copy()
        for u in vecs:
            v = v - (u @ Bt @ v) / (u @ Bt @ u) * u
        if np.sqrt(v @ Bt @ v) > 1e-8 * np.sqrt(e @ Bt @ e):
            vecs.append(v / np.sqrt(v @ B @ v))
        if len(vecs) == n:
            break
    others = vecs[1:]
    if family == 1:
        cols, designated = [l] + others, 0
    else:
        cols, designated = others + [l], n - 1
    V = np.column_stack(cols)
    if np.linalg.svd(V, compute_uv=False).min() < 1e-8:
        raise np.linalg.LinAlgError("dissipation basis is degenerate")
    return DissipationBasis(family, V, Bt, designated)


def project_entropic(model: SystemModel, U, U_tilde, basis: DissipationBasis) -> np.ndarray:
    """Coefficients ``c`` with ``eta'(U) - eta'(U~) = sum_i c_i v_i`` pointwise."""
    w = model.entropy_grad(U) - model.entropy_grad(np.broadcast_to(_bshape(U_tilde, U), np.shape(U)))
    shape = w.shape
    c = np.linalg.solve(basis.V, w.reshape(shape[0], -1))
    return c.reshape(shape)


# ---------------------------------------------------------------- Poincare check


@lru_cache(maxsize=8)
def _poincare_operators(degree: int, quad: int):
    """Nodes and the maps from node values to ``h``, ``h'`` at Gauss points."""
    nodes = 0.5 * (1.0 - np.cos(np.pi * np.arange(degree + 1) / degree))
    # Chebyshev coefficients in s = 2y - 1 as a linear map of the node values
    fit = np.linalg.inv(C.chebvander(2 * nodes - 1, degree))
    s, w = leggauss(quad)
    val = C.chebvander(s, degree) @ fit
    der = np.column_stack([C.chebval(s, 2.0 * C.chebder(e)) for e in np.eye(degree + 1)]) @ fit
    return nodes, 0.5 * (s + 1.0), 0.5 * w, val, der


def poincare_check(h, degree: int = 128, quad: int = 200):
    """``(lhs, rhs)`` for ``int_0^1 |h - mean|^2 <= 1/2 int_0^1 y(1-y) |h'|^2``.

    ``h`` is a callable on ``[0, 1]``; it is interpolated at Chebyshev points of
    the given degree, differentiated exactly, and integrated by Gauss-Legendre.
    Arrays are taken as samples at those Chebyshev points.
    """
    nodes, y, w, val, der = _poincare_operators(degree, quad)
    vals = np.asarray(h(nodes) if callable(h) else h, dtype=float)
    if vals.shape != nodes.shape:
        raise ValueError(f"expected {nodes.size} samples at Chebyshev points")
    if not np.all(np.isfinite(vals)):
        raise ValueError("Poincare check: function is not finite on [0, 1]")
    # both sides are shift invariant; removing a sample makes constants exact zeros
    vals = vals - vals[0]
    hv = val @ vals
    dv = der @ vals
    mean = np.sum(w * hv)
    lhs = float(np.sum(w * (hv - mean) ** 2))
    rhs = float(0.5 * np.sum(w * y * (1 - y) * dv**2))
    if not np.isfinite(rhs):
        raise ValueError("Poincare check: weighted derivative integral diverges")
    return lhs, rhs


# ---------------------------------------------------------------- interactions


def interaction_norms(ansatz: CompositeAnsatz, t: float, x=None, X1: float = 0.0, Xn: float = 0.0, fields=None) -> dict:
    """Pairwise products of the two waves.

    Shock-rarefaction: ``L^2`` norms of ``|S1'||R - U_m|``, ``|R'||S1 - U_m|``,
    ``|R'||S1'|``. Shock-shock: ``L^1`` norms of ``|S1'||Sn - U_m|^2``,
    ``|Sn'||S1 - U_m|^2``, ``|Sn'||S1'|``. Without a second wave all are 0. ``fields``, when
    given, must be sampled at the same ``t, X1, Xn``.
    """
    if fields is None:
        if x is None:
            x = interaction_window(ansatz, t)
        fields = ansatz.fields(t, x, X1, Xn)
    F = fields
    h = float(F.x[1] - F.x[0])
    Um = ansatz.U_m[:, None]
    d1 = np.linalg.norm(F.dS1, axis=0)
    dW = np.linalg.norm(F.dW, axis=0)
    s1 = np.linalg.norm(F.S1 - Um, axis=0)
    w = np.linalg.norm(F.W - Um, axis=0)
    if ansatz.kind == "shock-shock":
        # tail deviations straight from the profiles: S - U_m underflows when formed by subtraction
        xi1 = F.x + X1 - ansatz.shock1.sigma * F.t
        xin = F.x + Xn - ansatz.wave_n.sigma * F.t
        s1 = np.linalg.norm(ansatz.shock1.deviation(xi1, "R"), axis=0)
        w = np.linalg.norm(ansatz.wave_n.deviation(xin, "L"), axis=0)
        p = (d1 * w**2, dW * s1**2, dW * d1)
        vals = [float(np.trapezoid(v, dx=h)) for v in p]
        names = ("S1p_Wm2_L1", "Wp_S1m2_L1", "Wp_S1p_L1")
    else:
        p = (d1 * w, dW * s1, dW * d1)
        vals = [float(np.sqrt(np.trapezoid(v * v, dx=h))) for v in p]
        names = ("S1p_Wm_L2", "Wp_S1m_L2", "Wp_S1p_L2")
    out = dict(zip(names, vals))
    out["total"] = float(sum(vals))
    return out


def interaction_window(ansatz: CompositeAnsatz, t: float, points: int = 6001) -> np.ndarray:
    """A grid covering both waves and their tails at time ``t``."""
    s1 = ansatz.shock1
    lo = s1.sigma * t - 40.0 / min(s1.kappa_L, s1.kappa_R)
    hi = s1.sigma * t + 40.0 / min(s1.kappa_L, s1.kappa_R)
    w = ansatz.wave_n
    if ansatz.kind == "shock-shock":
        lo = min(lo, w.sigma * t - 40.0 / min(w.kappa_L, w.kappa_R))
        hi = max(hi, w.sigma * t + 40.0 / min(w.kappa_L, w.kappa_R))
    elif ansatz.kind == "shock-rarefaction":
        c = ansatz.meta["curve"]
        lo = min(lo, c.lam_m * (1 + t) - 30.0)
        hi = max(hi, c.lam_plus * (1 + t) + 30.0)
    return np.linspace(lo, hi, points)


@dataclass
class ExponentialFit:
    A: float
    rate: float
    r2: float


def fit_exponential(t, y) -> ExponentialFit:
    """Least-squares fit of ``log y = log A - rate t`` with its ``R^2``."""
    t = np.asarray(t, dtype=float)
    ly = np.log(np.asarray(y, dtype=float))
    slope, icpt = np.polyfit(t, ly, 1)
    pred = icpt + slope * t
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    return ExponentialFit(float(np.exp(icpt)), float(-slope), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0)


# ---------------------------------------------------------------- energy terms


def transverse_mode_amplitude(U, grid: Grid) -> float:
    """``L^2_x`` norm of the ``cos/sin(2 pi y)`` Fourier coefficient of ``U``."""
    if grid.N2 < 2:
        return 0.0
    c = np.fft.rfft(np.asarray(U, dtype=float), axis=-2)[..., 1, :] * (2.0 / grid.N2)
    return float(np.sqrt(np.trapezoid(np.sum(np.abs(c) ** 2, axis=0), dx=grid.dx)))


def energy_terms(
    model: SystemModel,
    state: SimState,
    ansatz: CompositeAnsatz,
    frame: EigenFrame,
    bases: tuple,
    dX1: float = 0.0,
    dXn: float = 0.0,
    fields: AnsatzFields | None = None,
) -> dict:
    """One diagnostics row for a frozen snapshot."""
    grid = state.grid
    x = grid.x
    U = state.U
    F = ansatz.fields(state.t, x, state.X1, state.Xn) if fields is None else fields
    Ut = F.U_tilde[:, None, :]
    psi = U - Ut
    integ = grid.integrate
    a = F.a[None, :]
    rel = relative_entropy(model, U, np.broadcast_to(Ut, U.shape))
    dS1 = np.linalg.norm(F.dS1, axis=0)[None, :]
    dW = np.linalg.norm(F.dW, axis=0)[None, :]
    psi2 = np.sum(psi * psi, axis=0)
    row = {
        "t": state.t,
        "X1": state.X1,
        "Xn": state.Xn,
        "dX1": dX1,
        "dXn": dXn,
        "weighted_rel_entropy": float(integ(a * rel)),
        "rel_entropy": float(integ(rel)),
        "sup_dev": float(np.sqrt(np.max(psi2))),
        "G_S1": float(integ(psi2 * dS1)),
        "G_Wn": float(integ(psi2 * dW)),
    }
    Y = ansatz.delta_S1 * dX1**2
    if ansatz.shifts_n:
        Y += ansatz.delta_Wn * dXn**2
    row["Y"] = float(Y)

    m = sobolev_index(grid.d)
    dxs = [psi]
    for _ in range(m + 1):
        dxs.append(ddx(dxs[-1], grid.dx))
    for k in range(m + 1):
        total = 0.0
        order = k + 1
        for ky in range(0, order + 1 if grid.d == 2 else 1):
            D = dxs[order - ky]
            for _ in range(ky):
                D = ddy_periodic(D, grid.dy)
            total += float(integ(np.sum(D * D, axis=0)))
        row[f"D_{k}"] = total

    b1, bn = bases
    mu = project_entropic(model, U, Ut, b1)
    nu = project_entropic(model, U, Ut, bn)
    dk1 = F.dk1[None, :]
    dkW = F.dkW[None, :]
    n = model.n
    row["H_C"] = float(
        ansatz.delta_S1 * sum(integ(mu[i] ** 2 * dk1) for i in range(1, n))
        + ansatz.delta_Wn * sum(integ(nu[i] ** 2 * dkW) for i in range(0, n - 1))
    )
    row["H_S1"] = float(-frame.c_f[0] * ansatz.delta_S1 * integ(mu[0] ** 2 * dk1))
    row["H_Wn"] = float(-frame.c_f[-1] * ansatz.delta_Wn * integ(nu[n - 1] ** 2 * dkW))
    B = model.viscosity(frame.base, 0)
    l1, ln = frame.l[0], frame.l[-1]
    dmu = ddx(mu, grid.dx)
    dnu = ddx(nu, grid.dx)
    row["D_p"] = float((l1 @ B @ l1) * integ(dmu[0] ** 2) + (ln @ B @ ln) * integ(dnu[n - 1] ** 2))
    row["D_r"] = float(sum(integ(dmu[i] ** 2) for i in range(1, n)) + sum(integ(dnu[i] ** 2) for i in range(0, n - 1)))
    row["D_y"] = float(integ(np.sum(ddy_periodic(psi, grid.dy) ** 2, axis=0))) if grid.d == 2 else 0.0

    # shift functional Y_1 = int a_S1' eta(U|U~) - (delta/C) dX1, and the Z term
    da1 = -ansatz.lam_S1 * ansatz.delta_S1 * F.dk1[None, :]
    Z = dX1 * (integ(da1 * rel) - ansatz.delta_S1 / ansatz.gain1 * dX1)
    if ansatz.shifts_n:
        daW = ansatz.lam_Wn * ansatz.delta_Wn * F.dkW[None, :]
        Z += dXn * (integ(daW * rel) - ansatz.delta_Wn / ansatz.gain_n * dXn)
    row["Z"] = float(Z)

    Zf, E1, E2 = ansatz_error_fields(ansatz, state.t, x, state.X1, state.Xn, dX1, dXn, fields=F)
    dw = model.entropy_grad(U) - model.entropy_grad(np.broadcast_to(Ut, U.shape))
    work = integ(a * np.sum(dw * (E1 + E2)[:, None, :], axis=0))
    row["interaction_work"] = float(abs(work))
    row["E1_L1"] = float(np.trapezoid(np.linalg.norm(E1, axis=0), dx=grid.dx))
    row["E2_L1"] = float(np.trapezoid(np.linalg.norm(E2, axis=0), dx=grid.dx))
    inter = interaction_norms(ansatz, state.t, X1=state.X1, Xn=state.Xn, fields=F)
    for k, v in inter.items():
        row[f"inter_{k}"] = v
    row["mode_amp"] = transverse_mode_amplitude(U, grid)
    edge = U[..., :1]
    row["boundary_activity"] = float(
        max(np.max(np.abs(U[..., 1:6] - edge)), np.max(np.abs(U[..., -6:-1] - U[..., -1:])))
    )
    return row


COLUMNS = (
    "t", "X1", "Xn", "dX1", "dXn", "weighted_rel_entropy", "rel_entropy", "sup_dev",
    "G_S1", "G_Wn", "Y", "D_0", "D_1", "D_2", "H_C", "H_S1", "H_Wn", "D_p", "D_r", "D_y",
    "Z", "interaction_work", "E1_L1", "E2_L1", "inter_total", "mode_amp", "boundary_activity",
)


@dataclass
class DiagnosticsRecord:
    """Time series of diagnostics rows (columns as numpy arrays)."""

    rows: list = field(default_factory=list)
    aborted: str | None = None

    def __len__(self):
        return len(self.rows)

    @property
    def columns(self) -> list:
        if not self.rows:
            return list(COLUMNS)
        keys = list(self.rows[0])
        return [c for c in COLUMNS if c in keys] + [k for k in keys if k not in COLUMNS]

    def __getitem__(self, key) -> np.ndarray:
        return np.array([r.get(key, np.nan) for r in self.rows], dtype=float)

    def to_csv(self, path) -> None:
        cols = self.columns
        with open(path, "w", newline="") as fh:
            fh.write("# " + " ".join(cols) + "\n")
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.rows:
                w.writerow([repr(float(r.get(c, np.nan))) for c in cols])


class DiagnosticsRecorder:
    """Computes a row per call; reused by the solver driver."""

    def __init__(self, model: SystemModel, ansatz: CompositeAnsatz, grid: Grid):
        self.model = model
        self.ansatz = ansatz
        self.grid = grid
        self.frame = ansatz.frame
        self.bases = (
            build_dissipation_basis(model, ansatz.frame, 1),
            build_dissipation_basis(model, ansatz.frame, model.n),
        )
        self.record_ = DiagnosticsRecord()
        self.aborted = None

    def record(self, state: SimState, dX1: float = 0.0, dXn: float = 0.0) -> dict:
        row = energy_terms(self.model, state, self.ansatz, self.frame, self.bases, dX1, dXn)
        for k, v in row.items():
            if not np.isfinite(v):
                raise FloatingPointError(f"diagnostic {k} is not finite at t={state.t}")
        self.record_.rows.append(row)
        return row

    def finish(self) -> DiagnosticsRecord:
        self.record_.aborted = self.aborted
        return self.record_


# ---------------------------------------------------------------- contraction checks


@dataclass
class ContractionStepReport:
    t: float
    derivative: float
    majorant: float
    dissipation: float
    flagged: bool


def contraction_inequality_check(row: dict, prev: dict, c: float = 0.0) -> ContractionStepReport:
    """Compare the discrete ``d/dt int a eta(U|U~)`` with ``-c Q + M``.

    ``Q = D_0 + G_S1 + G_Wn + Y`` and ``M`` is the interaction work averaged
    over the two rows.
    """
    dt = row["t"] - prev["t"]
    if dt <= 0:
        raise ValueError("rows must be in increasing time order")
    der = (row["weighted_rel_entropy"] - prev["weighted_rel_entropy"]) / dt
    Q = 0.5 * sum(row[k] + prev[k] for k in ("D_0", "G_S1", "G_Wn", "Y"))
    M = 0.5 * (row["interaction_work"] + prev["interaction_work"])
    return ContractionStepReport(row["t"], der, M, Q, bool(der > -c * Q + M))


def fit_dissipation_constant(record: DiagnosticsRecord, t_min: float = 0.0) -> float:
    """Largest ``c >= 0`` with ``dF/dt <= -c Q + M`` on every step after ``t_min``."""
    best = np.inf
    rows = record.rows
    for prev, row in zip(rows[:-1], rows[1:]):
        if prev["t"] < t_min:
            continue
        r = contraction_inequality_check(row, prev)
        if r.dissipation > 0:
            best = min(best, (r.majorant - r.derivative) / r.dissipation)
    return float(max(best, 0.0)) if np.isfinite(best) else 0.0


@dataclass
class ContractionSummary:
    """Run-level figures used by the acceptance gates."""

    nonincreasing_fraction: float
    sup_max: float
    sup_final: float
    sup_ratio: float
    shift_rate_max: float
    shift_rate_final: float
    positive_increase: float
    majorant_integral: float
    E2_scale: float
    dissipation_constant: float
    flagged_steps: int


def contraction_summary(record: DiagnosticsRecord, ansatz: CompositeAnsatz, t_after: float = 1.0) -> ContractionSummary:
    t = record["t"]
    F = record["weighted_rel_entropy"]
    dF = np.diff(F)
    after = t[1:] > t_after
    # steps with an increase below roundoff of F count as nonincreasing
    tol = 1e-13 * np.max(np.abs(F))
    frac = float(np.mean(dF[after] <= tol)) if np.any(after) else 1.0
    sup = record["sup_dev"]
    dX = np.abs(record["dX1"])
    M = record["interaction_work"]
    c = fit_dissipation_constant(record, t_after)
    flagged = 0
    for prev, row in zip(record.rows[:-1], record.rows[1:]):
        if prev["t"] >= t_after and contraction_inequality_check(row, prev, c).flagged:
            flagged += 1
    if ansatz.kind == "shock-shock":
        E2 = ansatz.delta_S1 + ansatz.delta_Wn
    elif ansatz.kind == "shock-rarefaction":
        E2 = ansatz.delta_Wn ** (1.0 / 6.0)
    else:
        E2 = ansatz.delta_S1
    return ContractionSummary(
        nonincreasing_fraction=frac,
        sup_max=float(np.max(sup)),
        sup_final=float(sup[-1]),
        sup_ratio=float(sup[-1] / np.max(sup)),
        shift_rate_max=float(np.max(dX)),
        shift_rate_final=float(dX[-1]),
        positive_increase=float(np.sum(np.maximum(dF, 0.0))),
        majorant_integral=float(np.trapezoid(M, t)),
        E2_scale=float(E2**2),
        dissipation_constant=c,
        flagged_steps=flagged,
    )
