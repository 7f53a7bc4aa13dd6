"""Shipped presets: a name, a run configuration and the criteria it gates."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import acceptance as acc
from .config import RunConfig
from .diagnostics import contraction_summary, fit_exponential
from .eigen import eigen_frame
from .hugoniot import shock_curve_point
from .model import make_burgers_model
from .shock_profile import solve_profile
from .solver import RunResult, run


@dataclass
class Scenario:
    name: str
    description: str
    config: RunConfig
    checks: tuple
    budget_s: float
    runner: Callable = field(repr=False, default=None)

    def execute(self, cfg: RunConfig, out: Path):
        """Run with ``cfg`` (validated) and write artifacts under ``out``."""
        cfg = cfg.validate()
        return self.runner(cfg, out)


# ---------------------------------------------------------------- artifact writers


def write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def write_snapshot(path: Path, state, ansatz) -> None:
    """Columns ``x, y, U0.., Ut0..`` with ``Ut`` the shifted ansatz."""
    g = state.grid
    Ut = ansatz.fields(state.t, g.x, state.X1, state.Xn).U_tilde
    n = state.U.shape[0]
    header = ["x", "y"] + [f"U{i}" for i in range(n)] + [f"Ut{i}" for i in range(n)]
    rows = []
    for jy, y in enumerate(g.y):
        for jx, x in enumerate(g.x):
            rows.append([float(x), float(y)] + [float(v) for v in state.U[:, jy, jx]] + [float(v) for v in Ut[:, jx]])
    write_rows(path, header, rows)


def write_run_artifacts(out: Path, result: RunResult) -> None:
    result.record.to_csv(out / "diagnostics.csv")
    for k, st in enumerate(result.snapshots):
        write_snapshot(out / f"snapshot_{k:03d}.csv", st, result.ansatz)
    s = contraction_summary(result.record, result.ansatz)
    rows = [[k, float(v)] for k, v in vars(s).items()]
    total = result.record["inter_total"]
    if np.all(total > 0):
        fit = fit_exponential(result.record["t"], total)
        rows += [["interaction_fit_A", fit.A], ["interaction_fit_rate", fit.rate], ["interaction_fit_r2", fit.r2]]
    rows += [["dt", float(result.dt)], ["steps", int(result.steps)]]
    write_rows(out / "fits.csv", ["quantity", "value"], rows)


def run_gates(result: RunResult, cid: str = "INV"):
    """Sup-norm decrease and shift-rate decay, the run-level invariants."""
    s = contraction_summary(result.record, result.ansatz)
    out = [
        acc.Gate(cid, "sup_final_below_initial", s.sup_final, float(result.record["sup_dev"][0]),
                 bool(s.sup_final < result.record["sup_dev"][0])),
        acc._le(cid, "shift1_rate_final_over_max", s.shift_rate_final / s.shift_rate_max, 0.1),
    ]
    if result.ansatz.shifts_n:
        dXn = np.abs(result.record["dXn"])
        out.append(acc._le(cid, "shiftn_rate_final_over_max", dXn[-1] / np.max(dXn), 0.1))
    return out


# ---------------------------------------------------------------- runners


def _suite(gate, seeded: bool = False):
    def runner(cfg, out):
        return gate(seed=cfg.seed) if seeded else gate()

    return runner


def _burgers_sanity(cfg, out):
    gates = acc.gate_burgers_profile()
    model = make_burgers_model()
    frame = eigen_frame(model, [1.0])
    conn = shock_curve_point(model, frame, [1.0], 1, 1.0, delta0=1.0)
    solve_profile(model, conn, np.arange(-40.0, 40.005, 0.01), frame).to_csv(out / "profile.csv")
    res = acc.translation_residual()
    gates.append(acc._le("C11", "translation_residual", res, 5e-5))
    return gates


def _run_with(gate):
    def runner(cfg, out):
        gates, result = gate(cfg)
        write_run_artifacts(out, result)
        return gates

    return runner


def _plain_run(cfg, out):
    result = run(cfg)
    write_run_artifacts(out, result)
    return run_gates(result)


def _shock_rarefaction_short(cfg, out):
    gates, result = acc.gate_shock_rarefaction(cfg)
    write_run_artifacts(out, result)
    # the 20 min runtime row belongs to the full-size criterion
    return [g for g in gates if g.kind != "runtime"] + run_gates(result)


def _interaction(cfg, out):
    t, series = acc.interaction_series(cfg.delta_S1, cfg.delta_Wn)
    names = list(series)
    write_rows(out / "interactions.csv", ["t"] + names, [[float(s)] + [float(series[k][j]) for k in names] for j, s in enumerate(t)])
    return acc.gate_interaction_decay(cfg.delta_S1, cfg.delta_Wn)


def _rarefaction(cfg, out):
    acc.burgers_decay_report().to_csv(out / "decay.csv")
    return acc.gate_rarefaction_decay()


def _gain_sensitivity(cfg, out):
    rows = acc.gain_sensitivity(cfg)
    names = list(rows[0])
    write_rows(out / "sensitivity.csv", names, [[r[k] for k in names] for r in rows])
    return acc.gate_gain_sensitivity(rows)


def _profile_structure(cfg, out):
    return acc.gate_profile_structure()


# ---------------------------------------------------------------- catalog

_BASE = RunConfig()

SCENARIOS = {
    s.name: s
    for s in [
        Scenario("verify-poincare", "weighted Poincare inequality on random polynomials and trig series",
                 _BASE, ("C2",), 1.0, _suite(acc.gate_poincare, seeded=True)),
        Scenario("burgers-shock-sanity", "Burgers profile vs closed form, then the translation test",
                 _BASE.replace(model="burgers", U_minus=(1.0,), kind="single-shock", delta_S1=1.0, delta_Wn=0.0, Lambda=0.25),
                 ("C1", "C11"), 10.0, _burgers_sanity),
        Scenario("entropy-compatibility", "entropy-flux identity for BNS in one and two dimensions",
                 _BASE, ("C3",), 1.0, _suite(acc.gate_entropy_compatibility, seeded=True)),
        Scenario("rh-lax-gates", "shock connections at strengths 0.01, 0.05, 0.1 and curve tangency",
                 _BASE, ("C4",), 5.0, _suite(acc.gate_rh_lax)),
        Scenario("rarefaction-decay", "L^p decay of the smooth rarefaction derivative",
                 _BASE, ("C5",), 30.0, _rarefaction),
        Scenario("profile-structure", "profile constants of BNS 1-shocks at delta 0.05 and 0.025",
                 _BASE, ("C6",), 10.0, _profile_structure),
        Scenario("interaction-decay", "exponential decay of shock-shock interaction products",
                 _BASE.replace(kind="shock-shock"), ("C7",), 120.0, _interaction),
        Scenario("burgers-single-shock", "Burgers viscous shock plus bump, weighted contraction",
                 acc.burgers_single_shock_config(), ("C8",), 300.0, _run_with(acc.gate_single_shock)),
        Scenario("bns1d-shock-rarefaction", "BNS shock plus rarefaction, 2048 cells to T=200",
                 acc.bns_shock_rarefaction_config(N1=2048, L=800.0, T_end=200.0), ("C9", "INV"), 600.0,
                 _shock_rarefaction_short),
        Scenario("bns1d-shock-rarefaction-full", "BNS shock plus rarefaction at full size, 4096 cells to T=400",
                 acc.bns_shock_rarefaction_config(), ("C9",), 1200.0, _run_with(acc.gate_shock_rarefaction)),
        Scenario("bns1d-shock-shock", "BNS 1-shock plus 2-shock, both shifted, 2048 cells to T=200",
                 _BASE.replace(kind="shock-shock", N1=2048, L=800.0, T_end=200.0), ("INV",), 600.0, _plain_run),
        Scenario("bns2d-transverse", "BNS d=2 shock with a cos(2 pi y) perturbation mode",
                 acc.bns_transverse_config(), ("C10",), 1800.0, _run_with(acc.gate_transverse)),
        Scenario("gain-sensitivity", "Burgers shock plus bump at half, default and double weight and shift gains",
                 acc.burgers_single_shock_config(L=60.0, N1=1024, T_end=50.0, cadence=0.5), ("SENS",), 120.0,
                 _gain_sensitivity),
        Scenario("solver-verification", "manufactured-solution convergence and shock translation",
                 _BASE, ("C11",), 120.0, _suite(acc.gate_solver_verification)),
    ]
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; see 'compwave list'") from None


def config_scenario(cfg: RunConfig, name: str = "config") -> Scenario:
    """A plain coupled run of a user configuration, gated by the run invariants."""
    return Scenario(name, "user configuration", cfg, ("INV",), float("inf"), _plain_run)
