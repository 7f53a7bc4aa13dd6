"""Command line: ``compwave run <preset|path>``, ``list``, ``print-config``.

Exit status: 0 when every gate passes, 1 on a failed gate, 2 on a usage,
configuration or solver error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .acceptance import Gate
from .config import ConfigError, RunConfig, format_config, load_config
from .model import InadmissibleStateError
from .scenarios import SCENARIOS, config_scenario, get_scenario, write_rows
from .solver import SolverError


def list_scenarios(machine: bool = False) -> str:
    if machine:
        return json.dumps(
            [
                {"name": s.name, "description": s.description, "checks": list(s.checks), "budget_s": s.budget_s,
                 "kind": s.config.kind}
                for s in SCENARIOS.values()
            ],
            indent=2,
        )
    width = max(len(n) for n in SCENARIOS)
    tags = {n: ",".join(s.checks) for n, s in SCENARIOS.items()}
    tw = max(len(t) for t in tags.values())
    lines = [f"{s.name:<{width}}  {tags[s.name]:<{tw}}  {s.description}" for s in SCENARIOS.values()]
    return "\n".join(lines)


def _resolve(target: str):
    if target in SCENARIOS:
        return get_scenario(target)
    path = Path(target)
    if not path.exists():
        raise ConfigError(f"{target!r} is neither a preset nor a readable config file")
    return config_scenario(load_config(path), name=path.stem)


def write_summary(out: Path, gates) -> None:
    # runtimes vary between machines, so they stay out of the reproducible artifacts
    write_rows(
        out / "summary.csv",
        ["criterion", "check", "value", "threshold", "passed"],
        [[g.criterion, g.name, g.value, g.threshold, int(g.passed)] for g in gates if g.kind != "runtime"],
    )


def run_scenario(target: str, out: Path | None = None, seed: int | None = None, threads: int | None = None) -> int:
    scenario = _resolve(target)
    cfg = scenario.config
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if threads is not None:
        changes["threads"] = threads
    cfg = cfg.replace(**changes)
    out = Path("out") / scenario.name if out is None else out
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(format_config(cfg))
    print(f"scenario {scenario.name}: {scenario.description}")
    t0 = time.perf_counter()
    try:
        gates = scenario.execute(cfg, out)
    except (SolverError, InadmissibleStateError) as exc:
        rec = getattr(exc, "partial_record", None)
        if rec is not None:
            rec.to_csv(out / "diagnostics.csv")
        print(f"run aborted: {exc}", file=sys.stderr)
        return 2
    wall = time.perf_counter() - t0
    gates = list(gates) + [Gate("BUDGET", "scenario_runtime_s", wall, scenario.budget_s, wall < scenario.budget_s, "runtime")]
    write_summary(out, gates)
    for g in gates:
        print(g.line())
    failed = [g for g in gates if not g.passed]
    print(f"{len(gates) - len(failed)}/{len(gates)} checks passed; artifacts in {out}")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="compwave", description="Viscous wave-composite simulations and checks.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a preset or a config file")
    r.add_argument("target", help="preset name or path to an INI config")
    r.add_argument("--out", type=Path, default=None, help="artifact directory (default out/<name>)")
    r.add_argument("--threads", type=int, default=None, help="recorded in the config; runs are single-threaded")
    r.add_argument("--seed", type=int, default=None, help="seed for random perturbations and sampled suites")
    ls = sub.add_parser("list", help="list presets")
    ls.add_argument("--json", action="store_true", help="machine-readable catalog")
    pc = sub.add_parser("print-config", help="print the config schema with defaults")
    pc.add_argument("preset", nargs="?", default=None, help="print this preset's config instead")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "list":
            print(list_scenarios(args.json))
            return 0
        if args.command == "print-config":
            cfg = RunConfig() if args.preset is None else get_scenario(args.preset).config
            print(format_config(cfg), end="")
            return 0
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        return run_scenario(args.target, args.out, args.seed, args.threads)
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
