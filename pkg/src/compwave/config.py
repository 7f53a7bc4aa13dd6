"""Run configuration: flat ``key = value`` INI files with dotted sections.

A file such as::

    [model]
    name = bns
    nu = 0.1

    [grid]
    N1 = 4096

maps onto the dotted keys ``model.name``, ``model.nu``, ``grid.N1``. Unknown
keys are rejected with their dotted name.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, fields

from .grid import Grid
from .model import BnsParameters, SystemModel, make_bns_model, make_burgers_model


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # model
    model: str = "bns"
    nu: float = 0.1
    gamma: float = 1.4
    d: int = 1
    U_minus: tuple = (1.0, 0.0)
    # waves
    kind: str = "shock-rarefaction"
    delta_S1: float = 0.05
    delta_Wn: float = 0.05
    Lambda: float = 10.0
    gain: float = 5.0
    # perturbation
    shape: str = "gaussian"
    eps0: float = 1e-3
    width: float = 5.0
    center: float = 0.0
    components: tuple = ()
    mode: float = 0.0
    seed: int = 0
    # grid
    L: float = 1100.0
    N1: int = 4096
    N2: int = 1
    # time
    T_end: float = 400.0
    cfl_hyp: float = 0.8
    cfl_par: float = 0.4
    # output
    cadence: float = 1.0
    snapshots: tuple = ()
    threads: int = 1

    def validate(self) -> "RunConfig":
        if self.model not in ("bns", "burgers"):
            raise ConfigError(f"model.name must be bns or burgers, got {self.model!r}")
        if self.kind not in ("shock-shock", "shock-rarefaction", "single-shock"):
            raise ConfigError(f"waves.kind {self.kind!r} is not a composite kind")
        if not self.eps0 > 0:
            raise ConfigError("perturbation.eps0 must be positive")
        for name in ("cfl_hyp", "cfl_par"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f"time.{name} must lie in (0, 1)")
        if self.d not in (1, 2):
            raise ConfigError("model.d must be 1 or 2")
        if self.model == "burgers" and self.d != 1:
            raise ConfigError("burgers is one-dimensional")
        if self.d == 1 and self.N2 != 1:
            raise ConfigError("grid.N2 must be 1 in one dimension")
        if self.N1 < 8 or self.L <= 0 or self.T_end < 0 or self.cadence <= 0:
            raise ConfigError("grid and time sizes must be positive")
        if self.shape not in ("gaussian", "random"):
            raise ConfigError(f"perturbation.shape {self.shape!r} unknown")
        if len(self.U_minus) != self.n:
            raise ConfigError(f"model.U_minus needs {self.n} components")
        return self

    @property
    def n(self) -> int:
        return 1 if self.model == "burgers" else self.d + 1

    def make_model(self) -> SystemModel:
        if self.model == "burgers":
            return make_burgers_model()
        return make_bns_model(BnsParameters(nu=self.nu, gamma=self.gamma, d=self.d))

    def make_grid(self) -> Grid:
        return Grid(self.L, self.N1, self.N2, self.d)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes).validate()


# section of every field, in the order the schema is printed
SECTIONS = {
    "model": ("model", "nu", "gamma", "d", "U_minus"),
    "waves": ("kind", "delta_S1", "delta_Wn", "Lambda", "gain"),
    "perturbation": ("shape", "eps0", "width", "center", "components", "mode", "seed"),
    "grid": ("L", "N1", "N2"),
    "time": ("T_end", "cfl_hyp", "cfl_par"),
    "output": ("cadence", "snapshots", "threads"),
}
# dotted key -> attribute where the names differ
ALIASES = {"model.name": "model"}


def _key(section, attr):
    for dotted, a in ALIASES.items():
        if a == attr and dotted.startswith(section + "."):
            return dotted
    return f"{section}.{attr}"


def _parse_value(kind, text):
    text = text.strip()
    if kind is tuple:
        return tuple(float(v) for v in text.replace(",", " ").split()) if text else ()
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return text


def _field_types():
    out = {}
    defaults = RunConfig()
    for f in fields(RunConfig):
        out[f.name] = type(getattr(defaults, f.name))
    return out


def from_dict(values: dict, base: RunConfig | None = None) -> RunConfig:
    """Build a config from dotted keys (``"grid.N1": "4096"``)."""
    types = _field_types()
    lookup = {}
    for section, attrs in SECTIONS.items():
        for a in attrs:
            lookup[_key(section, a)] = a
    changes = {}
    for k, v in values.items():
        if k not in lookup:
            raise ConfigError(f"unknown key {k!r}")
        attr = lookup[k]
        try:
            changes[attr] = _parse_value(types[attr], v) if isinstance(v, str) else v
        except ValueError as exc:
            raise ConfigError(f"bad value for {k}: {v!r} ({exc})") from None
    return dataclasses.replace(base or RunConfig(), **changes).validate()


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for k, v in parser.items(section):
            values[f"{section}.{k}"] = v
    try:
        return from_dict(values, base)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def format_config(cfg: RunConfig) -> str:
    """INI text that ``load_config`` reads back to an equal config."""
    lines = []
    for section, attrs in SECTIONS.items():
        lines.append(f"[{section}]")
        for a in attrs:
            v = getattr(cfg, a)
            if isinstance(v, tuple):
                v = " ".join(repr(float(c)) for c in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{_key(section, a).split('.', 1)[1]} = {v}")
        lines.append("")
    return "\n".join(lines)
