"""Experiment configuration: flags, JSON config files, validation."""

from __future__ import annotations

import argparse
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

from uamo.model import GOLDEN, SILVER, ModelParams

COMMANDS = (
    "spectrum",
    "lyapunov",
    "detpoly",
    "cocycle-check",
    "green",
    "localize",
    "certificate",
    "evolve",
    "arith",
    "sweep",
)
FORMATS = ("csv", "json")
OUTPUT_DIR_ENV = "UAMO_OUTPUT_DIR"


class ConfigError(ValueError):
    """Invalid configuration; the message ends with a remedy."""


def parse_omega(text) -> float:
    """``golden``, ``silver``, a rational ``p/q`` or a decimal, reduced mod 1."""
    if isinstance(text, (int, float)):
        return float(text) % 1.0
    key = str(text).strip().lower()
    if key == "golden":
        return GOLDEN
    if key == "silver":
        return SILVER
    try:
        value = Fraction(key) if "/" in key else float(key)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot read omega {text!r}; use golden, silver, p/q or a decimal") from None
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"omega {text!r} is not finite; use a number in [0, 1)")
    return value % 1.0


@dataclass
class ExperimentConfig:
    command: str
    l1: float = 0.5
    l2: float = 0.9
    omega: str = "golden"
    theta: float = 0.0
    n: int = 256
    t: int = 1000
    grid: int = 4096
    eps: float = 0.05
    y: int = 500
    z_phase: float | None = None
    samples: int = 10
    seed: int = 0
    method: str = "dense"
    of: str = "lyapunov"
    over: dict = field(default_factory=dict)
    workers: int = 0
    out: str | None = None
    format: str = "csv"

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.l1, self.l2, parse_omega(self.omega), self.theta)

    @property
    def omega_value(self) -> float:
        return parse_omega(self.omega)

    @property
    def omega_exact(self):
        """``Fraction`` for a ``p/q`` omega, else the float value."""
        key = str(self.omega).strip()
        return Fraction(key) % 1 if "/" in key else self.omega_value

    def as_dict(self) -> dict:
        """Settings that determine the result; the output path is left out."""
        d = asdict(self)
        del d["out"]
        d["omega_value"] = self.omega_value
        return d

    def replace(self, **changes) -> "ExperimentConfig":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return validate(ExperimentConfig(**d))


_RANGES = {
    "l1": (0.0, 1.0),
    "l2": (0.0, 1.0),
    "n": (1, 1 << 22),
    "t": (0, 10**7),
    "grid": (8, 1 << 24),
    "eps": (1e-6, 1.0),
    "y": (1, 10**9),
    "samples": (1, 10**6),
    "seed": (0, 2**64 - 1),
    "workers": (0, 1024),
}
_SWEEPABLE = {"l1", "l2", "theta", "n", "t", "eps", "y", "z_phase", "grid"}


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}; choose one of {', '.join(COMMANDS)}")
    for name, (lo, hi) in _RANGES.items():
        value = getattr(cfg, name)
        if not lo <= value <= hi:
            raise ConfigError(f"--{name.replace('_', '-')}={value} is out of range; use a value in [{lo}, {hi}]")
    parse_omega(cfg.omega)
    if cfg.format not in FORMATS:
        raise ConfigError(f"unknown format {cfg.format!r}; use csv or json")
    if cfg.method not in ("dense", "roots"):
        raise ConfigError(f"unknown method {cfg.method!r}; use dense or roots")
    if cfg.command == "sweep":
        if cfg.of == "sweep" or cfg.of not in COMMANDS:
            raise ConfigError(f"cannot sweep {cfg.of!r}; pass --of with a non-sweep command")
        if not cfg.over:
            raise ConfigError("sweep needs at least one --over name=v1,v2,...")
        bad = set(cfg.over) - _SWEEPABLE
        if bad:
            raise ConfigError(f"cannot sweep over {sorted(bad)}; sweepable keys are {sorted(_SWEEPABLE)}")
    elif cfg.over:
        raise ConfigError("--over only applies to the sweep command; drop it or use sweep")
    return cfg


def _parse_over(items) -> dict:
    out = {}
    for item in items:
        name, sep, values = item.partition("=")
        if not sep or not values:
            raise ConfigError(f"cannot read --over {item!r}; use name=v1,v2,...")
        try:
            out[name.strip().replace("-", "_")] = [json.loads(v) for v in values.split(",")]
        except json.JSONDecodeError:
            raise ConfigError(f"non-numeric value in --over {item!r}; use numbers only") from None
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{message}; see --help")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uamo", description="Numerical experiments on the unitary almost Mathieu operator.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file of settings; flags override it")
    # defaults stay None so that explicit flags can be told apart from file values
    p.add_argument("--l1", type=float)
    p.add_argument("--l2", type=float)
    p.add_argument("--omega", help="golden, silver, p/q or a decimal")
    p.add_argument("--theta", type=float)
    p.add_argument("--n", type=int, help="window size or number of steps")
    p.add_argument("--t", type=int, help="number of time steps")
    p.add_argument("--grid", type=int, help="quadrature grid size")
    p.add_argument("--eps", type=float)
    p.add_argument("--y", type=int, help="probe distance for localize and certificate")
    p.add_argument("--z-phase", type=float, help="spectral parameter z = exp(2 pi i x)")
    p.add_argument("--samples", type=int, help="number of random draws")
    p.add_argument("--seed", type=int)
    p.add_argument("--method", help="spectrum route: dense or roots")
    p.add_argument("--of", help="command run by sweep")
    p.add_argument("--over", action="append", help="sweep axis name=v1,v2,... (repeatable)")
    p.add_argument("--workers", type=int, help="sweep worker processes (0: all cores)")
    p.add_argument("--out", help="output file; default stdout or $" + OUTPUT_DIR_ENV)
    p.add_argument("--format", help="csv or json")
    return p


def parse_config(argv=None, environ=None) -> ExperimentConfig:
    """Resolve flags over an optional JSON file over defaults."""
    environ = os.environ if environ is None else environ
    ns = build_parser().parse_args(argv)
    known = {f.name for f in fields(ExperimentConfig)} - {"command"}
    merged = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {ns.config}: {exc}; pass a JSON object") from None
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object; wrap settings in {...}")
        doc = {k.replace("-", "_"): v for k, v in doc.items()}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}; allowed keys are {sorted(known)}")
        merged.update(doc)
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config") and v is not None}
    if "over" in flags:
        flags["over"] = _parse_over(flags["over"])
    merged.update(flags)
    if merged.get("out") is None and environ.get(OUTPUT_DIR_ENV):
        ext = merged.get("format", "csv")
        merged["out"] = os.path.join(environ[OUTPUT_DIR_ENV], f"{ns.command}.{ext}")
    try:
        cfg = ExperimentConfig(command=ns.command, **merged)
    except TypeError as exc:
        raise ConfigError(f"{exc}; check the config keys") from None
    return validate(cfg)
