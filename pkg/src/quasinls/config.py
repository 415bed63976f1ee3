"""Run configuration: INI files with sections, defaults, and CLI overrides."""

from __future__ import annotations

import configparser
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

log = logging.getLogger(__name__)

STUDIES = ("convergence", "residual", "energy", "nf-identity")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    omega: str = "beam"
    omega_params: dict = field(default_factory=dict)
    rho: str = ""
    rho_params: dict = field(default_factory=dict)
    k0: float = 1.0
    eps: float = 0.1
    eps_list: list = field(default_factory=list)
    delta: Optional[float] = None
    s_A: float = 7.0
    s: float = 4.0
    ell: int = 4
    beta: float = 2.5
    T0: float = 0.5
    amplitude: float = 0.15
    envelope: str = ""
    envelope_width: float = 1.0
    order: str = "corrected"
    weight_mode: str = ""
    oversample: float = 2.0
    max_points: int = 2**20
    dt: Optional[float] = None
    resym_interval: int = 100
    max_steps: int = 10_000_000
    n_samples: int = 50
    study: str = "convergence"
    n_draws: int = 50
    seed: int = 0
    output: str = "out"

    @property
    def delta_value(self) -> float:
        return self.k0 / 32.0 if self.delta is None else self.delta

    @property
    def rho_name(self) -> str:
        return self.rho or self.omega

    @property
    def rho_param_values(self) -> dict:
        return self.rho_params if self.rho else self.omega_params

    def to_dict(self) -> dict:
        d = asdict(self)
        d["delta"] = self.delta_value
        d["rho"] = self.rho_name
        d["rho_params"] = self.rho_param_values
        return d


# key -> (section, field, parser)
def _floats(text: str) -> list:
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _params(text: str) -> dict:
    out = {}
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"expected name=value, got {item!r}")
        value = value.strip()
        if ":" in value:
            out[key.strip()] = [float(v) for v in value.split(":")]
        else:
            out[key.strip()] = float(value)
    return out


def _optional_float(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


_SCHEMA = {
    "system": {
        "omega": ("omega", str),
        "omega_params": ("omega_params", _params),
        "rho": ("rho", str),
        "rho_params": ("rho_params", _params),
        "k0": ("k0", float),
    },
    "approximation": {
        "eps": ("eps", float),
        "eps_list": ("eps_list", _floats),
        "delta": ("delta", _optional_float),
        "s_a": ("s_A", float),
        "s": ("s", float),
        "ell": ("ell", int),
        "t0": ("T0", float),
        "amplitude": ("amplitude", float),
        "envelope": ("envelope", str),
        "envelope_width": ("envelope_width", float),
        "order": ("order", str),
        "weight_mode": ("weight_mode", str),
    },
    "grid": {
        "oversample": ("oversample", float),
        "max_points": ("max_points", int),
    },
    "integrator": {
        "dt": ("dt", _optional_float),
        "resym_interval": ("resym_interval", int),
        "max_steps": ("max_steps", int),
    },
    "study": {
        "study": ("study", str),
        "n_samples": ("n_samples", int),
        "n_draws": ("n_draws", int),
        "seed": ("seed", int),
    },
    "output": {
        "directory": ("output", str),
    },
}


def validate(cfg: RunConfig) -> list[str]:
    """Problems with a resolved configuration (empty when valid)."""
    errs = []
    if cfg.k0 <= 0:
        errs.append("k0 must be positive")
    if not 0 < cfg.delta_value < cfg.k0 / 20.0:
        errs.append(f"delta={cfg.delta_value} must lie in (0, k0/20)")
    for e in [cfg.eps] + list(cfg.eps_list):
        if not 0 < e < 1:
            errs.append(f"eps={e} must lie in (0, 1)")
    if cfg.beta != 2.5:
        errs.append("beta is fixed at 5/2")
    if cfg.ell < 1:
        errs.append("ell must be at least 1")
    if cfg.order not in ("leading", "corrected"):
        errs.append(f"order must be leading or corrected, got {cfg.order!r}")
    if cfg.envelope not in ("", "sech", "gaussian"):
        errs.append(f"envelope must be sech or gaussian, got {cfg.envelope!r}")
    if cfg.weight_mode not in ("", "weighted", "identity"):
        errs.append(f"weight_mode must be weighted or identity, got {cfg.weight_mode!r}")
    if cfg.study not in STUDIES:
        errs.append(f"study must be one of {', '.join(STUDIES)}, got {cfg.study!r}")
    if cfg.dt is not None and cfg.dt <= 0:
        errs.append("dt must be positive")
    if cfg.oversample < 2:
        errs.append("oversample must be at least 2")
    if cfg.T0 <= 0:
        errs.append("T0 must be positive")
    if cfg.n_samples < 2:
        errs.append("n_samples must be at least 2")
    return errs


def load_config(path) -> RunConfig:
    """Parse an INI file into a RunConfig with defaults for everything missing.

    Every unknown or malformed key is reported in a single ConfigError.
    """
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} not found")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(p.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = RunConfig()
    problems = []
    for section in parser.sections():
        schema = _SCHEMA.get(section.lower())
        if schema is None:
            problems.append(f"[{section}]: unknown section")
            continue
        for key, raw in parser.items(section):
            entry = schema.get(key.lower())
            if entry is None:
                problems.append(f"[{section}] {key}: unknown key")
                continue
            name, conv = entry
            try:
                setattr(cfg, name, conv(raw))
            except (TypeError, ValueError) as exc:
                problems.append(f"[{section}] {key} = {raw!r}: {exc}")
    problems += validate(cfg) if not problems else []
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))
    return cfg


def apply_overrides(cfg: RunConfig, overrides: dict, from_file: bool) -> RunConfig:
    """Apply command-line values; warn when they replace values from the file."""
    names = {f.name for f in fields(RunConfig)}
    default = RunConfig()
    for name, value in overrides.items():
        if value is None:
            continue
        if name not in names:
            raise ConfigError(f"unknown setting {name!r}")
        current = getattr(cfg, name)
        if from_file and current != getattr(default, name) and current != value:
            log.warning("command line %s=%r overrides config file value %r", name, value, current)
        setattr(cfg, name, value)
    problems = validate(cfg)
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))
    return cfg
