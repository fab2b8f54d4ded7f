"""Run configurations for the command-line pipelines.

Each command reads one JSON document into the matching dataclass.  Unknown
keys and missing required keys are configuration errors, so a typo never
silently falls back to a default.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigError

DEFAULT_REPLICAS = 8


@dataclass
class SampleBridgeConfig:
    hamiltonian: str
    t0: int
    t1: int
    z0: int
    z1: int
    n_paths: int = 1
    replicas: int = DEFAULT_REPLICAS


@dataclass
class SampleEnsembleConfig:
    hamiltonian: str
    spec: dict
    n_samples: int = 1
    method: str = "rejection"
    burn_in: int | None = None
    thin: int | None = None
    replicas: int = DEFAULT_REPLICAS


@dataclass
class CoupleConfig:
    hamiltonian: str
    low: dict
    high: dict
    n_steps: int = 10_000
    record_every: int = 100
    replicas: int = DEFAULT_REPLICAS


@dataclass
class AcceptanceConfig:
    hamiltonian: str
    spec: dict
    n_samples: int = 100_000
    level: float = 0.95
    replicas: int = DEFAULT_REPLICAS


@dataclass
class BoundsConfig:
    C: list = field(default_factory=lambda: [0.5, 1.0])
    sigma2: float = 1.0
    k: int = 2
    mode: str = "series"
    M: float = 1.0
    M1: float = 1.0


@dataclass
class GibbsRunConfig:
    hamiltonian: str
    spec: dict
    window: list
    curves: list
    statistic: str = "midpoint"
    n_samples: int = 10_000
    level: float = 0.01
    interior_sampler: str = "exact"
    method: str = "rejection"


@dataclass
class ConvergeConfig:
    hamiltonian: str
    p: float
    k: int
    x: list
    y: list
    T_list: list
    t: float = 0.5
    n_samples: int = 10_000
    level: float = 0.01
    reference: str = "brownian"
    matched: bool = True
    n_reference: int | None = None
    reference_m: int = 512
    sigma: float | None = None
    curve: int = 0


@dataclass
class ParabolaConfig:
    hamiltonian: str
    spec: dict
    scaling: dict
    phi: float
    n_values: list
    n_samples: int = 1000
    method: str = "rejection"
    level: float = 0.95
    replicas: int = DEFAULT_REPLICAS


COMMAND_CONFIGS = {
    "sample-bridge": SampleBridgeConfig,
    "sample-ensemble": SampleEnsembleConfig,
    "couple": CoupleConfig,
    "acceptance": AcceptanceConfig,
    "bounds": BoundsConfig,
    "gibbs-test": GibbsRunConfig,
    "converge-test": ConvergeConfig,
    "diagnose-parabola": ParabolaConfig,
}

_SCALARS = {"int": int, "float": float, "str": str, "bool": bool}


def _coerce(name, value, annotation):
    kinds = [a.strip() for a in str(annotation).split("|")]
    if value is None:
        if "None" in kinds:
            return None
        raise ConfigError(f"field {name!r} may not be null")
    for kind in kinds:
        if kind in ("list", "dict"):
            if isinstance(value, list if kind == "list" else dict):
                return value
            if kind == "list" and isinstance(value, (int, float)) and not isinstance(value, bool):
                return [value]
            continue
        typ = _SCALARS.get(kind)
        if typ is None:
            continue
        if typ is bool and isinstance(value, bool):
            return value
        if typ is int and isinstance(value, int) and not isinstance(value, bool):
            return value
        if typ is int and isinstance(value, float) and value.is_integer():
            return int(value)
        if typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if typ is str and isinstance(value, str):
            return value
    raise ConfigError(f"field {name!r} has invalid value {value!r} (expected {annotation})")


def load_config(command: str, data: dict):
    """Validate ``data`` against the config dataclass of ``command``."""
    cls = COMMAND_CONFIGS.get(command)
    if cls is None:
        raise ConfigError(f"unknown command {command!r}")
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {unknown}")
    kwargs = {}
    for name, f in fields.items():
        if name in data:
            kwargs[name] = _coerce(name, data[name], f.type)
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"missing required config key {name!r} for {command}")
    return cls(**kwargs)


def config_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)


def set_dotted(data: dict, path: str, value: Any) -> None:
    """Assign ``value`` at a dotted key path, creating nested objects."""
    keys = path.split(".")
    if not all(keys):
        raise ConfigError(f"malformed override path {path!r}")
    node = data
    for key in keys[:-1]:
        nxt = node.get(key)
        if nxt is None:
            nxt = node[key] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"override path {path!r} crosses a non-object at {key!r}")
        node = nxt
    node[keys[-1]] = value


def parse_override(text: str):
    """Split ``key.path=value``; the value is read as JSON, else kept as a string."""
    path, sep, raw = text.partition("=")
    if not sep:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path.strip(), value
