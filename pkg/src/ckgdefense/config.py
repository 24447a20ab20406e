"""Run configuration: flat JSON keys mirroring module defaults.

Precedence, lowest to highest: built-in defaults, the config file (explicit
path or ``$CKG_CONFIG``), then command-line overrides.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .kg.ontology import Ontology
from .kg.terms import ValidationError
from .observe import ParameterSpec
from .rl.shaping import ShapingConfig

ENV_VAR = "CKG_CONFIG"

DEFAULT_PARAMETERS = (
    ParameterSpec("ckg:param-smb-bytes", "bytes", "smb", 1200.0),
    ParameterSpec("ckg:param-http-bytes", "bytes", "web", 800.0),
    ParameterSpec("ckg:param-sql-bytes", "bytes", "sql", 500.0),
    ParameterSpec("ckg:param-auth-events", "packets", "auth", 4.0),
)


class ConfigError(ValidationError):
    pass


@dataclass(frozen=True)
class Config:
    namespace: str = "ckg:"
    threshold: float = 0.5
    eps: float = 0.1
    window: float = 60.0
    scorer_weights: tuple[float, float, float] = (0.5, 0.25, 0.25)
    beta: float = 0.3
    hops: int = 2
    gamma: float = 0.95
    alpha: float = 0.1
    epsilon: float = 0.2
    episodes: int = 500
    seeds: tuple[int, ...] = tuple(range(20))
    seed: int = 0
    graph_path: str | None = None
    policy_path: str | None = None
    scenario_path: str | None = None
    families_path: str | None = None
    parameters: tuple[ParameterSpec, ...] = field(default=DEFAULT_PARAMETERS)

    def __post_init__(self):
        try:
            Ontology(self.namespace)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must lie in [0, 1], got {self.threshold}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if not self.window > 0:
            raise ConfigError(f"window must be > 0, got {self.window}")
        w = self.scorer_weights
        if len(w) != 3 or any(x < 0 for x in w) or not math.isclose(sum(w), 1.0):
            raise ConfigError(f"scorer_weights must be three non-negative numbers summing to 1, got {list(w)}")
        try:
            self.shaping()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.episodes < 1:
            raise ConfigError(f"episodes must be >= 1, got {self.episodes}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")

    def shaping(self) -> ShapingConfig:
        return ShapingConfig(self.beta, self.hops, self.gamma, self.alpha, self.epsilon)

    def ontology(self) -> Ontology:
        return Ontology(self.namespace)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scorer_weights"] = list(self.scorer_weights)
        d["seeds"] = list(self.seeds)
        d["parameters"] = [asdict(p) for p in self.parameters]
        return d


_FIELDS = {f.name for f in fields(Config)}


def _coerce(key: str, value):
    if key == "parameters":
        try:
            return tuple(ParameterSpec(**p) for p in value)
        except (TypeError, ValidationError) as exc:
            raise ConfigError(f"bad parameters entry: {exc}") from None
    if key in ("scorer_weights", "seeds"):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key} must be a list")
        conv = float if key == "scorer_weights" else int
        return tuple(conv(v) for v in value)
    if key in ("hops", "episodes", "seed"):
        if isinstance(value, bool) or int(value) != value:
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    if key in ("threshold", "eps", "window", "beta", "gamma", "alpha", "epsilon"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        return float(value)
    return value


def from_mapping(data: dict, base: Config | None = None) -> Config:
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    try:
        values = {k: _coerce(k, v) for k, v in data.items()}
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return replace(base or Config(), **values)


def load_config(path=None, overrides: dict | None = None) -> Config:
    """Defaults, then the file at ``path`` (or ``$CKG_CONFIG``), then ``overrides``."""
    cfg = Config()
    path = path or os.environ.get(ENV_VAR) or None
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        base = Path(path).resolve().parent
        for key in ("graph_path", "policy_path", "scenario_path", "families_path"):
            # relative paths in a config file are relative to that file
            if isinstance(data.get(key), str) and not os.path.isabs(data[key]):
                data[key] = str(base / data[key])
        cfg = from_mapping(data, cfg)
    if overrides:
        cfg = from_mapping({k: v for k, v in overrides.items() if v is not None}, cfg)
    return cfg
