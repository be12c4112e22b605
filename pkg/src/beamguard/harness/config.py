"""Experiment configuration: profiles, strict YAML loading and hashing.

A config file is a YAML mapping with optional sections ``array``, ``budget``,
``sensing``, ``reward``, ``env``, ``ppo``, ``curriculum`` and ``baseline``
plus the top-level scalars below. Anything not given falls back to the
selected profile. Unknown keys are errors.
"""
from __future__ import annotations

import dataclasses
import difflib
import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping, Optional

import yaml

from ..agent.ppo import PpoConfig
from ..baseline import BaselineConfig
from ..channel import ArrayConfig, LinkBudget
from ..curriculum import CurriculumConfig
from ..environment import EnvConfig, RewardConfig
from ..errors import ConfigError
from ..sensing import SensingParams

SECTIONS = {
    "array": ArrayConfig,
    "budget": LinkBudget,
    "sensing": SensingParams,
    "reward": RewardConfig,
    "env": EnvConfig,
    "ppo": PpoConfig,
    "curriculum": CurriculumConfig,
    "baseline": BaselineConfig,
}


@dataclass(frozen=True)
class ExperimentConfig:
    profile: str = "paper"
    seed: int = 0
    total_episodes: int = 3000
    eval_episodes: int = 200
    checkpoint_every: int = 100
    workers: int = 1
    array: ArrayConfig = field(default_factory=ArrayConfig)
    budget: LinkBudget = field(default_factory=LinkBudget)
    sensing: SensingParams = field(default_factory=SensingParams)
    reward: RewardConfig = field(default_factory=RewardConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"profile: unknown profile {self.profile!r}; choose from {sorted(PROFILES)}")
        for name in ("total_episodes", "eval_episodes", "checkpoint_every", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be at least 1, got {getattr(self, name)}")
        if self.curriculum.forced_steps_per_episode > self.env.episode_length:
            raise ConfigError("curriculum.forced_steps_per_episode: exceeds env.episode_length")

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    def config_hash(self) -> str:
        """sha256 over everything except run-scheduling fields (seed, workers)."""
        d = self.to_dict()
        for k in ("seed", "workers"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _paper() -> ExperimentConfig:
    return ExperimentConfig(profile="paper")


def _desk() -> ExperimentConfig:
    return ExperimentConfig(
        profile="desk",
        total_episodes=1000,
        eval_episodes=200,
        ppo=PpoConfig(batch_size=1024, minibatch_size=128),
        curriculum=CurriculumConfig(phase1_episodes=500),
    )


PROFILES = {"paper": _paper, "desk": _desk}


def profile_defaults(name: str) -> ExperimentConfig:
    if name not in PROFILES:
        raise ConfigError(f"profile: unknown profile {name!r}; choose from {sorted(PROFILES)}")
    return PROFILES[name]()


def _reject_unknown(keys, allowed, path: str):
    for k in keys:
        if k not in allowed:
            hint = difflib.get_close_matches(str(k), list(allowed), n=1)
            msg = f"{path}{k}: unknown key"
            if hint:
                msg += f" (did you mean {hint[0]!r}?)"
            raise ConfigError(msg)


def _coerce(value, default, path: str):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(f"{path}: expected a list of {len(default)} values, got {value!r}")
        return tuple(_coerce(v, d, f"{path}[{i}]") for i, (v, d) in enumerate(zip(value, default)))
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    return value


def _merge_section(base, data: Any, path: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
    names = [f.name for f in fields(base)]
    _reject_unknown(data.keys(), names, path + ".")
    changes = {k: _coerce(v, getattr(base, k), f"{path}.{k}") for k, v in data.items()}
    try:
        return replace(base, **changes)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def from_dict(data: Optional[Mapping], profile: Optional[str] = None) -> ExperimentConfig:
    """Build a config from a parsed mapping. ``profile`` overrides the file's own choice."""
    data = dict(data or {})
    top = [f.name for f in fields(ExperimentConfig)]
    _reject_unknown(data.keys(), top, "")
    name = profile or data.get("profile", "paper")
    base = profile_defaults(name)
    changes = {"profile": name}
    for k, v in data.items():
        if k == "profile":
            continue
        if k in SECTIONS:
            changes[k] = _merge_section(getattr(base, k), v, k)
        else:
            changes[k] = _coerce(v, getattr(base, k), k)
    return replace(base, **changes)


def loads(text: str, profile: Optional[str] = None) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse config: {exc}") from None
    if data is not None and not isinstance(data, Mapping):
        raise ConfigError("config root must be a mapping")
    return from_dict(data, profile)


def load_config(path=None, profile: Optional[str] = None) -> ExperimentConfig:
    """Read a YAML config file; ``path=None`` gives the bare profile defaults."""
    if path is None:
        return profile_defaults(profile or "paper")
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text, profile)


def dumps(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)

