"""Two-phase forced-success curriculum.

Phase 1 overrides a fixed number of randomly chosen steps per episode with
the "aim at the attacker, full effort" action. Phase 2 replays that same
action with a small per-step probability. Disabled curricula never override.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import FrozenSet

import numpy as np

from .environment import ForcedAction, ScenarioState
from .errors import ConfigError


class Phase(str, enum.Enum):
    PHASE1 = "phase1"
    PHASE2 = "phase2"
    OFF = "off"


@dataclass(frozen=True)
class CurriculumConfig:
    phase1_episodes: int = 1500
    forced_steps_per_episode: int = 5
    phase2_override_prob: float = 0.10
    enabled: bool = True

    def __post_init__(self):
        if self.phase1_episodes < 0 or self.forced_steps_per_episode < 0:
            raise ConfigError("curriculum counts must be non-negative")
        if not 0.0 <= self.phase2_override_prob <= 1.0:
            raise ConfigError("phase2_override_prob must lie in [0, 1]")


@dataclass(frozen=True)
class OverridePlan:
    phase: Phase
    forced_steps: FrozenSet[int] = field(default_factory=frozenset)


def phase_of(episode_index: int, config: CurriculumConfig) -> Phase:
    if not config.enabled:
        return Phase.OFF
    return Phase.PHASE1 if episode_index < config.phase1_episodes else Phase.PHASE2


def plan_episode(phase: Phase, episode_length: int, rng: np.random.Generator,
                 config: CurriculumConfig = CurriculumConfig()) -> OverridePlan:
    if episode_length < config.forced_steps_per_episode:
        raise ConfigError(
            f"episode_length {episode_length} is shorter than "
            f"forced_steps_per_episode {config.forced_steps_per_episode}")
    if phase is not Phase.PHASE1:
        return OverridePlan(phase)
    steps = rng.choice(episode_length, size=config.forced_steps_per_episode, replace=False)
    return OverridePlan(phase, frozenset(int(s) for s in steps))


def should_override(plan: OverridePlan, step_index: int, rng: np.random.Generator,
                    config: CurriculumConfig = CurriculumConfig()) -> bool:
    if plan.phase is Phase.PHASE1:
        return step_index in plan.forced_steps
    if plan.phase is Phase.PHASE2:
        return bool(rng.random() < config.phase2_override_prob)
    return False


def forced_action(scenario: ScenarioState) -> ForcedAction:
    """Aim at the attacker's true bearing with full sensing effort."""
    return ForcedAction(beam_azimuth=scenario.attacker_azimuth, effort=1.0, force_detection=True)


def dry_run(n_episodes: int, episode_length: int, rng: np.random.Generator,
            config: CurriculumConfig = CurriculumConfig(), start_episode: int = 0) -> dict:
    """Plan episodes without an environment and count the overrides."""
    forced = 0
    per_episode = []
    for ep in range(start_episode, start_episode + n_episodes):
        plan = plan_episode(phase_of(ep, config), episode_length, rng, config)
        n = sum(should_override(plan, t, rng, config) for t in range(episode_length))
        per_episode.append(n)
        forced += n
    return {"episodes": n_episodes, "forced_steps": forced, "per_episode": per_episode}
