"""Power-delay-profile relay detector used as the non-adaptive comparison.

An amplify-and-relay attacker shows up as an extra, later tap. The rule
flags a profile when any later tap is stronger than the earliest one; the
base station beam stays on the user throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import channel
from .environment import BeamStealingEnv, ScenarioState
from .errors import ConfigError
from .metrics import EpisodeMetrics
from .seeding import STREAM_BASELINE, STREAM_EVAL, episode_rng


@dataclass(frozen=True)
class BaselineConfig:
    relay_delay_excess: float = 50.0  # ns
    relay_gain: float = 3.0  # dB over the legitimate tap
    alarm_margin: float = 0.0  # dB
    power_jitter: float = 1.0  # dB
    # chance that the attacker relays (is visible in the PDP) in a given episode
    attack_probability: float = 0.5
    beam_policy: str = "fixed-on-user"

    def __post_init__(self):
        if self.relay_delay_excess <= 0:
            raise ConfigError("relay_delay_excess must be positive")
        if self.power_jitter < 0:
            raise ConfigError("power_jitter must be non-negative")
        if not 0.0 <= self.attack_probability <= 1.0:
            raise ConfigError("attack_probability must lie in [0, 1]")
        if self.beam_policy != "fixed-on-user":
            raise ConfigError(f"unsupported beam_policy {self.beam_policy!r}")


@dataclass(frozen=True)
class PowerDelayProfile:
    """Taps as (delay ns, power dB relative to the strongest tap)."""
    taps: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        delays = [d for d, _ in self.taps]
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise ValueError("tap delays must be strictly increasing")

    @classmethod
    def from_absolute(cls, taps: Sequence[Tuple[float, float]]) -> "PowerDelayProfile":
        taps = sorted(taps)
        peak = max(p for _, p in taps)
        return cls(tuple((float(d), float(p - peak)) for d, p in taps))


def synth_pdp(scenario: ScenarioState, attack_active: bool, rng: np.random.Generator,
              config: BaselineConfig = BaselineConfig(),
              array: channel.ArrayConfig = channel.ArrayConfig(),
              budget: channel.LinkBudget = channel.LinkBudget()) -> PowerDelayProfile:
    h = channel.channel_vector(scenario.user_range, scenario.user_azimuth, array, budget)
    w = channel.beam_weights(scenario.beam_azimuth, array)
    legit_dbm = float(channel.watts_to_dbm(max(abs(np.vdot(h, w)) ** 2, 1e-300)))
    legit_delay = channel.propagation_delay_ns(scenario.user_range)
    taps = [(legit_delay, legit_dbm + config.power_jitter * rng.standard_normal())]
    if attack_active:
        relay_dbm = legit_dbm + config.relay_gain + config.power_jitter * rng.standard_normal()
        taps.append((legit_delay + config.relay_delay_excess, relay_dbm))
    return PowerDelayProfile.from_absolute(taps)


def secbeam_detect(pdp: PowerDelayProfile, config: BaselineConfig = BaselineConfig()) -> bool:
    """Alarm when a later-arriving tap beats the first tap by more than the margin."""
    if not pdp.taps:
        raise ValueError("empty power delay profile")
    first_power = pdp.taps[0][1]
    return any(p > first_power + config.alarm_margin for _, p in pdp.taps[1:])


class SecBeamDetector(ClassifierMixin, BaseEstimator):
    """Stateless classifier wrapper: ``predict`` maps profiles to alarms."""

    def __init__(self, alarm_margin: float = 0.0):
        self.alarm_margin = alarm_margin

    def fit(self, X=None, y=None):
        self.classes_ = np.array([False, True])
        return self

    def predict(self, X: Sequence[PowerDelayProfile]) -> np.ndarray:
        cfg = BaselineConfig(alarm_margin=self.alarm_margin)
        return np.array([secbeam_detect(p, cfg) for p in X], dtype=bool)


def run_baseline_episode(env: BeamStealingEnv, env_rng: np.random.Generator,
                         pdp_rng: np.random.Generator, config: BaselineConfig,
                         episode: int) -> Tuple[EpisodeMetrics, List[dict]]:
    """One episode with the beam re-pointed at the user before every step."""
    env.reset(env_rng)
    attack_active = bool(pdp_rng.random() < config.attack_probability)
    infos = []
    while not env.done:
        env.steer(env.state.user_azimuth)
        out = env.step(4)
        pdp = synth_pdp(env.state, attack_active, pdp_rng, config, env.array, env.budget)
        alarm = secbeam_detect(pdp, config)
        info = dict(out.info, detection=alarm, reward=float("nan"), attack_active=attack_active)
        infos.append(info)
    m = EpisodeMetrics.from_steps(episode, "baseline", infos)
    return m, infos


def run_baseline(episodes: int, env: BeamStealingEnv, seed: int,
                 config: BaselineConfig = BaselineConfig(), stream: int = STREAM_EVAL) -> List[EpisodeMetrics]:
    """Baseline metrics over ``episodes`` scenarios.

    ``stream`` selects the scenario seeds; pass the agent's evaluation
    stream to replay the same geometry the agent saw.
    """
    if episodes <= 0:
        raise ValueError("episodes must be positive")
    out = []
    for ep in range(episodes):
        m, _ = run_baseline_episode(env, episode_rng(seed, stream, ep),
                                    episode_rng(seed, STREAM_BASELINE, ep), config, ep)
        out.append(m)
    return out
