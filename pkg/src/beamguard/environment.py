"""Episodic beam-steering / sensing decision process.

The environment owns the scenario geometry, applies the five discrete
actions (or a forced override), recomputes link and sensing quantities and
scores each step with the weighted-indicator reward.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from . import channel, sensing
from .channel import ArrayConfig, LinkBudget, wrap_degrees
from .errors import ConfigError, UsageError
from .sensing import Measurement, SensingParams

N_ACTIONS = 5
OBS_DIM = 7
ACTION_NAMES = ("beam_left", "beam_right", "effort_up", "effort_down", "hold")

OBS_FIELDS = (
    "sinr",
    "beam_azimuth",
    "est_attacker_azimuth",
    "est_attacker_range",
    "confidence",
    "true_attacker_azimuth",
    "true_attacker_range",
)

# min-max bounds used to scale each observation slot to roughly [0, 1]. Azimuths
# use the user sector, not the full circle: one 5 degree beam step must stay a
# visible change in the input. Attackers outside the sector map slightly
# outside [0, 1], which the networks handle fine.
SINR_BOUNDS = (-40.0, 60.0)
AZIMUTH_BOUNDS = (-60.0, 60.0)
RANGE_BOUNDS = (0.0, 200.0)
CONF_BOUNDS = (0.0, 1.0)
OBS_LOW = np.array([SINR_BOUNDS[0], AZIMUTH_BOUNDS[0], AZIMUTH_BOUNDS[0], RANGE_BOUNDS[0],
                    CONF_BOUNDS[0], AZIMUTH_BOUNDS[0], RANGE_BOUNDS[0]])
OBS_HIGH = np.array([SINR_BOUNDS[1], AZIMUTH_BOUNDS[1], AZIMUTH_BOUNDS[1], RANGE_BOUNDS[1],
                     CONF_BOUNDS[1], AZIMUTH_BOUNDS[1], RANGE_BOUNDS[1]])


@dataclass(frozen=True)
class RewardConfig:
    w_det: float = 150.0
    w_pro: float = 25.0
    w_unaware: float = 5.0
    w_com: float = 0.5
    conf_threshold: float = 0.7
    near_threshold: float = 80.0
    effort_threshold: float = 0.8
    sinr_threshold: float = 5.0

    def __post_init__(self):
        for name in ("w_det", "w_pro", "w_unaware", "w_com"):
            if getattr(self, name) < 0:
                raise ConfigError(f"reward weight {name} must be non-negative")


@dataclass(frozen=True)
class EnvConfig:
    episode_length: int = 50
    user_range: tuple = (30.0, 120.0)
    user_azimuth: tuple = (-60.0, 60.0)
    attacker_range: tuple = (20.0, 150.0)
    attacker_offset: tuple = (15.0, 60.0)  # |attacker az - user az|, sign random
    initial_effort: float = 0.5
    beam_step: float = 5.0
    effort_step: float = 0.25
    jitter_range: float = 0.5
    jitter_azimuth: float = 0.5

    def __post_init__(self):
        if self.episode_length < 1:
            raise ConfigError("episode_length must be at least 1")
        for name in ("user_range", "user_azimuth", "attacker_range", "attacker_offset"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} bounds are inverted: {lo} > {hi}")
        if self.user_range[0] <= 0 or self.attacker_range[0] <= 0:
            raise ConfigError("range bounds must be positive")
        if not 0.0 <= self.initial_effort <= 1.0:
            raise ConfigError("initial_effort must lie in [0, 1]")
        if self.jitter_range < 0 or self.jitter_azimuth < 0:
            raise ConfigError("jitter must be non-negative")


@dataclass(frozen=True)
class ScenarioState:
    user_range: float
    user_azimuth: float
    attacker_range: float
    attacker_azimuth: float
    beam_azimuth: float
    effort: float
    step_index: int = 0


@dataclass(frozen=True)
class Observation:
    sinr: float
    beam_azimuth: float
    est_attacker_azimuth: float
    est_attacker_range: float
    confidence: float
    true_attacker_azimuth: float
    true_attacker_range: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in OBS_FIELDS], dtype=float)


@dataclass(frozen=True)
class ForcedAction:
    """Environment-level bypass of the agent's choice."""
    beam_azimuth: float
    effort: float = 1.0
    force_detection: bool = True


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict = field(default_factory=dict)


class ObservationScaler(TransformerMixin, BaseEstimator):
    """Fixed min-max scaling of the 7 observation slots.

    Bounds are constants rather than fitted statistics so that training runs
    stay reproducible; ``fit`` only validates input shape.
    """

    def __init__(self, low=OBS_LOW, high=OBS_HIGH):
        self.low = low
        self.high = high

    def fit(self, X=None, y=None):
        if X is not None:
            check_array(X, ensure_min_samples=0)
        self.low_ = np.asarray(self.low, dtype=float)
        self.high_ = np.asarray(self.high, dtype=float)
        self.n_features_in_ = self.low_.size
        return self

    def _bounds(self):
        if not hasattr(self, "low_"):
            self.fit()
        return self.low_, self.high_

    def transform(self, X):
        low, high = self._bounds()
        X = np.asarray(X, dtype=float)
        return (X - low) / (high - low)

    def inverse_transform(self, X):
        low, high = self._bounds()
        X = np.asarray(X, dtype=float)
        return X * (high - low) + low


_SCALER = ObservationScaler().fit()


def compute_reward(conf: float, true_range: float, effort: float, sinr_db: float,
                   cfg: RewardConfig = RewardConfig()) -> float:
    near = true_range < cfg.near_threshold
    reward = 0.0
    if conf > cfg.conf_threshold:
        reward += cfg.w_det
    if near and effort > cfg.effort_threshold:
        reward += cfg.w_pro
    if near and conf < cfg.conf_threshold:
        reward -= cfg.w_unaware
    if sinr_db > cfg.sinr_threshold:
        reward += cfg.w_com
    return reward


def apply_action(state: ScenarioState, action: int, cfg: EnvConfig = EnvConfig()) -> ScenarioState:
    """Apply one discrete action; ``step_index`` is advanced by the caller."""
    if action not in range(N_ACTIONS):
        raise ValueError(f"action must be in 0..{N_ACTIONS - 1}, got {action!r}")
    beam, effort = state.beam_azimuth, state.effort
    if action == 0:
        beam -= cfg.beam_step
    elif action == 1:
        beam += cfg.beam_step
    elif action == 2:
        effort += cfg.effort_step
    elif action == 3:
        effort -= cfg.effort_step
    return replace(state, beam_azimuth=wrap_degrees(beam), effort=float(np.clip(effort, 0.0, 1.0)))


def sample_scenario(cfg: EnvConfig, rng: np.random.Generator) -> ScenarioState:
    user_range = rng.uniform(*cfg.user_range)
    user_az = rng.uniform(*cfg.user_azimuth)
    attacker_range = rng.uniform(*cfg.attacker_range)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    attacker_az = wrap_degrees(user_az + sign * rng.uniform(*cfg.attacker_offset))
    return ScenarioState(
        user_range=user_range,
        user_azimuth=user_az,
        attacker_range=attacker_range,
        attacker_azimuth=attacker_az,
        beam_azimuth=user_az,
        effort=cfg.initial_effort,
    )


def assemble_state(state: ScenarioState, measurement: Measurement, conf: float, sinr_db: float,
                   mode: str = "train", normalize: bool = True) -> np.ndarray:
    """Build the 7-slot observation.

    In ``eval`` mode the two ground-truth slots are filled with the noisy
    estimates, keeping the input width fixed without leaking true geometry.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if mode == "train":
        true_az, true_range = state.attacker_azimuth, state.attacker_range
    else:
        true_az, true_range = measurement.est_azimuth, measurement.est_range
    obs = Observation(
        sinr=sinr_db,
        beam_azimuth=state.beam_azimuth,
        est_attacker_azimuth=measurement.est_azimuth,
        est_attacker_range=measurement.est_range,
        confidence=conf,
        true_attacker_azimuth=true_az,
        true_attacker_range=true_range,
    ).to_array()
    return _SCALER.transform(obs) if normalize else obs


def episode_detection_rate(outcomes: Sequence) -> float:
    """Fraction of steps with a detection. Accepts StepOutcomes or bools."""
    if len(outcomes) == 0:
        raise ValueError("episode has no steps")
    flags = [o.info["detection"] if isinstance(o, StepOutcome) else bool(o) for o in outcomes]
    return float(np.mean(flags))


class BeamStealingEnv:
    """Single base station, one user and one beam-stealing attacker.

    Parameters
    ----------
    config : EnvConfig
    array, budget, sensing_params, reward : module configs
    mode : {"train", "eval"}
        Controls ground-truth masking in the observation.
    """

    def __init__(self, config: EnvConfig = EnvConfig(), array: ArrayConfig = ArrayConfig(),
                 budget: LinkBudget = LinkBudget(), sensing_params: SensingParams = SensingParams(),
                 reward: RewardConfig = RewardConfig(), mode: str = "train"):
        self.config = config
        self.array = array
        self.budget = budget
        self.sensing_params = sensing_params
        self.reward_config = reward
        self.mode = mode
        self._noise_w = channel.noise_power_watts(budget)
        self.state: Optional[ScenarioState] = None
        self.rng: Optional[np.random.Generator] = None
        self.done = True

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.rng = rng
        self.state = sample_scenario(self.config, rng)
        self.done = False
        sinr_db = self._sinr(self.state)
        meas = sensing.measure(self.state.attacker_range, self.state.attacker_azimuth, rng,
                               self.sensing_params)
        conf = self._confidence(self.state)
        self.last_info = {"sinr_db": sinr_db, "conf": conf, "effort": self.state.effort}
        return assemble_state(self.state, meas, conf, sinr_db, self.mode)

    def _sinr(self, s: ScenarioState) -> float:
        h = channel.channel_vector(s.user_range, s.user_azimuth, self.array, self.budget)
        w = channel.beam_weights(s.beam_azimuth, self.array)
        return channel.sinr(h, w, self._noise_w)

    def _confidence(self, s: ScenarioState) -> float:
        return sensing.confidence(s.effort, s.attacker_range, s.beam_azimuth, s.attacker_azimuth,
                                  self.sensing_params)

    def steer(self, azimuth: float) -> None:
        """Point the beam at an absolute azimuth without consuming a step."""
        self.state = replace(self.state, beam_azimuth=wrap_degrees(azimuth))

    def forced_action(self) -> ForcedAction:
        return ForcedAction(beam_azimuth=self.state.attacker_azimuth)

    def step(self, action: int, override: Optional[ForcedAction] = None) -> StepOutcome:
        if self.done or self.state is None:
            raise UsageError("step() called on a finished episode; call reset() first")
        cfg, rng = self.config, self.rng
        if override is not None:
            s = replace(self.state, beam_azimuth=wrap_degrees(override.beam_azimuth),
                        effort=float(np.clip(override.effort, 0.0, 1.0)))
        else:
            s = apply_action(self.state, action, cfg)
        jitter = rng.standard_normal(4)
        s = replace(
            s,
            user_range=max(s.user_range + cfg.jitter_range * jitter[0], 1.0),
            user_azimuth=wrap_degrees(s.user_azimuth + cfg.jitter_azimuth * jitter[1]),
            attacker_range=max(s.attacker_range + cfg.jitter_range * jitter[2], 1.0),
            attacker_azimuth=wrap_degrees(s.attacker_azimuth + cfg.jitter_azimuth * jitter[3]),
        )
        sinr_db = self._sinr(s)
        meas = sensing.measure(s.attacker_range, s.attacker_azimuth, rng, self.sensing_params)
        forced = override is not None and override.force_detection
        conf = 1.0 if forced else self._confidence(s)
        detection = forced or conf > self.reward_config.conf_threshold
        reward = compute_reward(conf, s.attacker_range, s.effort, sinr_db, self.reward_config)

        s = replace(s, step_index=s.step_index + 1)
        self.state = s
        self.done = s.step_index >= cfg.episode_length
        obs = assemble_state(s, meas, conf, sinr_db, self.mode)
        info = {
            "step_index": s.step_index - 1,
            "action": int(action),
            "override": override is not None,
            "detection": bool(detection),
            "sinr_db": float(sinr_db),
            "conf": float(conf),
            "effort": s.effort,
            "attacker_range": s.attacker_range,
            "reward": reward,
        }
        self.last_info = info
        return StepOutcome(observation=obs, reward=reward, done=self.done, info=info)


TRACE_KEYS = ("step_index", "action", "override", "sinr_db", "conf", "reward", "detection")


def write_trace(path, outcomes: Iterable[StepOutcome], extra: Optional[dict] = None) -> None:
    """Write one JSON object per step."""
    with open(path, "w") as fh:
        for o in outcomes:
            rec = {k: o.info[k] for k in TRACE_KEYS}
            if extra:
                rec.update(extra)
            fh.write(json.dumps(rec) + "\n")
