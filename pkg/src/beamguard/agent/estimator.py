"""Estimator-style wrapper around the PPO actor-critic.

``PPODefender.fit(env)`` trains against a :class:`BeamStealingEnv` with the
forced-success curriculum; ``predict``/``predict_proba`` act on scaled
observations like any scikit-learn classifier.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ..curriculum import CurriculumConfig, Phase, phase_of, plan_episode, should_override
from ..curriculum import forced_action as curriculum_forced_action
from ..channel import wrap_degrees
from ..environment import N_ACTIONS, OBS_DIM, BeamStealingEnv, RewardConfig
from ..metrics import EpisodeMetrics
from ..seeding import STREAM_INIT, STREAM_SHUFFLE, STREAM_TRAIN, episode_rng
from .network import MLP
from .ppo import Adam, PpoConfig, RolloutBuffer, policy_forward, ppo_update, sample_action, value_forward

log = logging.getLogger(__name__)


def run_episode(env: BeamStealingEnv, actor: MLP, critic: Optional[MLP], seed: int, episode: int,
                phase: Phase, curriculum: CurriculumConfig, greedy: bool = False,
                on_step: Optional[Callable] = None, stream: int = STREAM_TRAIN,
                record_mapped: bool = False) -> List[dict]:
    """Play one episode and return the per-step info dicts.

    With ``record_mapped`` a forced step is reported to ``on_step`` as the
    discrete action that moves toward the forced beam/effort setting.

    Each step's transition is passed to ``on_step(obs, action, logp, reward,
    value, done, forced, next_obs)``; the callback may update ``actor`` and
    ``critic`` in place, which takes effect from the next step.
    """
    env_rng = episode_rng(seed, stream, episode)
    cur_rng = episode_rng(seed, stream + 1, episode)
    act_rng = episode_rng(seed, stream + 2, episode)
    obs = env.reset(env_rng)
    plan = plan_episode(phase, env.config.episode_length, cur_rng, curriculum)
    infos = []
    done = False
    while not done:
        probs = policy_forward(actor, obs)
        if greedy:
            action = int(np.argmax(probs))
            logp = float(np.log(probs[action]))
        else:
            action, logp = sample_action(probs, act_rng)
        value = value_forward(critic, obs) if critic is not None else 0.0
        t = env.state.step_index
        override = None
        if should_override(plan, t, cur_rng, curriculum):
            override = curriculum_forced_action(env.state)
            if record_mapped:
                action = equivalent_action(env.state, env.config, env.reward_config)
                logp = float(np.log(max(probs[action], 1e-300)))
        out = env.step(action, override)
        done = out.done
        infos.append(out.info)
        if on_step is not None:
            on_step(obs, action, logp, out.reward, value, done, override is not None, out.observation)
        obs = out.observation
    return infos


def equivalent_action(state, config, reward: RewardConfig = RewardConfig()) -> int:
    """Discrete action closest in effect to the forced-success override.

    The beam steps toward the attacker first. Once aligned the label is
    "raise effort" for a near attacker and "hold" otherwise. Effort is not
    part of the observation, so the label depends on geometry only; raising
    effort at 1.0 is a no-op, matching the override's full effort.
    """
    offset = wrap_degrees(state.attacker_azimuth - state.beam_azimuth)
    if abs(offset) > config.beam_step / 2:
        return 1 if offset > 0 else 0
    return 2 if state.attacker_range < reward.near_threshold else 4


def _collect(args):
    env, actor, critic, seed, episode, phase, curriculum, mapped = args
    transitions = []
    infos = run_episode(env, actor, critic, seed, episode, phase, curriculum,
                        on_step=lambda *tr: transitions.append(tr), record_mapped=mapped)
    return infos, transitions


class PPODefender(BaseEstimator):
    """PPO agent controlling beam azimuth and sensing effort.

    Parameters mirror :class:`PpoConfig`; ``curriculum`` is a
    :class:`CurriculumConfig`. ``n_workers > 1`` collects episodes in
    parallel against frozen parameter snapshots, which is statistically but
    not bitwise equivalent to the sequential loop.
    """

    def __init__(self, actor_lr=3e-4, critic_lr=1e-3, gamma=0.99, gae_lambda=0.95,
                 clip_epsilon=0.2, epochs=40, batch_size=4096, minibatch_size=256,
                 entropy_coef=0.01, max_grad_norm=0.5, normalize_advantages=True,
                 reward_scale=0.01, hidden_sizes=(256, 128), override_mode="mapped",
                 n_episodes=3000, curriculum=None, random_state=0, n_workers=1):
        self.actor_lr = actor_lr
        self.critic_lr = critic_lr
        self.gamma = gamma
        self.gae_lambda = gae_lambda
        self.clip_epsilon = clip_epsilon
        self.epochs = epochs
        self.batch_size = batch_size
        self.minibatch_size = minibatch_size
        self.entropy_coef = entropy_coef
        self.max_grad_norm = max_grad_norm
        self.normalize_advantages = normalize_advantages
        self.reward_scale = reward_scale
        self.hidden_sizes = hidden_sizes
        self.override_mode = override_mode
        self.n_episodes = n_episodes
        self.curriculum = curriculum
        self.random_state = random_state
        self.n_workers = n_workers

    @classmethod
    def from_config(cls, ppo: PpoConfig, **kwargs) -> "PPODefender":
        return cls(**{k: getattr(ppo, k) for k in cls._ppo_keys()}, **kwargs)

    @staticmethod
    def _ppo_keys():
        return ("actor_lr", "critic_lr", "gamma", "gae_lambda", "clip_epsilon", "epochs",
                "batch_size", "minibatch_size", "entropy_coef", "max_grad_norm",
                "normalize_advantages", "reward_scale", "hidden_sizes", "override_mode")

    def ppo_config(self) -> PpoConfig:
        return PpoConfig(**{k: getattr(self, k) for k in self._ppo_keys()})

    def _init_networks(self):
        rng = episode_rng(self.random_state, STREAM_INIT, 0)
        hidden = tuple(self.hidden_sizes)
        self.actor_ = MLP.initialized((OBS_DIM, *hidden, N_ACTIONS), rng, output_gain=0.01)
        self.critic_ = MLP.initialized((OBS_DIM, *hidden, 1), rng, output_gain=1.0)

    def fit(self, env: BeamStealingEnv, callback: Optional[Callable[[EpisodeMetrics], None]] = None):
        """Train for ``n_episodes`` episodes; ``callback`` receives each episode's metrics."""
        cfg = self.ppo_config()
        curriculum = self.curriculum or CurriculumConfig()
        self._init_networks()
        actor_opt = Adam(self.actor_.params, cfg.actor_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        critic_opt = Adam(self.critic_.params, cfg.critic_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        shuffle_rng = episode_rng(self.random_state, STREAM_SHUFFLE, 0)
        buffer = RolloutBuffer()
        mapped = cfg.override_mode == "mapped"
        self.update_log_ = []

        def add(*transition):
            buffer.add(*transition)
            if len(buffer) >= cfg.batch_size:
                stats = ppo_update(buffer, self.actor_, self.critic_, cfg, shuffle_rng,
                                   actor_opt, critic_opt)
                self.update_log_.append(stats)
                log.debug("ppo update %d: %s", len(self.update_log_), stats)
                buffer.clear()

        def finish(ep, phase, infos):
            m = EpisodeMetrics.from_steps(ep, phase.value, infos)
            if callback is not None:
                callback(m)

        if self.n_workers <= 1:
            for ep in range(self.n_episodes):
                phase = phase_of(ep, curriculum)
                infos = run_episode(env, self.actor_, self.critic_, self.random_state, ep, phase,
                                    curriculum, on_step=add, record_mapped=mapped)
                finish(ep, phase, infos)
        else:
            with ProcessPoolExecutor(self.n_workers) as pool:
                for start in range(0, self.n_episodes, self.n_workers):
                    eps = range(start, min(start + self.n_workers, self.n_episodes))
                    actor, critic = self.actor_.copy(), self.critic_.copy()
                    jobs = [(env, actor, critic, self.random_state, ep, phase_of(ep, curriculum),
                             curriculum, mapped) for ep in eps]
                    for ep, (infos, transitions) in zip(eps, pool.map(_collect, jobs)):
                        for tr in transitions:
                            add(*tr)
                        finish(ep, phase_of(ep, curriculum), infos)
        return self

    def _validate(self, X):
        check_is_fitted(self, "actor_")
        X = check_array(X, ensure_2d=False, dtype=float)
        if X.shape[-1] != OBS_DIM:
            raise ValueError(f"expected {OBS_DIM} observation features, got {X.shape[-1]}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        return policy_forward(self.actor_, self._validate(X))

    def predict(self, X):
        p = self.predict_proba(X)
        return np.argmax(p, axis=-1)

    def value(self, X):
        return value_forward(self.critic_, self._validate(X))
