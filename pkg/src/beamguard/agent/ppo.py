"""PPO building blocks: GAE, clipped surrogate, value loss, Adam, rollout buffer."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..errors import ConfigError
from .network import MLP, log_softmax, softmax

OVERRIDE_MODES = ("exclude", "on_policy", "mapped")


@dataclass(frozen=True)
class PpoConfig:
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    epochs: int = 40
    batch_size: int = 4096
    minibatch_size: int = 256
    entropy_coef: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    max_grad_norm: float = 0.5
    normalize_advantages: bool = True
    reward_scale: float = 0.01
    hidden_sizes: tuple = (256, 128)
    override_mode: str = "mapped"

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ConfigError(f"gae_lambda must lie in [0, 1], got {self.gae_lambda}")
        if self.clip_epsilon <= 0:
            raise ConfigError("clip_epsilon must be positive")
        if self.epochs < 1 or self.batch_size < 1 or self.minibatch_size < 1:
            raise ConfigError("epochs, batch_size and minibatch_size must be positive")
        if self.reward_scale <= 0:
            raise ConfigError("reward_scale must be positive")
        if self.override_mode not in OVERRIDE_MODES:
            raise ConfigError(f"override_mode must be one of {OVERRIDE_MODES}")


def _check_obs(obs) -> np.ndarray:
    obs = np.asarray(obs, dtype=float)
    if not np.all(np.isfinite(obs)):
        raise ValueError("observation contains non-finite values")
    return obs


def policy_forward(actor: MLP, obs) -> np.ndarray:
    """Action probabilities; a single observation gives a length-5 vector."""
    obs = _check_obs(obs)
    return softmax(actor.forward(np.atleast_2d(obs))).reshape(*obs.shape[:-1], -1)


def value_forward(critic: MLP, obs):
    obs = _check_obs(obs)
    v = critic.forward(np.atleast_2d(obs))[:, 0]
    return float(v[0]) if obs.ndim == 1 else v


def sample_action(probs, rng: np.random.Generator):
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or not np.all(np.isfinite(p)) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"invalid action distribution: {p}")
    idx = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
    idx = min(idx, p.size - 1)
    while p[idx] == 0.0:  # float edge: never return a zero-probability action
        idx -= 1
    return idx, float(np.log(p[idx]))


def gae(rewards, values, bootstrap_value: float, dones, gamma: float, lam: float):
    """Generalized advantage estimates and bootstrapped returns.

    ``dones[t]`` marks that the episode ended after step ``t``, cutting both
    the value bootstrap and the advantage trace.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=float)
    if not (rewards.shape == values.shape == dones.shape):
        raise ValueError("rewards, values and dones must have equal length")
    T = rewards.size
    adv = np.zeros(T)
    next_value, next_adv = bootstrap_value, 0.0
    for t in reversed(range(T)):
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        next_adv = delta + gamma * lam * nonterminal * next_adv
        adv[t] = next_adv
        next_value = values[t]
    return adv, adv + values


def clipped_surrogate(ratio, adv, clip_epsilon: float):
    """Per-sample PPO objective ``min(r*A, clip(r)*A)`` (to be maximized)."""
    ratio = np.asarray(ratio, dtype=float)
    return np.minimum(ratio * adv, np.clip(ratio, 1 - clip_epsilon, 1 + clip_epsilon) * adv)


def actor_loss_and_grads(actor: MLP, obs, actions, old_logp, adv, clip_epsilon: float,
                         entropy_coef: float, mask=None):
    """Clipped-surrogate loss minus entropy bonus, with analytic gradients.

    Samples with ``mask == False`` contribute nothing (used for forced steps).
    """
    obs = np.atleast_2d(obs)
    actions = np.asarray(actions, dtype=int)
    n = obs.shape[0]
    mask = np.ones(n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    m = mask.sum()
    logits, acts = actor.forward(obs, cache=True)
    logp_all = log_softmax(logits)
    p = np.exp(logp_all)
    idx = np.arange(n)
    logp = logp_all[idx, actions]
    ratio = np.exp(logp - old_logp)
    surr = clipped_surrogate(ratio, adv, clip_epsilon)
    entropy = -(p * logp_all).sum(axis=1)
    if m == 0:
        zero = [np.zeros_like(q) for q in actor.params]
        return 0.0, zero, {"approx_kl": 0.0, "clip_frac": 0.0, "entropy": 0.0}
    loss = -(surr[mask].sum() + entropy_coef * entropy[mask].sum()) / m

    # d(-surr)/dlogp is -ratio*A where the unclipped branch is the active min
    unclipped = ratio * adv <= np.clip(ratio, 1 - clip_epsilon, 1 + clip_epsilon) * adv
    g_logp = np.where(unclipped, -ratio * adv, 0.0)
    onehot = np.zeros_like(p)
    onehot[idx, actions] = 1.0
    g_logits = g_logp[:, None] * (onehot - p)
    # dH/dz_k = -p_k (log p_k + H)
    g_logits += entropy_coef * p * (logp_all + entropy[:, None])
    g_logits *= (mask / m)[:, None]
    grads = actor.backward(acts, g_logits)
    diag = {
        "approx_kl": float(np.mean((old_logp - logp)[mask])),
        "clip_frac": float(np.mean((np.abs(ratio - 1) > clip_epsilon)[mask])),
        "entropy": float(np.mean(entropy[mask])),
    }
    return float(loss), grads, diag


def critic_loss_and_grads(critic: MLP, obs, returns):
    obs = np.atleast_2d(obs)
    v, acts = critic.forward(obs, cache=True)
    err = v[:, 0] - returns
    loss = float(np.mean(err ** 2))
    g = (2.0 * err / err.size)[:, None]
    return loss, critic.backward(acts, g)


def clip_grad_norm(grads: List[np.ndarray], max_norm: Optional[float]):
    norm = float(np.sqrt(sum(float((g ** 2).sum()) for g in grads)))
    if max_norm is not None and max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        grads = [g * scale for g in grads]
    return grads, norm


class Adam:
    def __init__(self, params: List[np.ndarray], lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: List[np.ndarray], grads: List[np.ndarray]) -> None:
        """Update ``params`` in place."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1 - b1 ** self.t
        c2 = 1 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class RolloutBuffer:
    """Flat transition storage, flushed after every update."""

    FIELDS = ("obs", "actions", "logp", "rewards", "values", "dones", "forced", "next_obs")

    def __init__(self):
        self.clear()

    def clear(self):
        for f in self.FIELDS:
            setattr(self, f, [])

    def add(self, obs, action, logp, reward, value, done, forced, next_obs):
        self.obs.append(np.asarray(obs, dtype=float))
        self.actions.append(int(action))
        self.logp.append(float(logp))
        self.rewards.append(float(reward))
        self.values.append(float(value))
        self.dones.append(bool(done))
        self.forced.append(bool(forced))
        self.next_obs.append(np.asarray(next_obs, dtype=float))

    def __len__(self):
        return len(self.rewards)


def ppo_update(buffer: RolloutBuffer, actor: MLP, critic: MLP, config: PpoConfig,
               rng: np.random.Generator, actor_opt: Adam, critic_opt: Adam) -> dict:
    """Run ``config.epochs`` passes of minibatch PPO over the buffer.

    Rewards are multiplied by ``reward_scale`` before GAE. With
    ``override_mode == "exclude"`` forced steps feed value targets only.
    Advantages are standardized over the policy-trained samples.
    """
    n = len(buffer)
    if n == 0:
        raise ValueError("cannot update from an empty buffer")
    obs = np.stack(buffer.obs)
    actions = np.asarray(buffer.actions)
    old_logp = np.asarray(buffer.logp)
    rewards = np.asarray(buffer.rewards) * config.reward_scale
    values = np.asarray(buffer.values)
    dones = np.asarray(buffer.dones)
    forced = np.asarray(buffer.forced)

    bootstrap = 0.0 if dones[-1] else value_forward(critic, buffer.next_obs[-1])
    adv, returns = gae(rewards, values, bootstrap, dones, config.gamma, config.gae_lambda)
    mask = ~forced if config.override_mode == "exclude" else np.ones(n, dtype=bool)
    if config.normalize_advantages and mask.sum() > 1:
        mu, sd = adv[mask].mean(), adv[mask].std()
        adv = (adv - mu) / (sd + 1e-8)

    stats = {"actor_loss": [], "critic_loss": [], "entropy": [], "approx_kl": [], "clip_frac": []}
    mb = min(config.minibatch_size, n)
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, mb):
            sl = perm[start:start + mb]
            a_loss, a_grads, diag = actor_loss_and_grads(
                actor, obs[sl], actions[sl], old_logp[sl], adv[sl],
                config.clip_epsilon, config.entropy_coef, mask[sl])
            a_grads, _ = clip_grad_norm(a_grads, config.max_grad_norm)
            actor_opt.step(actor.params, a_grads)

            c_loss, c_grads = critic_loss_and_grads(critic, obs[sl], returns[sl])
            c_grads, _ = clip_grad_norm(c_grads, config.max_grad_norm)
            critic_opt.step(critic.params, c_grads)

            stats["actor_loss"].append(a_loss)
            stats["critic_loss"].append(c_loss)
            for k in ("entropy", "approx_kl", "clip_frac"):
                stats[k].append(diag[k])
    out = {k: float(np.mean(v)) for k, v in stats.items()}
    if not (np.isfinite(out["actor_loss"]) and np.isfinite(out["critic_loss"])):
        raise FloatingPointError(f"non-finite PPO loss: {out}")
    out["samples"] = n
    return out
