"""Training, evaluation, baseline and paired-comparison loops.

Every artifact written here carries the config hash and seed: CSVs in a
leading ``#`` comment, JSON files as fields, checkpoints in their header.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from ..agent.checkpoint import load_checkpoint, save_checkpoint
from ..agent.estimator import PPODefender, run_episode
from ..agent.network import MLP
from ..baseline import run_baseline_episode
from ..curriculum import Phase
from ..environment import TRACE_KEYS, BeamStealingEnv
from ..errors import BeamguardError
from ..metrics import EpisodeMetrics, MetricsWriter, bootstrap_lower_bound, summarize
from ..seeding import STREAM_BASELINE, STREAM_EVAL, episode_rng
from .config import ExperimentConfig, dumps

log = logging.getLogger(__name__)

NEAR_RANGE = 75.0
COMPARE_COLUMNS = ("episode", "scenario_id", "agent_detection_rate", "baseline_detection_rate",
                   "agent_episode_detected", "baseline_episode_detected", "agent_mean_sinr_db",
                   "baseline_mean_sinr_db", "agent_mean_effort", "agent_reward")


class TrainingDiverged(BeamguardError, RuntimeError):
    pass


def build_env(cfg: ExperimentConfig, mode: str = "train") -> BeamStealingEnv:
    return BeamStealingEnv(config=cfg.env, array=cfg.array, budget=cfg.budget,
                           sensing_params=cfg.sensing, reward=cfg.reward, mode=mode)


def build_agent(cfg: ExperimentConfig, seed: Optional[int] = None,
                episodes: Optional[int] = None) -> PPODefender:
    return PPODefender.from_config(
        cfg.ppo,
        n_episodes=cfg.total_episodes if episodes is None else episodes,
        curriculum=cfg.curriculum,
        random_state=cfg.seed if seed is None else seed,
        n_workers=cfg.workers,
    )


def _json_dump(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class TrainResult:
    agent: PPODefender
    checkpoint: Path
    metrics_csv: Path
    episodes: List[EpisodeMetrics]


def train(cfg: ExperimentConfig, out_dir, on_episode: Optional[Callable] = None) -> TrainResult:
    """Train a defender, writing ``train_metrics.csv`` and checkpoints under ``out_dir``."""
    out = Path(out_dir)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    chash = cfg.config_hash()
    (out / "config.yaml").write_text(dumps(cfg))
    agent = build_agent(cfg)
    env = build_env(cfg, "train")
    episodes: List[EpisodeMetrics] = []
    csv_path = out / "train_metrics.csv"

    with MetricsWriter(csv_path, chash, cfg.seed) as writer:
        def callback(m: EpisodeMetrics):
            writer.write(m)
            episodes.append(m)
            n = m.episode + 1
            if n % cfg.checkpoint_every == 0:
                save_checkpoint(out / "checkpoints" / f"ep{n:06d}.bgck", agent.actor_,
                                agent.critic_, chash, n)
            if on_episode is not None:
                on_episode(m)

        try:
            agent.fit(env, callback=callback)
        except FloatingPointError as exc:
            dump = {"error": str(exc), "episode": len(episodes), "config_hash": chash,
                    "seed": cfg.seed, "recent_updates": getattr(agent, "update_log_", [])[-5:]}
            _json_dump(out / "divergence.json", dump)
            raise TrainingDiverged(f"training diverged at episode {len(episodes)}: {exc}") from exc

    final = out / "checkpoint.bgck"
    save_checkpoint(final, agent.actor_, agent.critic_, chash, cfg.total_episodes)
    return TrainResult(agent, final, csv_path, episodes)


@dataclass
class EvalResult:
    episodes: List[EpisodeMetrics]
    infos: List[List[dict]]
    summary: dict

    def effort_split(self, near: float = NEAR_RANGE):
        """Mean effort on steps with the attacker nearer / farther than ``near``."""
        steps = [i for ep in self.infos for i in ep]
        close = [i["effort"] for i in steps if i["attacker_range"] < near]
        far = [i["effort"] for i in steps if i["attacker_range"] > near]
        return (float(np.mean(close)) if close else float("nan"),
                float(np.mean(far)) if far else float("nan"))


def _summary_dict(summary: dict) -> dict:
    return {k: v.as_dict() for k, v in summary.items()}


def evaluate_actor(cfg: ExperimentConfig, actor: MLP, greedy: bool = True,
                   episodes: Optional[int] = None, seed: Optional[int] = None) -> EvalResult:
    """Run the policy with the curriculum off and ground truth masked."""
    env = build_env(cfg, "eval")
    seed = cfg.seed if seed is None else seed
    n = cfg.eval_episodes if episodes is None else episodes
    metrics, all_infos = [], []
    for ep in range(n):
        infos = run_episode(env, actor, None, seed, ep, Phase.OFF, cfg.curriculum, greedy=greedy,
                            stream=STREAM_EVAL)
        metrics.append(EpisodeMetrics.from_steps(ep, "eval", infos))
        all_infos.append(infos)
    return EvalResult(metrics, all_infos, summarize(metrics))


def _write_trace(path, infos: List[List[dict]], extra_keys=()) -> None:
    with open(path, "w") as fh:
        for ep, steps in enumerate(infos):
            for i in steps:
                rec = {"episode": ep}
                rec.update({k: i[k] for k in TRACE_KEYS + tuple(extra_keys)})
                if isinstance(rec.get("reward"), float) and not np.isfinite(rec["reward"]):
                    rec["reward"] = None
                fh.write(json.dumps(rec) + "\n")


def evaluate(cfg: ExperimentConfig, checkpoint, out_dir=None, greedy: bool = True) -> EvalResult:
    ck = load_checkpoint(checkpoint, expected_hash=cfg.config_hash())
    res = evaluate_actor(cfg, ck.actor, greedy=greedy)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        chash = cfg.config_hash()
        with MetricsWriter(out / "eval_metrics.csv", chash, cfg.seed) as w:
            for m in res.episodes:
                w.write(m)
        _write_trace(out / "eval_trace.jsonl", res.infos)
        near, far = res.effort_split()
        _json_dump(out / "eval_summary.json", {
            "config_hash": chash, "seed": cfg.seed, "greedy": greedy,
            "checkpoint_episode": ck.episode, "summary": _summary_dict(res.summary),
            "effort_near": near, "effort_far": far})
    return res


def run_baseline(cfg: ExperimentConfig, out_dir=None, episodes: Optional[int] = None) -> EvalResult:
    """Baseline detector on the evaluation scenario stream."""
    env = build_env(cfg, "eval")
    n = cfg.eval_episodes if episodes is None else episodes
    metrics, all_infos = [], []
    for ep in range(n):
        m, infos = run_baseline_episode(env, episode_rng(cfg.seed, STREAM_EVAL, ep),
                                        episode_rng(cfg.seed, STREAM_BASELINE, ep), cfg.baseline, ep)
        metrics.append(m)
        all_infos.append(infos)
    res = EvalResult(metrics, all_infos, summarize(metrics))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        chash = cfg.config_hash()
        with MetricsWriter(out / "baseline_metrics.csv", chash, cfg.seed) as w:
            for m in metrics:
                w.write(m)
        _write_trace(out / "baseline_trace.jsonl", all_infos, extra_keys=("attack_active",))
        summary = _summary_dict(res.summary)
        summary.pop("reward")  # the detector has no reward signal
        _json_dump(out / "baseline_summary.json",
                   {"config_hash": chash, "seed": cfg.seed, "summary": summary})
    return res


@dataclass
class Ordering:
    name: str
    mean_diff: float
    lower_bound: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: mean diff {self.mean_diff:+.4f}, "
                f"95% lower bound {self.lower_bound:+.4f}")


@dataclass
class CompareReport:
    agent: EvalResult
    baseline: EvalResult
    orderings: List[Ordering]

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.orderings)

    def lines(self) -> List[str]:
        a, b = self.agent.summary, self.baseline.summary
        out = [
            f"agent    per-step detection {a['detection_rate'].mean:.3f} "
            f"(median {a['detection_rate'].median:.3f}, std {a['detection_rate'].std:.3f}), "
            f"per-episode {a['episode_detection'].mean:.3f}, SINR {a['sinr_db'].mean:.2f} dB",
            f"baseline per-step detection {b['detection_rate'].mean:.3f} "
            f"(median {b['detection_rate'].median:.3f}, std {b['detection_rate'].std:.3f}), "
            f"per-episode {b['episode_detection'].mean:.3f}, SINR {b['sinr_db'].mean:.2f} dB",
        ]
        return out + [o.line() for o in self.orderings]


def paired_orderings(agent: EvalResult, baseline: EvalResult, seed: int = 0,
                     level: float = 0.95) -> List[Ordering]:
    """Bootstrap the paired per-episode differences for both orderings."""
    rng = episode_rng(seed, STREAM_BASELINE + 1, 0)
    out = []
    pairs = (
        ("agent detection > baseline detection",
         [x.detection_rate - y.detection_rate for x, y in zip(agent.episodes, baseline.episodes)]),
        ("baseline SINR > agent SINR",
         [y.mean_sinr_db - x.mean_sinr_db for x, y in zip(agent.episodes, baseline.episodes)]),
    )
    for name, diffs in pairs:
        lb = bootstrap_lower_bound(diffs, rng, level=level)
        out.append(Ordering(name, float(np.mean(diffs)), lb, lb > 0))
    return out


def compare(cfg: ExperimentConfig, checkpoint=None, out_dir=None, greedy: bool = True,
            actor: Optional[MLP] = None) -> CompareReport:
    """Agent and baseline on identical scenario seeds, with ordering checks."""
    if actor is None:
        actor = load_checkpoint(checkpoint, expected_hash=cfg.config_hash()).actor
    agent = evaluate_actor(cfg, actor, greedy=greedy)
    base = run_baseline(cfg)
    report = CompareReport(agent, base, paired_orderings(agent, base, cfg.seed))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        chash = cfg.config_hash()
        with open(out / "compare.csv", "w", newline="") as fh:
            fh.write(f"# config_hash={chash} seed={cfg.seed}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COMPARE_COLUMNS)
            for x, y in zip(agent.episodes, base.episodes):
                w.writerow([x.episode, f"{cfg.seed}:{STREAM_EVAL}:{x.episode}",
                            f"{x.detection_rate:.6f}", f"{y.detection_rate:.6f}",
                            int(x.detection_rate > 0), int(y.detection_rate > 0),
                            f"{x.mean_sinr_db:.6f}", f"{y.mean_sinr_db:.6f}",
                            f"{x.mean_effort:.6f}", f"{x.reward:.6f}"])
        _json_dump(out / "compare_summary.json", {
            "config_hash": chash, "seed": cfg.seed, "greedy": greedy,
            "agent": _summary_dict(agent.summary),
            "baseline": {k: v for k, v in _summary_dict(base.summary).items() if k != "reward"},
            "orderings": [o.__dict__ for o in report.orderings],
            "passed": report.passed,
        })
    return report
