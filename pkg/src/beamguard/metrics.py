"""Per-episode metrics, summary statistics and the CSV schema."""
from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from typing import Iterable, List, Optional, Sequence

import numpy as np

CSV_COLUMNS = ("episode", "phase", "reward", "detection_rate", "mean_sinr_db", "mean_effort",
               "override_count")


@dataclass
class EpisodeMetrics:
    episode: int
    phase: str
    reward: float
    detection_rate: float
    mean_sinr_db: float
    mean_effort: float
    override_count: int

    @classmethod
    def from_steps(cls, episode: int, phase: str, infos: Sequence[dict]) -> "EpisodeMetrics":
        if not infos:
            raise ValueError("episode has no steps")
        return cls(
            episode=episode,
            phase=phase,
            reward=float(sum(i["reward"] for i in infos)),
            detection_rate=float(np.mean([i["detection"] for i in infos])),
            mean_sinr_db=float(np.mean([i["sinr_db"] for i in infos])),
            mean_effort=float(np.mean([i["effort"] for i in infos])),
            override_count=int(sum(i["override"] for i in infos)),
        )

    def row(self) -> list:
        return [self.episode, self.phase, f"{self.reward:.6f}", f"{self.detection_rate:.6f}",
                f"{self.mean_sinr_db:.6f}", f"{self.mean_effort:.6f}", self.override_count]


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std: float
    median: float
    min: float
    max: float

    @classmethod
    def of(cls, values) -> "SummaryStats":
        v = np.asarray(list(values), dtype=float)
        if v.size == 0:
            raise ValueError("cannot summarize an empty series")
        return cls(float(v.mean()), float(v.std()), float(np.median(v)), float(v.min()),
                   float(v.max()))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def summarize(episodes: Iterable[EpisodeMetrics]) -> dict:
    """Table-style summary of SINR, detection rate and reward.

    ``episode_detection`` treats an episode as detected if any step was.
    """
    eps = list(episodes)
    return {
        "sinr_db": SummaryStats.of(e.mean_sinr_db for e in eps),
        "detection_rate": SummaryStats.of(e.detection_rate for e in eps),
        "episode_detection": SummaryStats.of(float(e.detection_rate > 0) for e in eps),
        "reward": SummaryStats.of(e.reward for e in eps),
        "effort": SummaryStats.of(e.mean_effort for e in eps),
    }


class MetricsWriter:
    """Incremental CSV writer; first line is a ``#`` comment with hash and seed."""

    def __init__(self, path, config_hash: str, seed: int, columns=CSV_COLUMNS):
        self.path = path
        self._fh = open(path, "w", newline="")
        self._fh.write(f"# config_hash={config_hash} seed={seed}\n")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(columns)

    def write(self, m) -> None:
        self._writer.writerow(m.row() if isinstance(m, EpisodeMetrics) else m)
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path) -> List[EpisodeMetrics]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    return [EpisodeMetrics(int(r["episode"]), r["phase"], float(r["reward"]),
                           float(r["detection_rate"]), float(r["mean_sinr_db"]),
                           float(r["mean_effort"]), int(r["override_count"])) for r in rows]


def bootstrap_lower_bound(diffs, rng: np.random.Generator, n_boot: int = 10_000,
                          level: float = 0.95) -> float:
    """One-sided percentile bootstrap lower bound of the mean of ``diffs``."""
    d = np.asarray(diffs, dtype=float)
    idx = rng.integers(0, d.size, size=(n_boot, d.size))
    means = d[idx].mean(axis=1)
    return float(np.quantile(means, 1.0 - level))


def read_header(path) -> Optional[dict]:
    with open(path) as fh:
        first = fh.readline().strip()
    if not first.startswith("#"):
        return None
    return dict(kv.split("=", 1) for kv in first[1:].split())
