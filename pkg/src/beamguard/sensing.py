"""ISAC threat assessment: detection probability, noisy measurements, confidence."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import wrap_degrees
from .errors import ConfigError

VARIANTS = ("paper", "attenuated")


@dataclass(frozen=True)
class SensingParams:
    alpha: float = 10.0
    beta: float = 0.001  # 1/m
    model_variant: str = "attenuated"
    alignment_sigma: float = 10.0  # degrees
    range_sigma: float = 1.5  # m
    azimuth_sigma: float = 3.0  # degrees

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ConfigError(f"alpha and beta must be positive, got {self.alpha}, {self.beta}")
        if self.alignment_sigma <= 0:
            raise ConfigError("alignment_sigma must be positive")
        if self.range_sigma < 0 or self.azimuth_sigma < 0:
            raise ConfigError("measurement noise must be non-negative")
        if self.model_variant not in VARIANTS:
            raise ConfigError(f"model_variant must be one of {VARIANTS}, got {self.model_variant!r}")


@dataclass(frozen=True)
class Measurement:
    est_range: float
    est_azimuth: float


def detection_probability(effort, distance, params: SensingParams = SensingParams()):
    """Per-step probability that sensing picks up the attacker.

    ``paper``:      1 - exp(-alpha*e) * exp(-beta*d)
    ``attenuated``: (1 - exp(-alpha*e)) * exp(-beta*d)

    The printed form grows with distance; ``attenuated`` is the default
    because it decays with range as a sensing link should.
    """
    e = np.clip(effort, 0.0, 1.0)
    d = np.maximum(distance, 0.0)
    if params.model_variant == "paper":
        p = 1.0 - np.exp(-params.alpha * e) * np.exp(-params.beta * d)
    else:
        p = (1.0 - np.exp(-params.alpha * e)) * np.exp(-params.beta * d)
    p = np.clip(p, 0.0, 1.0)
    return float(p) if np.ndim(p) == 0 else p


def alignment_gain(beam_azimuth, true_azimuth, params: SensingParams = SensingParams()):
    """Gaussian sensing-beam kernel on the wrapped angular offset."""
    delta = wrap_degrees(np.asarray(beam_azimuth, dtype=float) - np.asarray(true_azimuth, dtype=float))
    g = np.exp(-np.square(delta) / (2.0 * params.alignment_sigma ** 2))
    return float(g) if np.ndim(g) == 0 else g


def measure(true_range: float, true_azimuth: float, rng: np.random.Generator,
            params: SensingParams = SensingParams()) -> Measurement:
    est_range = true_range + params.range_sigma * rng.standard_normal()
    est_azimuth = true_azimuth + params.azimuth_sigma * rng.standard_normal()
    return Measurement(est_range=max(est_range, 0.0), est_azimuth=wrap_degrees(est_azimuth))


def confidence(effort, true_distance, beam_azimuth, true_azimuth,
               params: SensingParams = SensingParams()):
    """Detection confidence: ``P_d(effort, distance) * alignment_gain``."""
    return detection_probability(effort, true_distance, params) * alignment_gain(
        beam_azimuth, true_azimuth, params)
