"""Line-of-sight mmWave link model for a uniform planar array.

Free-space path loss plus the planar-array phase response stand in for a
full stochastic channel. Power math is done in linear watts; dB only shows
up at the function boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GeometryError

SPEED_OF_LIGHT = 299_792_458.0
SINR_FLOOR_DB = -200.0


@dataclass(frozen=True)
class ArrayConfig:
    rows: int = 8
    cols: int = 8
    element_spacing: float = 0.5  # wavelengths
    carrier_frequency: float = 28e9

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigError(f"array must have at least one element, got {self.rows}x{self.cols}")
        if self.element_spacing <= 0:
            raise ConfigError("element_spacing must be positive")
        if self.carrier_frequency <= 0:
            raise ConfigError("carrier_frequency must be positive")

    @property
    def num_elements(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float = 30.0
    noise_psd_dbm_hz: float = -174.0
    bandwidth_hz: float = 100e6

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth_hz}")


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(watts) + 30.0


def wrap_degrees(angle):
    """Wrap an angle (or array of angles) into [-180, 180)."""
    if isinstance(angle, (int, float)):
        return (angle + 180.0) % 360.0 - 180.0
    wrapped = (np.asarray(angle, dtype=float) + 180.0) % 360.0 - 180.0
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def noise_power(budget: LinkBudget) -> float:
    """Thermal noise power in dBm over the configured bandwidth."""
    if budget.bandwidth_hz <= 0:
        raise ConfigError(f"bandwidth must be positive, got {budget.bandwidth_hz}")
    return budget.noise_psd_dbm_hz + 10.0 * np.log10(budget.bandwidth_hz)


def noise_power_watts(budget: LinkBudget) -> float:
    return float(dbm_to_watts(noise_power(budget)))


def steering_vector(azimuth: float, elevation: float = 0.0,
                    array: ArrayConfig = ArrayConfig(), normalized: bool = True) -> np.ndarray:
    """Planar-array response toward (azimuth, elevation) in degrees.

    Element (m, n) carries phase ``2*pi*d*(m*sin(az)*cos(el) + n*sin(el))``.
    With ``normalized`` every entry has magnitude ``1/sqrt(N)``; otherwise 1.
    Flattened row-major over (rows, cols).
    """
    az = math.radians(wrap_degrees(float(azimuth)))
    el = math.radians(elevation)
    k = 2 * np.pi * array.element_spacing
    # phase separates into a row term and a column term
    row = np.exp(1j * k * math.sin(az) * math.cos(el) * np.arange(array.rows))
    col = np.exp(1j * k * math.sin(el) * np.arange(array.cols))
    a = np.outer(row, col).ravel()
    if normalized:
        a = a / math.sqrt(array.num_elements)
    return a


def path_loss(distance: float, frequency: float) -> float:
    """Friis free-space loss in dB. Distances under 1 m are clamped to 1 m."""
    d = max(float(distance), 1.0)
    return 20.0 * np.log10(d) + 20.0 * np.log10(frequency) - 147.55


def channel_vector(user_range: float, user_azimuth: float, array: ArrayConfig = ArrayConfig(),
                   budget: LinkBudget = LinkBudget(), user_elevation: float = 0.0) -> np.ndarray:
    """Channel from the base station to a user at (range, azimuth).

    ``h = sqrt(P_rx) * a`` with ``a`` the unnormalized steering vector, so
    ``||h||^2`` is the per-element received power times the element count.
    """
    if not np.isfinite(user_range) or user_range <= 0:
        raise GeometryError(f"user must be away from the base station, got range {user_range}")
    rx_dbm = budget.tx_power_dbm - path_loss(user_range, array.carrier_frequency)
    gain = np.sqrt(dbm_to_watts(rx_dbm))
    return gain * steering_vector(user_azimuth, user_elevation, array, normalized=False)


def beam_weights(beam_azimuth: float, array: ArrayConfig = ArrayConfig()) -> np.ndarray:
    """Unit-norm analog beam pointed at ``beam_azimuth`` in the horizontal plane.

    Uses the steering vector itself so that ``h^H w`` is coherent when the
    beam matches the user direction.
    """
    return steering_vector(beam_azimuth, 0.0, array, normalized=True)


def sinr(h: np.ndarray, w: np.ndarray, noise: float) -> float:
    """``10*log10(|h^H w|^2 / noise)``; exact nulls return ``SINR_FLOOR_DB``."""
    if noise <= 0:
        raise ValueError(f"noise power must be positive, got {noise}")
    gain = abs(np.vdot(h, w)) ** 2
    if gain == 0.0:
        return SINR_FLOOR_DB
    return max(10.0 * np.log10(gain / noise), SINR_FLOOR_DB)


def propagation_delay_ns(distance: float) -> float:
    return distance / SPEED_OF_LIGHT * 1e9
