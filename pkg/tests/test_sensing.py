import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamguard import sensing
from beamguard.errors import ConfigError
from beamguard.sensing import SensingParams

PAPER = SensingParams(model_variant="paper")


def test_zero_effort_zero_distance_paper_variant():
    assert sensing.detection_probability(0.0, 0.0, PAPER) == 0.0


def test_full_effort_at_zero_distance():
    p = sensing.detection_probability(1.0, 0.0, SensingParams(alpha=3.0))
    assert p == pytest.approx(1 - math.exp(-3), abs=1e-12)
    assert p == pytest.approx(0.9502, abs=1e-4)


def test_monotonicity_in_distance_by_variant():
    d = np.linspace(0, 200, 401)
    for e in (0.2, 0.5, 1.0):
        paper = sensing.detection_probability(e, d, PAPER)
        att = sensing.detection_probability(e, d, SensingParams())
        assert np.all(np.diff(paper) >= 0)
        assert np.all(np.diff(att) <= 0)


def test_alignment_gain_values():
    p = SensingParams(alignment_sigma=10.0)
    assert sensing.alignment_gain(33.0, 33.0, p) == 1.0
    assert sensing.alignment_gain(10.0, 0.0, p) == pytest.approx(math.exp(-0.5))
    assert sensing.alignment_gain(10.0, 0.0, p) == pytest.approx(0.6065, abs=1e-4)
    assert sensing.alignment_gain(-175.0, 175.0, p) == pytest.approx(sensing.alignment_gain(0.0, 10.0, p))


@settings(max_examples=100, deadline=None)
@given(st.floats(-360, 360), st.floats(-360, 360))
def test_alignment_gain_symmetric(a, b):
    assert sensing.alignment_gain(a, b) == pytest.approx(sensing.alignment_gain(b, a), rel=1e-12, abs=1e-15)


def test_measure_passthrough_without_noise():
    p = SensingParams(range_sigma=0.0, azimuth_sigma=0.0)
    m = sensing.measure(42.0, 17.0, np.random.default_rng(0), p)
    assert (m.est_range, m.est_azimuth) == (42.0, 17.0)


def test_measure_noise_statistics():
    rng = np.random.default_rng(1)
    ms = [sensing.measure(100.0, 10.0, rng) for _ in range(100_000)]
    r = np.array([m.est_range for m in ms]) - 100.0
    a = np.array([m.est_azimuth for m in ms]) - 10.0
    assert abs(r.std() / 1.5 - 1) < 0.03
    assert abs(a.std() / 3.0 - 1) < 0.03
    assert abs(r.mean()) < 0.05
    assert abs(a.mean()) < 0.1


def test_measure_clamps_range():
    rng = np.random.default_rng(2)
    assert all(sensing.measure(0.0, 0.0, rng).est_range >= 0 for _ in range(1000))


def test_confidence_zero_effort():
    assert sensing.confidence(0.0, 10.0, 5.0, 5.0) == 0.0


def test_confidence_forced_success_inputs():
    p = SensingParams(alpha=3.0)
    assert sensing.confidence(1.0, 0.0, 37.0, 37.0, p) == pytest.approx(1 - math.exp(-3))


def test_probabilities_bounded_random():
    rng = np.random.default_rng(3)
    n = 1_000_000
    e, d = rng.uniform(0, 1, n), rng.uniform(0, 500, n)
    b, t = rng.uniform(-180, 180, n), rng.uniform(-180, 180, n)
    for params in (SensingParams(), PAPER):
        c = sensing.confidence(e, d, b, t, params)
        p = sensing.detection_probability(e, d, params)
        assert np.all((0 <= c) & (c <= 1))
        assert np.all(c <= p + 1e-15)


def test_attenuated_finite_difference_signs():
    e, d = np.meshgrid(np.linspace(0, 1, 51), np.linspace(0, 300, 61))
    h = 1e-6
    p = SensingParams()
    de = sensing.detection_probability(np.clip(e + h, 0, 1), d, p) - sensing.detection_probability(e, d, p)
    dd = sensing.detection_probability(e, d + h, p) - sensing.detection_probability(e, d, p)
    assert np.all(de >= 0)
    assert np.all(dd <= 0)


def test_confidence_lipschitz_in_beam_azimuth():
    p = SensingParams()
    grid = np.arange(-180, 180, 0.1)
    c = sensing.confidence(1.0, 30.0, grid, 12.0, p)
    # max slope of exp(-x^2 / 2s^2) is exp(-1/2) / s per degree
    bound = math.exp(-0.5) / p.alignment_sigma * 0.1
    assert np.max(np.abs(np.diff(c))) <= bound + 1e-12


def test_params_validation():
    with pytest.raises(ConfigError):
        SensingParams(alpha=0)
    with pytest.raises(ConfigError):
        SensingParams(model_variant="other")
    with pytest.raises(ConfigError):
        SensingParams(alignment_sigma=0)
