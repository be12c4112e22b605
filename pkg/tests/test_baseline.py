import math

import numpy as np
import pytest

from beamguard.baseline import (
    BaselineConfig,
    PowerDelayProfile,
    SecBeamDetector,
    run_baseline,
    secbeam_detect,
    synth_pdp,
)
from beamguard.environment import BeamStealingEnv, EnvConfig, ScenarioState
from beamguard.errors import ConfigError

SCEN = ScenarioState(60.0, 10.0, 40.0, 40.0, 10.0, 0.5)


def test_attack_off_single_tap():
    pdp = synth_pdp(SCEN, False, np.random.default_rng(0))
    assert len(pdp.taps) == 1 and pdp.taps[0][1] == 0.0


def test_attack_on_relay_tap_construction():
    cfg = BaselineConfig(power_jitter=0.0)
    pdp = synth_pdp(SCEN, True, np.random.default_rng(0), cfg)
    (d0, p0), (d1, p1) = pdp.taps
    assert d1 - d0 == pytest.approx(50.0)
    assert p1 - p0 == pytest.approx(3.0)
    assert p1 == 0.0


def test_delays_sorted_random():
    rng = np.random.default_rng(1)
    env_cfg = EnvConfig()
    from beamguard.environment import sample_scenario
    for _ in range(10_000):
        pdp = synth_pdp(sample_scenario(env_cfg, rng), bool(rng.random() < 0.5), rng)
        delays = [d for d, _ in pdp.taps]
        assert delays == sorted(delays)


def test_detect_rules():
    cfg = BaselineConfig()
    assert not secbeam_detect(PowerDelayProfile(((100.0, 0.0),)), cfg)
    assert secbeam_detect(PowerDelayProfile(((100.0, -3.0), (150.0, 0.0))), cfg)
    assert not secbeam_detect(PowerDelayProfile(((100.0, 0.0), (150.0, -2.0))), cfg)
    with pytest.raises(ValueError):
        secbeam_detect(PowerDelayProfile(()), cfg)


def test_profile_rejects_unsorted():
    with pytest.raises(ValueError):
        PowerDelayProfile(((5.0, 0.0), (1.0, -1.0)))


def test_detector_estimator():
    det = SecBeamDetector().fit()
    X = [PowerDelayProfile(((1.0, 0.0),)), PowerDelayProfile(((1.0, -3.0), (2.0, 0.0)))]
    assert det.predict(X).tolist() == [False, True]


def test_deterministic_full_attack_detects_everything():
    env = BeamStealingEnv()
    cfg = BaselineConfig(power_jitter=0.0, attack_probability=1.0)
    ms = run_baseline(5, env, seed=0, config=cfg)
    assert all(m.detection_rate == 1.0 for m in ms)


def test_no_attack_no_alarms():
    env = BeamStealingEnv()
    ms = run_baseline(50, env, seed=0, config=BaselineConfig(attack_probability=0.0))
    assert np.mean([m.detection_rate for m in ms]) < 0.01


def test_per_step_detection_probability_in_range():
    rng = np.random.default_rng(3)
    cfg = BaselineConfig()
    hits = np.mean([secbeam_detect(synth_pdp(SCEN, True, rng, cfg), cfg) for _ in range(20_000)])
    # difference of two N(0, 1) jitters is N(0, 2): P(3 + N(0, 2) > 0)
    assert 0.5 < hits < 1.0
    assert hits == pytest.approx(0.5 * (1 + math.erf(1.5)), abs=0.01)


def test_beam_stays_on_user_high_sinr():
    env = BeamStealingEnv()
    ms = run_baseline(20, env, seed=1)
    # user at 30..120 m with a matched beam: link budget stays well above 25 dB
    assert min(m.mean_sinr_db for m in ms) > 25


def test_config_validation():
    with pytest.raises(ConfigError):
        BaselineConfig(relay_delay_excess=0)
    with pytest.raises(ConfigError):
        BaselineConfig(beam_policy="sweep")
    with pytest.raises(ValueError):
        run_baseline(0, BeamStealingEnv(), seed=0)
