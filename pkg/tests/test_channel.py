import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamguard import channel
from beamguard.channel import ArrayConfig, LinkBudget
from beamguard.errors import ConfigError, GeometryError

C = 299_792_458.0


def friis_db(d, f):
    # exact free-space loss, independent of the 147.55 constant
    return 20 * math.log10(4 * math.pi * d * f / C)


def brute_response(az_deg, el_deg=0.0, rows=8, cols=8, spacing=0.5):
    az, el = math.radians(az_deg), math.radians(el_deg)
    out = []
    for m in range(rows):
        for n in range(cols):
            ph = 2 * math.pi * spacing * (m * math.sin(az) * math.cos(el) + n * math.sin(el))
            out.append(complex(math.cos(ph), math.sin(ph)))
    return out


def brute_inner(a, b):
    return sum(x.conjugate() * y for x, y in zip(a, b))


@pytest.mark.parametrize("psd,bw,expected", [(-174, 100e6, -94.0), (-174, 1.0, -174.0),
                                             (-170, 10e6, -100.0)])
def test_noise_power(psd, bw, expected):
    assert channel.noise_power(LinkBudget(noise_psd_dbm_hz=psd, bandwidth_hz=bw)) == pytest.approx(expected, abs=1e-12)


def test_noise_power_rejects_bad_bandwidth():
    with pytest.raises(ConfigError):
        LinkBudget(bandwidth_hz=0)


def test_steering_boresight_is_flat():
    a = channel.steering_vector(0.0, 0.0)
    assert np.allclose(a, a[0])
    assert np.allclose(np.angle(a), 0.0)
    assert np.allclose(np.abs(a), 1 / 8)


def test_steering_coherent_sum():
    a = channel.steering_vector(23.0, 0.0, normalized=False)
    assert np.vdot(a, a).real == pytest.approx(64.0)


def test_steering_matches_brute_force():
    for az in (-47.0, 0.0, 12.5, 80.0):
        assert np.allclose(channel.steering_vector(az, 10.0, normalized=False), brute_response(az, 10.0))


def test_array_factor_falls_off():
    ref = brute_response(0.0)
    at30 = abs(brute_inner(ref, brute_response(30.0)))
    at5 = abs(brute_inner(ref, brute_response(5.0)))
    assert at30 < at5
    a0 = channel.steering_vector(0.0)
    assert abs(np.vdot(a0, channel.steering_vector(30.0))) < abs(np.vdot(a0, channel.steering_vector(5.0)))


def test_path_loss_values():
    assert channel.path_loss(100, 28e9) == pytest.approx(friis_db(100, 28e9), abs=0.01)
    assert channel.path_loss(100, 28e9) == pytest.approx(101.4, abs=0.05)
    assert channel.path_loss(1, 28e9) == pytest.approx(61.4, abs=0.05)
    assert channel.path_loss(200, 28e9) - channel.path_loss(100, 28e9) == pytest.approx(20 * math.log10(2))


def test_path_loss_clamps_below_one_meter():
    assert channel.path_loss(0.2, 28e9) == channel.path_loss(1.0, 28e9)


def test_path_loss_increasing():
    d = np.linspace(1, 500, 200)
    pl = [channel.path_loss(x, 28e9) for x in d]
    assert np.all(np.diff(pl) > 0)


def test_channel_vector_norm_is_full_array_power():
    h = channel.channel_vector(100.0, 0.0)
    rx_w = 10 ** ((30 - channel.path_loss(100, 28e9) - 30) / 10)
    assert np.vdot(h, h).real == pytest.approx(64 * rx_w, rel=1e-12)


def test_channel_vector_distance_only_scales():
    h1 = channel.channel_vector(50.0, 20.0)
    h2 = channel.channel_vector(100.0, 20.0)
    ratio = h1 / h2
    assert np.allclose(ratio, ratio[0])
    assert abs(ratio[0]) == pytest.approx(2.0)


def test_channel_vector_deterministic():
    assert np.array_equal(channel.channel_vector(70, -12), channel.channel_vector(70, -12))


def test_channel_vector_rejects_origin():
    with pytest.raises(GeometryError):
        channel.channel_vector(0.0, 0.0)


def test_beam_weights_wraparound():
    assert np.allclose(channel.beam_weights(17.0), channel.beam_weights(377.0))


def test_matched_beam_maximizes_gain_on_grid():
    h = channel.channel_vector(80.0, 23.0)
    grid = np.arange(-90.0, 90.0, 1.0)
    gains = [abs(np.vdot(h, channel.beam_weights(b))) for b in grid]
    assert grid[int(np.argmax(gains))] == 23.0


def test_sinr_unit_vectors():
    w = channel.beam_weights(10.0)
    assert channel.sinr(w, w, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_sinr_link_budget():
    h = channel.channel_vector(100.0, 0.0)
    w = channel.beam_weights(0.0)
    noise = channel.noise_power_watts(LinkBudget())
    expected = 30 - channel.path_loss(100, 28e9) + 10 * math.log10(64) - (-94.0)
    got = channel.sinr(h, w, noise)
    assert got == pytest.approx(expected, abs=1e-9)
    assert got == pytest.approx(40.7, abs=0.1)


def test_sinr_floor_at_exact_null():
    h = np.zeros(64, complex)
    assert channel.sinr(h, channel.beam_weights(0.0), 1.0) == channel.SINR_FLOOR_DB


def test_sinr_monotone_in_main_lobe():
    h = channel.channel_vector(100.0, 0.0)
    noise = channel.noise_power_watts(LinkBudget())
    vals = [channel.sinr(h, channel.beam_weights(off), noise) for off in np.linspace(0, 7, 71)]
    assert np.all(np.diff(vals) <= 1e-12)


def test_beam_weights_unit_norm_random():
    rng = np.random.default_rng(0)
    for az in rng.uniform(-720, 720, 1000):
        assert abs(np.linalg.norm(channel.beam_weights(az)) - 1.0) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(-180, 180), st.floats(-180, 180), st.floats(0, 2 * math.pi))
def test_sinr_phase_invariant(user_az, beam_az, phi):
    h = channel.channel_vector(60.0, user_az)
    w = channel.beam_weights(beam_az)
    rot = np.exp(1j * phi)
    assert channel.sinr(h * rot, w * rot, 1e-12) == pytest.approx(channel.sinr(h, w, 1e-12), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(-180, 180), st.floats(-180, 180))
def test_normalized_inner_product_bounded(a, b):
    assert abs(np.vdot(channel.steering_vector(a), channel.steering_vector(b))) <= 1 + 1e-12


def test_array_config_validation():
    with pytest.raises(ConfigError):
        ArrayConfig(element_spacing=0)
    with pytest.raises(ConfigError):
        ArrayConfig(carrier_frequency=-1)
    assert ArrayConfig().num_elements == 64
