import struct

import numpy as np
import pytest

from beamguard.agent.checkpoint import _HEADER, load_checkpoint, save_checkpoint
from beamguard.agent.network import MLP
from beamguard.agent.ppo import policy_forward, value_forward
from beamguard.errors import CheckpointError

HASH = "a" * 64


@pytest.fixture
def nets():
    rng = np.random.default_rng(0)
    return (MLP.initialized((7, 16, 8, 5), rng, output_gain=0.5),
            MLP.initialized((7, 16, 8, 1), rng, output_gain=1.0))


def test_round_trip_bit_exact(tmp_path, nets):
    actor, critic = nets
    path = tmp_path / "c.bgck"
    save_checkpoint(path, actor, critic, HASH, 123)
    ck = load_checkpoint(path)
    assert ck.episode == 123 and ck.config_hash == HASH
    for a, b in zip(actor.params + critic.params, ck.actor.params + ck.critic.params):
        assert a.shape == b.shape and np.array_equal(a, b)
    x = np.random.default_rng(1).normal(size=(4, 7))
    assert np.array_equal(policy_forward(actor, x), policy_forward(ck.actor, x))
    assert np.array_equal(value_forward(critic, x), value_forward(ck.critic, x))


def test_full_size_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    actor = MLP.initialized((7, 256, 128, 5), rng, output_gain=0.01)
    critic = MLP.initialized((7, 256, 128, 1), rng, output_gain=1.0)
    save_checkpoint(tmp_path / "f.bgck", actor, critic, HASH, 0)
    ck = load_checkpoint(tmp_path / "f.bgck")
    assert ck.actor.sizes == (7, 256, 128, 5) and ck.critic.sizes == (7, 256, 128, 1)
    assert all(np.array_equal(a, b) for a, b in zip(actor.params, ck.actor.params))


def test_tampered_shape_rejected(tmp_path, nets):
    path = tmp_path / "c.bgck"
    save_checkpoint(path, *nets, HASH, 1)
    data = bytearray(path.read_bytes())
    off = _HEADER.size + 4
    rows, cols = struct.unpack_from("<II", data, off)
    struct.pack_into("<II", data, off, rows, cols + 1)
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_bad_magic_and_version(tmp_path, nets):
    path = tmp_path / "c.bgck"
    save_checkpoint(path, *nets, HASH, 1)
    data = bytearray(path.read_bytes())
    bad = bytes(b"XXXX" + data[4:])
    (tmp_path / "m.bgck").write_bytes(bad)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "m.bgck")
    struct.pack_into("<H", data, 4, 99)
    (tmp_path / "v.bgck").write_bytes(bytes(data))
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "v.bgck")


def test_truncated_and_trailing(tmp_path, nets):
    path = tmp_path / "c.bgck"
    save_checkpoint(path, *nets, HASH, 1)
    data = path.read_bytes()
    (tmp_path / "t.bgck").write_bytes(data[:-8])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "t.bgck")
    (tmp_path / "x.bgck").write_bytes(data + b"\0")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "x.bgck")


def test_hash_mismatch_warns(tmp_path, nets):
    path = tmp_path / "c.bgck"
    save_checkpoint(path, *nets, HASH, 1)
    with pytest.warns(UserWarning, match="config hash"):
        load_checkpoint(path, expected_hash="b" * 64)


def test_bad_hash_length(tmp_path, nets):
    with pytest.raises(CheckpointError):
        save_checkpoint(tmp_path / "c.bgck", *nets, "abc", 1)
