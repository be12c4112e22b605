"""Binary checkpoint format for actor/critic parameters.

Layout (little endian)::

    magic          4s   b"BGCK"
    version        u16
    config_hash    64s  ascii hex sha256
    episode        u64
    layer_count    u32
    per layer:     rows u32, cols u32, rows*cols float64 row-major

Layers are written actor first (W1, b1, W2, b2, ...) then critic; biases are
stored as 1 x n rows. Network sizes are recovered from the shapes.
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..errors import CheckpointError
from .network import MLP

MAGIC = b"BGCK"
VERSION = 1
_HEADER = struct.Struct("<4sH64sQI")
_SHAPE = struct.Struct("<II")


@dataclass
class Checkpoint:
    actor: MLP
    critic: MLP
    config_hash: str
    episode: int


def _layers(net: MLP) -> List[np.ndarray]:
    out = []
    for w, b in zip(net.weights, net.biases):
        out.extend((w, b.reshape(1, -1)))
    return out


def save_checkpoint(path, actor: MLP, critic: MLP, config_hash: str, episode: int) -> None:
    layers = _layers(actor) + _layers(critic)
    h = config_hash.encode("ascii")
    if len(h) != 64:
        raise CheckpointError("config_hash must be a 64-character hex digest")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, h, int(episode), len(layers)))
        fh.write(struct.pack("<I", len(actor.weights)))
        for arr in layers:
            arr = np.ascontiguousarray(arr, dtype="<f8")
            fh.write(_SHAPE.pack(*arr.shape))
            fh.write(arr.tobytes(order="C"))


def _net_from_layers(layers: List[np.ndarray]) -> MLP:
    weights = layers[0::2]
    biases = [b.ravel() for b in layers[1::2]]
    sizes = [weights[0].shape[0]] + [w.shape[1] for w in weights]
    for prev, w in zip(weights[:-1], weights[1:]):
        if prev.shape[1] != w.shape[0]:
            raise CheckpointError(f"inconsistent layer shapes {prev.shape} -> {w.shape}")
    for w, b in zip(weights, layers[1::2]):
        if b.shape != (1, w.shape[1]):
            raise CheckpointError(f"bias shape {b.shape} does not match weight {w.shape}")
    return MLP(sizes, weights, biases)


def load_checkpoint(path, expected_hash: Optional[str] = None) -> Checkpoint:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size + 4:
        raise CheckpointError("file too short for a checkpoint header")
    magic, version, h, episode, n_layers = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    offset = _HEADER.size
    (n_actor,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if n_layers % 2 or 2 * n_actor > n_layers:
        raise CheckpointError(f"bad layer count {n_layers} (actor layers {n_actor})")
    layers = []
    for _ in range(n_layers):
        if offset + _SHAPE.size > len(data):
            raise CheckpointError("truncated checkpoint")
        rows, cols = _SHAPE.unpack_from(data, offset)
        offset += _SHAPE.size
        nbytes = rows * cols * 8
        if offset + nbytes > len(data):
            raise CheckpointError(f"layer header ({rows}, {cols}) exceeds file size")
        layers.append(np.frombuffer(data, dtype="<f8", count=rows * cols, offset=offset)
                      .reshape(rows, cols).astype(float))
        offset += nbytes
    if offset != len(data):
        raise CheckpointError("trailing bytes after last layer")
    actor = _net_from_layers(layers[:2 * n_actor])
    critic = _net_from_layers(layers[2 * n_actor:])
    config_hash = h.decode("ascii")
    if expected_hash is not None and expected_hash != config_hash:
        warnings.warn(f"checkpoint config hash {config_hash[:12]} differs from "
                      f"current config {expected_hash[:12]}", stacklevel=2)
    return Checkpoint(actor=actor, critic=critic, config_hash=config_hash, episode=int(episode))
