"""Fully connected ReLU networks with hand-written backprop (float64)."""
from __future__ import annotations

from typing import List, Sequence

import numpy as np


def orthogonal(shape, gain: float, rng: np.random.Generator) -> np.ndarray:
    rows, cols = shape
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


class MLP:
    """ReLU hidden layers followed by a linear output layer.

    Weights are stored as ``(fan_in, fan_out)`` so a batch ``X`` of shape
    ``(n, fan_in)`` maps through ``X @ W + b``.
    """

    def __init__(self, sizes: Sequence[int], weights=None, biases=None):
        self.sizes = tuple(int(s) for s in sizes)
        if weights is None:
            weights = [np.zeros((a, b)) for a, b in zip(self.sizes[:-1], self.sizes[1:])]
            biases = [np.zeros(b) for b in self.sizes[1:]]
        self.weights: List[np.ndarray] = [np.array(w, dtype=float) for w in weights]
        self.biases: List[np.ndarray] = [np.array(b, dtype=float) for b in biases]
        for w, b, a, c in zip(self.weights, self.biases, self.sizes[:-1], self.sizes[1:]):
            if w.shape != (a, c) or b.shape != (c,):
                raise ValueError(f"layer shape mismatch: W{w.shape} b{b.shape}, expected ({a}, {c})")

    @classmethod
    def initialized(cls, sizes, rng: np.random.Generator, output_gain: float) -> "MLP":
        """Orthogonal init: sqrt(2) gain on hidden layers, ``output_gain`` on the last."""
        net = cls(sizes)
        n = len(net.weights)
        for i, w in enumerate(net.weights):
            gain = output_gain if i == n - 1 else np.sqrt(2.0)
            net.weights[i] = orthogonal(w.shape, gain, rng)
        return net

    @property
    def params(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MLP":
        return MLP(self.sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def forward(self, X: np.ndarray, cache: bool = False):
        h = X
        acts = [X]
        n = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = np.maximum(z, 0.0) if i < n - 1 else z
            acts.append(h)
        return (h, acts) if cache else h

    def backward(self, acts, grad_out: np.ndarray) -> List[np.ndarray]:
        """Gradients in ``params`` order given dLoss/dOutput."""
        grads = [None] * (2 * len(self.weights))
        g = grad_out
        for i in reversed(range(len(self.weights))):
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            if i > 0:
                g = (g @ self.weights[i].T) * (acts[i] > 0)
        return grads


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
