"""Dense feed-forward networks with exact reverse-mode gradients and Adam.

Everything runs in 64-bit numpy. Layers are (weights, bias) pairs with
weights stored as (out, in) matrices; hidden layers use tanh, the output
layer is linear. Weights are initialized orthogonally (QR with sign
correction), so a layer's singular values all equal the requested gain.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class DimensionMismatch(Exception):
    """Input vector length does not match the network's input layer."""


def orthogonal_init(rows: int, cols: int, gain: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Orthogonal (row- or column-orthonormal) matrix scaled by ``gain``."""
    if rows < 1 or cols < 1:
        raise ValueError("orthogonal_init needs positive dimensions")
    flat = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q *= np.sign(np.diag(r))  # fix the sign ambiguity of the decomposition
    if rows < cols:
        q = q.T
    return np.ascontiguousarray(gain * q)


class Mlp:
    """Multi-layer perceptron: affine layers with tanh between them."""

    def __init__(self, layers: list[tuple[np.ndarray, np.ndarray]]):
        self.layers = layers
        for weights, bias in layers:
            if weights.shape[0] != bias.shape[0]:
                raise ValueError("bias length must match the layer's output")

    @classmethod
    def create(cls, dims: list[int], rng: np.random.Generator,
               gain: float = 0.01, out_gain: float | None = None,
               out_bias: np.ndarray | float = 0.0) -> "Mlp":
        """Network with the given layer sizes and orthogonal weights.

        ``out_gain`` and ``out_bias`` override the initialization of the last
        layer only (used to pin a policy's initial output).
        """
        layers = []
        last = len(dims) - 2
        for i in range(len(dims) - 1):
            g = gain if (i < last or out_gain is None) else out_gain
            weights = orthogonal_init(dims[i + 1], dims[i], g, rng)
            bias = np.zeros(dims[i + 1])
            if i == last:
                bias += out_bias
            layers.append((weights, bias))
        return cls(layers)

    @property
    def dims(self) -> list[int]:
        return [self.layers[0][0].shape[1]] + [w.shape[0] for w, _ in self.layers]

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Batched forward pass; returns (output, cache for backward).

        ``x`` has shape (batch, input_dim); a single vector is promoted.
        """
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"expected input dim {self.input_dim}, got {x.shape[1]}")
        cache = [x]
        h = x
        last = len(self.layers) - 1
        for i, (weights, bias) in enumerate(self.layers):
            z = h @ weights.T + bias
            if i < last:
                h = np.tanh(z)
                cache.append(h)
            else:
                h = z
        out = h[0] if squeeze else h
        return out, cache

    def backward(self, cache: list[np.ndarray], grad_out: np.ndarray
                 ) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
        """Exact gradients for a batch; returns (per-layer grads, input grad).

        ``grad_out`` is the loss gradient at the network output, shaped like
        the forward output. Gradients are summed over the batch.
        """
        grad_out = np.asarray(grad_out, dtype=float)
        if grad_out.ndim == 1:
            grad_out = grad_out[None, :]
        if len(cache) != len(self.layers):
            raise ValueError("stale cache: layer count mismatch")
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.layers)
        g = grad_out
        for i in range(len(self.layers) - 1, -1, -1):
            weights, _ = self.layers[i]
            inp = cache[i]
            grads[i] = (g.T @ inp, g.sum(axis=0))
            g = g @ weights
            if i > 0:
                g = g * (1.0 - inp * inp)  # tanh' through the cached activation
        return grads, g

    def parameters(self) -> list[np.ndarray]:
        out = []
        for weights, bias in self.layers:
            out.append(weights)
            out.append(bias)
        return out

    def check_finite(self) -> None:
        for p in self.parameters():
            if not np.isfinite(p).all():
                raise FloatingPointError("non-finite network parameter")

    # ------------------------------------------------------------------
    # checkpointing
    # ------------------------------------------------------------------

    def to_doc(self) -> dict:
        return {
            "dims": self.dims,
            "params": [p.ravel().tolist() for p in self.parameters()],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Mlp":
        dims = doc["dims"]
        flat = doc["params"]
        layers = []
        for i in range(len(dims) - 1):
            weights = np.asarray(flat[2 * i], dtype=float).reshape(dims[i + 1], dims[i])
            bias = np.asarray(flat[2 * i + 1], dtype=float)
            layers.append((weights, bias))
        return cls(layers)

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_doc()) + "\n")

    @classmethod
    def load_json(cls, path) -> "Mlp":
        return cls.from_doc(json.loads(Path(path).read_text()))


class Adam:
    """Adam optimizer state over a fixed list of parameter arrays."""

    def __init__(self, params: list[np.ndarray], lr: float = 5e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError("gradient list does not match parameters")
        self.step_count += 1
        t = self.step_count
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** t
        bias2 = 1.0 - b2 ** t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def layer_grads_to_flat(grads: list[tuple[np.ndarray, np.ndarray]]
                        ) -> list[np.ndarray]:
    """Flatten backward() output into the parameters() ordering."""
    out = []
    for dw, db in grads:
        out.append(dw)
        out.append(db)
    return out
