"""Fully connected classifier: 48 inputs, L hidden layers, 2-way softmax."""

from __future__ import annotations

import numpy as np

from .functions import ACTIVATIONS, activate, activate_grad, dropout_mask, init_weight, softmax

N_FEATURES = 48
N_CLASSES = 2


class Mlp:
    kind = "mlp"

    def __init__(self, layer_sizes, activation="relu", dropout=0.0, init="glorot", seed=0):
        layer_sizes = [int(n) for n in layer_sizes]
        if len(layer_sizes) < 2 or min(layer_sizes) < 1:
            raise ValueError(f"bad layer sizes {layer_sizes}")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if not 0.0 <= dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        self.layer_sizes = layer_sizes
        self.activation = activation
        self.dropout = float(dropout)
        rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        for i, (n_in, n_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
            self.params[f"W{i}"] = init_weight(init, (n_in, n_out), rng)
            self.params[f"b{i}"] = np.zeros(n_out)

    @classmethod
    def for_shape(cls, hidden_layers: int, units: int, **kw) -> "Mlp":
        return cls([N_FEATURES] + [units] * hidden_layers + [N_CLASSES], **kw)

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def weight_names(self) -> list[str]:
        return [f"W{i}" for i in range(self.n_layers)]

    def forward(self, X, train_mode=False, rng=None):
        """Return (probs, logits, cache) for a (batch, features) array."""
        a = np.asarray(X, dtype=float)
        if a.ndim == 1:
            a = a[None, :]
        if a.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"expected {self.layer_sizes[0]} features, got {a.shape[1]}")
        use_dropout = train_mode and self.dropout > 0
        if use_dropout and rng is None:
            raise ValueError("train-mode dropout needs an rng")
        cache = []
        for i in range(self.n_layers - 1):
            z = a @ self.params[f"W{i}"] + self.params[f"b{i}"]
            h = activate(self.activation, z)
            mask = dropout_mask(h.shape, self.dropout, rng) if use_dropout else None
            cache.append((a, z, mask))
            a = h * mask if mask is not None else h
        last = self.n_layers - 1
        logits = a @ self.params[f"W{last}"] + self.params[f"b{last}"]
        cache.append((a, None, None))
        return softmax(logits), logits, cache

    def backward(self, cache, dlogits) -> dict[str, np.ndarray]:
        grads = {}
        last = self.n_layers - 1
        a_in = cache[last][0]
        grads[f"W{last}"] = a_in.T @ dlogits
        grads[f"b{last}"] = dlogits.sum(0)
        da = dlogits @ self.params[f"W{last}"].T
        for i in range(last - 1, -1, -1):
            a_in, z, mask = cache[i]
            if mask is not None:
                da = da * mask
            dz = da * activate_grad(self.activation, z)
            grads[f"W{i}"] = a_in.T @ dz
            grads[f"b{i}"] = dz.sum(0)
            if i:
                da = dz @ self.params[f"W{i}"].T
        return grads

    def predict_proba(self, X, batch_size=4096) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.vstack([self.forward(X[i : i + batch_size])[0] for i in range(0, len(X), batch_size)])

    def describe(self) -> dict:
        return {"layer_sizes": self.layer_sizes, "activation": self.activation, "dropout": self.dropout}
