"""Activations, softmax and weight initializers shared by the MLP and GRU."""

from __future__ import annotations

import numpy as np

ACTIVATIONS = ("sigmoid", "tanh", "relu", "softsign")
INITIALIZERS = ("uniform", "normal", "glorot")
INIT_SCALE = 0.05


def sigmoid(x):
    # split by sign so large |x| never overflows exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activate(name: str, x: np.ndarray) -> np.ndarray:
    if name == "sigmoid":
        return sigmoid(x)
    if name == "tanh":
        return np.tanh(x)
    if name == "relu":
        return np.maximum(x, 0.0)
    if name == "softsign":
        return x / (1.0 + np.abs(x))
    raise ValueError(f"unknown activation {name!r}")


def activate_grad(name: str, x: np.ndarray) -> np.ndarray:
    """Derivative of the activation with respect to its pre-activation ``x``."""
    if name == "sigmoid":
        s = sigmoid(x)
        return s * (1.0 - s)
    if name == "tanh":
        return 1.0 - np.tanh(x) ** 2
    if name == "relu":
        return (x > 0).astype(x.dtype)
    if name == "softsign":
        return 1.0 / (1.0 + np.abs(x)) ** 2
    raise ValueError(f"unknown activation {name!r}")


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    m = z.max(axis=-1, keepdims=True)
    return z - m - np.log(np.exp(z - m).sum(axis=-1, keepdims=True))


def init_weight(kind: str, shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    if kind == "uniform":
        return rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)
    if kind == "normal":
        return rng.normal(0.0, INIT_SCALE, size=shape)
    if kind == "glorot":
        limit = np.sqrt(6.0 / (shape[0] + shape[1]))
        return rng.uniform(-limit, limit, size=shape)
    raise ValueError(f"unknown initializer {kind!r}")


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: kept units are scaled by 1/(1-rate)."""
    return (rng.random(shape) >= rate) / (1.0 - rate)
