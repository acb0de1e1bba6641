"""Losses, mini-batch updates, max-norm constraint and the training loop.

Targets are one-hot with index 0 = lying and index 1 = honest.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..evaluation import confusion, safe_metrics
from .functions import INITIALIZERS, log_softmax
from .gru import Gru
from .mlp import Mlp

log = logging.getLogger(__name__)

LYING_INDEX, HONEST_INDEX = 0, 1
OPTIMIZERS = ("sgd", "momentum", "adam")
LOSSES = ("cross_entropy", "mean_squared_error")


class TrainingDivergedError(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 15
    loss: str = "cross_entropy"
    dropout_rate: float = 0.0
    max_norm: float = 3.0
    init: str = "glorot"
    optimizer: str = "adam"
    seed: int = 0
    momentum: float = 0.9

    def __post_init__(self):
        if self.learning_rate < 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("learning_rate >= 0, batch_size >= 1, epochs >= 0 required")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if not 0.0 <= self.dropout_rate <= 0.9:
            raise ValueError("dropout_rate must lie in [0, 0.9]")
        if self.max_norm <= 0:
            raise ValueError("max_norm must be positive")
        if self.init not in INITIALIZERS:
            raise ValueError(f"init must be one of {INITIALIZERS}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")


@dataclass(frozen=True)
class Architecture:
    kind: str  # "mlp" or "gru"
    layers: int
    units: int
    activation: str

    def build(self, config: TrainConfig):
        if self.kind == "mlp":
            return Mlp.for_shape(self.layers, self.units, activation=self.activation,
                                 dropout=config.dropout_rate, init=config.init, seed=config.seed)
        if self.kind == "gru":
            return Gru(self.layers, self.units, activation=self.activation,
                       dropout=config.dropout_rate, init=config.init, seed=config.seed)
        raise ValueError(f"unknown model kind {self.kind!r}")


@dataclass(frozen=True)
class Prediction:
    probs: np.ndarray
    label: str

    @property
    def p_lying(self) -> float:
        return float(self.probs[LYING_INDEX])


def one_hot(is_lying) -> np.ndarray:
    y = np.asarray(is_lying, dtype=bool)
    out = np.zeros((len(y), 2))
    out[y, LYING_INDEX] = 1.0
    out[~y, HONEST_INDEX] = 1.0
    return out


def loss_and_gradients(model, X, Y, config: TrainConfig = TrainConfig(), train_mode=False, rng=None):
    """Mean loss over the batch and its exact gradient for every parameter."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if len(X) == 0:
        raise ValueError("empty batch")
    probs, logits, cache = model.forward(X, train_mode=train_mode, rng=rng)
    if not np.all(np.isfinite(logits)):
        raise FloatingPointError("non-finite values in forward pass")
    B = len(X)
    if config.loss == "cross_entropy":
        loss = float(-(Y * log_softmax(logits)).sum() / B)
        dlogits = (probs - Y) / B
    else:
        diff = probs - Y
        loss = float((diff * diff).sum() / B)
        dp = 2.0 * diff / B
        dlogits = probs * (dp - (dp * probs).sum(1, keepdims=True))
    return loss, model.backward(cache, dlogits)


def apply_max_norm(model, max_norm: float) -> None:
    """Rescale every neuron's incoming weight vector (a column) to norm <= max_norm."""
    for name in model.weight_names:
        W = model.params[name]
        norms = np.sqrt((W * W).sum(0))
        over = norms > max_norm
        if over.any():
            W[:, over] *= max_norm / norms[over]


class Optimizer:
    def __init__(self, config: TrainConfig):
        self.config = config
        self.state: dict[str, tuple] = {}
        self.t = 0

    def step(self, model, grads) -> None:
        cfg = self.config
        lr = cfg.learning_rate
        self.t += 1
        for name, w in model.params.items():
            g = grads[name]
            if cfg.optimizer == "sgd":
                w -= lr * g
            elif cfg.optimizer == "momentum":
                v = self.state.get(name)
                v = cfg.momentum * v - lr * g if v is not None else -lr * g
                self.state[name] = v
                w += v
            else:
                m, v = self.state.get(name, (np.zeros_like(w), np.zeros_like(w)))
                m = 0.9 * m + 0.1 * g
                v = 0.999 * v + 0.001 * g * g
                self.state[name] = (m, v)
                m_hat = m / (1.0 - 0.9**self.t)
                v_hat = v / (1.0 - 0.999**self.t)
                w -= lr * m_hat / (np.sqrt(v_hat) + 1e-8)
        apply_max_norm(model, cfg.max_norm)


def sgd_step(model, grads, config: TrainConfig, optimizer: Optimizer | None = None):
    """One update w <- w - lr * grad (or the momentum/adam variant), then max-norm.

    Stateful optimizers keep their moments in ``optimizer``; without one a
    fresh state is used, which for momentum/adam is a first step.
    """
    (optimizer or Optimizer(config)).step(model, grads)
    return model


def _row_keys(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    keys = np.empty(len(X), dtype=np.uint64)
    for i in range(len(X)):
        h = hashlib.blake2b(X[i].tobytes() + bytes([int(y[i])]), digest_size=8)
        keys[i] = int.from_bytes(h.digest(), "little")
    return keys


def _mix(keys: np.ndarray, salt: int) -> np.ndarray:
    # splitmix64 finaliser
    with np.errstate(over="ignore"):
        x = keys ^ np.uint64(salt & 0xFFFFFFFFFFFFFFFF)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def epoch_order(row_keys: np.ndarray, seed: int, epoch: int) -> np.ndarray:
    """Batch order for an epoch, derived from row content rather than position.

    Reordering the training rows therefore does not change which rows meet
    in which batch.
    """
    salt = int(np.random.default_rng([seed, epoch]).integers(0, 2**63))
    return np.argsort(_mix(row_keys, salt), kind="stable")


def _xy(data):
    if hasattr(data, "features"):
        return np.asarray(data.features, dtype=float), np.asarray(data.is_lying, dtype=bool)
    X, y = data
    return np.asarray(X, dtype=float), np.asarray(y, dtype=bool)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dr: float
    fa: float
    acc: float
    hd: float


@dataclass
class History:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1


def predict_labels(model, X) -> np.ndarray:
    """Boolean lying flags; equal probabilities resolve to honest."""
    probs = model.predict_proba(X)
    return probs[:, LYING_INDEX] > probs[:, HONEST_INDEX]


def train(arch, train_set, valid_set, config: TrainConfig = TrainConfig(), kind: str = "gru"):
    """Mini-batch training; returns the epoch with the best validation HD.

    ``arch`` is an :class:`Architecture` or a chromosome, which is realised
    as a ``kind`` model with its optimizer/init/dropout/max-norm genes
    overriding ``config``.
    """
    if not isinstance(arch, Architecture):
        arch, config = arch.to_training(kind, config)
    X, y = _xy(train_set)
    Xv, yv = _xy(valid_set)
    if len(X) == 0 or len(Xv) == 0:
        raise ValueError("training and validation sets must be non-empty")
    model = arch.build(config)
    opt = Optimizer(config)
    Y = one_hot(y)
    keys = _row_keys(X, y)
    rng = np.random.default_rng([config.seed, 0x5EED])
    history = History()
    best_hd, best_params = -math.inf, None
    for epoch in range(1, config.epochs + 1):
        order = epoch_order(keys, config.seed, epoch)
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            try:
                loss, grads = loss_and_gradients(model, X[idx], Y[idx], config, train_mode=True, rng=rng)
            except FloatingPointError:
                raise TrainingDivergedError(f"training diverged in epoch {epoch}") from None
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"training diverged in epoch {epoch} (loss {loss})")
            total += loss * len(idx)
            with np.errstate(over="ignore", invalid="ignore"):
                opt.step(model, grads)
            if not all(np.isfinite(v).all() for v in model.params.values()):
                raise TrainingDivergedError(f"training diverged in epoch {epoch} (non-finite weights)")
        m = safe_metrics(confusion(yv, predict_labels(model, Xv)))
        rec = EpochRecord(epoch, total / len(X), m.dr, m.fa, m.acc, m.hd)
        history.epochs.append(rec)
        log.info("epoch %d loss %.5f val DR %.4f FA %.4f ACC %.4f", epoch, rec.train_loss,
                 rec.dr, rec.fa, rec.acc)
        hd = rec.hd if math.isfinite(rec.hd) else -math.inf
        if best_params is None or hd > best_hd:
            best_hd = hd
            best_params = {k: v.copy() for k, v in model.params.items()}
            history.best_epoch = epoch
    if best_params is not None:
        model.params.update(best_params)
    return model, history


def predict(model, row) -> Prediction:
    x = np.asarray(row, dtype=float)
    if x.ndim != 1 or x.shape[0] != 48:
        raise ValueError(f"expected a 48-value row, got shape {x.shape}")
    probs = model.predict_proba(x[None, :])[0]
    label = "lying" if probs[LYING_INDEX] > probs[HONEST_INDEX] else "honest"
    return Prediction(probs, label)
