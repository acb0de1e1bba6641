"""From-scratch MLP and GRU detectors over 48-slot SoC rows."""

from __future__ import annotations

import numpy as np

from .gru import Gru
from .mlp import Mlp
from .training import (
    Architecture,
    EpochRecord,
    History,
    Optimizer,
    Prediction,
    TrainConfig,
    TrainingDivergedError,
    apply_max_norm,
    loss_and_gradients,
    one_hot,
    predict,
    predict_labels,
    sgd_step,
    train,
)


def _single_forward(model, x, train_mode, dropout_mask_seed):
    rng = None if dropout_mask_seed is None else np.random.default_rng(dropout_mask_seed)
    if train_mode and model.dropout > 0 and rng is None:
        rng = np.random.default_rng(0)
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected one row, got shape {x.shape}")
    probs, _, cache = model.forward(x[None, :], train_mode=train_mode, rng=rng)
    p = probs[0]
    return Prediction(p, "lying" if p[0] > p[1] else "honest"), cache


def mlp_forward(model: Mlp, x, train_mode: bool = False, dropout_mask_seed=None):
    """Forward one 48-value row through an MLP; returns (Prediction, cache)."""
    return _single_forward(model, x, train_mode, dropout_mask_seed)


def gru_forward(model: Gru, sequence, train_mode: bool = False, dropout_mask_seed=None):
    """Run one 48-step sequence through a stacked GRU; returns (Prediction, cache)."""
    return _single_forward(model, sequence, train_mode, dropout_mask_seed)


__all__ = [
    "Architecture", "EpochRecord", "Gru", "History", "Mlp", "Optimizer", "Prediction",
    "TrainConfig", "TrainingDivergedError", "apply_max_norm", "gru_forward",
    "loss_and_gradients", "mlp_forward", "one_hot", "predict", "predict_labels",
    "sgd_step", "train",
]
