"""Confusion counts, detector metrics and ROC/AUC.

Lying is the positive class. Note that DR here is TP / (TP + FP), i.e. the
precision on the lying class, not the recall; recall is reported as TPR.
FA is FP / (FP + TN), the same quantity as FPR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class UndefinedMetricError(ZeroDivisionError):
    def __init__(self, metric: str):
        super().__init__(f"{metric} is undefined: zero denominator")
        self.metric = metric


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricSet:
    acc: float
    tpr: float
    fpr: float
    dr: float
    fa: float
    hd: float
    auc: float | None = None


def _as_lying(v) -> np.ndarray:
    a = np.asarray(v)
    if a.dtype.kind in "US" or a.dtype == object:
        bad = set(a.tolist()) - {"lying", "honest"}
        if bad:
            raise ValueError(f"unknown labels {sorted(bad)}")
        return a == "lying"
    return a.astype(bool)


def confusion(labels, predicted) -> ConfusionCounts:
    """Counts from true and predicted labels (bools with True = lying, or strings)."""
    y = _as_lying(labels)
    p = _as_lying(predicted)
    if len(y) != len(p):
        raise ValueError(f"label/prediction length mismatch: {len(y)} vs {len(p)}")
    if len(y) == 0:
        raise ValueError("need at least one sample")
    return ConfusionCounts(
        tp=int(np.sum(y & p)), tn=int(np.sum(~y & ~p)),
        fp=int(np.sum(~y & p)), fn=int(np.sum(y & ~p)),
    )


def _ratio(num, den, name):
    if den == 0:
        raise UndefinedMetricError(name)
    return num / den


def metrics(c: ConfusionCounts, auc: float | None = None) -> MetricSet:
    acc = _ratio(c.tp + c.tn, c.total, "ACC")
    tpr = _ratio(c.tp, c.tp + c.fn, "TPR")
    fpr = _ratio(c.fp, c.fp + c.tn, "FPR")
    dr = _ratio(c.tp, c.tp + c.fp, "DR")
    return MetricSet(acc, tpr, fpr, dr, fpr, dr - fpr, auc)


def safe_metrics(c: ConfusionCounts, auc: float | None = None) -> MetricSet:
    """Like :func:`metrics` but with NaN in place of undefined values."""
    def r(num, den):
        return num / den if den else math.nan

    dr = r(c.tp, c.tp + c.fp)
    fa = r(c.fp, c.fp + c.tn)
    return MetricSet(r(c.tp + c.tn, c.total), r(c.tp, c.tp + c.fn), fa, dr, fa, dr - fa, auc)


def roc_auc(scores, labels):
    """ROC points (threshold, fpr, tpr) and the trapezoid AUC.

    Thresholds sweep the distinct scores from high to low; samples sharing
    a score enter the curve together as one step. The first point is
    (inf, 0, 0).
    """
    s = np.asarray(scores, dtype=float)
    y = _as_lying(labels)
    if len(s) != len(y):
        raise ValueError("scores and labels differ in length")
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tp = np.cumsum(y)[last_of_group]
    fp = np.cumsum(~y)[last_of_group]
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = np.r_[np.inf, s[last_of_group]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return np.column_stack([thresholds, fpr, tpr]), auc


METRICS_HEADER = "model,acc,tpr,fpr,dr,fa,hd,auc"


def metrics_row(name: str, m: MetricSet) -> str:
    auc = "nan" if m.auc is None else f"{m.auc:.6f}"
    return f"{name},{m.acc:.6f},{m.tpr:.6f},{m.fpr:.6f},{m.dr:.6f},{m.fa:.6f},{m.hd:.6f},{auc}"


def roc_csv(points: np.ndarray) -> str:
    lines = ["threshold,fpr,tpr"]
    lines += [f"{t:.6f},{f:.6f},{p:.6f}" for t, f, p in points]
    return "\n".join(lines) + "\n"
