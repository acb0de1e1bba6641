"""Labeled SoC dataset: honest rows from traces, attacked rows, split, CSV."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .attacks import ATTACK_KINDS, ATTACK_IDS, attack_readings, sample_attack
from .soc_model import SLOTS_PER_DAY, ChargePolicy, EvParams, simulate_days
from .trace_ingest import DEFAULT_MAX_SPEED_MPH, VehicleTrace, day_starts, minutize_arrays

HONEST, LYING = "honest", "lying"
FEATURE_COLUMNS = [f"s{t:02d}" for t in range(SLOTS_PER_DAY)]
CSV_HEADER = ["ev_id", "day", "label", "attack", *FEATURE_COLUMNS]
INITIAL_SOC_RANGE = (0.3, 1.0)


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledRow:
    ev_id: str
    day: int
    features: np.ndarray
    label: str
    attack_id: int

    def __post_init__(self):
        if (self.label == HONEST) != (self.attack_id == 0) or self.label not in (HONEST, LYING):
            raise ValueError(f"label {self.label!r} inconsistent with attack {self.attack_id}")
        if not 0 <= self.attack_id <= 4:
            raise ValueError(f"attack id must lie in 0..4, got {self.attack_id}")
        f = np.asarray(self.features, dtype=float)
        if f.shape != (SLOTS_PER_DAY,):
            raise ValueError(f"a row has {SLOTS_PER_DAY} features, got shape {f.shape}")
        if np.any((f < 0) | (f > 1)):
            raise ValueError("features must lie in [0, 1]")


@dataclass
class LabeledDataset:
    """Column-oriented dataset; ``rows()`` gives the row view."""

    ev_id: np.ndarray
    day: np.ndarray
    features: np.ndarray
    attack: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ev_id = np.asarray(self.ev_id, dtype=object)
        self.day = np.asarray(self.day, dtype=np.int64)
        self.features = np.asarray(self.features, dtype=float).reshape(-1, SLOTS_PER_DAY)
        self.attack = np.asarray(self.attack, dtype=np.int64)
        n = len(self.features)
        if not (len(self.ev_id) == len(self.day) == len(self.attack) == n):
            raise ValueError("dataset columns differ in length")
        if np.any((self.attack < 0) | (self.attack > 4)):
            raise ValueError("attack ids must lie in 0..4")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def is_lying(self) -> np.ndarray:
        return self.attack > 0

    @property
    def labels(self) -> list[str]:
        return [LYING if a else HONEST for a in self.attack]

    def rows(self) -> Iterator[LabeledRow]:
        for i in range(len(self)):
            a = int(self.attack[i])
            yield LabeledRow(str(self.ev_id[i]), int(self.day[i]), self.features[i],
                             LYING if a else HONEST, a)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.ev_id[idx], self.day[idx], self.features[idx],
                              self.attack[idx], dict(self.provenance))

    @classmethod
    def concat(cls, parts: list["LabeledDataset"], provenance: dict | None = None) -> "LabeledDataset":
        return cls(
            np.concatenate([p.ev_id for p in parts]),
            np.concatenate([p.day for p in parts]),
            np.concatenate([p.features for p in parts]),
            np.concatenate([p.attack for p in parts]),
            provenance or {},
        )


def build_honest(
    traces: Iterable[VehicleTrace],
    days: int,
    params: EvParams = EvParams(),
    policy: ChargePolicy = ChargePolicy(),
    seed: int = 0,
    max_speed_mph: float = DEFAULT_MAX_SPEED_MPH,
) -> LabeledDataset:
    """One honest row per vehicle per day.

    Each EV-day starts from its own uniform SoC in [0.3, 1.0], drawn from a
    stream keyed by (seed, vehicle index).
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    ev_ids, day_idx, feats = [], [], []
    n_traces = 0
    depleted = 0
    for i, trace in enumerate(traces):
        n_traces += 1
        dist = np.empty((days, 1440))
        parked = np.empty((days, 1440), dtype=bool)
        for k, start in enumerate(day_starts(trace, days)):
            dist[k], parked[k] = minutize_arrays(trace, start, max_speed_mph)
        init = np.random.default_rng([seed, i]).uniform(*INITIAL_SOC_RANGE, size=days)
        soc, dep = simulate_days(dist, parked, init, params, policy)
        depleted += int(dep.sum())
        ev_ids.extend([trace.vehicle_id] * days)
        day_idx.extend(range(days))
        feats.append(soc)
    if n_traces == 0:
        raise ValueError("build_honest needs at least one trace")
    return LabeledDataset(
        ev_ids, day_idx, np.concatenate(feats), np.zeros(len(ev_ids), dtype=np.int64),
        {"source": "traces", "vehicles": n_traces, "days": days, "honest_seed": seed,
         "depleted_days": depleted},
    )


def build_malicious(honest: LabeledDataset, seed: int = 0) -> LabeledDataset:
    """Four attacked copies of every honest row, one per attack kind.

    Attack parameters for row ``i`` and attack ``a`` come from the stream
    keyed by (seed, i, a), so any row can be regenerated on its own.
    """
    if len(honest) == 0:
        raise ValueError("build_malicious needs a non-empty honest dataset")
    if np.any(honest.attack != 0):
        raise ValueError("build_malicious input must contain honest rows only")
    n = len(honest)
    feats = np.empty((4 * n, SLOTS_PER_DAY))
    attack = np.empty(4 * n, dtype=np.int64)
    for i in range(n):
        for kind in ATTACK_KINDS:
            aid = ATTACK_IDS[kind]
            rng = np.random.default_rng([seed, i, aid])
            spec = sample_attack(kind, rng, seed=int(rng.integers(2**63)))
            j = 4 * i + aid - 1
            feats[j] = attack_readings(honest.features[i], spec)
            attack[j] = aid
    prov = dict(honest.provenance)
    prov["attack_seed"] = seed
    return LabeledDataset(np.repeat(honest.ev_id, 4), np.repeat(honest.day, 4), feats, attack, prov)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(dataset: LabeledDataset, train_fraction: float = 0.7, seed: int = 0):
    """Stratified shuffle split with exactly round(fraction * N) training rows.

    Per-class training quotas are apportioned by largest remainder so the
    class ratio is kept within one row per class.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    n_train = _round_half_up(train_fraction * len(dataset))
    classes = [np.flatnonzero(~dataset.is_lying), np.flatnonzero(dataset.is_lying)]
    exact = [train_fraction * len(c) for c in classes]
    quota = [math.floor(e) for e in exact]
    by_remainder = sorted(range(2), key=lambda c: (-(exact[c] - quota[c]), c))
    for c in by_remainder[: n_train - sum(quota)]:
        quota[c] += 1
    train_idx, test_idx = [], []
    for c, members in enumerate(classes):
        perm = rng.permutation(members)
        train_idx.append(perm[: quota[c]])
        test_idx.append(perm[quota[c] :])
    train_idx = rng.permutation(np.concatenate(train_idx))
    test_idx = rng.permutation(np.concatenate(test_idx))
    prov = dict(dataset.provenance, split_seed=seed, train_fraction=train_fraction)
    train, test = dataset.subset(train_idx), dataset.subset(test_idx)
    train.provenance = dict(prov, part="train")
    test.provenance = dict(prov, part="test")
    return train, test


def write_csv(dataset: LabeledDataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for i in range(len(dataset)):
            ev = str(dataset.ev_id[i])
            if "," in ev or "\n" in ev:
                raise DatasetFormatError(f"row {i + 1}: ev_id {ev!r} cannot be written to CSV")
            a = int(dataset.attack[i])
            vals = ",".join(f"{v:.6f}" for v in dataset.features[i])
            fh.write(f"{ev},{int(dataset.day[i])},{LYING if a else HONEST},{a},{vals}\n")


def read_csv(path) -> LabeledDataset:
    ev_ids, days, feats, attacks = [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise DatasetFormatError(f"{path}: bad header, expected {','.join(CSV_HEADER[:5])}...s47")
        for line_no, rec in enumerate(reader, start=2):
            if len(rec) != len(CSV_HEADER):
                raise DatasetFormatError(
                    f"{path}: row {line_no} has {len(rec)} fields, expected {len(CSV_HEADER)}"
                )
            try:
                day = int(rec[1])
                attack = int(rec[3])
                values = [float(v) for v in rec[4:]]
            except ValueError:
                raise DatasetFormatError(f"{path}: row {line_no} has a non-numeric field") from None
            label = rec[2]
            if label not in (HONEST, LYING) or (label == HONEST) != (attack == 0) or not 0 <= attack <= 4:
                raise DatasetFormatError(
                    f"{path}: row {line_no} label {label!r} inconsistent with attack {attack}"
                )
            if any(not 0.0 <= v <= 1.0 for v in values):
                raise DatasetFormatError(f"{path}: row {line_no} has a SoC outside [0, 1]")
            ev_ids.append(rec[0])
            days.append(day)
            attacks.append(attack)
            feats.append(values)
    return LabeledDataset(ev_ids, days, np.array(feats).reshape(-1, SLOTS_PER_DAY), attacks,
                          {"source": str(path)})


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Sample ACF r_k = sum (x_t - m)(x_{t+k} - m) / sum (x_t - m)^2, k = 0..max_lag."""
    x = np.asarray(series, dtype=float)
    if max_lag < 0 or len(x) <= max_lag:
        raise ValueError(f"series of length {len(x)} too short for max_lag={max_lag}")
    d = x - x.mean()
    denom = float(d @ d)
    if denom <= 1e-15 * max(1.0, float(np.abs(x).max())) ** 2:
        raise ValueError("autocorrelation of a constant series is undefined (zero variance)")
    n = len(x)
    return np.array([float(d[: n - k] @ d[k:]) / denom for k in range(max_lag + 1)])
