"""False SoC reporting attacks applied to one day of readings.

A1 scales every reading by a constant, A2 by an independent per-slot
factor, A3 reports zero inside a slot window and A4 ramps the window-start
reading down linearly across the window.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .soc_model import SLOTS_PER_DAY, SocDay

ATTACK_KINDS = ("A1", "A2", "A3", "A4")
ATTACK_IDS = {kind: i for i, kind in enumerate(ATTACK_KINDS, start=1)}

# per-row sampling ranges used when building the malicious dataset
ALPHA_RANGE = (0.1, 0.8)
WINDOW_START_RANGE = (4, 30)
WINDOW_LENGTH_RANGE = (8, 20)


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    alpha: float = 0.5
    beta_low: float = 0.1
    beta_high: float = 0.8
    t_begin: int = 0
    t_end: int = SLOTS_PER_DAY - 1
    ramp_start: float = 0.9
    ramp_end: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        for name in ("beta_low", "beta_high", "ramp_start", "ramp_end"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.beta_low > self.beta_high:
            raise ValueError("beta_low must not exceed beta_high")
        if not 0 <= self.t_begin <= self.t_end <= SLOTS_PER_DAY - 1:
            raise ValueError(
                f"invalid window [{self.t_begin}, {self.t_end}]; need 0 <= t_begin <= t_end <= 47"
            )

    @property
    def attack_id(self) -> int:
        return ATTACK_IDS[self.kind]


def apply_attack(day: SocDay, spec: AttackSpec) -> SocDay:
    return replace(day, soc=attack_readings(day.soc, spec))


def attack_readings(soc: np.ndarray, spec: AttackSpec) -> np.ndarray:
    s = np.asarray(soc, dtype=float)
    out = s.copy()
    tb, te = spec.t_begin, spec.t_end
    if spec.kind == "A1":
        out = spec.alpha * s
    elif spec.kind == "A2":
        rng = np.random.default_rng(spec.seed)
        out = rng.uniform(spec.beta_low, spec.beta_high, size=s.shape) * s
    elif spec.kind == "A3":
        out[tb : te + 1] = 0.0
    else:
        ramp = np.linspace(spec.ramp_start, spec.ramp_end, te - tb + 1)
        out[tb : te + 1] = ramp * s[tb]
    return np.clip(out, 0.0, 1.0)


def sample_attack(kind: str, rng: np.random.Generator, seed: int = 0) -> AttackSpec:
    """Draw the per-row attack parameters used for dataset construction.

    Windows start uniformly in slots 4..30 and last 8..20 slots, truncated
    at the end of the day.
    """
    if kind == "A1":
        return AttackSpec("A1", alpha=float(rng.uniform(*ALPHA_RANGE)), seed=seed)
    if kind == "A2":
        return AttackSpec("A2", seed=seed)
    tb = int(rng.integers(WINDOW_START_RANGE[0], WINDOW_START_RANGE[1] + 1))
    length = int(rng.integers(WINDOW_LENGTH_RANGE[0], WINDOW_LENGTH_RANGE[1] + 1))
    te = min(tb + length - 1, SLOTS_PER_DAY - 1)
    return AttackSpec(kind, t_begin=tb, t_end=te, seed=seed)
