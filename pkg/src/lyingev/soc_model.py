"""Minute-by-minute state-of-charge model for a Kia Soul EV."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .trace_ingest import MINUTES_PER_DAY, MinuteActivity

SLOT_MINUTES = 30
SLOTS_PER_DAY = MINUTES_PER_DAY // SLOT_MINUTES  # 48


@dataclass(frozen=True)
class EvParams:
    battery_kwh: float = 64.0
    range_mi: float = 230.0
    max_charge_kw: float = 7.2
    consumption_wh_per_mi: float = 275.0

    def __post_init__(self):
        for name in ("battery_kwh", "range_mi", "max_charge_kw", "consumption_wh_per_mi"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        implied = self.consumption_wh_per_mi * self.range_mi
        if abs(implied - self.battery_kwh * 1000.0) > 0.02 * self.battery_kwh * 1000.0:
            raise ValueError(
                f"consumption x range = {implied:.0f} Wh disagrees with battery "
                f"{self.battery_kwh * 1000:.0f} Wh by more than 2%"
            )

    @property
    def drain_per_mile(self) -> float:
        return self.consumption_wh_per_mi / (self.battery_kwh * 1000.0)

    @property
    def charge_per_minute(self) -> float:
        return self.max_charge_kw / 60.0 / self.battery_kwh


@dataclass(frozen=True)
class ChargePolicy:
    min_parked_minutes: int = 30
    soc_start_threshold: float = 0.9
    target_soc: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.soc_start_threshold <= self.target_soc <= 1.0:
            raise ValueError("need 0 <= soc_start_threshold <= target_soc <= 1")
        if self.min_parked_minutes < 0:
            raise ValueError("min_parked_minutes must be >= 0")


@dataclass
class SocDay:
    ev_id: str
    day: int
    soc: np.ndarray
    depleted: bool = False

    def __post_init__(self):
        self.soc = np.asarray(self.soc, dtype=float)
        if self.soc.shape != (SLOTS_PER_DAY,):
            raise ValueError(f"a SoC day has {SLOTS_PER_DAY} readings, got {self.soc.shape}")
        if np.any(self.soc < 0) or np.any(self.soc > 1):
            raise ValueError("SoC readings must lie in [0, 1]")


def step_soc(
    soc: float,
    activity: MinuteActivity,
    charging: bool,
    params: EvParams = EvParams(),
    target_soc: float = 1.0,
) -> float:
    if not activity.parked and activity.distance > 0:
        soc = soc - activity.distance * params.drain_per_mile
    elif charging and soc < target_soc:
        soc = min(target_soc, soc + params.charge_per_minute)
    return min(1.0, max(0.0, soc))


def charging_decision(parked_run_minutes: int, soc: float, policy: ChargePolicy = ChargePolicy()) -> bool:
    """Whether a parked EV starts charging.

    ``parked_run_minutes`` counts the current minute, so a vehicle that has
    just stopped has a run of 1.
    """
    return parked_run_minutes >= policy.min_parked_minutes and soc < policy.soc_start_threshold


def simulate_day(
    minutes: Sequence[MinuteActivity],
    initial_soc: float,
    params: EvParams = EvParams(),
    policy: ChargePolicy = ChargePolicy(),
    ev_id: str = "ev",
    day: int = 0,
) -> SocDay:
    """Reference minute loop; :func:`simulate_days` is the batched twin."""
    if len(minutes) != MINUTES_PER_DAY:
        raise ValueError(f"expected {MINUTES_PER_DAY} minutes, got {len(minutes)}")
    if not 0.0 <= initial_soc <= 1.0:
        raise ValueError("initial_soc must lie in [0, 1]")
    soc = float(initial_soc)
    depleted = False
    charging = False
    run = 0
    readings = []
    for m, act in enumerate(minutes):
        if act.parked:
            run += 1
            if charging:
                charging = soc < policy.target_soc
            else:
                charging = charging_decision(run, soc, policy)
        else:
            run = 0
            charging = False
            if soc - act.distance * params.drain_per_mile < 0:
                depleted = True
        soc = step_soc(soc, act, charging, params, policy.target_soc)
        if m % SLOT_MINUTES == SLOT_MINUTES - 1:
            readings.append(soc)
    return SocDay(ev_id, day, np.array(readings), depleted)


def simulate_days(
    distance: np.ndarray,
    parked: np.ndarray,
    initial_soc: np.ndarray,
    params: EvParams = EvParams(),
    policy: ChargePolicy = ChargePolicy(),
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`simulate_day` over many EV-days at once.

    ``distance``/``parked`` have shape (rows, 1440). Returns the (rows, 48)
    slot readings and the per-row depletion flags.
    """
    distance = np.asarray(distance, dtype=float)
    parked = np.asarray(parked, dtype=bool)
    if distance.ndim != 2 or distance.shape[1] != MINUTES_PER_DAY or parked.shape != distance.shape:
        raise ValueError(f"expected (rows, {MINUTES_PER_DAY}) activity arrays")
    n = distance.shape[0]
    soc = np.asarray(initial_soc, dtype=float).copy()
    depleted = np.zeros(n, dtype=bool)
    charging = np.zeros(n, dtype=bool)
    run = np.zeros(n, dtype=np.int64)
    out = np.empty((n, SLOTS_PER_DAY))
    drain = distance * params.drain_per_mile
    rate = params.charge_per_minute
    target = policy.target_soc
    for m in range(MINUTES_PER_DAY):
        p = parked[:, m]
        run = np.where(p, run + 1, 0)
        start = (run >= policy.min_parked_minutes) & (soc < policy.soc_start_threshold)
        charging = p & np.where(charging, soc < target, start)
        moving = ~p & (distance[:, m] > 0)
        new = soc - drain[:, m]
        depleted |= moving & (new < 0)
        soc = np.where(moving, new, soc)
        up = charging & (soc < target)
        soc = np.where(up, np.minimum(target, soc + rate), soc)
        np.clip(soc, 0.0, 1.0, out=soc)
        if m % SLOT_MINUTES == SLOT_MINUTES - 1:
            out[:, m // SLOT_MINUTES] = soc
    return out, depleted
