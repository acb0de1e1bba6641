"""Knapsack-style charging coordination for one time slot.

Requests are ranked by priority index per unit of requested energy and
served greedily while they fit; whatever capacity is left over goes to the
unserved request with the highest priority index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# demands and residual capacity are kept on a 1e-9 unit grid so that
# integer-unit scenarios stay exact under repeated subtraction
_UNIT_DECIMALS = 9


def f1_soc(soc: float) -> float:
    """Low reported SoC earns full priority; 0.4 itself counts as low."""
    return 1.0 if 0.0 <= soc <= 0.4 else 0.1


def f2_tcc(tcc: float) -> float:
    if 0 < tcc <= 4:
        return 0.4
    raise ValueError(f"tcc={tcc} is outside the priority map domain (0, 4]")


@dataclass(frozen=True)
class ChargingRequest:
    ev_id: str
    reported_soc: float
    tcc: int

    def __post_init__(self):
        if not 0.0 <= self.reported_soc <= 1.0:
            raise ValueError(f"reported_soc must lie in [0, 1], got {self.reported_soc}")
        if self.tcc < 1:
            raise ValueError(f"tcc must be >= 1, got {self.tcc}")


@dataclass(frozen=True)
class PriorityParams:
    epsilon: float = 0.5
    f1: Callable[[float], float] = f1_soc
    f2: Callable[[float], float] = f2_tcc
    battery_units: float = 200.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.battery_units <= 0:
            raise ValueError("battery_units must be positive")


@dataclass
class SlotAllocation:
    grants: dict[str, float]
    leftover: float
    selected_full: set[str] = field(default_factory=set)
    remainder_recipient: str | None = None


def demand_units(soc: float, battery_units: float) -> float:
    return round((1.0 - soc) * battery_units, _UNIT_DECIMALS)


def priority_index(reported_soc: float, tcc: int, params: PriorityParams = PriorityParams()) -> float:
    eps = params.epsilon
    return eps * params.f1(reported_soc) + (1.0 - eps) * params.f2(tcc)


def schedule_slot(
    requests: Sequence[ChargingRequest],
    capacity: float,
    params: PriorityParams = PriorityParams(),
    rng_seed=0,
) -> SlotAllocation:
    if capacity < 0:
        raise ValueError(f"capacity must be >= 0, got {capacity}")
    grants = {r.ev_id: 0.0 for r in requests}
    if len(grants) != len(requests):
        raise ValueError("duplicate ev_id in requests")

    active = []
    for r in requests:
        p = demand_units(r.reported_soc, params.battery_units)
        if p > 0:
            active.append((r.ev_id, priority_index(r.reported_soc, r.tcc, params), p))

    # shuffle first so the stable sort breaks ratio ties at random
    order = np.random.default_rng(rng_seed).permutation(len(active))
    queue = sorted((active[i] for i in order), key=lambda a: -(a[1] / a[2]))

    residual = float(capacity)
    selected: set[str] = set()
    waiting = []
    for ev_id, pi, p in queue:
        if p <= residual:
            grants[ev_id] = p
            residual = round(residual - p, _UNIT_DECIMALS)
            selected.add(ev_id)
        else:
            waiting.append((ev_id, pi, p))

    recipient = None
    if waiting:
        # max() keeps the first of equal PIs, i.e. the best-ranked one
        recipient = max(waiting, key=lambda a: a[1])[0]
        grants[recipient] = residual
        residual = 0.0
    return SlotAllocation(grants, residual, selected, recipient)
