"""Fleet simulation of honest and lying EVs against the slot coordinator.

Every slot all active EVs request charging; liars report ``beta`` times
their true SoC. An EV whose grant covers its true demand is counted as
charged and replaced by a fresh EV of the same kind; an EV whose request
expires unserved is counted as expired and replaced likewise. Partially
served EVs bank the energy and retry with one slot less.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .coordinator import (
    ChargingRequest,
    PriorityParams,
    SlotAllocation,
    demand_units,
    schedule_slot,
)


@dataclass(frozen=True)
class ImpactConfig:
    n_evs: int = 100
    n_liars: int = 0
    beta: float = 0.2
    capacity: float = 2160.0
    n_slots: int = 30
    initial_soc: float = 0.5
    initial_tcc: int = 4
    battery_units: float = 200.0
    epsilon: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.n_liars <= self.n_evs:
            raise ValueError("need 0 <= n_liars <= n_evs")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("beta must lie in [0, 1)")
        if self.capacity < 0 or self.n_slots < 1 or self.initial_tcc < 1:
            raise ValueError("capacity >= 0, n_slots >= 1 and initial_tcc >= 1 required")
        if not 0.0 <= self.initial_soc < 1.0:
            raise ValueError("initial_soc must lie in [0, 1)")


@dataclass
class ImpactReport:
    p_liar_charged: float  # nan when the class never resolved (e.g. no liars)
    p_honest_charged: float
    avg_unused_power: float
    per_slot_unused: list[float] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)


def unused_power(alloc: SlotAllocation, true_demands: Mapping[str, float], capacity: float) -> float:
    used = sum(min(g, true_demands.get(ev, 0.0)) for ev, g in alloc.grants.items())
    return max(0.0, round(capacity - used, 9))


@dataclass
class _Ev:
    ev_id: str
    liar: bool
    soc: float
    tcc: int


def run_impact(config: ImpactConfig) -> ImpactReport:
    prio = PriorityParams(epsilon=config.epsilon, battery_units=config.battery_units)
    units = config.battery_units
    serial = 0

    def fresh(liar: bool) -> _Ev:
        nonlocal serial
        serial += 1
        return _Ev(f"{'L' if liar else 'H'}{serial}", liar, config.initial_soc, config.initial_tcc)

    fleet = [fresh(i < config.n_liars) for i in range(config.n_evs)]
    charged = {True: 0, False: 0}
    expired = {True: 0, False: 0}
    per_slot = []

    for slot in range(config.n_slots):
        requests = [
            ChargingRequest(ev.ev_id, config.beta * ev.soc if ev.liar else ev.soc, ev.tcc)
            for ev in fleet
        ]
        alloc = schedule_slot(requests, config.capacity, prio, rng_seed=[config.seed, slot])
        true_demand = {ev.ev_id: demand_units(ev.soc, units) for ev in fleet}
        per_slot.append(unused_power(alloc, true_demand, config.capacity))

        nxt = []
        for ev in fleet:
            grant = alloc.grants[ev.ev_id]
            if grant >= true_demand[ev.ev_id]:
                charged[ev.liar] += 1
                nxt.append(fresh(ev.liar))
                continue
            ev.soc = min(1.0, ev.soc + grant / units)
            ev.tcc -= 1
            if ev.tcc == 0:
                expired[ev.liar] += 1
                nxt.append(fresh(ev.liar))
            else:
                nxt.append(ev)
        fleet = nxt

    def prob(liar: bool) -> float:
        total = charged[liar] + expired[liar]
        return charged[liar] / total if total else math.nan

    return ImpactReport(
        p_liar_charged=prob(True),
        p_honest_charged=prob(False),
        avg_unused_power=float(np.mean(per_slot)),
        per_slot_unused=per_slot,
        counts={
            "liar_charged": charged[True],
            "liar_expired": expired[True],
            "honest_charged": charged[False],
            "honest_expired": expired[False],
        },
    )


SWEEP_HEADER = "n_liars,beta,capacity,p_honest,p_liar,avg_unused"


def sweep_row(config: ImpactConfig, report: ImpactReport) -> str:
    return (
        f"{config.n_liars},{config.beta:.6f},{config.capacity:.6f},"
        f"{report.p_honest_charged:.6f},{report.p_liar_charged:.6f},{report.avg_unused_power:.6f}"
    )


def sweep_csv(configs: Iterable[ImpactConfig]) -> str:
    buf = io.StringIO()
    buf.write(SWEEP_HEADER + "\n")
    for cfg in configs:
        buf.write(sweep_row(cfg, run_impact(cfg)) + "\n")
    return buf.getvalue()
