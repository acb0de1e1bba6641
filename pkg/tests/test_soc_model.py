import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lyingev.soc_model import (
    ChargePolicy,
    EvParams,
    SocDay,
    charging_decision,
    simulate_day,
    simulate_days,
    step_soc,
)
from lyingev.trace_ingest import MinuteActivity


def drive(d):
    return MinuteActivity(0, d, False)


PARK = MinuteActivity(0, 0.0, True)


def test_ev_params_consistency():
    p = EvParams()
    assert p.drain_per_mile == 275 / 64000
    assert p.charge_per_minute == pytest.approx(7.2 / 60 / 64)
    with pytest.raises(ValueError):
        EvParams(range_mi=300.0)


def test_step_soc_idle_is_identity():
    assert step_soc(0.5, PARK, False) == 0.5


def test_step_soc_ten_miles():
    soc = 0.5
    for _ in range(10):
        soc = step_soc(soc, drive(1.0), False)
    assert soc == pytest.approx(0.5 - 10 * 275 / 64000, abs=1e-12)
    assert soc == pytest.approx(0.45703, abs=1e-5)


def test_step_soc_thirty_minutes_charging():
    soc = 0.5
    for _ in range(30):
        soc = step_soc(soc, PARK, True)
    assert soc == pytest.approx(0.5 + 7.2 * 0.5 / 64, abs=1e-12)
    assert soc == pytest.approx(0.55625, abs=1e-12)


def test_step_soc_charge_capped_at_target():
    assert step_soc(0.999, PARK, True) == 1.0
    assert step_soc(0.85, PARK, True, target_soc=0.851) == 0.851


def test_step_soc_clamps_at_zero():
    assert step_soc(0.001, drive(1.0), False) == 0.0


@pytest.mark.parametrize("run, soc, expected", [(45, 0.5, True), (10, 0.2, False), (60, 0.95, False),
                                                (30, 0.5, True), (29, 0.5, False), (30, 0.9, False)])
def test_charging_decision(run, soc, expected):
    assert charging_decision(run, soc) is expected


def test_simulate_day_all_parked_above_threshold():
    day = simulate_day([PARK] * 1440, 0.95)
    np.testing.assert_array_equal(day.soc, np.full(48, 0.95))
    assert not day.depleted


def test_simulate_day_drive_then_charge():
    minutes = [drive(0.5)] * 30 + [PARK] * 30 + [PARK] * 1380
    # the hand example charges from the first parked minute
    day = simulate_day(minutes, 0.8, policy=ChargePolicy(min_parked_minutes=0))
    slot0 = 0.8 - 15 * 275 / 64000
    assert day.soc[0] == pytest.approx(slot0, abs=1e-12)
    assert day.soc[0] == pytest.approx(0.73555, abs=1e-5)
    assert day.soc[1] == pytest.approx(min(1.0, slot0 + 0.05625), abs=1e-12)
    assert day.soc[1] == pytest.approx(0.79180, abs=1e-5)


def test_simulate_day_default_policy_waits_thirty_parked_minutes():
    minutes = [PARK] * 1440
    day = simulate_day(minutes, 0.5)
    # minutes 0..28 idle, charging from minute 29 (run = 30)
    assert day.soc[0] == pytest.approx(0.5 + 7.2 / 60 / 64, abs=1e-12)
    assert day.soc[1] == pytest.approx(0.5 + 31 * 7.2 / 60 / 64, abs=1e-12)
    assert day.soc[-1] == 1.0


def test_simulate_day_depletion():
    day = simulate_day([drive(80 / 60)] * 1440, 0.01)
    assert day.depleted
    assert day.soc[-1] == 0.0
    assert np.all(day.soc >= 0)


def test_simulate_day_wrong_length():
    with pytest.raises(ValueError):
        simulate_day([PARK] * 1439, 0.5)


def test_socday_validation():
    with pytest.raises(ValueError):
        SocDay("e", 0, np.zeros(47))
    with pytest.raises(ValueError):
        SocDay("e", 0, np.full(48, 1.2))


def _random_day(seed):
    """Alternating drive/park episodes with random speeds."""
    rng = np.random.default_rng(seed)
    minutes, moving = [], bool(rng.integers(2))
    while len(minutes) < 1440:
        length = int(rng.integers(1, 120))
        speed = rng.uniform(0.05, 1.3)
        minutes += [drive(speed) if moving else PARK] * length
        moving = not moving
    return minutes[:1440]


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
@settings(max_examples=25, deadline=None)
def test_vectorised_matches_reference(seed, init):
    minutes = _random_day(seed)
    ref = simulate_day(minutes, init)
    dist = np.array([[m.distance for m in minutes]])
    parked = np.array([[m.parked for m in minutes]])
    out, dep = simulate_days(dist, parked, np.array([init]))
    np.testing.assert_allclose(out[0], ref.soc, atol=1e-12)
    assert bool(dep[0]) == ref.depleted


@given(st.lists(st.tuples(st.booleans(), st.floats(0.0, 1.0)), min_size=1, max_size=400),
       st.floats(0.3, 1.0))
@settings(max_examples=50, deadline=None)
def test_energy_conservation(seq, init):
    """Final SoC equals the brute-force kWh ledger when nothing clamps."""
    p = EvParams()
    policy = ChargePolicy()
    soc, run, charging = init, 0, False
    charged_kwh = consumed_kwh = 0.0
    clamped = False
    for is_parked, d in seq:
        act = PARK if is_parked else drive(d)
        if act.parked:
            run += 1
            charging = soc < policy.target_soc if charging else charging_decision(run, soc, policy)
        else:
            run, charging = 0, False
        new = step_soc(soc, act, charging, p)
        if not act.parked:
            consumed_kwh += d * p.consumption_wh_per_mi / 1000.0
            clamped |= soc - d * p.drain_per_mile < 0
        elif charging and soc < 1.0:
            gain = min(1.0 - soc, p.charge_per_minute)
            clamped |= gain < p.charge_per_minute
            charged_kwh += p.max_charge_kw / 60.0 if gain == p.charge_per_minute else gain * p.battery_kwh
        soc = new
    if not clamped:
        assert soc - init == pytest.approx((charged_kwh - consumed_kwh) / p.battery_kwh, abs=1e-9)


@given(st.floats(0.0, 1.0), st.lists(st.floats(0.0, 1.3), min_size=1, max_size=60))
def test_monotone_over_driving(init, dists):
    soc = init
    for d in dists:
        new = step_soc(soc, drive(d), False)
        assert new <= soc
        soc = new
