"""GPS trace parsing, minute resampling and a synthetic taxi-like mobility model.

Trace files use the public cab-trace convention: one fix per line,
``latitude longitude occupied epoch`` separated by spaces. Real files are
usually newest-first, so parsing sorts the fixes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

EARTH_RADIUS_MI = 3958.8
MINUTES_PER_DAY = 1440
SECONDS_PER_DAY = 86400
# below this a minute counts as "not moving"
PARKED_EPS_MI = 0.005
DEFAULT_MAX_SPEED_MPH = 80.0
# 2008-05-17 00:00:00 UTC, first day of the San Francisco cab recording
SYNTHETIC_EPOCH = 1210982400


class TraceParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TraceCoverageError(ValueError):
    pass


@dataclass(frozen=True)
class GpsFix:
    latitude: float
    longitude: float
    occupied: bool
    timestamp: int

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude}")
        if self.timestamp <= 0:
            raise ValueError(f"timestamp must be positive: {self.timestamp}")


@dataclass
class VehicleTrace:
    """Time-ordered fixes of one vehicle, stored column-wise.

    Keeping columns as arrays lets a 24-day, one-fix-per-minute trace stay
    small; ``fixes`` materialises :class:`GpsFix` objects on demand.
    """

    vehicle_id: str
    latitude: np.ndarray
    longitude: np.ndarray
    occupied: np.ndarray
    timestamp: np.ndarray

    def __post_init__(self):
        self.latitude = np.asarray(self.latitude, dtype=float)
        self.longitude = np.asarray(self.longitude, dtype=float)
        self.occupied = np.asarray(self.occupied, dtype=bool)
        self.timestamp = np.asarray(self.timestamp, dtype=np.int64)
        n = len(self.timestamp)
        if n == 0:
            raise ValueError("a trace needs at least one fix")
        if not (len(self.latitude) == len(self.longitude) == len(self.occupied) == n):
            raise ValueError("trace columns differ in length")
        if np.any(np.diff(self.timestamp) <= 0):
            raise ValueError("trace timestamps must be strictly increasing")

    @classmethod
    def from_fixes(cls, vehicle_id: str, fixes: Iterable[GpsFix]) -> "VehicleTrace":
        fixes = list(fixes)
        return cls(
            vehicle_id,
            [f.latitude for f in fixes],
            [f.longitude for f in fixes],
            [f.occupied for f in fixes],
            [f.timestamp for f in fixes],
        )

    @property
    def fixes(self) -> list[GpsFix]:
        return [
            GpsFix(float(a), float(o), bool(c), int(t))
            for a, o, c, t in zip(self.latitude, self.longitude, self.occupied, self.timestamp)
        ]

    def __len__(self) -> int:
        return len(self.timestamp)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VehicleTrace):
            return NotImplemented
        return (
            self.vehicle_id == other.vehicle_id
            and np.array_equal(self.latitude, other.latitude)
            and np.array_equal(self.longitude, other.longitude)
            and np.array_equal(self.occupied, other.occupied)
            and np.array_equal(self.timestamp, other.timestamp)
        )


@dataclass(frozen=True)
class MinuteActivity:
    minute_index: int
    distance: float
    parked: bool


@dataclass(frozen=True)
class MobilityParams:
    trip_mean_min: float = 20.0
    idle_mean_min: float = 40.0
    speed_low_mph: float = 10.0
    speed_high_mph: float = 40.0
    fix_interval_s: int = 60
    origin: tuple[float, float] = (37.7749, -122.4194)
    # trips head to a random point within this radius of the origin
    service_radius_mi: float = 10.0
    start_epoch: int = SYNTHETIC_EPOCH


def parse_trace(stream: TextIO | Iterable[str], vehicle_id: str = "ev") -> VehicleTrace:
    """Parse ``lat lon occupied epoch`` lines into a normalised trace.

    Blank lines are skipped. Fixes are sorted by time and repeated
    timestamps keep the first occurrence in file order.
    """
    seen: dict[int, GpsFix] = {}
    for line_no, line in enumerate(stream, start=1):
        text = line.strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) != 4:
            raise TraceParseError(line_no, f"expected 4 fields, got {len(parts)}")
        try:
            lat = float(parts[0])
            lon = float(parts[1])
            occ = int(parts[2])
            ts = int(parts[3])
        except ValueError:
            raise TraceParseError(line_no, f"non-numeric field in {text!r}") from None
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise TraceParseError(line_no, "non-finite coordinate")
        if occ not in (0, 1):
            raise TraceParseError(line_no, f"occupied flag must be 0 or 1, got {occ}")
        try:
            fix = GpsFix(lat, lon, bool(occ), ts)
        except ValueError as exc:
            raise TraceParseError(line_no, str(exc)) from None
        seen.setdefault(ts, fix)
    if not seen:
        raise TraceParseError(0, "no fixes in trace")
    return VehicleTrace.from_fixes(vehicle_id, (seen[t] for t in sorted(seen)))


def serialize_trace(trace: VehicleTrace) -> str:
    lines = [
        f"{lat!r} {lon!r} {int(occ)} {int(ts)}"
        for lat, lon, occ, ts in zip(
            trace.latitude.tolist(), trace.longitude.tolist(), trace.occupied, trace.timestamp
        )
    ]
    return "\n".join(lines) + "\n"


def _haversine(lat1, lon1, lat2, lon2):
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlmb = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_MI * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def haversine_miles(a: GpsFix, b: GpsFix) -> float:
    return float(_haversine(a.latitude, a.longitude, b.latitude, b.longitude))


def minutize_arrays(
    trace: VehicleTrace, day_start: int, max_speed_mph: float = DEFAULT_MAX_SPEED_MPH
) -> tuple[np.ndarray, np.ndarray]:
    """Per-minute (distance, parked) arrays for one day, 1440 entries each.

    Distance along each fix gap is spread uniformly over the gap and capped
    at ``max_speed_mph``; this is done by interpolating the cumulative
    distance curve at minute boundaries.
    """
    day_end = day_start + SECONDS_PER_DAY
    ts = trace.timestamp
    if ts[-1] < day_start or ts[0] >= day_end:
        raise TraceCoverageError(
            f"trace {trace.vehicle_id} has no fixes overlapping day starting {day_start}"
        )
    # only the gaps that can touch the day matter
    lo = max(int(np.searchsorted(ts, day_start, side="right")) - 1, 0)
    hi = min(int(np.searchsorted(ts, day_end, side="left")) + 1, len(ts))
    t = ts[lo:hi].astype(float)
    seg = _haversine(
        trace.latitude[lo : hi - 1], trace.longitude[lo : hi - 1],
        trace.latitude[lo + 1 : hi], trace.longitude[lo + 1 : hi],
    )
    seg = np.minimum(seg, max_speed_mph * np.diff(t) / 3600.0)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    edges = day_start + 60.0 * np.arange(MINUTES_PER_DAY + 1)
    dist = np.diff(np.interp(edges, t, cum))
    dist = np.clip(dist, 0.0, max_speed_mph / 60.0)
    parked = dist < PARKED_EPS_MI
    dist[parked] = 0.0
    return dist, parked


def minutize(
    trace: VehicleTrace, day_start: int, max_speed_mph: float = DEFAULT_MAX_SPEED_MPH
) -> list[MinuteActivity]:
    dist, parked = minutize_arrays(trace, day_start, max_speed_mph)
    return [
        MinuteActivity(i, float(d), bool(p)) for i, (d, p) in enumerate(zip(dist, parked))
    ]


def generate_synthetic_trace(
    seed: int,
    num_days: int,
    mobility: MobilityParams = MobilityParams(),
    vehicle_id: str | None = None,
) -> VehicleTrace:
    """Two-state trip/idle renewal process sampled at one fix per interval.

    Episode lengths are exponential (rounded to whole fix intervals, at
    least one); each trip draws one speed and drives toward a random point
    in the service area.
    """
    if num_days < 1:
        raise ValueError(f"num_days must be >= 1, got {num_days}")
    rng = np.random.default_rng(seed)
    step_s = mobility.fix_interval_s
    n_steps = num_days * SECONDS_PER_DAY // step_s
    lat0, lon0 = mobility.origin
    mi_per_deg_lat = math.pi / 180.0 * EARTH_RADIUS_MI
    mi_per_deg_lon = mi_per_deg_lat * math.cos(math.radians(lat0))

    # positions are kept in local miles east/north of the origin
    x = np.empty(n_steps + 1)
    y = np.empty(n_steps + 1)
    moving = rng.random() < 0.5
    i = 0
    px = py = 0.0
    x[0] = y[0] = 0.0
    while i < n_steps:
        mean = mobility.trip_mean_min if moving else mobility.idle_mean_min
        length = max(1, int(round(rng.exponential(mean) * 60.0 / step_s)))
        length = min(length, n_steps - i)
        if moving:
            speed = rng.uniform(mobility.speed_low_mph, mobility.speed_high_mph)
            r = mobility.service_radius_mi * math.sqrt(rng.random())
            theta = rng.uniform(0.0, 2.0 * math.pi)
            heading = math.atan2(r * math.sin(theta) - py, r * math.cos(theta) - px)
            step_mi = speed * step_s / 3600.0
            k = np.arange(1, length + 1)
            x[i + 1 : i + length + 1] = px + k * step_mi * math.cos(heading)
            y[i + 1 : i + length + 1] = py + k * step_mi * math.sin(heading)
        else:
            x[i + 1 : i + length + 1] = px
            y[i + 1 : i + length + 1] = py
        i += length
        px, py = x[i], y[i]
        moving = not moving

    lat = np.round(lat0 + y / mi_per_deg_lat, 6)
    lon = np.round(lon0 + x / mi_per_deg_lon, 6)
    ts = mobility.start_epoch + step_s * np.arange(n_steps + 1, dtype=np.int64)
    # occupancy is not modelled; keep the column for format compatibility
    occupied = np.zeros(n_steps + 1, dtype=bool)
    return VehicleTrace(vehicle_id or f"syn{seed}", lat, lon, occupied, ts)


def day_starts(trace: VehicleTrace, num_days: int) -> list[int]:
    """UTC midnights of the first ``num_days`` days touched by the trace."""
    first = int(trace.timestamp[0]) // SECONDS_PER_DAY * SECONDS_PER_DAY
    return [first + k * SECONDS_PER_DAY for k in range(num_days)]
