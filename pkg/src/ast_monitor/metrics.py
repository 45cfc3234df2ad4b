"""Ride totals from the GPS fix stream: distance, current speed, ascent."""

import math
from dataclasses import dataclass
from typing import Optional

from .sensors import GpsFix

EARTH_RADIUS_M = 6_371_000.0

# hops implying more than this are GPS glitches, not riding
MAX_PLAUSIBLE_SPEED_MPS = 30.0

# a climb must exceed this above the running reference before it counts;
# suppresses GPS altitude noise
ASCENT_HYSTERESIS_M = 1.0


@dataclass(frozen=True)
class RideTotals:
    distance_m: float = 0.0
    ascent_m: float = 0.0
    current_speed_mps: float = 0.0


def haversine(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two lat/lon points."""
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


def accumulate(totals: RideTotals, prev_fix: Optional[GpsFix], fix: GpsFix,
               dt_s: float, ascent_ref: Optional[float]):
    """Fold one fix into the running totals.

    Returns (new_totals, new_ascent_ref). ``ascent_ref`` is the last
    committed altitude for the hysteresis rule; pass None before the
    first altitude-bearing fix. Implausible hops (over
    MAX_PLAUSIBLE_SPEED_MPS) contribute no distance.
    """
    distance = totals.distance_m
    speed = totals.current_speed_mps
    hop = 0.0
    if prev_fix is not None:
        hop = haversine(prev_fix.lat, prev_fix.lon, fix.lat, fix.lon)
        if dt_s > 0 and hop / dt_s <= MAX_PLAUSIBLE_SPEED_MPS:
            distance += hop
            speed = hop / dt_s
        else:
            hop = 0.0
            speed = 0.0
    if fix.speed_mps is not None:
        speed = fix.speed_mps

    ascent = totals.ascent_m
    if fix.altitude_m is not None:
        if ascent_ref is None:
            ascent_ref = fix.altitude_m
        elif fix.altitude_m > ascent_ref + ASCENT_HYSTERESIS_M:
            ascent += fix.altitude_m - ascent_ref
            ascent_ref = fix.altitude_m
        elif fix.altitude_m < ascent_ref - ASCENT_HYSTERESIS_M:
            ascent_ref = fix.altitude_m

    return RideTotals(distance_m=distance, ascent_m=ascent,
                      current_speed_mps=speed), ascent_ref


class TotalsTracker:
    """Stateful fold over the session's fixes, owned by the engine loop."""

    def __init__(self, dt_s: float = 1.0):
        self.dt_s = dt_s
        self.totals = RideTotals()
        self.skipped_hops = 0
        self._prev: Optional[GpsFix] = None
        self._ascent_ref: Optional[float] = None

    def update(self, fix: Optional[GpsFix]) -> RideTotals:
        if fix is None:
            return self.totals
        before = self.totals.distance_m
        self.totals, self._ascent_ref = accumulate(
            self.totals, self._prev, fix, self.dt_s, self._ascent_ref)
        if self._prev is not None and self.totals.distance_m == before \
                and (self._prev.lat, self._prev.lon) != (fix.lat, fix.lon):
            self.skipped_hops += 1
        self._prev = fix
        return self.totals
