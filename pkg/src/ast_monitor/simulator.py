"""Virtual cyclist producing real sensor byte streams.

The rider's heart rate follows first-order dynamics toward a steady
state set by effort; the effort policy reads the same per-second
feedback a human would see on the cockpit and adjusts. Emitted NMEA and
ANT bytes go through the production decoders, so a simulated session
exercises the full stack hardware-free.
"""

import json
import math
import random
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .metrics import haversine
from .plan import TrainingPlan
from .sensors import (ANT_BROADCAST_DATA, ANT_SYNC, KNOTS_TO_MPS,
                      AntStreamDecoder, NmeaStreamDecoder, SampleFuser)
from .session import Phase, SessionEngine

HR_EMIT_MIN = 30
HR_EMIT_MAX = 230


@dataclass
class RiderModel:
    """First-order heart-rate plant: hr relaxes toward rest + effort * range."""

    hr_rest: float = 60.0
    hr_max: float = 195.0
    tau_s: float = 30.0
    effort: float = 0.0
    noise_sd: float = 1.5
    rng_seed: int = 42
    hr: Optional[float] = None  # defaults to hr_rest

    def __post_init__(self):
        if self.hr_rest >= self.hr_max:
            raise ValueError("hr_rest must be below hr_max")
        if self.tau_s <= 0:
            raise ValueError("tau_s must be positive")
        self.effort = min(1.0, max(0.0, self.effort))
        if self.hr is None:
            self.hr = self.hr_rest
        self._rng = random.Random(self.rng_seed)

    @property
    def hr_steady_state(self) -> float:
        return self.hr_rest + self.effort * (self.hr_max - self.hr_rest)

    def effort_for(self, target_hr: float) -> float:
        """Effort whose steady state sits at target_hr (rider self-knowledge)."""
        eff = (target_hr - self.hr_rest) / (self.hr_max - self.hr_rest)
        return min(1.0, max(0.0, eff))

    @property
    def bpm(self) -> int:
        return int(round(min(float(HR_EMIT_MAX), max(float(HR_EMIT_MIN), self.hr))))


def step_hr(model: RiderModel, dt_s: float) -> RiderModel:
    """Advance the heart-rate plant by dt_s seconds (in place).

    Uses the exact discretization of the first-order lag (effort held
    constant over the step), so the noise-free trajectory matches the
    analytic exponential and cannot leave [hr_rest, hr_max].
    """
    if dt_s <= 0:
        raise ValueError("dt_s must be positive")
    pull = 1.0 - math.exp(-dt_s / model.tau_s)
    drift = pull * (model.hr_steady_state - model.hr)
    noise = model._rng.gauss(0.0, model.noise_sd * math.sqrt(dt_s)) \
        if model.noise_sd > 0 else 0.0
    model.hr += drift + noise
    return model


@dataclass
class RiderPolicy:
    """Turns cockpit feedback into effort nudges: push when below, ease when above."""

    gain: float = 0.05

    def apply(self, model: RiderModel, feedback: Optional[str]) -> RiderModel:
        if feedback == "-":
            model.effort = min(1.0, model.effort + self.gain)
        elif feedback == "+":
            model.effort = max(0.0, model.effort - self.gain)
        return model


def apply_feedback(policy: RiderPolicy, model: RiderModel,
                   feedback: Optional[str]) -> RiderModel:
    return policy.apply(model, feedback)


class Route:
    """Closed polyline of waypoints; positions are looked up by ride distance."""

    def __init__(self, waypoints: List[dict]):
        if not waypoints:
            raise ValueError("route needs at least one waypoint")
        self.waypoints = waypoints
        self._lengths = []
        n = len(waypoints)
        for i in range(n):
            a, b = waypoints[i], waypoints[(i + 1) % n]
            self._lengths.append(haversine(a["lat"], a["lon"], b["lat"], b["lon"]))
        self.loop_length = sum(self._lengths) or 1.0

    def point_at(self, distance_m: float) -> Tuple[float, float, float]:
        d = distance_m % self.loop_length
        n = len(self.waypoints)
        for i in range(n):
            seg = self._lengths[i]
            if d <= seg or i == n - 1:
                f = d / seg if seg > 0 else 0.0
                a, b = self.waypoints[i], self.waypoints[(i + 1) % n]
                return (a["lat"] + f * (b["lat"] - a["lat"]),
                        a["lon"] + f * (b["lon"] - a["lon"]),
                        a["altitude_m"] + f * (b["altitude_m"] - a["altitude_m"]))
            d -= seg
        raise AssertionError("unreachable")

    @classmethod
    def load(cls, path) -> "Route":
        with open(path) as fh:
            return cls(json.loads(fh.read()))


def default_route() -> Route:
    """A ~3 km loop with a gentle altitude wave, for hardware-free runs."""
    center_lat, center_lon, base_alt = 46.05, 15.47, 300.0
    radius_m = 500.0
    points = []
    for k in range(36):
        theta = 2.0 * math.pi * k / 36
        dlat = radius_m * math.cos(theta) / 111_320.0
        dlon = radius_m * math.sin(theta) / (111_320.0 * math.cos(math.radians(center_lat)))
        points.append({
            "lat": center_lat + dlat,
            "lon": center_lon + dlon,
            "altitude_m": base_alt + 12.0 * math.sin(2.0 * theta),
        })
    return Route(points)


def _nmea_line(body: str) -> bytes:
    xor = 0
    for b in body.encode("ascii"):
        xor ^= b
    return f"${body}*{xor:02X}\r\n".encode("ascii")


def _coord_fields(value: float, axis: str) -> Tuple[str, str]:
    if axis == "lat":
        hemi = "N" if value >= 0 else "S"
        width = 2
    else:
        hemi = "E" if value >= 0 else "W"
        width = 3
    v = abs(value)
    degrees = int(v)
    minutes = (v - degrees) * 60.0
    if minutes >= 59.99995:  # avoid rolling into 60 after rounding
        degrees += 1
        minutes = 0.0
    return f"{degrees:0{width}d}{minutes:07.4f}", hemi


class StreamEmitter:
    """Per tick: one GGA + one RMC sentence and one ANT HR broadcast frame."""

    def __init__(self, route: Route):
        self.route = route
        self.ride_distance_m = 0.0
        self._beat_count = 0

    @staticmethod
    def ground_speed(effort: float) -> float:
        return 2.0 + 10.0 * effort

    def emit(self, model: RiderModel, tick_s: int) -> Tuple[bytes, bytes]:
        speed = self.ground_speed(model.effort)
        self.ride_distance_m += speed * 1.0
        lat, lon, alt = self.route.point_at(self.ride_distance_m)

        hh, mm, ss = (tick_s // 3600) % 24, (tick_s // 60) % 60, tick_s % 60
        clock = f"{hh:02d}{mm:02d}{ss:02d}.00"
        lat_f, lat_h = _coord_fields(lat, "lat")
        lon_f, lon_h = _coord_fields(lon, "lon")
        gga = _nmea_line(
            f"GPGGA,{clock},{lat_f},{lat_h},{lon_f},{lon_h},1,08,0.9,{alt:.1f},M,46.9,M,,")
        knots = speed / KNOTS_TO_MPS
        rmc = _nmea_line(
            f"GPRMC,{clock},A,{lat_f},{lat_h},{lon_f},{lon_h},{knots:.2f},0.0,010120,,,A")

        self._beat_count = (self._beat_count + max(1, model.bpm // 60)) % 256
        event_time = (tick_s * 1024) % 65536
        payload = bytes([
            0x04, 0xFF, 0xFF, 0xFF,
            event_time & 0xFF, (event_time >> 8) & 0xFF,
            self._beat_count, model.bpm,
        ])
        frame = bytes([ANT_SYNC, 9, ANT_BROADCAST_DATA, 0]) + payload
        xor = 0
        for b in frame:
            xor ^= b
        ant = frame + bytes([xor])
        return gga + rmc, ant


def emit_streams(model: RiderModel, emitter: StreamEmitter,
                 tick_s: int) -> Tuple[bytes, bytes]:
    return emitter.emit(model, tick_s)


REST_EASY_EFFORT = 0.3

# a rider re-reads the feedback display every few seconds, not every tick;
# reacting each second against a 30 s heart-rate lag oscillates badly
REACTION_PERIOD_S = 3


@dataclass
class SimulationResult:
    records: list
    frames: list
    engine: SessionEngine


class SimulationHarness:
    """Closed-loop desk run: rider bytes in, engine feedback back to the rider.

    Autonomously presses start, rides each interval steering by the
    frame's feedback symbol, rests for ``rest_s`` (easy spin, then a
    wind-up toward the next target, the way a rider gets ready before
    pressing start), and finishes the plan.
    """

    def __init__(self, plan: TrainingPlan, model: RiderModel,
                 policy: Optional[RiderPolicy] = None,
                 route: Optional[Route] = None,
                 tolerance_bpm: float = 5.0,
                 rest_s: int = 60, warmup_s: int = 120,
                 store=None, on_frame=None):
        self.plan = plan
        self.model = model
        self.policy = policy or RiderPolicy()
        self.route = route or default_route()
        self.rest_s = rest_s
        self.warmup_s = warmup_s
        self.store = store
        self.on_frame = on_frame
        self.engine = SessionEngine(plan, tolerance_bpm=tolerance_bpm)

    def _next_target(self) -> Optional[int]:
        idx = len(self.plan.exercises) - self.engine.exercises_remaining
        if idx < len(self.plan.exercises):
            return self.plan.exercises[idx].target_hr
        return None

    def run(self, max_ticks: int = 100_000) -> SimulationResult:
        engine = self.engine
        emitter = StreamEmitter(self.route)
        nmea_decoder = NmeaStreamDecoder()
        ant_decoder = AntStreamDecoder()
        fuser = SampleFuser()
        frames = []
        last_feedback: Optional[str] = None
        windup_s = min(int(self.model.tau_s), max(0, self.rest_s // 2))

        engine.handle_command("start_tracking")
        phase_elapsed = 0
        since_reaction = 0
        for t in range(1, max_ticks + 1):
            if engine.phase is Phase.TRACKING:
                target = self._next_target()
                if phase_elapsed >= self.warmup_s and target is not None:
                    engine.handle_command("start_interval")
                    phase_elapsed = 0
                    since_reaction = 0
                elif target is not None:
                    self.model.effort = self.model.effort_for(target)
            elif engine.phase is Phase.REST:
                target = self._next_target()
                if target is None or phase_elapsed >= self.rest_s:
                    engine.handle_command("start_interval")
                    phase_elapsed = 0
                    since_reaction = 0
                elif phase_elapsed >= self.rest_s - windup_s:
                    self.model.effort = self.model.effort_for(target)
                else:
                    self.model.effort = REST_EASY_EFFORT

            if engine.phase is Phase.FINISHED or engine.shutdown_requested:
                break
            if engine.phase is Phase.INTERVAL_ACTIVE:
                since_reaction += 1
                if since_reaction >= REACTION_PERIOD_S:
                    self.policy.apply(self.model, last_feedback)
                    since_reaction = 0

            step_hr(self.model, 1.0)
            nmea, ant = emitter.emit(self.model, t)
            for fix in nmea_decoder.feed(nmea, t * 1000):
                fuser.offer_fix(fix)
            for reading in ant_decoder.feed(ant, t * 1000):
                fuser.offer_hr(reading)
            frame, record = engine.tick(fuser.sample_at(t * 1000))

            phase_elapsed += 1
            if frame is not None:
                frames.append(frame)
                last_feedback = frame.feedback if frame.phase == Phase.INTERVAL_ACTIVE.value else None
                if self.store is not None:
                    self.store.append_frame(frame)
                if self.on_frame is not None:
                    self.on_frame(frame)
            if record is not None:
                phase_elapsed = 0
                if self.store is not None:
                    self.store.append_record(record)

        return SimulationResult(records=list(engine.records), frames=frames,
                                engine=engine)
