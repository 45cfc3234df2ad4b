"""Session state machine and per-second heart-rate feedback.

The engine walks the plan one exercise at a time, gated by operator
commands, and folds one sensor sample per second into a running average
heart rate that is compared against the active exercise's target. It is
single-threaded by design: one merged stream of commands and ticks in,
immutable frames and records out.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from .metrics import TotalsTracker
from .plan import Exercise, TrainingPlan
from .sensors import SensorSample

DEFAULT_TOLERANCE_BPM = 5.0

COMMANDS = ("start_tracking", "stop_tracking", "start_interval",
            "stop_interval", "poweroff")


class Phase(str, Enum):
    IDLE = "idle"
    TRACKING = "tracking"
    INTERVAL_ACTIVE = "interval_active"
    REST = "rest"
    FINISHED = "finished"


class FeedbackStatus(Enum):
    """Where the running average sits relative to the target."""

    BELOW = "-"
    ON_TRACK = "="
    ABOVE = "+"

    @property
    def symbol(self) -> str:
        return self.value

    @property
    def alert(self) -> bool:
        # the cockpit highlights only underperformance
        return self is FeedbackStatus.BELOW


def update_mean(avg_hr: float, n: int, hr: int) -> Tuple[float, int]:
    """Fold one heart-rate value into the running mean of n prior values."""
    new_n = n + 1
    return avg_hr + (hr - avg_hr) / new_n, new_n


def classify(avg_hr: float, target_hr: float,
             tolerance_bpm: float = DEFAULT_TOLERANCE_BPM) -> FeedbackStatus:
    """Compare the running average against the target within a tolerance band."""
    if avg_hr < target_hr - tolerance_bpm:
        return FeedbackStatus.BELOW
    if avg_hr > target_hr + tolerance_bpm:
        return FeedbackStatus.ABOVE
    return FeedbackStatus.ON_TRACK


@dataclass
class IntervalState:
    """Progress through the active exercise."""

    exercise_id: int
    target_hr: int
    duration_s: int
    elapsed_s: int = 0
    n: int = 0
    avg_hr: float = 0.0


@dataclass(frozen=True)
class IntervalRecord:
    """Outcome of one entered interval, partial or completed."""

    exercise_id: int
    achieved_avg_hr: Optional[float]
    target_hr: int
    elapsed_s: int
    duration_s: int
    completed: bool
    samples_n: int
    deviation_bpm: Optional[float]

    def to_dict(self) -> dict:
        return {
            "exercise_id": self.exercise_id,
            "achieved_avg_hr": self.achieved_avg_hr,
            "target_hr": self.target_hr,
            "elapsed_s": self.elapsed_s,
            "duration_s": self.duration_s,
            "completed": self.completed,
            "samples_n": self.samples_n,
            "deviation_bpm": self.deviation_bpm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IntervalRecord":
        return cls(**{k: d[k] for k in (
            "exercise_id", "achieved_avg_hr", "target_hr", "elapsed_s",
            "duration_s", "completed", "samples_n", "deviation_bpm")})


@dataclass(frozen=True)
class TelemetryFrame:
    """Per-second snapshot broadcast to the cockpit and written to the log.

    Interval fields are None outside the interval phase; avg_hr and
    feedback additionally require at least one incorporated sample.
    """

    t_s: int
    phase: str
    interval_id: Optional[int]
    hr_bpm: Optional[int]
    avg_hr: Optional[float]
    target_hr: Optional[int]
    remaining_s: Optional[int]
    feedback: Optional[str]
    alert: bool
    distance_m: float
    speed_mps: float
    ascent_m: float
    n: int
    lat: Optional[float] = None
    lon: Optional[float] = None
    altitude_m: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "t_s": self.t_s,
            "phase": self.phase,
            "interval_id": self.interval_id,
            "hr_bpm": self.hr_bpm,
            "avg_hr": self.avg_hr,
            "target_hr": self.target_hr,
            "remaining_s": self.remaining_s,
            "feedback": self.feedback,
            "alert": self.alert,
            "distance_m": self.distance_m,
            "speed_mps": self.speed_mps,
            "ascent_m": self.ascent_m,
            "n": self.n,
        }


class SessionEngine:
    """Executes a training plan as an explicit state machine.

    All commands are acceptable in all phases; those illegal for the
    current phase are ignored and counted rather than raised. Ticks are
    fed once per second by the hosting loop while the phase is active.
    ``literal_mean`` keeps the sample counter pinned at one, making the
    "average" track only the last sample; it exists to document that
    discrepancy and is never used in production paths.
    """

    def __init__(self, plan: TrainingPlan,
                 tolerance_bpm: float = DEFAULT_TOLERANCE_BPM,
                 literal_mean: bool = False):
        self.plan = plan
        self.tolerance_bpm = float(tolerance_bpm)
        self.literal_mean = literal_mean
        self.phase = Phase.IDLE
        self.records: List[IntervalRecord] = []
        self.ignored_commands = 0
        self.shutdown_requested = False
        self.tracker = TotalsTracker()
        self.t_s = 0
        self.interval: Optional[IntervalState] = None
        self._next_index = 0

    @property
    def exercises_remaining(self) -> int:
        return len(self.plan.exercises) - self._next_index

    def handle_command(self, action: str) -> Optional[IntervalRecord]:
        """Apply one operator command; returns a record if one was finalized."""
        if action not in COMMANDS:
            raise ValueError(f"unknown command {action!r}")

        if action == "poweroff":
            record = None
            if self.phase is Phase.INTERVAL_ACTIVE:
                record = self._close_interval(stop_pressed=True)
            self.shutdown_requested = True
            return record

        if action == "start_tracking":
            if self.phase is Phase.IDLE:
                self.phase = Phase.TRACKING
            else:
                self.ignored_commands += 1
            return None

        if action == "stop_tracking":
            if self.phase in (Phase.TRACKING, Phase.REST):
                self.phase = Phase.IDLE
            else:
                self.ignored_commands += 1
            return None

        if action == "start_interval":
            if self.phase in (Phase.TRACKING, Phase.REST):
                if self._next_index < len(self.plan.exercises):
                    ex: Exercise = self.plan.exercises[self._next_index]
                    self._next_index += 1
                    self.interval = IntervalState(
                        exercise_id=ex.id, target_hr=ex.target_hr,
                        duration_s=ex.duration_s)
                    self.phase = Phase.INTERVAL_ACTIVE
                elif self.phase is Phase.REST:
                    # plan exhausted after a partial last interval
                    self.phase = Phase.FINISHED
                else:
                    self.ignored_commands += 1
            else:
                self.ignored_commands += 1
            return None

        # stop_interval
        if self.phase is Phase.INTERVAL_ACTIVE:
            return self._close_interval(stop_pressed=True)
        self.ignored_commands += 1
        return None

    def tick(self, sample: Optional[SensorSample]
             ) -> Tuple[Optional[TelemetryFrame], Optional[IntervalRecord]]:
        """Advance one second; returns the frame and any finalized record."""
        if self.phase in (Phase.IDLE, Phase.FINISHED):
            return None, None
        self.t_s += 1
        fix = sample.fix if sample is not None else None
        totals = self.tracker.update(fix)
        hr = sample.hr_bpm if sample is not None else None

        record = None
        if self.phase is Phase.INTERVAL_ACTIVE:
            iv = self.interval
            iv.elapsed_s += 1
            if hr is not None:
                if self.literal_mean:
                    iv.avg_hr = iv.avg_hr + (hr - iv.avg_hr)  # n stays 1
                    iv.n = 1
                else:
                    iv.avg_hr, iv.n = update_mean(iv.avg_hr, iv.n, hr)
            feedback = classify(iv.avg_hr, iv.target_hr,
                                self.tolerance_bpm) if iv.n > 0 else None
            frame = self._frame(
                hr=hr, fix=fix, totals=totals,
                interval_id=iv.exercise_id,
                avg_hr=iv.avg_hr if iv.n > 0 else None,
                target_hr=iv.target_hr,
                remaining_s=iv.duration_s - iv.elapsed_s,
                feedback=feedback, n=iv.n)
            if iv.elapsed_s >= iv.duration_s:
                record = self._close_interval(stop_pressed=False)
        else:
            frame = self._frame(hr=hr, fix=fix, totals=totals)
        return frame, record

    def _frame(self, hr, fix, totals, interval_id=None, avg_hr=None,
               target_hr=None, remaining_s=None, feedback=None, n=0):
        return TelemetryFrame(
            t_s=self.t_s,
            phase=self.phase.value,
            interval_id=interval_id,
            hr_bpm=hr,
            avg_hr=avg_hr,
            target_hr=target_hr,
            remaining_s=remaining_s,
            feedback=feedback.symbol if feedback else None,
            alert=feedback.alert if feedback else False,
            distance_m=totals.distance_m,
            speed_mps=totals.current_speed_mps,
            ascent_m=totals.ascent_m,
            n=n,
            lat=fix.lat if fix else None,
            lon=fix.lon if fix else None,
            altitude_m=fix.altitude_m if fix else None,
        )

    def _close_interval(self, stop_pressed: bool) -> IntervalRecord:
        iv = self.interval
        completed = iv.elapsed_s >= iv.duration_s
        avg = iv.avg_hr if iv.n > 0 else None
        record = IntervalRecord(
            exercise_id=iv.exercise_id,
            achieved_avg_hr=avg,
            target_hr=iv.target_hr,
            elapsed_s=iv.elapsed_s,
            duration_s=iv.duration_s,
            completed=completed,
            samples_n=iv.n,
            deviation_bpm=None if avg is None else avg - iv.target_hr,
        )
        self.records.append(record)
        self.interval = None
        if completed and not stop_pressed and self.exercises_remaining == 0:
            self.phase = Phase.FINISHED
        else:
            self.phase = Phase.REST
        return record
