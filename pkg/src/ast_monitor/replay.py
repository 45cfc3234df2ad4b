"""Re-derive a session from its samples log and diff against what was stored.

The samples file carries both the inputs the engine saw (heart rate,
position) and what it derived from them (running average, feedback,
totals). Replaying the inputs through a fresh engine must regenerate
every derived column and the interval records exactly; any divergence
means the log was edited or the engine drifted.

Known limit: an interval started and stopped between two ticks leaves
no frames, so it cannot be reconstructed from the log.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from .plan import load_plan
from .session import DEFAULT_TOLERANCE_BPM, Phase, SessionEngine
from .sensors import GpsFix, SensorSample
from .store import read_intervals, read_samples, read_summary

# derived columns a tampered row must disagree on
CHECKED_FIELDS = [
    "t_s", "phase", "interval_id", "hr_bpm", "avg_hr", "target_hr",
    "remaining_s", "feedback", "lat", "lon", "altitude_m", "speed_mps",
    "distance_m", "ascent_m",
]


@dataclass
class ReplayResult:
    ok: bool
    divergence: Optional[str] = None

    def __bool__(self):
        return self.ok


def _sample_from_row(row: dict) -> Optional[SensorSample]:
    fix = None
    if row["lat"] is not None and row["lon"] is not None:
        fix = GpsFix(timestamp_ms=row["t_s"] * 1000, lat=row["lat"],
                     lon=row["lon"], altitude_m=row["altitude_m"],
                     speed_mps=row["speed_mps"], valid=True)
    if row["hr_bpm"] is None and fix is None:
        return None
    return SensorSample(timestamp_ms=row["t_s"] * 1000,
                        hr_bpm=row["hr_bpm"], fix=fix)


def _frame_value(frame, field: str):
    return getattr(frame, field)


def replay_session(session_dir) -> ReplayResult:
    """Replay samples.csv through a fresh engine and diff everything."""
    session_dir = Path(session_dir)
    plan = load_plan(session_dir / "plan.json")
    rows = read_samples(session_dir)
    stored_records = read_intervals(session_dir)
    tolerance = DEFAULT_TOLERANCE_BPM
    summary_path = session_dir / "summary.json"
    if summary_path.exists():
        tolerance = read_summary(session_dir).get("tolerance_bpm", tolerance)

    engine = SessionEngine(plan, tolerance_bpm=tolerance)

    for i, row in enumerate(rows):
        # infer the commands pressed between the previous tick and this one
        if engine.phase is Phase.IDLE:
            engine.handle_command("start_tracking")
        if engine.phase is Phase.INTERVAL_ACTIVE:
            iv = engine.interval
            if row["phase"] != Phase.INTERVAL_ACTIVE.value \
                    or (row["interval_id"] is not None
                        and iv.exercise_id != row["interval_id"]):
                engine.handle_command("stop_interval")
        if row["phase"] == Phase.INTERVAL_ACTIVE.value \
                and engine.phase is not Phase.INTERVAL_ACTIVE:
            engine.handle_command("start_interval")

        frame, _ = engine.tick(_sample_from_row(row))
        if frame is None:
            return ReplayResult(False, f"row {i}: engine refused to tick "
                                       f"(phase {engine.phase.value})")
        for field in CHECKED_FIELDS:
            expected = row[field]
            actual = _frame_value(frame, field)
            if field == "phase":
                actual = frame.phase
            if expected != actual:
                return ReplayResult(
                    False,
                    f"row {i} (t_s={row['t_s']}): {field} stored "
                    f"{expected!r}, replayed {actual!r}")

    # a session that ended mid-interval was closed by stop or poweroff
    if engine.phase is Phase.INTERVAL_ACTIVE:
        engine.handle_command("stop_interval")

    replayed = [r.to_dict() for r in engine.records]
    stored = [r.to_dict() for r in stored_records]
    if len(replayed) != len(stored):
        return ReplayResult(
            False, f"record count: stored {len(stored)}, replayed {len(replayed)}")
    for i, (a, b) in enumerate(zip(stored, replayed)):
        if a != b:
            keys = [k for k in a if a[k] != b.get(k)]
            return ReplayResult(
                False, f"record {i}: stored {a} != replayed {b} (fields {keys})")
    return ReplayResult(True)
