"""File-backed session persistence.

One directory per session: ``plan.json`` (copy of the loaded plan),
``samples.csv`` (one row per telemetry frame, flushed on write),
``intervals.json`` (records so far, rewritten atomically), and
``summary.json`` (written by finalize). Flat append-friendly files keep
partial data readable after a crash and are trivial for the external
planner to ingest.
"""

import csv
import io
import json
import os
from pathlib import Path
from typing import List, Optional

from .plan import TrainingPlan, serialize_plan
from .session import IntervalRecord, TelemetryFrame

SAMPLE_COLUMNS = [
    "t_s", "phase", "interval_id", "hr_bpm", "avg_hr", "target_hr",
    "remaining_s", "feedback", "lat", "lon", "altitude_m", "speed_mps",
    "distance_m", "ascent_m",
]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def frame_to_row(frame: TelemetryFrame) -> List[str]:
    return [
        _cell(frame.t_s),
        _cell(frame.phase),
        _cell(frame.interval_id),
        _cell(frame.hr_bpm),
        _cell(frame.avg_hr),
        _cell(frame.target_hr),
        _cell(frame.remaining_s),
        _cell(frame.feedback),
        _cell(frame.lat),
        _cell(frame.lon),
        _cell(frame.altitude_m),
        _cell(frame.speed_mps),
        _cell(frame.distance_m),
        _cell(frame.ascent_m),
    ]


class StoreError(Exception):
    pass


class SessionStore:
    """Single-writer persistence for one session.

    Write failures after open never propagate to the engine loop; they
    are counted and the session continues in memory.
    """

    def __init__(self, root_dir, session_id: str, started_at: str,
                 plan: TrainingPlan, tolerance_bpm: float = 5.0):
        self.dir = Path(root_dir) / session_id
        self.session_id = session_id
        self.started_at = started_at
        self.plan = plan
        self.tolerance_bpm = tolerance_bpm
        self.records: List[IntervalRecord] = []
        self.frames_written = 0
        self.write_errors = 0
        self._samples_fh: Optional[io.TextIOWrapper] = None
        self._last_frame: Optional[TelemetryFrame] = None

    def open(self) -> "SessionStore":
        try:
            self.dir.mkdir(parents=True, exist_ok=False)
        except FileExistsError:
            raise StoreError(f"session directory already exists: {self.dir}")
        (self.dir / "plan.json").write_bytes(serialize_plan(self.plan))
        self._samples_fh = open(self.dir / "samples.csv", "w", newline="")
        self._samples_fh.write(",".join(SAMPLE_COLUMNS) + "\n")
        self._samples_fh.flush()
        self._write_intervals()
        return self

    def append_frame(self, frame: TelemetryFrame) -> None:
        self._last_frame = frame
        if self._samples_fh is None:
            return
        try:
            self._samples_fh.write(",".join(frame_to_row(frame)) + "\n")
            self._samples_fh.flush()
            self.frames_written += 1
        except (OSError, ValueError):  # ValueError: write on a closed file
            self.write_errors += 1

    def append_record(self, record: IntervalRecord) -> None:
        self.records.append(record)
        self._write_intervals()

    def _write_intervals(self) -> None:
        try:
            payload = json.dumps([r.to_dict() for r in self.records], indent=2)
            tmp = self.dir / "intervals.json.tmp"
            tmp.write_text(payload + "\n")
            os.replace(tmp, self.dir / "intervals.json")
        except OSError:
            self.write_errors += 1

    def build_summary(self) -> dict:
        completed = [r for r in self.records if r.completed]
        deviations = [abs(r.deviation_bpm) for r in completed
                      if r.deviation_bpm is not None]
        frame = self._last_frame
        return {
            "session_id": self.session_id,
            "started_at": self.started_at,
            "plan_name": self.plan.name,
            "tolerance_bpm": self.tolerance_bpm,
            "intervals": [r.to_dict() for r in self.records],
            "aggregates": {
                "completed_intervals": len(completed),
                "partial_intervals": len(self.records) - len(completed),
                "total_interval_time_s": sum(r.elapsed_s for r in self.records),
                "mean_abs_deviation_bpm":
                    sum(deviations) / len(deviations) if deviations else None,
                "distance_m": frame.distance_m if frame else 0.0,
                "ascent_m": frame.ascent_m if frame else 0.0,
            },
        }

    def finalize(self) -> Path:
        """Write summary.json; idempotent, byte-identical on repeat calls."""
        if self._samples_fh is not None:
            self._samples_fh.flush()
        payload = json.dumps(self.build_summary(), indent=2, sort_keys=True)
        path = self.dir / "summary.json"
        path.write_text(payload + "\n")
        return path

    def close(self) -> None:
        if self._samples_fh is not None:
            self._samples_fh.close()
            self._samples_fh = None


def read_samples(session_dir) -> List[dict]:
    """Parse samples.csv into typed row dicts (None for empty cells)."""
    rows = []
    with open(Path(session_dir) / "samples.csv", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SAMPLE_COLUMNS:
            raise StoreError(f"unexpected samples.csv columns: {reader.fieldnames}")
        for raw in reader:
            rows.append({
                "t_s": int(raw["t_s"]),
                "phase": raw["phase"],
                "interval_id": int(raw["interval_id"]) if raw["interval_id"] else None,
                "hr_bpm": int(raw["hr_bpm"]) if raw["hr_bpm"] else None,
                "avg_hr": float(raw["avg_hr"]) if raw["avg_hr"] else None,
                "target_hr": int(raw["target_hr"]) if raw["target_hr"] else None,
                "remaining_s": int(raw["remaining_s"]) if raw["remaining_s"] else None,
                "feedback": raw["feedback"] or None,
                "lat": float(raw["lat"]) if raw["lat"] else None,
                "lon": float(raw["lon"]) if raw["lon"] else None,
                "altitude_m": float(raw["altitude_m"]) if raw["altitude_m"] else None,
                "speed_mps": float(raw["speed_mps"]) if raw["speed_mps"] else None,
                "distance_m": float(raw["distance_m"]) if raw["distance_m"] else None,
                "ascent_m": float(raw["ascent_m"]) if raw["ascent_m"] else None,
            })
    return rows


def read_intervals(session_dir) -> List[IntervalRecord]:
    path = Path(session_dir) / "intervals.json"
    return [IntervalRecord.from_dict(d) for d in json.loads(path.read_text())]


def read_summary(session_dir) -> dict:
    return json.loads((Path(session_dir) / "summary.json").read_text())
