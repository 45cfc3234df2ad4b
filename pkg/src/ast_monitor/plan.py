"""Interval training plans: parsing, validation, serialization.

A plan is an ordered list of intensity exercises, each a (target heart
rate, duration) pair. Rest phases between exercises carry no prescribed
duration and therefore do not appear in the plan file.
"""

import json
import math
from dataclasses import dataclass
from typing import Union

TARGET_HR_MIN = 30
TARGET_HR_MAX = 230


class PlanError(ValueError):
    """Raised for malformed or invariant-violating plan documents."""


@dataclass(frozen=True)
class Exercise:
    """One intensity phase: hold ``target_hr`` for ``duration_s`` seconds."""

    id: int
    target_hr: int
    duration_s: int

    def __post_init__(self):
        if self.id < 1:
            raise PlanError(f"exercise id must be >= 1 (got {self.id})")
        if not TARGET_HR_MIN <= self.target_hr <= TARGET_HR_MAX:
            raise PlanError(
                f"target_hr out of range {TARGET_HR_MIN}..{TARGET_HR_MAX}"
                f" (got {self.target_hr})"
            )
        if self.duration_s < 1:
            raise PlanError(f"duration_s must be >= 1 (got {self.duration_s})")


@dataclass(frozen=True)
class TrainingPlan:
    """Ordered, gap-free sequence of exercises. Immutable once built."""

    name: str
    exercises: tuple

    def __post_init__(self):
        if not self.exercises:
            raise PlanError("plan must contain at least one exercise")
        object.__setattr__(self, "exercises", tuple(self.exercises))
        for pos, ex in enumerate(self.exercises, start=1):
            if ex.id != pos:
                raise PlanError(
                    f"exercises[{pos - 1}].id: expected {pos}, got {ex.id} (gapped ids)"
                )

    @property
    def max_id(self) -> int:
        return len(self.exercises)

    def exercise(self, ex_id: int) -> Exercise:
        return self.exercises[ex_id - 1]

    @property
    def total_duration_s(self) -> int:
        return sum(ex.duration_s for ex in self.exercises)


def _minutes_to_seconds(minutes: float) -> int:
    # round half-up so 0.5 min -> 30 s and 1.0083 min -> 61 s stay stable
    return int(math.floor(minutes * 60.0 + 0.5))


def _require_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise PlanError(f"{path}: expected integer, got {value!r}")
    return value


def _require_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise PlanError(f"{path}: expected number, got {value!r}")
    return float(value)


def parse_plan(source: Union[bytes, str]) -> TrainingPlan:
    """Parse a plan document (JSON, durations in minutes) into a TrainingPlan.

    Raises PlanError naming the offending field on any malformed or
    invariant-violating input.
    """
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise PlanError(f"plan document is not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise PlanError(f"plan document is not valid JSON: {exc}") from None

    if not isinstance(doc, dict):
        raise PlanError("plan document must be a JSON object")
    unknown = set(doc) - {"name", "exercises"}
    if unknown:
        raise PlanError(f"unknown field(s): {', '.join(sorted(unknown))}")
    if "name" not in doc or "exercises" not in doc:
        raise PlanError("plan document requires 'name' and 'exercises'")
    if not isinstance(doc["name"], str):
        raise PlanError(f"name: expected string, got {doc['name']!r}")
    if not isinstance(doc["exercises"], list) or not doc["exercises"]:
        raise PlanError("exercises: expected non-empty array")

    exercises = []
    for i, entry in enumerate(doc["exercises"]):
        path = f"exercises[{i}]"
        if not isinstance(entry, dict):
            raise PlanError(f"{path}: expected object")
        unknown = set(entry) - {"id", "target_hr", "duration_min"}
        if unknown:
            raise PlanError(f"{path}: unknown field(s): {', '.join(sorted(unknown))}")
        for key in ("id", "target_hr", "duration_min"):
            if key not in entry:
                raise PlanError(f"{path}.{key}: missing")
        ex_id = _require_int(entry["id"], f"{path}.id")
        target = _require_int(entry["target_hr"], f"{path}.target_hr")
        minutes = _require_number(entry["duration_min"], f"{path}.duration_min")
        if minutes <= 0:
            raise PlanError(f"{path}.duration_min: must be positive (got {minutes})")
        seconds = _minutes_to_seconds(minutes)
        try:
            exercises.append(Exercise(id=ex_id, target_hr=target, duration_s=seconds))
        except PlanError as exc:
            raise PlanError(f"{path}: {exc}") from None

    return TrainingPlan(name=doc["name"], exercises=tuple(exercises))


def serialize_plan(plan: TrainingPlan) -> bytes:
    """Serialize a plan back to its document form (durations in minutes).

    Round-trips: ``parse_plan(serialize_plan(p))`` structurally equals ``p``.
    """
    entries = []
    for ex in plan.exercises:
        if ex.duration_s % 60 == 0:
            minutes: Union[int, float] = ex.duration_s // 60
        else:
            minutes = ex.duration_s / 60.0
        entries.append({"id": ex.id, "target_hr": ex.target_hr, "duration_min": minutes})
    doc = {"name": plan.name, "exercises": entries}
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def load_plan(path) -> TrainingPlan:
    """Read and parse a plan file from disk."""
    with open(path, "rb") as fh:
        return parse_plan(fh.read())
