"""Software head unit for interval cycling sessions."""

from .plan import Exercise, PlanError, TrainingPlan, load_plan, parse_plan, serialize_plan
from .session import (FeedbackStatus, IntervalRecord, Phase, SessionEngine,
                      TelemetryFrame, classify, update_mean)

__version__ = "0.1.0"

__all__ = [
    "Exercise", "PlanError", "TrainingPlan", "load_plan", "parse_plan",
    "serialize_plan", "FeedbackStatus", "IntervalRecord", "Phase",
    "SessionEngine", "TelemetryFrame", "classify", "update_mean",
    "__version__",
]
