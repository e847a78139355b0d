"""Team staffing with beam-search planning and online worker profiling."""

from staffsim.calendar import CalendarEntry, CalendarView, Interval, Timing
from staffsim.criteria import EvaluationContext, WeightVector, aggregate_V
from staffsim.domain import TSO, Schedule, Seniority, TaskSpec, TrueAttributes, WorkerState
from staffsim.profiling import AttributeKind, ObservationRecord, ProfileStore, estimate_attribute
from staffsim.rescheduler import RescheduleResult, reschedule
from staffsim.scheduler import Scheduler, check_feasibility, enumerate_teams, feasible_tsos, schedule

__version__ = "0.1.0"

__all__ = [
    "AttributeKind",
    "CalendarEntry",
    "CalendarView",
    "EvaluationContext",
    "Interval",
    "ObservationRecord",
    "ProfileStore",
    "RescheduleResult",
    "Schedule",
    "Scheduler",
    "Seniority",
    "TSO",
    "TaskSpec",
    "Timing",
    "TrueAttributes",
    "WeightVector",
    "WorkerState",
    "aggregate_V",
    "check_feasibility",
    "enumerate_teams",
    "estimate_attribute",
    "feasible_tsos",
    "reschedule",
    "schedule",
]
