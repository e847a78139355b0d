"""Core value types: attribute scales, tasks, workers, and schedules."""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from enum import Enum

from staffsim.calendar import CalendarEntry, CalendarView, Interval, Timing

SKILL_MIN, SKILL_MAX = 0, 6
PREF_MIN, PREF_MAX = -2, 2
SKILL_MEDIAN = 3
PREF_NEUTRAL = 0
DEFAULT_MAX_PRIORITY = 5

SKILL_NAMES = (
    "No competence",
    "Novice",
    "Beginner",
    "Intermediate",
    "Proficient",
    "Advanced",
    "Expert",
)
PREFERENCE_NAMES = (
    "Strong aversion",
    "Slight aversion",
    "Neutral",
    "Slight preference",
    "Strong preference",
)


class Scale(str, Enum):
    SKILL = "skill"
    PREFERENCE = "preference"

    @property
    def bounds(self) -> tuple[int, int]:
        return (SKILL_MIN, SKILL_MAX) if self is Scale.SKILL else (PREF_MIN, PREF_MAX)

    @property
    def default_level(self) -> int:
        return SKILL_MEDIAN if self is Scale.SKILL else PREF_NEUTRAL


class Seniority(str, Enum):
    JUNIOR = "junior"
    SENIOR = "senior"


@dataclass(frozen=True, slots=True)
class SkillLevel:
    value: int

    def __post_init__(self) -> None:
        if not SKILL_MIN <= self.value <= SKILL_MAX:
            raise ValueError(f"skill level {self.value} outside [{SKILL_MIN}, {SKILL_MAX}]")

    @property
    def label(self) -> str:
        return SKILL_NAMES[self.value]


@dataclass(frozen=True, slots=True)
class PreferenceLevel:
    value: int

    def __post_init__(self) -> None:
        if not PREF_MIN <= self.value <= PREF_MAX:
            raise ValueError(f"preference level {self.value} outside [{PREF_MIN}, {PREF_MAX}]")

    @property
    def label(self) -> str:
        return PREFERENCE_NAMES[self.value - PREF_MIN]


def _raw(level: SkillLevel | PreferenceLevel | int) -> int:
    return level if isinstance(level, int) else level.value


def skill_to_unit(level: SkillLevel | int) -> float:
    return _raw(level) / SKILL_MAX


def preference_to_unit(level: PreferenceLevel | int) -> float:
    return (_raw(level) - PREF_MIN) / (PREF_MAX - PREF_MIN)


def level_to_unit(level: int, scale: Scale) -> float:
    return skill_to_unit(level) if scale is Scale.SKILL else preference_to_unit(level)


def unit_to_level_value(u: float, scale: Scale) -> float:
    """Inverse of :func:`level_to_unit`, without rounding."""
    lo, hi = scale.bounds
    return lo + u * (hi - lo)


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def round_to_level(x: float, scale: Scale) -> int:
    if not math.isfinite(x):
        raise ValueError(f"cannot round non-finite value {x!r}")
    lo, hi = scale.bounds
    return round_half_away(min(max(x, lo), hi))


def check_level(level: int, scale: Scale) -> int:
    lo, hi = scale.bounds
    if isinstance(level, bool) or not isinstance(level, int) or not lo <= level <= hi:
        raise ValueError(f"level {level!r} outside {scale.value} scale [{lo}, {hi}]")
    return level


@dataclass(frozen=True, slots=True)
class TaskSpec:
    id: str
    arrival_time: int
    priority: int
    required_roles: Mapping[str, int]
    duration: int
    workload: float
    required_skills: Mapping[str, frozenset[str]] = field(default_factory=dict)
    topics: frozenset[str] = frozenset()
    must_include: frozenset[str] = frozenset()
    must_exclude: frozenset[str] = frozenset()
    deadline: int | None = None
    timing: Timing = Timing.FULL_TIME

    def __post_init__(self) -> None:
        if self.arrival_time < 0:
            raise ValueError(f"task {self.id}: arrival_time must be >= 0")
        if self.priority < 1:
            raise ValueError(f"task {self.id}: priority must be >= 1")
        if self.duration < 1:
            raise ValueError(f"task {self.id}: duration must be >= 1")
        if not self.workload > 0:
            raise ValueError(f"task {self.id}: workload must be > 0")
        if any(c < 1 for c in self.required_roles.values()) or not self.required_roles:
            raise ValueError(f"task {self.id}: required role counts must be >= 1")
        if self.must_include & self.must_exclude:
            raise ValueError(f"task {self.id}: must_include and must_exclude intersect")

    @property
    def team_size(self) -> int:
        return sum(self.required_roles.values())

    @property
    def workload_rate(self) -> float:
        return self.workload / self.duration

    @property
    def full_time(self) -> bool:
        return self.timing is Timing.FULL_TIME

    def skills_for(self, role: str) -> frozenset[str]:
        return self.required_skills.get(role, frozenset())

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "arrival_time": self.arrival_time,
            "priority": self.priority,
            "required_roles": dict(sorted(self.required_roles.items())),
            "required_skills": {r: sorted(s) for r, s in sorted(self.required_skills.items())},
            "topics": sorted(self.topics),
            "duration": self.duration,
            "workload": self.workload,
            "must_include": sorted(self.must_include),
            "must_exclude": sorted(self.must_exclude),
            "deadline": self.deadline,
            "timing": self.timing.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> TaskSpec:
        return cls(
            id=str(data["id"]),
            arrival_time=int(data.get("arrival_time", 0)),
            priority=int(data["priority"]),
            required_roles={str(r): int(c) for r, c in data["required_roles"].items()},
            required_skills={
                str(r): frozenset(s) for r, s in data.get("required_skills", {}).items()
            },
            topics=frozenset(data.get("topics", ())),
            duration=int(data["duration"]),
            workload=float(data["workload"]),
            must_include=frozenset(data.get("must_include", ())),
            must_exclude=frozenset(data.get("must_exclude", ())),
            deadline=None if data.get("deadline") is None else int(data["deadline"]),
            timing=Timing(data.get("timing", Timing.FULL_TIME.value)),
        )


@dataclass(frozen=True, slots=True)
class HistoryItem:
    task_id: str
    outcome: float


@dataclass(frozen=True, slots=True)
class WorkerState:
    id: str
    role: str
    seniority: Seniority
    salary: float
    work_capacity: float
    calendar: CalendarView = CalendarView()
    history: tuple[HistoryItem, ...] = ()

    def __post_init__(self) -> None:
        if not self.salary > 0:
            raise ValueError(f"worker {self.id}: salary must be > 0")
        if not self.work_capacity > 0:
            raise ValueError(f"worker {self.id}: work_capacity must be > 0")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "role": self.role,
            "seniority": self.seniority.value,
            "salary": self.salary,
            "work_capacity": self.work_capacity,
            "calendar": self.calendar.to_dict(),
            "history": [{"task_id": h.task_id, "outcome": h.outcome} for h in self.history],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> WorkerState:
        return cls(
            id=str(data["id"]),
            role=str(data["role"]),
            seniority=Seniority(data.get("seniority", "junior")),
            salary=float(data["salary"]),
            work_capacity=float(data["work_capacity"]),
            calendar=CalendarView.from_dict(data.get("calendar", {})),
            history=tuple(
                HistoryItem(str(h["task_id"]), float(h["outcome"]))
                for h in data.get("history", ())
            ),
        )


@dataclass(frozen=True, slots=True)
class TrueAttributes:
    """Latent attribute values; only the simulator may look at these."""

    hard_skills: Mapping[str, int]
    soft_skills: Mapping[str, int]
    task_preferences: Mapping[str, int]
    teammate_preferences: Mapping[str, int]

    def __post_init__(self) -> None:
        for table in (self.hard_skills, self.soft_skills):
            for v in table.values():
                check_level(v, Scale.SKILL)
        for table in (self.task_preferences, self.teammate_preferences):
            for v in table.values():
                check_level(v, Scale.PREFERENCE)

    def to_dict(self) -> dict:
        return {
            "hard_skills": dict(self.hard_skills),
            "soft_skills": dict(self.soft_skills),
            "task_preferences": dict(self.task_preferences),
            "teammate_preferences": dict(self.teammate_preferences),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> TrueAttributes:
        return cls(
            hard_skills={k: int(v) for k, v in data["hard_skills"].items()},
            soft_skills={k: int(v) for k, v in data["soft_skills"].items()},
            task_preferences={k: int(v) for k, v in data["task_preferences"].items()},
            teammate_preferences={k: int(v) for k, v in data["teammate_preferences"].items()},
        )


@dataclass(frozen=True, slots=True)
class TSO:
    """Task scheduling option: a team and the interval it works on the task."""

    team: frozenset[str]
    interval: Interval

    def __post_init__(self) -> None:
        if not self.team:
            raise ValueError("TSO team must be nonempty")

    @property
    def alpha(self) -> int:
        return self.interval.alpha

    @property
    def beta(self) -> int:
        return self.interval.beta

    def to_dict(self) -> dict:
        return {"team": sorted(self.team), "interval": self.interval.to_dict()}

    @classmethod
    def from_dict(cls, data: Mapping) -> TSO:
        return cls(frozenset(data["team"]), Interval.from_dict(data["interval"]))


class Schedule(Mapping[str, TSO]):
    """Immutable map task id -> TSO. Insertion order is preserved and significant."""

    __slots__ = ("_assignments",)

    def __init__(self, assignments: Mapping[str, TSO] | Iterable[tuple[str, TSO]] = ()) -> None:
        self._assignments: dict[str, TSO] = dict(assignments)

    def __getitem__(self, task_id: str) -> TSO:
        return self._assignments[task_id]

    def __iter__(self) -> Iterator[str]:
        return iter(self._assignments)

    def __len__(self) -> int:
        return len(self._assignments)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Schedule):
            return list(self._assignments.items()) == list(other._assignments.items())
        return NotImplemented

    def __hash__(self) -> int:
        return hash(tuple(self._assignments.items()))

    def __repr__(self) -> str:
        body = ", ".join(
            f"{t}: {sorted(a.team)}@[{a.alpha},{a.beta})" for t, a in self._assignments.items()
        )
        return f"Schedule({{{body}}})"

    def with_assignment(self, task_id: str, tso: TSO) -> Schedule:
        if task_id in self._assignments:
            raise ValueError(f"task {task_id!r} is already scheduled")
        new = dict(self._assignments)
        new[task_id] = tso
        return Schedule(new)

    def without(self, task_ids: Iterable[str]) -> Schedule:
        drop = set(task_ids)
        return Schedule((t, a) for t, a in self._assignments.items() if t not in drop)

    def worker_entries(
        self, worker_id: str, tasks: Mapping[str, TaskSpec]
    ) -> list[CalendarEntry]:
        return [
            CalendarEntry(t, a.interval, tasks[t].timing, tasks[t].workload_rate)
            for t, a in self._assignments.items()
            if worker_id in a.team
        ]

    def to_dict(self) -> dict:
        return {"assignments": {t: a.to_dict() for t, a in self._assignments.items()}}

    @classmethod
    def from_dict(cls, data: Mapping) -> Schedule:
        return cls((t, TSO.from_dict(a)) for t, a in data.get("assignments", {}).items())


def calendars_from_schedule(
    workers: Iterable[WorkerState], schedule: Schedule, tasks: Mapping[str, TaskSpec]
) -> list[WorkerState]:
    """Materialize each worker's calendar view from a schedule."""
    out = []
    for w in workers:
        cal = CalendarView(tuple(schedule.worker_entries(w.id, tasks)))
        out.append(
            WorkerState(w.id, w.role, w.seniority, w.salary, w.work_capacity, cal, w.history)
        )
    return out


def task_order_key(task: TaskSpec) -> tuple:
    """Higher priority first, then earlier arrival, then id."""
    return (-task.priority, task.arrival_time, task.id)
