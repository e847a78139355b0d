"""Interval arithmetic over worker calendars.

One timestep is one workday, so the daily workload bound is checked per step.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from staffsim.domain import TaskSpec

# Steps per workday. Only 1 is supported by the search below.
DAY_LENGTH = 1
DEFAULT_HORIZON = 200
CAPACITY_EPS = 1e-9


class Timing(str, Enum):
    FULL_TIME = "full_time"
    PART_TIME = "part_time"


@dataclass(frozen=True, slots=True)
class Interval:
    """Half-open integer interval ``[alpha, beta)``."""

    alpha: int
    beta: int

    def __post_init__(self) -> None:
        if self.alpha >= self.beta:
            raise ValueError(f"empty interval [{self.alpha}, {self.beta})")

    @property
    def length(self) -> int:
        return self.beta - self.alpha

    def overlaps(self, other: Interval) -> bool:
        return self.alpha < other.beta and other.alpha < self.beta

    def contains(self, step: int) -> bool:
        return self.alpha <= step < self.beta

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, data: dict) -> Interval:
        return cls(int(data["alpha"]), int(data["beta"]))


@dataclass(frozen=True, slots=True)
class CalendarEntry:
    task_id: str
    interval: Interval
    timing: Timing
    workload_rate: float

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "interval": self.interval.to_dict(),
            "timing": self.timing.value,
            "workload_rate": self.workload_rate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> CalendarEntry:
        return cls(
            task_id=str(data["task_id"]),
            interval=Interval.from_dict(data["interval"]),
            timing=Timing(data["timing"]),
            workload_rate=float(data["workload_rate"]),
        )


@dataclass(frozen=True, slots=True)
class CalendarView:
    """Immutable snapshot of a worker's ongoing and future commitments."""

    entries: tuple[CalendarEntry, ...] = ()

    def __post_init__(self) -> None:
        full = [e for e in self.entries if e.timing is Timing.FULL_TIME]
        for i, a in enumerate(full):
            for b in full[i + 1 :]:
                if a.interval.overlaps(b.interval):
                    raise ValueError(
                        f"full-time entries {a.task_id!r} and {b.task_id!r} overlap"
                    )

    def task_ids(self) -> set[str]:
        return {e.task_id for e in self.entries}

    def extended(self, extra: Iterable[CalendarEntry]) -> CalendarView:
        """Return a view with ``extra`` added; entries for known task ids are skipped."""
        known = self.task_ids()
        new = tuple(e for e in extra if e.task_id not in known)
        if not new:
            return self
        return CalendarView(self.entries + new)

    def without(self, task_ids: Iterable[str]) -> CalendarView:
        drop = set(task_ids)
        return CalendarView(tuple(e for e in self.entries if e.task_id not in drop))

    def to_dict(self) -> dict:
        return {"entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, data: dict) -> CalendarView:
        return cls(tuple(CalendarEntry.from_dict(e) for e in data.get("entries", [])))


def daily_workload(cal: CalendarView, day: int) -> float:
    return sum(e.workload_rate for e in cal.entries if e.interval.contains(day))


def fulltime_free(cal: CalendarView, interval: Interval) -> bool:
    return not any(
        e.timing is Timing.FULL_TIME and e.interval.overlaps(interval) for e in cal.entries
    )


def _load_profile(cal: CalendarView, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-step workload and full-time occupancy over ``[start, stop)``."""
    n = max(stop - start, 0)
    load = np.zeros(n)
    busy = np.zeros(n, dtype=bool)
    for e in cal.entries:
        lo = max(e.interval.alpha, start) - start
        hi = min(e.interval.beta, stop) - start
        if lo >= hi:
            continue
        load[lo:hi] += e.workload_rate
        if e.timing is Timing.FULL_TIME:
            busy[lo:hi] = True
    return load, busy


def available_steps(
    cal: CalendarView,
    capacity: float,
    rate: float,
    full_time: bool,
    start: int,
    stop: int,
) -> np.ndarray:
    """Boolean mask of steps in ``[start, stop)`` where the worker could take on the task."""
    load, busy = _load_profile(cal, start, stop)
    ok = load + rate <= capacity + CAPACITY_EPS
    if full_time:
        ok &= ~busy
    return ok


def first_run(mask: np.ndarray, length: int) -> int | None:
    """Index of the first run of ``length`` consecutive True values in ``mask``."""
    if length <= 0 or mask.size < length:
        return None
    run = 0
    for i, v in enumerate(mask):
        run = run + 1 if v else 0
        if run >= length:
            return i - length + 1
    return None


def earliest_team_start(
    cals: Sequence[CalendarView],
    task: TaskSpec,
    capacities: Sequence[float],
    start: int,
    horizon: int,
) -> int | None:
    """Smallest ``alpha`` in ``[start, horizon - duration]`` at which every member is free.

    ``horizon`` is an absolute timestep; the interval must end by it.
    """
    if len(cals) != len(capacities):
        raise ValueError("one capacity per calendar is required")
    if horizon - start < task.duration:
        return None
    rate = task.workload / task.duration
    full = task.timing is Timing.FULL_TIME
    mask = np.ones(horizon - start, dtype=bool)
    for cal, cap in zip(cals, capacities):
        mask &= available_steps(cal, cap, rate, full, start, horizon)
    idx = first_run(mask, task.duration)
    return None if idx is None else start + idx
