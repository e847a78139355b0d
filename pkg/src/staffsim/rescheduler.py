"""Rescheduling that cancels few, low-priority tasks to advance urgent pending ones.

For the most important pending task, look for a small set of not-yet-started,
lower-priority tasks sharing a required role whose cancellation would let it
start strictly earlier. Canceled tasks go back to the pending list and are
rescheduled afterwards. If nothing suitable is found within ``max_attempts``
tries, the task is simply scheduled on top of the current plan.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from staffsim.domain import TSO, Schedule, TaskSpec, WorkerState, task_order_key
from staffsim.profiling import ProfileView
from staffsim.scheduler import Scheduler, check_feasibility, feasible_tsos, hard_violations

log = logging.getLogger(__name__)

DEFAULT_MAX_ATTEMPTS = 50


@dataclass
class RescheduleResult:
    schedule: Schedule
    unscheduled: list[str] = field(default_factory=list)
    canceled: list[str] = field(default_factory=list)
    stripped: list[str] = field(default_factory=list)
    attempts: dict[str, int] = field(default_factory=dict)
    rounds: int = 0
    # (advanced task, tasks canceled for it), in the order they happened
    cancellations: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)


@dataclass
class RescheduleState:
    """Search state for one pending task."""

    s: Schedule
    pending: set[str]
    j: int = 0
    h: int = 0
    i: int = 1
    c_old: set[tuple[str, ...]] = field(default_factory=set)


def build_P_h(
    s: Schedule, t: TaskSpec, h: int, k: int, tasks: Mapping[str, TaskSpec]
) -> set[str]:
    """Scheduled tasks that could be canceled to free the window ``[h, h + duration)`` for ``t``."""
    lo, hi = h, h + t.duration
    roles = set(t.required_roles)
    out = set()
    for tid, a in s.items():
        other = tasks[tid]
        if (
            a.alpha >= k
            and a.alpha < hi
            and lo < a.beta
            and other.priority < t.priority
            and roles & set(other.required_roles)
        ):
            out.add(tid)
    return out


def can_schedule_in_place(
    t: TaskSpec,
    c: Iterable[str],
    s: Schedule,
    alpha_min: int,
    workers: Iterable[WorkerState],
    tasks: Mapping[str, TaskSpec],
    now: int,
    horizon: int,
) -> TSO | None:
    """Earliest option for ``t`` once ``c`` is removed, if it starts before ``alpha_min``."""
    c = list(c)
    if not c:
        return None
    tsos = feasible_tsos(t, workers, s.without(c), tasks, now, horizon)
    if tsos and tsos[0].alpha < alpha_min:
        return tsos[0]
    return None


def _cancellation_key(c: tuple[str, ...], tasks: Mapping[str, TaskSpec]) -> tuple:
    return (
        sum(tasks[t].priority for t in c),
        sum(len(tasks[t].required_roles) for t in c),
        c,
    )


def strip_problematic(
    s: Schedule, tasks: Mapping[str, TaskSpec], workers: list[WorkerState], now: int
) -> tuple[Schedule, list[str]]:
    """Drop assignments that make ``s`` infeasible, keeping started and important tasks first."""
    if not hard_violations(check_feasibility(s, tasks, workers)):
        return s, []
    order = sorted(s, key=lambda t: (s[t].alpha >= now, task_order_key(tasks[t])))
    kept = Schedule()
    stripped = []
    for tid in order:
        trial = kept.with_assignment(tid, s[tid])
        if hard_violations(check_feasibility(trial, tasks, workers)):
            stripped.append(tid)
        else:
            kept = trial
    return Schedule((t, a) for t, a in s.items() if t in kept), stripped


def reschedule(
    pending: Iterable[TaskSpec],
    workers: Iterable[WorkerState],
    s_prev: Schedule,
    profiles: ProfileView,
    now: int,
    task_index: Mapping[str, TaskSpec],
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    planner: Scheduler | None = None,
) -> RescheduleResult:
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    planner = planner or Scheduler()
    horizon = now + planner.planning_horizon
    tasks = dict(task_index)
    for t in pending:
        tasks[t.id] = t
    # The schedule is authoritative: base calendar entries for its tasks are dropped.
    scheduled_ids = set(s_prev)
    workers = sorted(
        (
            WorkerState(
                w.id, w.role, w.seniority, w.salary, w.work_capacity,
                w.calendar.without(scheduled_ids), w.history,
            )
            for w in workers
        ),
        key=lambda w: w.id,
    )

    s, stripped = strip_problematic(s_prev, tasks, workers, now)
    fresh = {t.id for t in pending if t.id not in s_prev}
    queue = fresh | set(stripped)
    result = RescheduleResult(s, stripped=stripped)
    bound = len(fresh) + len(s_prev)

    while queue:
        result.rounds += 1
        if result.rounds > bound:
            raise RuntimeError("rescheduling did not terminate within its recursion bound")
        t = tasks[min(queue, key=lambda tid: task_order_key(tasks[tid]))]
        s, canceled, attempts = _advance(t, s, workers, tasks, now, horizon, max_attempts)
        result.attempts[t.id] = attempts
        queue.discard(t.id)
        queue |= set(canceled)
        result.canceled.extend(canceled)
        if canceled:
            result.cancellations.append((t.id, tuple(canceled)))
        s = _place(t, s, workers, tasks, profiles, now, planner)
        if t.id not in s:
            result.unscheduled.append(t.id)

    result.schedule = s
    result.unscheduled = [t for t in result.unscheduled if t not in s]
    return result


def _advance(
    t: TaskSpec,
    s: Schedule,
    workers: list[WorkerState],
    tasks: Mapping[str, TaskSpec],
    now: int,
    horizon: int,
    max_attempts: int,
) -> tuple[Schedule, list[str], int]:
    """Search cancellation sets for ``t``; return the reduced schedule and what was canceled."""
    tsos = feasible_tsos(t, workers, s, tasks, now, horizon)
    alpha_min = min((x.alpha for x in tsos), default=horizon)
    windows = {h: build_P_h(s, t, h, now, tasks) for h in range(now, alpha_min)}
    largest = max((len(p) for p in windows.values()), default=0)
    if largest == 0:
        return s, [], 0

    state = RescheduleState(s, set(), h=now)
    while True:
        combos = {tuple(sorted(c)) for c in itertools.combinations(windows[state.h], state.i)}
        for c in sorted(combos - state.c_old, key=lambda c: _cancellation_key(c, tasks)):
            state.j += 1
            if can_schedule_in_place(t, c, s, alpha_min, workers, tasks, now, horizon):
                log.debug("task %s: canceling %s", t.id, c)
                return s.without(c), list(c), state.j
            if state.j >= max_attempts:
                return s, [], state.j
        state.h += 1
        state.c_old |= combos
        if state.h >= alpha_min:
            state.h = now
            state.c_old = set()
            state.i += 1
            if state.i > largest:
                return s, [], state.j


def _place(
    t: TaskSpec,
    s: Schedule,
    workers: list[WorkerState],
    tasks: Mapping[str, TaskSpec],
    profiles: ProfileView,
    now: int,
    planner: Scheduler,
) -> Schedule:
    leaves = planner.schedule([t], workers, s, profiles, now, tasks, beam_width=1)
    return leaves[0].schedule
