"""Multi-path conditional planning with K-best pruning.

Tasks are placed one at a time in priority order. Every retained partial
schedule (a leaf) branches once per feasible (team, earliest interval) option
for the current task; after each task the leaves are rescored and only the
best ``beam_width`` survive.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from staffsim.calendar import (
    CAPACITY_EPS,
    DEFAULT_HORIZON,
    Interval,
    Timing,
    available_steps,
    first_run,
)
from staffsim.criteria import EvaluationContext, WeightVector
from staffsim.domain import (
    DEFAULT_MAX_PRIORITY,
    TSO,
    Schedule,
    TaskSpec,
    WorkerState,
    task_order_key,
)
from staffsim.profiling import ProfileView

log = logging.getLogger(__name__)

DEFAULT_BEAM_WIDTH = 3
DEFAULT_TEAM_CAP = 10_000

QueryHandler = Callable[[Sequence[tuple[str, str]]], None]


class TeamEnumerationError(RuntimeError):
    """Too many candidate teams for one task."""


class ViolationKind(str, Enum):
    DURATION = "duration"
    DEADLINE = "deadline"
    REQUIREMENTS = "requirements"
    WORKLOAD = "workload"
    FULLTIME_OVERLAP = "fulltime_overlap"
    TEAM_CONSTRAINT = "team_constraint"


HARD_KINDS = frozenset(ViolationKind) - {ViolationKind.DEADLINE}


@dataclass(frozen=True, slots=True)
class Violation:
    kind: ViolationKind
    task_id: str
    detail: str = ""


@dataclass(frozen=True, slots=True)
class PlanLeaf:
    schedule: Schedule
    score: float
    birth_order: int


def enumerate_teams(
    task: TaskSpec, workers: Iterable[WorkerState], cap: int = DEFAULT_TEAM_CAP
) -> list[frozenset[str]]:
    """All teams meeting the role counts and team constraints, in lexicographic order."""
    by_role: dict[str, list[str]] = {}
    for w in sorted(workers, key=lambda w: w.id):
        by_role.setdefault(w.role, []).append(w.id)

    per_role: list[list[tuple[str, ...]]] = []
    total = 1
    for role in sorted(task.required_roles):
        count = task.required_roles[role]
        pool = [w for w in by_role.get(role, []) if w not in task.must_exclude]
        forced = {w for w in pool if w in task.must_include}
        if len(pool) < count or len(forced) > count:
            return []
        total *= math.comb(len(pool) - len(forced), count - len(forced))
        if total > cap:
            raise TeamEnumerationError(
                f"task {task.id}: more than {cap} candidate teams"
            )
        per_role.append([c for c in itertools.combinations(pool, count) if forced <= set(c)])

    return [frozenset(itertools.chain.from_iterable(combo)) for combo in itertools.product(*per_role)]


class _AvailabilityCache:
    """Per-worker availability masks for one task against one overlay."""

    def __init__(
        self,
        task: TaskSpec,
        workers: Mapping[str, WorkerState],
        overlay: Schedule,
        tasks: Mapping[str, TaskSpec],
        start: int,
        horizon: int,
    ) -> None:
        self.task = task
        self.workers = workers
        self.overlay = overlay
        self.tasks = tasks
        self.start = start
        self.horizon = horizon
        self._masks: dict[str, np.ndarray] = {}

    def mask(self, worker_id: str) -> np.ndarray:
        m = self._masks.get(worker_id)
        if m is None:
            w = self.workers[worker_id]
            cal = w.calendar.extended(self.overlay.worker_entries(worker_id, self.tasks))
            m = available_steps(
                cal,
                w.work_capacity,
                self.task.workload_rate,
                self.task.full_time,
                self.start,
                self.horizon,
            )
            self._masks[worker_id] = m
        return m

    def earliest(self, team: Iterable[str]) -> int | None:
        if self.horizon - self.start < self.task.duration:
            return None
        combined = np.ones(self.horizon - self.start, dtype=bool)
        for w in team:
            combined &= self.mask(w)
        idx = first_run(combined, self.task.duration)
        return None if idx is None else self.start + idx


def feasible_tsos(
    task: TaskSpec,
    workers: Iterable[WorkerState],
    overlay: Schedule,
    tasks: Mapping[str, TaskSpec],
    now: int,
    horizon: int,
    team_cap: int = DEFAULT_TEAM_CAP,
    teams: Sequence[frozenset[str]] | None = None,
) -> list[TSO]:
    """Earliest feasible interval for every valid team, given ``overlay`` on top of base calendars.

    ``horizon`` is the absolute step by which the interval must end. Teams with
    no feasible start are omitted. Results are ordered by start, then team order.
    """
    workers = list(workers)
    if teams is None:
        teams = enumerate_teams(task, workers, team_cap)
    if not teams:
        return []
    by_id = {w.id: w for w in workers}
    cache = _AvailabilityCache(task, by_id, overlay, tasks, max(now, 0), horizon)
    found = []
    for order, team in enumerate(teams):
        alpha = cache.earliest(sorted(team))
        if alpha is not None:
            found.append((alpha, order, TSO(team, Interval(alpha, alpha + task.duration))))
    found.sort(key=lambda x: (x[0], x[1]))
    return [tso for _, _, tso in found]


@dataclass
class Scheduler:
    """Configured planner. ``planning_horizon`` is relative to the current step."""

    beam_width: int = DEFAULT_BEAM_WIDTH
    planning_horizon: int = DEFAULT_HORIZON
    team_cap: int = DEFAULT_TEAM_CAP
    weights: WeightVector = field(default_factory=WeightVector)
    max_priority: int = DEFAULT_MAX_PRIORITY

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.planning_horizon < 1:
            raise ValueError("planning_horizon must be >= 1")

    def context(
        self,
        pending: Iterable[TaskSpec],
        workers: Iterable[WorkerState],
        s_prev: Schedule,
        task_index: Mapping[str, TaskSpec],
        profiles: ProfileView,
    ) -> EvaluationContext:
        universe = {t: task_index[t] for t in s_prev}
        for task in pending:
            universe[task.id] = task
        return EvaluationContext(
            tasks=universe,
            workers={w.id: w for w in workers},
            profiles=profiles,
            weights=self.weights,
            max_priority=self.max_priority,
            horizon=self.planning_horizon,
        )

    def schedule(
        self,
        pending: Iterable[TaskSpec],
        workers: Iterable[WorkerState],
        s_prev: Schedule,
        profiles: ProfileView,
        now: int,
        task_index: Mapping[str, TaskSpec] | None = None,
        query_handler: QueryHandler | None = None,
        beam_width: int | None = None,
    ) -> list[PlanLeaf]:
        """Return up to ``beam_width`` schedules extending ``s_prev``, best first."""
        k_best = self.beam_width if beam_width is None else beam_width
        if k_best < 1:
            raise ValueError("beam_width must be >= 1")
        workers = sorted(workers, key=lambda w: w.id)
        ordered = sorted(pending, key=task_order_key)
        index = dict(task_index or {})
        for t in ordered:
            index[t.id] = t
        ctx = self.context(ordered, workers, s_prev, index, profiles)
        horizon = now + self.planning_horizon

        births = itertools.count()
        root_score, _ = ctx.score(s_prev)
        leaves = [PlanLeaf(s_prev, root_score, next(births))]
        for task in ordered:
            if task.id in s_prev:
                continue
            teams = enumerate_teams(task, workers, self.team_cap)
            candidates: list[tuple[Schedule, int]] = []
            for leaf in leaves:
                tsos = feasible_tsos(task, workers, leaf.schedule, index, now, horizon, teams=teams)
                if not tsos:
                    candidates.append((leaf.schedule, leaf.birth_order))
                    continue
                for tso in tsos:
                    candidates.append((leaf.schedule.with_assignment(task.id, tso), next(births)))
            leaves = self._prune(candidates, ctx, k_best, query_handler)
        return leaves

    def _prune(
        self,
        candidates: list[tuple[Schedule, int]],
        ctx: EvaluationContext,
        k_best: int,
        query_handler: QueryHandler | None,
    ) -> list[PlanLeaf]:
        scored = [(ctx.score(s), s, b) for s, b in candidates]
        if query_handler is not None:
            queries = list(dict.fromkeys(q for (_, qs), _, _ in scored for q in qs))
            if queries:
                query_handler(queries)
                scored = [(ctx.score(s), s, b) for s, b in candidates]
        leaves = [PlanLeaf(s, v, b) for (v, _), s, b in scored]
        leaves.sort(key=lambda leaf: (-leaf.score, leaf.birth_order))
        return leaves[:k_best]


def schedule(
    pending: Iterable[TaskSpec],
    workers: Iterable[WorkerState],
    s_prev: Schedule,
    beam_width: int,
    weights: WeightVector,
    profiles: ProfileView,
    now: int,
    task_index: Mapping[str, TaskSpec] | None = None,
    planning_horizon: int = DEFAULT_HORIZON,
    max_priority: int = DEFAULT_MAX_PRIORITY,
    query_handler: QueryHandler | None = None,
) -> list[Schedule]:
    planner = Scheduler(beam_width, planning_horizon, weights=weights, max_priority=max_priority)
    leaves = planner.schedule(pending, workers, s_prev, profiles, now, task_index, query_handler)
    return [leaf.schedule for leaf in leaves]


def check_feasibility(
    s: Schedule, tasks: Mapping[str, TaskSpec], workers: Iterable[WorkerState]
) -> list[Violation]:
    """Exhaustive per-step, per-worker check of a schedule against all hard constraints.

    Base calendar entries for tasks that are not in ``s`` count toward workload
    and full-time exclusivity.
    """
    by_id = {w.id: w for w in workers}
    out: list[Violation] = []

    for t, a in s.items():
        task = tasks[t]
        if a.beta != a.alpha + task.duration:
            out.append(Violation(ViolationKind.DURATION, t, f"[{a.alpha},{a.beta}) vs duration {task.duration}"))
        if task.deadline is not None and a.beta > task.deadline:
            out.append(Violation(ViolationKind.DEADLINE, t, f"ends {a.beta} after deadline {task.deadline}"))
        missing = [w for w in a.team if w not in by_id]
        counts: dict[str, int] = {}
        for w in a.team:
            if w in by_id:
                counts[by_id[w].role] = counts.get(by_id[w].role, 0) + 1
        if missing or counts != dict(task.required_roles):
            out.append(
                Violation(ViolationKind.REQUIREMENTS, t, f"roles {sorted(counts.items())}, unknown {sorted(missing)}")
            )
        excluded = a.team & task.must_exclude
        absent = {
            w for w in task.must_include - a.team
            if w in by_id and by_id[w].role in task.required_roles
        }
        if excluded or absent:
            out.append(
                Violation(ViolationKind.TEAM_CONSTRAINT, t, f"excluded {sorted(excluded)}, missing {sorted(absent)}")
            )

    for wid in sorted(by_id):
        worker = by_id[wid]
        items = [
            (e.task_id, e.interval.alpha, e.interval.beta, e.workload_rate, e.timing is Timing.FULL_TIME)
            for e in worker.calendar.entries
            if e.task_id not in s
        ]
        items += [
            (t, a.alpha, a.beta, tasks[t].workload_rate, tasks[t].full_time)
            for t, a in s.items()
            if wid in a.team
        ]
        if not items:
            continue
        reported: set[tuple[ViolationKind, str]] = set()
        for h in range(min(i[1] for i in items), max(i[2] for i in items)):
            active = [i for i in items if i[1] <= h < i[2]]
            load = sum(i[3] for i in active)
            if load > worker.work_capacity + CAPACITY_EPS:
                culprit = next((i[0] for i in reversed(active) if i[0] in s), active[-1][0])
                if (ViolationKind.WORKLOAD, culprit) not in reported:
                    reported.add((ViolationKind.WORKLOAD, culprit))
                    out.append(Violation(ViolationKind.WORKLOAD, culprit, f"{wid} load {load:.3f} at step {h}"))
            full = [i[0] for i in active if i[4]]
            if len(full) > 1:
                culprit = next((t for t in reversed(full) if t in s), full[-1])
                if (ViolationKind.FULLTIME_OVERLAP, culprit) not in reported:
                    reported.add((ViolationKind.FULLTIME_OVERLAP, culprit))
                    out.append(
                        Violation(ViolationKind.FULLTIME_OVERLAP, culprit, f"{wid} has {sorted(full)} at step {h}")
                    )
    return out


def hard_violations(violations: Iterable[Violation]) -> list[Violation]:
    return [v for v in violations if v.kind in HARD_KINDS]
