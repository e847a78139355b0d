"""Builders and brute-force oracles shared by the tests.

The oracles deliberately avoid the library's calendar, scheduler, and
rescheduler code: they recompute everything step by step from raw data.
"""

from __future__ import annotations

import itertools
import random
from collections.abc import Iterable, Mapping, Sequence

from staffsim.calendar import CalendarEntry, CalendarView, Interval, Timing
from staffsim.domain import TSO, Schedule, Seniority, TaskSpec, WorkerState
from staffsim.profiling import AttributeKind, default_unit
from staffsim.domain import level_to_unit

EPS = 1e-9


def make_task(
    tid: str,
    roles: Mapping[str, int],
    duration: int = 2,
    rate: float = 0.5,
    priority: int = 1,
    arrival: int = 0,
    full_time: bool = True,
    include: Iterable[str] = (),
    exclude: Iterable[str] = (),
    skills: Mapping[str, Iterable[str]] | None = None,
    topics: Iterable[str] = ("t0",),
    deadline: int | None = None,
) -> TaskSpec:
    return TaskSpec(
        id=tid,
        arrival_time=arrival,
        priority=priority,
        required_roles=dict(roles),
        duration=duration,
        workload=rate * duration,
        required_skills={r: frozenset(s) for r, s in (skills or {r: [f"{r}_s0"] for r in roles}).items()},
        topics=frozenset(topics),
        must_include=frozenset(include),
        must_exclude=frozenset(exclude),
        deadline=deadline,
        timing=Timing.FULL_TIME if full_time else Timing.PART_TIME,
    )


def make_worker(
    wid: str,
    role: str,
    salary: float = 10.0,
    capacity: float = 1.0,
    entries: Sequence[CalendarEntry] = (),
    seniority: Seniority = Seniority.JUNIOR,
) -> WorkerState:
    return WorkerState(wid, role, seniority, salary, capacity, CalendarView(tuple(entries)))


def entry(tid: str, alpha: int, beta: int, rate: float, full_time: bool = True) -> CalendarEntry:
    return CalendarEntry(tid, Interval(alpha, beta), Timing.FULL_TIME if full_time else Timing.PART_TIME, rate)


class DictProfiles:
    """Profile view backed by a plain dict of levels."""

    def __init__(self, soft_skill_names: Sequence[str], levels: Mapping[tuple[str, AttributeKind, str], int] | None = None):
        self.soft_skill_names = tuple(soft_skill_names)
        self.levels = dict(levels or {})

    def query_or_default(self, worker, kind, name, now=None):
        lvl = self.levels.get((worker, kind, name))
        if lvl is None:
            return default_unit(kind), False
        return level_to_unit(lvl, kind.scale), True


# ---------------------------------------------------------------- oracles


def commitments(
    s: Schedule, tasks: Mapping[str, TaskSpec], workers: Iterable[WorkerState]
) -> dict[str, list[tuple[str, int, int, float, bool]]]:
    """Per worker: (task, alpha, beta, rate, full_time) from the schedule plus base calendars."""
    out: dict[str, list] = {}
    for w in workers:
        rows = []
        for e in w.calendar.entries:
            if e.task_id not in s:
                rows.append((e.task_id, e.interval.alpha, e.interval.beta, e.workload_rate, e.timing is Timing.FULL_TIME))
        out[w.id] = rows
    for tid, a in s.items():
        t = tasks[tid]
        for w in a.team:
            out.setdefault(w, []).append((tid, a.alpha, a.beta, t.workload / t.duration, t.timing is Timing.FULL_TIME))
    return out


def brute_problems(s: Schedule, tasks: Mapping[str, TaskSpec], workers: Sequence[WorkerState]) -> list[str]:
    """Every hard-constraint breach found by scanning each worker at each step."""
    by_id = {w.id: w for w in workers}
    problems = []
    for tid, a in s.items():
        t = tasks[tid]
        if a.beta - a.alpha != t.duration:
            problems.append(f"duration {tid}")
        counts: dict[str, int] = {}
        for w in a.team:
            if w not in by_id:
                problems.append(f"unknown worker {w} in {tid}")
                continue
            counts[by_id[w].role] = counts.get(by_id[w].role, 0) + 1
        if counts != dict(t.required_roles):
            problems.append(f"requirements {tid}")
        for w in t.must_exclude:
            if w in a.team:
                problems.append(f"excluded {w} in {tid}")
        for w in t.must_include:
            if w in by_id and by_id[w].role in t.required_roles and w not in a.team:
                problems.append(f"missing {w} in {tid}")
    for wid, rows in commitments(s, tasks, workers).items():
        if not rows or wid not in by_id:
            continue
        cap = by_id[wid].work_capacity
        lo = min(r[1] for r in rows)
        hi = max(r[2] for r in rows)
        for h in range(lo, hi):
            active = [r for r in rows if r[1] <= h < r[2]]
            if sum(r[3] for r in active) > cap + EPS:
                problems.append(f"workload {wid}@{h}")
            if sum(1 for r in active if r[4]) > 1:
                problems.append(f"overlap {wid}@{h}")
    return problems


def brute_teams(task: TaskSpec, workers: Sequence[WorkerState]) -> list[frozenset[str]]:
    """All teams by filtering every subset of the right size."""
    ids = sorted(w.id for w in workers)
    role = {w.id: w.role for w in workers}
    size = sum(task.required_roles.values())
    out = []
    for combo in itertools.combinations(ids, size):
        counts: dict[str, int] = {}
        for w in combo:
            counts[role[w]] = counts.get(role[w], 0) + 1
        if counts != dict(task.required_roles):
            continue
        if set(combo) & task.must_exclude:
            continue
        if any(w not in combo for w in task.must_include if role.get(w) in task.required_roles):
            continue
        out.append(frozenset(combo))
    return out


def brute_earliest(
    task: TaskSpec,
    team: Iterable[str],
    s: Schedule,
    tasks: Mapping[str, TaskSpec],
    workers: Sequence[WorkerState],
    now: int,
    horizon: int,
) -> int | None:
    """Smallest alpha such that adding the task keeps every member feasible at every step."""
    rows = commitments(s, tasks, workers)
    cap = {w.id: w.work_capacity for w in workers}
    rate = task.workload / task.duration
    full = task.timing is Timing.FULL_TIME
    for alpha in range(now, horizon - task.duration + 1):
        ok = True
        for w in team:
            for h in range(alpha, alpha + task.duration):
                active = [r for r in rows.get(w, []) if r[1] <= h < r[2]]
                if sum(r[3] for r in active) + rate > cap[w] + EPS:
                    ok = False
                if full and any(r[4] for r in active):
                    ok = False
                if not ok:
                    break
            if not ok:
                break
        if ok:
            return alpha
    return None


def brute_tsos(
    task: TaskSpec,
    s: Schedule,
    tasks: Mapping[str, TaskSpec],
    workers: Sequence[WorkerState],
    now: int,
    horizon: int,
) -> list[TSO]:
    found = []
    for order, team in enumerate(brute_teams(task, workers)):
        alpha = brute_earliest(task, team, s, tasks, workers, now, horizon)
        if alpha is not None:
            found.append((alpha, order, TSO(team, Interval(alpha, alpha + task.duration))))
    found.sort(key=lambda x: (x[0], x[1]))
    return [t for _, _, t in found]


# ---------------------------------------------------------------- fuzzing


def random_instance(
    rng: random.Random,
    max_workers: int = 20,
    max_tasks: int = 10,
    roles: Sequence[str] = ("a", "b", "c"),
    calendars: bool = True,
    horizon: int = 40,
) -> tuple[list[TaskSpec], list[WorkerState], Schedule, dict[str, TaskSpec]]:
    """Random workers (with possibly busy calendars), pending tasks, and a feasible previous schedule."""
    n_workers = rng.randint(1, max_workers)
    workers = []
    for i in range(n_workers):
        wid = f"w{i:02d}"
        role = rng.choice(roles)
        cap = rng.choice([0.8, 1.0, 1.2])
        entries = []
        if calendars and rng.random() < 0.4:
            a = rng.randint(0, horizon // 2)
            b = a + rng.randint(1, 8)
            full = rng.random() < 0.5
            entries.append(entry(f"ext{i}", a, b, round(rng.uniform(0.1, 0.5), 2), full))
        workers.append(make_worker(wid, role, salary=rng.choice([10.0, 20.0, 35.0]), capacity=cap, entries=entries))

    def rand_task(tid: str) -> TaskSpec:
        k = rng.randint(1, 3)
        counts: dict[str, int] = {}
        for _ in range(k):
            r = rng.choice(roles)
            counts[r] = counts.get(r, 0) + 1
        full = rng.random() < 0.7
        rate = round(rng.uniform(0.3, 0.8) if full else rng.uniform(0.1, 0.4), 2)
        same_role = sorted(w.id for w in workers if w.role in counts)
        include = [rng.choice(same_role)] if same_role and rng.random() < 0.15 else []
        exclude = [w for w in same_role if w not in include and rng.random() < 0.1]
        return make_task(
            tid,
            counts,
            duration=rng.randint(1, 6),
            rate=rate,
            priority=rng.randint(1, 5),
            arrival=rng.randint(0, 3),
            full_time=full,
            include=include,
            exclude=exclude[:1],
            topics=[f"p{rng.randint(0, 3)}"],
        )

    n_tasks = rng.randint(0, max_tasks)
    pending = [rand_task(f"t{i:02d}") for i in range(n_tasks)]
    # Build a feasible previous schedule greedily from a few extra tasks.
    prev_tasks = [rand_task(f"s{i:02d}") for i in range(rng.randint(0, 3))]
    s_prev = Schedule()
    index: dict[str, TaskSpec] = {}
    for t in prev_tasks:
        index[t.id] = t
        options = brute_tsos(t, s_prev, index, workers, rng.randint(0, 3), horizon)
        if options:
            s_prev = s_prev.with_assignment(t.id, rng.choice(options))
        else:
            del index[t.id]
    return pending, workers, s_prev, index


def random_profiles(rng: random.Random, workers: Sequence[WorkerState], tasks: Iterable[TaskSpec], soft=("s1", "s2", "s3")) -> DictProfiles:
    """Profiles with a random mix of known and unknown attributes."""
    levels = {}
    for w in workers:
        for s in soft:
            if rng.random() < 0.7:
                levels[(w.id, AttributeKind.SOFT_SKILL, s)] = rng.randint(0, 6)
        for o in workers:
            if o.id != w.id and rng.random() < 0.5:
                levels[(w.id, AttributeKind.TEAMMATE_PREF, o.id)] = rng.randint(-2, 2)
        for t in tasks:
            for sk in t.skills_for(w.role):
                if rng.random() < 0.8:
                    levels[(w.id, AttributeKind.HARD_SKILL, sk)] = rng.randint(0, 6)
            for p in t.topics:
                if rng.random() < 0.6:
                    levels[(w.id, AttributeKind.TASK_PREF, p)] = rng.randint(-2, 2)
    return DictProfiles(soft, levels)
