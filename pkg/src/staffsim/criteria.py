"""Staffing objectives evaluated on candidate schedules.

Every criterion returns a value in [0, 1] where higher is better; objectives
that are naturally minimized (waiting time, cost, workload imbalance) are
inverted here.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from itertools import combinations, permutations
from pathlib import Path

from staffsim.domain import DEFAULT_MAX_PRIORITY, Schedule, TaskSpec, WorkerState
from staffsim.profiling import AttributeKind, ProfileView

CRITERIA = range(1, 10)
NEUTRAL = 0.5
BALANCE_EPS = 1e-9


@dataclass(frozen=True, slots=True)
class CriterionScore:
    id: int
    value: float
    queries_raised: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"criterion {self.id} value {self.value} outside [0, 1]")
        if self.queries_raised and self.id != 8:
            raise ValueError("only the hard-skill criterion raises queries")


@dataclass(frozen=True)
class WeightVector:
    c: Mapping[int, float] = field(default_factory=lambda: {i: 1.0 for i in CRITERIA})

    def __post_init__(self) -> None:
        unknown = set(self.c) - set(CRITERIA)
        if unknown:
            raise ValueError(f"unknown criterion ids {sorted(unknown)}")
        if not any(v != 0 for v in self.c.values()):
            raise ValueError("degenerate weight vector")

    @property
    def active(self) -> list[int]:
        return [i for i in sorted(self.c) if self.c[i] != 0]

    def scaled(self, factor: float) -> WeightVector:
        return WeightVector({i: v * factor for i, v in self.c.items()})

    def to_dict(self) -> dict[str, float]:
        return {str(i): self.c[i] for i in sorted(self.c)}

    @classmethod
    def from_dict(cls, data: Mapping) -> WeightVector:
        return cls({int(k): float(v) for k, v in data.items()})

    @classmethod
    def from_file(cls, path: str | Path) -> WeightVector:
        return cls.from_dict(json.loads(Path(path).read_text()))


def _clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def _mean(values: Iterable[float], empty: float) -> float:
    total = 0.0
    n = 0
    for v in values:
        total += v
        n += 1
    return total / n if n else empty


def eval_avg_priority(
    s: Schedule, tasks: Mapping[str, TaskSpec], max_priority: int = DEFAULT_MAX_PRIORITY
) -> CriterionScore:
    if not s:
        return CriterionScore(1, 0.0)
    mean = _mean((tasks[t].priority for t in s), 0.0)
    return CriterionScore(1, _clamp01(mean / max_priority))


def eval_waiting(s: Schedule, tasks: Mapping[str, TaskSpec], horizon: int) -> CriterionScore:
    """One minus the priority-weighted waiting time, normalized by the horizon."""
    if not s:
        return CriterionScore(2, 1.0)
    num = 0.0
    den = 0.0
    for t, a in s.items():
        task = tasks[t]
        num += task.priority * (a.alpha - task.arrival_time)
        den += task.priority * horizon
    return CriterionScore(2, 1.0 - _clamp01(num / den))


def eval_task_count(s: Schedule, tasks: Mapping[str, TaskSpec]) -> CriterionScore:
    if not tasks:
        return CriterionScore(3, 0.0)
    assigned = sum(1 for t in s if t in tasks)
    return CriterionScore(3, assigned / len(tasks))


def eval_cost(
    s: Schedule, tasks: Mapping[str, TaskSpec], workers: Mapping[str, WorkerState]
) -> CriterionScore:
    if not s:
        return CriterionScore(4, 1.0)
    cost = 0.0
    for t, a in s.items():
        duration = tasks[t].duration
        for w in sorted(a.team):
            cost += workers[w].salary * duration
    top = max(w.salary for w in workers.values())
    ref = sum(task.duration * task.team_size * top for task in tasks.values())
    if ref <= 0:
        return CriterionScore(4, 1.0)
    return CriterionScore(4, 1.0 - _clamp01(cost / ref))


def active_times(s: Schedule, tasks: Mapping[str, TaskSpec], workers: Iterable[str]) -> dict[str, int]:
    active = {w: 0 for w in workers}
    for t, a in s.items():
        for w in a.team:
            if w in active:
                active[w] += tasks[t].duration
    return active


def eval_balance(
    s: Schedule, tasks: Mapping[str, TaskSpec], workers: Mapping[str, WorkerState]
) -> CriterionScore:
    """One minus the coefficient of variation of workers' active times."""
    active = list(active_times(s, tasks, sorted(workers)).values())
    if not active or not any(active):
        return CriterionScore(5, 1.0)
    mean = sum(active) / len(active)
    std = math.sqrt(sum((x - mean) ** 2 for x in active) / len(active))
    return CriterionScore(5, 1.0 - _clamp01(std / (mean + BALANCE_EPS)))


def soft_vector(worker: str, profiles: ProfileView) -> list[float]:
    return [
        profiles.query_or_default(worker, AttributeKind.SOFT_SKILL, name)[0]
        for name in profiles.soft_skill_names
    ]


def cosine_similarity(a: list[float], b: list[float]) -> float:
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return min(max(sum(x * y for x, y in zip(a, b)) / (na * nb), -1.0), 1.0)


def diversity_pair_value(a: list[float], b: list[float]) -> float:
    return (1.0 - cosine_similarity(a, b)) / 2.0


def team_diversity(team: Iterable[str], profiles: ProfileView) -> float:
    members = sorted(team)
    if len(members) < 2:
        return NEUTRAL
    vectors = {w: soft_vector(w, profiles) for w in members}
    return _mean((diversity_pair_value(vectors[a], vectors[b]) for a, b in combinations(members, 2)), NEUTRAL)


def eval_soft_skill_diversity(s: Schedule, profiles: ProfileView) -> CriterionScore:
    return CriterionScore(6, _mean((team_diversity(a.team, profiles) for a in s.values()), NEUTRAL))


def team_compatibility(team: Iterable[str], profiles: ProfileView) -> float:
    members = sorted(team)
    if len(members) < 2:
        return NEUTRAL
    return _mean(
        (
            profiles.query_or_default(o, AttributeKind.TEAMMATE_PREF, w)[0]
            for o, w in permutations(members, 2)
        ),
        NEUTRAL,
    )


def eval_teammate_compat(s: Schedule, profiles: ProfileView) -> CriterionScore:
    return CriterionScore(7, _mean((team_compatibility(a.team, profiles) for a in s.values()), NEUTRAL))


def skill_match(
    task: TaskSpec,
    worker: WorkerState,
    profiles: ProfileView,
    queries: list[tuple[str, str]] | None = None,
) -> float | None:
    """Mean unit skill of ``worker`` over the task's skills for its role; None if there are none."""
    skills = sorted(task.skills_for(worker.role))
    if not skills:
        return None
    total = 0.0
    for skill in skills:
        value, known = profiles.query_or_default(worker.id, AttributeKind.HARD_SKILL, skill)
        if not known and queries is not None:
            queries.append((worker.id, skill))
        total += value
    return total / len(skills)


def eval_hard_skill_match(
    s: Schedule,
    tasks: Mapping[str, TaskSpec],
    workers: Mapping[str, WorkerState],
    profiles: ProfileView,
) -> CriterionScore:
    raised: list[tuple[str, str]] = []
    values = []
    for t, a in s.items():
        for w in sorted(a.team):
            v = skill_match(tasks[t], workers[w], profiles, raised)
            if v is not None:
                values.append(v)
    queries = tuple(dict.fromkeys(raised))
    return CriterionScore(8, _mean(values, NEUTRAL), queries)


def preference_fit(task: TaskSpec, worker: str, profiles: ProfileView) -> float | None:
    topics = sorted(task.topics)
    if not topics:
        return None
    return _mean(
        (profiles.query_or_default(worker, AttributeKind.TASK_PREF, p)[0] for p in topics), NEUTRAL
    )


def eval_task_pref_fit(
    s: Schedule, tasks: Mapping[str, TaskSpec], profiles: ProfileView
) -> CriterionScore:
    values = []
    for t, a in s.items():
        for w in sorted(a.team):
            v = preference_fit(tasks[t], w, profiles)
            if v is not None:
                values.append(v)
    return CriterionScore(9, _mean(values, NEUTRAL))


def aggregate_V(scores: Mapping[int, float], weights: WeightVector) -> float:
    """Weighted average ``sum(c_i * u_i) / sum(|c_i|)`` over the nonzero weights."""
    active = weights.active
    if not active:
        raise ValueError("degenerate weight vector")
    num = 0.0
    den = 0.0
    for i in active:
        if i not in scores:
            raise KeyError(f"criterion {i} has a weight but no score")
        num += weights.c[i] * scores[i]
        den += abs(weights.c[i])
    return num / den


@dataclass
class EvaluationContext:
    """Everything the criteria need besides the schedule itself.

    ``tasks`` is the task universe T used for counts and cost normalization:
    the pending batch plus every task already in the schedule.
    """

    tasks: Mapping[str, TaskSpec]
    workers: Mapping[str, WorkerState]
    profiles: ProfileView
    weights: WeightVector = field(default_factory=WeightVector)
    max_priority: int = DEFAULT_MAX_PRIORITY
    horizon: int = 200

    def evaluate(self, s: Schedule, ids: Iterable[int] = CRITERIA) -> dict[int, CriterionScore]:
        out = {}
        for i in ids:
            if i == 1:
                out[i] = eval_avg_priority(s, self.tasks, self.max_priority)
            elif i == 2:
                out[i] = eval_waiting(s, self.tasks, self.horizon)
            elif i == 3:
                out[i] = eval_task_count(s, self.tasks)
            elif i == 4:
                out[i] = eval_cost(s, self.tasks, self.workers)
            elif i == 5:
                out[i] = eval_balance(s, self.tasks, self.workers)
            elif i == 6:
                out[i] = eval_soft_skill_diversity(s, self.profiles)
            elif i == 7:
                out[i] = eval_teammate_compat(s, self.profiles)
            elif i == 8:
                out[i] = eval_hard_skill_match(s, self.tasks, self.workers, self.profiles)
            elif i == 9:
                out[i] = eval_task_pref_fit(s, self.tasks, self.profiles)
            else:
                raise ValueError(f"unknown criterion {i}")
        return out

    def score(self, s: Schedule) -> tuple[float, tuple[tuple[str, str], ...]]:
        """Aggregate value of ``s`` and any hard-skill queries raised while scoring it."""
        scores = self.evaluate(s, self.weights.active)
        queries = scores[8].queries_raised if 8 in scores else ()
        return aggregate_V({i: sc.value for i, sc in scores.items()}, self.weights), queries
