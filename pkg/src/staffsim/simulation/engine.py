"""Discrete-time closed loop: arrivals, batch staffing, completions, feedback, metrics."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from staffsim.criteria import WeightVector, skill_match, team_compatibility, team_diversity
from staffsim.domain import (
    HistoryItem,
    Schedule,
    TaskSpec,
    WorkerState,
    calendars_from_schedule,
    round_half_away,
)
from staffsim.profiling import (
    AttributeKind,
    ObservationRecord,
    ObserverWeights,
    ProfileStore,
    TruthView,
    accuracy_report,
)
from staffsim.scheduler import (
    Scheduler,
    check_feasibility,
    enumerate_teams,
    feasible_tsos,
    hard_violations,
)
from staffsim.simulation.environment import (
    BiasTable,
    Environment,
    bias_table_for,
    generate_task,
    stream,
)
from staffsim.simulation.feedback import (
    decide_acceptance,
    emit_peer_feedback,
    emit_performance_review,
    emit_self_evaluation,
    emit_task_proposal_feedback,
)

log = logging.getLogger(__name__)


class InvariantError(RuntimeError):
    """A confirmed schedule broke a hard constraint."""

METRIC_COLUMNS = (
    "step",
    "mae_hard",
    "mae_soft",
    "mae_task_pref",
    "mae_teammate_pref",
    "unknown",
    "correct",
    "incorrect",
    "questions",
    "mean_optimality",
    "tasks_scheduled",
)
OPTIMALITY_COLUMNS = ("step", "task_id", "outcome", "best_outcome", "optimality", "alternatives")


def task_outcome(task: TaskSpec, team: Iterable[str], workers: Mapping[str, WorkerState], truth: TruthView) -> float:
    """Mean of soft-skill diversity, teammate compatibility, and hard-skill match under true attributes."""
    team = sorted(team)
    matches = [m for w in team if (m := skill_match(task, workers[w], truth)) is not None]
    skill = sum(matches) / len(matches) if matches else 0.5
    return (team_diversity(team, truth) + team_compatibility(team, truth) + skill) / 3.0


def task_outcome_oracle(
    task: TaskSpec,
    team: Iterable[str],
    alternatives: Sequence[Iterable[str]],
    workers: Mapping[str, WorkerState],
    truth: TruthView,
) -> tuple[float, float]:
    """Outcome of ``team`` and its ratio to the best outcome among ``alternatives``."""
    outcome, _, optimality = _oracle(task, team, alternatives, workers, truth)
    return outcome, optimality


def _oracle(
    task: TaskSpec,
    team: Iterable[str],
    alternatives: Sequence[Iterable[str]],
    workers: Mapping[str, WorkerState],
    truth: TruthView,
) -> tuple[float, float, float]:
    outcome = task_outcome(task, team, workers, truth)
    best = max([outcome] + [task_outcome(task, alt, workers, truth) for alt in alternatives])
    optimality = 1.0 if best <= 0 else outcome / best
    return outcome, best, optimality


@dataclass
class OptimalitySample:
    step: int
    task_id: str
    outcome: float
    best_outcome: float
    optimality: float
    alternatives: int


@dataclass
class MetricRow:
    step: int
    mae_hard: float
    mae_soft: float
    mae_task_pref: float
    mae_teammate_pref: float
    unknown: int
    correct: int
    incorrect: int
    questions: int
    mean_optimality: float | None
    tasks_scheduled: int

    def as_csv_row(self) -> list[str]:
        def fmt(v: object) -> str:
            if v is None:
                return ""
            return repr(v) if isinstance(v, float) else str(v)

        return [fmt(getattr(self, c)) for c in METRIC_COLUMNS]


@dataclass
class SimState:
    env: Environment
    seed: int
    planner: Scheduler
    store: ProfileStore
    bias: BiasTable
    rngs: dict[str, np.random.Generator]
    clock: int = 0
    pending: list[TaskSpec] = field(default_factory=list)
    tasks: dict[str, TaskSpec] = field(default_factory=dict)
    schedule: Schedule = field(default_factory=Schedule)
    workers: dict[str, WorkerState] = field(default_factory=dict)
    asked: set[tuple[str, str]] = field(default_factory=set)
    reviewed: set[str] = field(default_factory=set)
    completed: list[str] = field(default_factory=list)
    metrics: list[MetricRow] = field(default_factory=list)
    optimality: list[OptimalitySample] = field(default_factory=list)
    outcomes: dict[str, float] = field(default_factory=dict)
    task_counter: int = 0
    questions_this_step: int = 0
    event_counts: dict[str, int] = field(default_factory=dict)
    verify: bool = True

    @property
    def truth_view(self) -> TruthView:
        return TruthView(self.env.truth, self.env.catalog.soft_skills)

    def worker_list(self) -> list[WorkerState]:
        return [self.workers[w] for w in sorted(self.workers)]


def init_state(env: Environment, seed: int | None = None, verify: bool = True) -> SimState:
    cfg = env.config
    seed = cfg.seed if seed is None else seed
    weights = ObserverWeights.from_dict(cfg.observer_weights)
    planner = Scheduler(
        beam_width=cfg.beam_width,
        planning_horizon=cfg.planning_horizon,
        team_cap=cfg.team_enumeration_cap,
        weights=WeightVector.from_dict(cfg.weights),
        max_priority=cfg.max_priority,
    )
    store = ProfileStore(env.catalog.soft_skills, cfg.gamma, weights)
    rngs = {name: stream(seed, name) for name in ("arrivals", "content", "noise", "acceptance", "mask", "peer", "reconstruction")}
    return SimState(
        env=env,
        seed=seed,
        planner=planner,
        store=store,
        bias=bias_table_for(env),
        rngs=rngs,
        workers={w.id: w for w in env.workers},
        verify=verify,
    )


def _ingest(state: SimState, observations: Iterable[ObservationRecord]) -> None:
    sigma_r = state.env.config.sigma_r
    for obs in observations:
        if sigma_r > 0:
            lo, hi = obs.kind.scale.bounds
            noisy = obs.level + sigma_r * float(state.rngs["reconstruction"].standard_normal())
            obs = ObservationRecord(
                obs.target, obs.observer, obs.kind, obs.name,
                min(max(round_half_away(noisy), lo), hi),
                obs.timestamp, obs.source, obs.provenance,
            )
        state.store.ingest(obs, state.clock)
        state.event_counts[obs.source.value] = state.event_counts.get(obs.source.value, 0) + 1


def answer_queries(state: SimState, queries: Sequence[tuple[str, str]]) -> None:
    """Ask workers about unknown hard skills; each (worker, skill) is asked at most once per run."""
    cfg = state.env.config
    for worker, skill in queries:
        if (worker, skill) in state.asked:
            continue
        state.asked.add((worker, skill))
        state.questions_this_step += 1
        obs = emit_self_evaluation(
            worker, skill, state.clock, state.env.truth, state.bias, state.rngs["noise"], cfg.sigma_v
        )
        _ingest(state, [obs])


def _complete_tasks(state: SimState) -> None:
    cfg = state.env.config
    done = [t for t, a in state.schedule.items() if a.beta == state.clock]
    for tid in done:
        if tid in state.reviewed:
            raise RuntimeError(f"task {tid} completed twice")
        state.reviewed.add(tid)
        task = state.tasks[tid]
        team = sorted(state.schedule[tid].team)
        _ingest(
            state,
            emit_performance_review(
                task, team, state.clock, state.workers, state.env.truth, state.bias,
                state.rngs["noise"], cfg.sigma_v,
            ),
        )
        _ingest(
            state,
            emit_peer_feedback(
                task, team, state.clock, state.env.truth, state.bias,
                state.rngs["noise"], state.rngs["peer"], cfg.sigma_v,
            ),
        )
        outcome = state.outcomes.get(tid, 0.0)
        for w in team:
            old = state.workers[w]
            state.workers[w] = WorkerState(
                old.id, old.role, old.seniority, old.salary, old.work_capacity,
                old.calendar, old.history + (HistoryItem(tid, outcome),),
            )
        state.completed.append(tid)
    if done:
        state.schedule = state.schedule.without(done)


def _arrivals(state: SimState) -> None:
    n = int(state.rngs["arrivals"].poisson(state.env.config.arrival_rate))
    for _ in range(n):
        state.task_counter += 1
        tid = f"t{state.task_counter:05d}"
        task = generate_task(state.env, state.rngs["content"], tid, state.clock)
        state.tasks[tid] = task
        state.pending.append(task)


def _staff(state: SimState) -> list[str]:
    cfg = state.env.config
    if len(state.pending) < cfg.batch_trigger:
        return []
    s_prev = state.schedule
    workers = state.worker_list()
    leaves = state.planner.schedule(
        state.pending,
        workers,
        s_prev,
        state.store,
        state.clock,
        task_index=state.tasks,
        query_handler=lambda qs: answer_queries(state, qs),
    )
    top = leaves[0].schedule
    new = [t for t in top if t not in s_prev]
    if state.verify:
        broken = hard_violations(check_feasibility(top, state.tasks, workers))
        if broken:
            raise InvariantError(f"step {state.clock}: confirmed schedule violates {broken}")
    state.schedule = top
    state.pending = [t for t in state.pending if t.id not in top]

    truth = state.truth_view
    horizon = state.clock + cfg.planning_horizon
    for tid in new:
        task = state.tasks[tid]
        team = top[tid].team
        teams = enumerate_teams(task, workers, cfg.team_enumeration_cap)
        options = feasible_tsos(task, workers, top.without([tid]), state.tasks, state.clock, horizon, teams=teams)
        alternatives = [o.team for o in options]
        outcome, best, optimality = _oracle(task, team, alternatives, state.workers, truth)
        state.outcomes[tid] = outcome
        state.optimality.append(
            OptimalitySample(state.clock, tid, outcome, best, optimality, len(alternatives))
        )
        for w in sorted(team):
            decision = decide_acceptance(state.env.truth[w], task, state.rngs["acceptance"], cfg.reject_scale)
            _ingest(
                state,
                emit_task_proposal_feedback(
                    w, state.env.truth[w], task, decision, state.clock, state.rngs["mask"], cfg.proposal_mask
                ),
            )
    return new


def step(state: SimState) -> SimState:
    """Advance the clock by one step and append a metrics row."""
    state.clock += 1
    state.questions_this_step = 0
    _complete_tasks(state)
    _arrivals(state)
    new = _staff(state)

    report = accuracy_report(state.store, state.env.truth, state.clock)
    samples = [o.optimality for o in state.optimality if o.step == state.clock]
    state.metrics.append(
        MetricRow(
            step=state.clock,
            mae_hard=report.mae(AttributeKind.HARD_SKILL),
            mae_soft=report.mae(AttributeKind.SOFT_SKILL),
            mae_task_pref=report.mae(AttributeKind.TASK_PREF),
            mae_teammate_pref=report.mae(AttributeKind.TEAMMATE_PREF),
            unknown=report.unknown,
            correct=report.correct,
            incorrect=report.incorrect,
            questions=state.questions_this_step,
            mean_optimality=sum(samples) / len(samples) if samples else None,
            tasks_scheduled=len(new),
        )
    )
    return state


def run(
    env: Environment, steps: int | None = None, seed: int | None = None, verify: bool = True
) -> SimState:
    state = init_state(env, seed, verify)
    for _ in range(env.config.total_steps if steps is None else steps):
        step(state)
    return state


def final_state_dict(state: SimState) -> dict:
    workers = calendars_from_schedule(state.worker_list(), state.schedule, state.tasks)
    return {
        "clock": state.clock,
        "seed": state.seed,
        "pending": [t.id for t in state.pending],
        "tasks": {t: state.tasks[t].to_dict() for t in sorted(state.tasks)},
        "schedule": state.schedule.to_dict(),
        "completed": list(state.completed),
        "workers": [w.to_dict() for w in workers],
        "asked": [list(q) for q in sorted(state.asked)],
        "profiles": state.store.to_dict(),
        "event_counts": dict(sorted(state.event_counts.items())),
    }
