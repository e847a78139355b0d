"""Synthetic human feedback, emitted directly as structured observations."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from enum import Enum
from itertools import permutations

import numpy as np

from staffsim.domain import SKILL_MAX, SKILL_MIN, TaskSpec, TrueAttributes, WorkerState, round_half_away
from staffsim.profiling import REVIEW_OBSERVER, AttributeKind, ObservationRecord, Source
from staffsim.simulation.environment import BiasTable


class Decision(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


def corrupt_skill_level(
    true_level: int,
    observer: str,
    target: str,
    skill: str,
    now: int,
    bias: BiasTable,
    noise_rng: np.random.Generator,
    sigma_v: float,
    unbiased: bool = False,
) -> int:
    """``clamp(round(true + b + v), 0, 6)`` with ``v ~ N(0, sigma_v^2)``."""
    b = 0.0 if unbiased else bias.value(observer, target, skill, now)
    v = sigma_v * float(noise_rng.standard_normal())
    return min(max(round_half_away(true_level + b + v), SKILL_MIN), SKILL_MAX)


def rejection_probability(truth: TrueAttributes, task: TaskSpec, reject_scale: float) -> float:
    topics = sorted(task.topics)
    if not topics:
        return 0.0
    aversion = max(0.0, -sum(truth.task_preferences.get(p, 0) for p in topics) / len(topics))
    return reject_scale * aversion / 2.0


def decide_acceptance(
    truth: TrueAttributes, task: TaskSpec, rng: np.random.Generator, reject_scale: float
) -> Decision:
    p = rejection_probability(truth, task, reject_scale)
    return Decision.REJECT if rng.random() < p else Decision.ACCEPT


def emit_task_proposal_feedback(
    worker: str,
    truth: TrueAttributes,
    task: TaskSpec,
    decision: Decision,
    now: int,
    mask_rng: np.random.Generator | None = None,
    keep_fraction: float = 1.0,
) -> list[ObservationRecord]:
    out = []
    for topic in sorted(task.topics):
        if keep_fraction < 1.0:
            assert mask_rng is not None
            if not mask_rng.random() < keep_fraction:
                continue
        out.append(
            ObservationRecord(
                target=worker,
                observer=worker,
                kind=AttributeKind.TASK_PREF,
                name=topic,
                level=truth.task_preferences[topic],
                timestamp=now,
                source=Source.TASK_PROPOSAL,
                provenance=f"proposal:{task.id}:{decision.value}",
            )
        )
    return out


def emit_performance_review(
    task: TaskSpec,
    team: Iterable[str],
    now: int,
    workers: Mapping[str, WorkerState],
    truth: Mapping[str, TrueAttributes],
    bias: BiasTable,
    noise_rng: np.random.Generator,
    sigma_v: float,
) -> list[ObservationRecord]:
    out = []
    for w in sorted(team):
        for skill in sorted(task.skills_for(workers[w].role)):
            level = corrupt_skill_level(
                truth[w].hard_skills[skill], REVIEW_OBSERVER, w, skill, now, bias, noise_rng, sigma_v,
                unbiased=True,
            )
            out.append(
                ObservationRecord(
                    w, REVIEW_OBSERVER, AttributeKind.HARD_SKILL, skill, level, now,
                    Source.PERFORMANCE_REVIEW, f"review:{task.id}",
                )
            )
    return out


def _subset(rng: np.random.Generator, names: list[str], most: int = 3) -> list[str]:
    k = int(rng.integers(1, min(most, len(names)) + 1))
    return sorted(names[i] for i in rng.choice(len(names), k, replace=False))


def emit_peer_feedback(
    task: TaskSpec,
    team: Iterable[str],
    now: int,
    truth: Mapping[str, TrueAttributes],
    bias: BiasTable,
    noise_rng: np.random.Generator,
    pick_rng: np.random.Generator,
    sigma_v: float,
) -> list[ObservationRecord]:
    out = []
    for o, w in permutations(sorted(team), 2):
        prov = f"peer:{task.id}:{o}"
        for kind, table in (
            (AttributeKind.HARD_SKILL, truth[w].hard_skills),
            (AttributeKind.SOFT_SKILL, truth[w].soft_skills),
        ):
            names = sorted(table)
            if not names:
                continue
            for skill in _subset(pick_rng, names):
                level = corrupt_skill_level(table[skill], o, w, skill, now, bias, noise_rng, sigma_v)
                out.append(ObservationRecord(w, o, kind, skill, level, now, Source.PEER_FEEDBACK, prov))
        out.append(
            ObservationRecord(
                o, o, AttributeKind.TEAMMATE_PREF, w, truth[o].teammate_preferences[w], now,
                Source.PEER_FEEDBACK, prov,
            )
        )
    return out


def emit_self_evaluation(
    worker: str,
    skill: str,
    now: int,
    truth: Mapping[str, TrueAttributes],
    bias: BiasTable,
    noise_rng: np.random.Generator,
    sigma_v: float,
) -> ObservationRecord:
    level = corrupt_skill_level(
        truth[worker].hard_skills[skill], worker, worker, skill, now, bias, noise_rng, sigma_v
    )
    return ObservationRecord(
        worker, worker, AttributeKind.HARD_SKILL, skill, level, now, Source.SELF_EVAL,
        f"question:{worker}:{skill}:{now}",
    )
