"""Pseudo-random workers, tasks, and observer biases."""

from __future__ import annotations

import hashlib
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from staffsim.calendar import Timing
from staffsim.domain import (
    PREF_MAX,
    PREF_MIN,
    Seniority,
    TaskSpec,
    TrueAttributes,
    WorkerState,
)
from staffsim.simulation.config import EnvConfig

STREAMS = {
    "environment": 0,
    "arrivals": 1,
    "content": 2,
    "noise": 3,
    "acceptance": 4,
    "mask": 5,
    "peer": 6,
    "reconstruction": 7,
}

# Inclusive skill-level ranges by seniority.
SKILL_RANGE = {Seniority.SENIOR: (3, 6), Seniority.JUNIOR: (1, 4)}
SALARY_RANGE = {Seniority.SENIOR: (40.0, 60.0), Seniority.JUNIOR: (20.0, 35.0)}
CAPACITY_RANGE = {Seniority.SENIOR: (1.0, 1.4), Seniority.JUNIOR: (0.8, 1.2)}
FULL_TIME_RATE = (0.4, 1.0)
PART_TIME_RATE = (0.1, 0.4)


def stream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), STREAMS[name]]))


def _stable_hash(*parts: str) -> int:
    digest = hashlib.blake2b("\x1f".join(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass
class BiasTable:
    """Fixed Gaussian offset per (observer, target, skill), drawn lazily and reproducibly."""

    seed: int
    sigma_b: float
    bias_off_at: int | None = None
    _cache: dict[tuple[str, str, str], float] = field(default_factory=dict, repr=False)

    def draw(self, observer: str, target: str, skill: str) -> float:
        key = (observer, target, skill)
        b = self._cache.get(key)
        if b is None:
            rng = np.random.default_rng([int(self.seed), _stable_hash(observer, target, skill)])
            b = self.sigma_b * float(rng.standard_normal())
            self._cache[key] = b
        return b

    def value(self, observer: str, target: str, skill: str, now: int) -> float:
        if self.bias_off_at is not None and now >= self.bias_off_at:
            return 0.0
        return self.draw(observer, target, skill)


@dataclass(frozen=True)
class Catalog:
    roles: tuple[str, ...]
    hard_skills: Mapping[str, tuple[str, ...]]
    soft_skills: tuple[str, ...]
    topics: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "roles": list(self.roles),
            "hard_skills": {r: list(s) for r, s in self.hard_skills.items()},
            "soft_skills": list(self.soft_skills),
            "topics": list(self.topics),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> Catalog:
        return cls(
            roles=tuple(data["roles"]),
            hard_skills={r: tuple(s) for r, s in data["hard_skills"].items()},
            soft_skills=tuple(data["soft_skills"]),
            topics=tuple(data["topics"]),
        )


@dataclass
class Environment:
    config: EnvConfig
    catalog: Catalog
    workers: list[WorkerState]
    truth: dict[str, TrueAttributes]

    @property
    def min_capacity(self) -> float:
        return min(w.work_capacity for w in self.workers)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "catalog": self.catalog.to_dict(),
            "workers": [w.to_dict() for w in self.workers],
            "truth": {w: self.truth[w].to_dict() for w in sorted(self.truth)},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> Environment:
        return cls(
            config=EnvConfig.from_dict(data["config"]),
            catalog=Catalog.from_dict(data["catalog"]),
            workers=[WorkerState.from_dict(w) for w in data["workers"]],
            truth={w: TrueAttributes.from_dict(t) for w, t in data["truth"].items()},
        )


def _uniform_level(rng: np.random.Generator, lo: int, hi: int) -> int:
    return int(rng.integers(lo, hi + 1))


def generate_environment(cfg: EnvConfig) -> Environment:
    rng = stream(cfg.seed, "environment")
    catalog = Catalog(
        roles=tuple(cfg.roles),
        hard_skills={
            r: tuple(f"{r}_skill_{j:02d}" for j in range(cfg.hard_skills_per_role)) for r in cfg.roles
        },
        soft_skills=tuple(cfg.soft_skill_names),
        topics=tuple(cfg.topic_names),
    )
    workers: list[WorkerState] = []
    seniority_of: dict[str, Seniority] = {}
    idx = 0
    for role in cfg.roles:
        for seniority in (Seniority.JUNIOR, Seniority.SENIOR):
            for _ in range(cfg.workers_per_role_per_seniority):
                wid = f"w{idx:02d}"
                idx += 1
                salary = round(float(rng.uniform(*SALARY_RANGE[seniority])), 2)
                capacity = round(float(rng.uniform(*CAPACITY_RANGE[seniority])), 2)
                workers.append(WorkerState(wid, role, seniority, salary, capacity))
                seniority_of[wid] = seniority

    ids = [w.id for w in workers]
    truth = {}
    for w in workers:
        lo, hi = SKILL_RANGE[seniority_of[w.id]]
        hard = {s: _uniform_level(rng, lo, hi) for s in catalog.hard_skills[w.role]}
        soft = {s: _uniform_level(rng, lo, hi) for s in catalog.soft_skills}
        topics = {p: _uniform_level(rng, PREF_MIN, PREF_MAX) for p in catalog.topics}
        mates = {o: _uniform_level(rng, PREF_MIN, PREF_MAX) for o in ids if o != w.id}
        truth[w.id] = TrueAttributes(hard, soft, topics, mates)
    return Environment(cfg, catalog, workers, truth)


def bias_table_for(env: Environment) -> BiasTable:
    return BiasTable(env.config.seed, env.config.sigma_b, env.config.bias_off_at)


def generate_task(
    env: Environment, rng: np.random.Generator, task_id: str, arrival_time: int
) -> TaskSpec:
    cfg = env.config
    cat = env.catalog
    size = int(rng.integers(1, cfg.max_team_size + 1))
    counts: dict[str, int] = {}
    for _ in range(size):
        role = cat.roles[int(rng.integers(len(cat.roles)))]
        counts[role] = counts.get(role, 0) + 1
    required_skills = {}
    for role in sorted(counts):
        pool = cat.hard_skills[role]
        k = int(rng.integers(1, min(3, len(pool)) + 1))
        required_skills[role] = frozenset(pool[i] for i in rng.choice(len(pool), k, replace=False))
    n_topics = int(rng.integers(1, min(3, len(cat.topics)) + 1))
    topics = frozenset(cat.topics[i] for i in rng.choice(len(cat.topics), n_topics, replace=False))
    lo, hi = cfg.duration_range
    duration = int(rng.integers(lo, hi + 1))
    priority = int(rng.integers(1, cfg.max_priority + 1))
    full_time = bool(rng.random() < cfg.full_time_prob)
    rate_range = FULL_TIME_RATE if full_time else PART_TIME_RATE
    rate = round(float(rng.uniform(*rate_range)) * env.min_capacity, 3)
    workload = rate * duration

    candidates = sorted(w.id for w in env.workers if w.role in counts)
    include: frozenset[str] = frozenset()
    exclude: frozenset[str] = frozenset()
    draw_include = rng.random()
    pick_include = int(rng.integers(len(candidates)))
    draw_exclude = rng.random()
    pick_exclude = int(rng.integers(len(candidates)))
    if draw_include < cfg.include_prob:
        include = frozenset({candidates[pick_include]})
    if draw_exclude < cfg.exclude_prob and candidates[pick_exclude] not in include:
        exclude = frozenset({candidates[pick_exclude]})

    return TaskSpec(
        id=task_id,
        arrival_time=arrival_time,
        priority=priority,
        required_roles=counts,
        duration=duration,
        workload=workload,
        required_skills=required_skills,
        topics=topics,
        must_include=include,
        must_exclude=exclude,
        deadline=None,
        timing=Timing.FULL_TIME if full_time else Timing.PART_TIME,
    )
