"""Attribute profiling from annotated observations.

Every attribute keeps its full observation history; the estimate is a
recency-discounted average of the observed levels, with skill observations
further weighted by how much the observer is trusted.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

from staffsim.domain import (
    Scale,
    TrueAttributes,
    check_level,
    level_to_unit,
    round_to_level,
)

log = logging.getLogger(__name__)

REVIEW_OBSERVER = "review"
DEFAULT_GAMMA = 0.99


class AttributeKind(str, Enum):
    HARD_SKILL = "hard_skill"
    SOFT_SKILL = "soft_skill"
    TASK_PREF = "task_pref"
    TEAMMATE_PREF = "teammate_pref"

    @property
    def scale(self) -> Scale:
        if self in (AttributeKind.HARD_SKILL, AttributeKind.SOFT_SKILL):
            return Scale.SKILL
        return Scale.PREFERENCE

    @property
    def is_skill(self) -> bool:
        return self.scale is Scale.SKILL


class Source(str, Enum):
    SELF_EVAL = "self_eval"
    TASK_PROPOSAL = "task_proposal"
    PERFORMANCE_REVIEW = "performance_review"
    PEER_FEEDBACK = "peer_feedback"


class UnknownAttribute(LookupError):
    """Raised when an estimate is requested for an attribute with no observations."""


@dataclass(frozen=True, slots=True)
class ObservationRecord:
    target: str
    observer: str
    kind: AttributeKind
    name: str
    level: int
    timestamp: int
    source: Source
    provenance: str = ""

    def __post_init__(self) -> None:
        check_level(self.level, self.kind.scale)
        if not self.kind.is_skill and self.observer != self.target:
            raise ValueError("preference observations must be self-observed")

    @property
    def key(self) -> tuple[str, AttributeKind, str]:
        return (self.target, self.kind, self.name)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "observer": self.observer,
            "kind": self.kind.value,
            "name": self.name,
            "level": self.level,
            "timestamp": self.timestamp,
            "source": self.source.value,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> ObservationRecord:
        return cls(
            target=str(data["target"]),
            observer=str(data["observer"]),
            kind=AttributeKind(data["kind"]),
            name=str(data["name"]),
            level=int(data["level"]),
            timestamp=int(data["timestamp"]),
            source=Source(data["source"]),
            provenance=str(data.get("provenance", "")),
        )


@dataclass(frozen=True, slots=True)
class ObserverWeights:
    """Trust placed in each kind of skill observer."""

    review: float = 1.0
    self_: float = 0.8
    peer: float = 0.5

    def __post_init__(self) -> None:
        if min(self.review, self.self_, self.peer) <= 0:
            raise ValueError("observer weights must be positive")

    def weight(self, observer: str, target: str) -> float:
        if observer == REVIEW_OBSERVER:
            return self.review
        if observer == target:
            return self.self_
        return self.peer

    def to_dict(self) -> dict:
        return {"review": self.review, "self": self.self_, "peer": self.peer}

    @classmethod
    def from_dict(cls, data: Mapping) -> ObserverWeights:
        return cls(
            float(data.get("review", 1.0)),
            float(data.get("self", 0.8)),
            float(data.get("peer", 0.5)),
        )


@dataclass(frozen=True, slots=True)
class AttributeEstimate:
    mean: float
    rounded: int
    observation_count: int
    last_update: int


def estimate_attribute(
    history: Sequence[ObservationRecord],
    kind: AttributeKind,
    now: int,
    gamma: float = DEFAULT_GAMMA,
    weights: ObserverWeights | None = None,
) -> AttributeEstimate:
    """Weighted mean ``sum(w_i * l_i) / sum(w_i)``, ``w_i = gamma**(now - h_i) [* alpha(o_i)]``.

    Discount exponents are taken relative to the newest observation; the common
    factor cancels in the ratio and this avoids underflow on long histories.
    """
    if not history:
        raise UnknownAttribute("empty observation history")
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    newest = max(o.timestamp for o in history)
    if newest > now:
        raise ValueError("observation timestamped after the evaluation time")
    weights = weights or ObserverWeights()
    num = 0.0
    den = 0.0
    for obs in history:
        w = gamma ** (newest - obs.timestamp)
        if kind.is_skill:
            w *= weights.weight(obs.observer, obs.target)
        num += w * obs.level
        den += w
    mean = num / den
    return AttributeEstimate(mean, round_to_level(mean, kind.scale), len(history), newest)


class ProfileView(Protocol):
    """What the staffing criteria need to know about workers."""

    soft_skill_names: Sequence[str]

    def query_or_default(
        self, worker: str, kind: AttributeKind, name: str, now: int | None = None
    ) -> tuple[float, bool]: ...


def default_unit(kind: AttributeKind) -> float:
    return level_to_unit(kind.scale.default_level, kind.scale)


@dataclass
class ProfileStore:
    """Observation histories and live estimates, keyed by (worker, kind, name)."""

    soft_skill_names: Sequence[str] = ()
    gamma: float = DEFAULT_GAMMA
    weights: ObserverWeights = field(default_factory=ObserverWeights)
    histories: dict[tuple[str, AttributeKind, str], list[ObservationRecord]] = field(
        default_factory=dict
    )
    estimates: dict[tuple[str, AttributeKind, str], AttributeEstimate] = field(
        default_factory=dict
    )

    def __post_init__(self) -> None:
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")

    def ingest(self, obs: ObservationRecord, now: int) -> AttributeEstimate:
        if obs.timestamp > now:
            raise ValueError("cannot ingest an observation from the future")
        hist = self.histories.setdefault(obs.key, [])
        hist.append(obs)
        est = estimate_attribute(hist, obs.kind, now, self.gamma, self.weights)
        self.estimates[obs.key] = est
        return est

    def ingest_many(self, observations: Iterable[ObservationRecord], now: int) -> None:
        for obs in observations:
            self.ingest(obs, now)

    def estimate(self, worker: str, kind: AttributeKind, name: str) -> AttributeEstimate | None:
        return self.estimates.get((worker, kind, name))

    def history(self, worker: str, kind: AttributeKind, name: str) -> list[ObservationRecord]:
        return list(self.histories.get((worker, kind, name), ()))

    def observation_count(self, worker: str, kind: AttributeKind, name: str) -> int:
        return len(self.histories.get((worker, kind, name), ()))

    def query_or_default(
        self, worker: str, kind: AttributeKind, name: str, now: int | None = None
    ) -> tuple[float, bool]:
        est = self.estimates.get((worker, kind, name))
        if est is None:
            return default_unit(kind), False
        return level_to_unit(est.rounded, kind.scale), True

    def recompute(self, now: int) -> None:
        """Rebuild every estimate from its history."""
        self.estimates = {
            key: estimate_attribute(hist, key[1], now, self.gamma, self.weights)
            for key, hist in self.histories.items()
        }

    def to_dict(self) -> dict:
        records = [o.to_dict() for key in sorted(self.histories) for o in self.histories[key]]
        return {
            "gamma": self.gamma,
            "weights": self.weights.to_dict(),
            "soft_skill_names": list(self.soft_skill_names),
            "observations": records,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> ProfileStore:
        store = cls(
            soft_skill_names=tuple(data.get("soft_skill_names", ())),
            gamma=float(data.get("gamma", DEFAULT_GAMMA)),
            weights=ObserverWeights.from_dict(data.get("weights", {})),
        )
        obs = [ObservationRecord.from_dict(o) for o in data.get("observations", ())]
        for o in obs:
            store.histories.setdefault(o.key, []).append(o)
        if obs:
            store.recompute(max(o.timestamp for o in obs))
        return store


@dataclass(frozen=True)
class TruthView:
    """Exposes true attributes through the same interface as a profile store."""

    truth: Mapping[str, TrueAttributes]
    soft_skill_names: Sequence[str]

    def _table(self, worker: str, kind: AttributeKind) -> Mapping[str, int]:
        t = self.truth[worker]
        return {
            AttributeKind.HARD_SKILL: t.hard_skills,
            AttributeKind.SOFT_SKILL: t.soft_skills,
            AttributeKind.TASK_PREF: t.task_preferences,
            AttributeKind.TEAMMATE_PREF: t.teammate_preferences,
        }[kind]

    def query_or_default(
        self, worker: str, kind: AttributeKind, name: str, now: int | None = None
    ) -> tuple[float, bool]:
        table = self._table(worker, kind)
        if name not in table:
            return default_unit(kind), False
        return level_to_unit(table[name], kind.scale), True


@dataclass
class KindAccuracy:
    total: int = 0
    unknown: int = 0
    correct: int = 0
    incorrect: int = 0
    abs_error_sum: float = 0.0

    @property
    def mae(self) -> float:
        return self.abs_error_sum / self.total if self.total else 0.0


@dataclass
class AccuracyReport:
    by_kind: dict[AttributeKind, KindAccuracy]

    @property
    def unknown(self) -> int:
        return sum(k.unknown for k in self.by_kind.values())

    @property
    def correct(self) -> int:
        return sum(k.correct for k in self.by_kind.values())

    @property
    def incorrect(self) -> int:
        return sum(k.incorrect for k in self.by_kind.values())

    def mae(self, kind: AttributeKind) -> float:
        return self.by_kind[kind].mae


def _truth_items(truth: TrueAttributes) -> Iterable[tuple[AttributeKind, str, int]]:
    for name, v in truth.hard_skills.items():
        yield AttributeKind.HARD_SKILL, name, v
    for name, v in truth.soft_skills.items():
        yield AttributeKind.SOFT_SKILL, name, v
    for name, v in truth.task_preferences.items():
        yield AttributeKind.TASK_PREF, name, v
    for name, v in truth.teammate_preferences.items():
        yield AttributeKind.TEAMMATE_PREF, name, v


def accuracy_report(
    store: ProfileStore, truth: Mapping[str, TrueAttributes], now: int | None = None
) -> AccuracyReport:
    """Count unknown/correct/incorrect estimates and the MAE of rounded levels.

    Unknown attributes count toward the MAE against the scale's default level.
    """
    by_kind = {k: KindAccuracy() for k in AttributeKind}
    for worker in sorted(truth):
        for kind, name, true_level in _truth_items(truth[worker]):
            acc = by_kind[kind]
            acc.total += 1
            est = store.estimates.get((worker, kind, name))
            if est is None:
                acc.unknown += 1
                acc.abs_error_sum += abs(true_level - kind.scale.default_level)
                continue
            if est.rounded == true_level:
                acc.correct += 1
            else:
                acc.incorrect += 1
            acc.abs_error_sum += abs(true_level - est.rounded)
    return AccuracyReport(by_kind)
