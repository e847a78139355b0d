"""Simulation configuration."""

from __future__ import annotations

import dataclasses
import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

DEFAULT_ROLES = ("it", "legal", "business", "finance", "operations")
DEFAULT_SOFT_SKILLS = (
    "leadership",
    "communication",
    "teamwork",
    "adaptability",
    "problem_solving",
    "time_management",
    "creativity",
    "empathy",
    "negotiation",
    "conflict_resolution",
    "attention_to_detail",
    "critical_thinking",
)
DEFAULT_TOPICS = (
    "cybersecurity",
    "renewable_energy",
    "education",
    "healthcare",
    "retail",
    "logistics",
    "banking",
    "public_sector",
    "real_estate",
    "manufacturing",
    "telecom",
    "agriculture",
    "tourism",
    "insurance",
    "media",
    "automotive",
    "pharma",
    "construction",
    "non_profit",
    "startups",
)


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class EnvConfig:
    seed: int = 42
    roles: tuple[str, ...] = DEFAULT_ROLES
    workers_per_role_per_seniority: int = 2
    hard_skills_per_role: int = 10
    soft_skill_names: tuple[str, ...] = DEFAULT_SOFT_SKILLS
    topic_names: tuple[str, ...] = DEFAULT_TOPICS
    sigma_b: float = 1.5
    sigma_v: float = 1.5
    sigma_r: float = 0.0
    gamma: float = 0.99
    arrival_rate: float = 0.6
    duration_range: tuple[int, int] = (2, 10)
    max_team_size: int = 3
    batch_trigger: int = 5
    total_steps: int = 400
    bias_off_at: int | None = None
    reject_scale: float = 0.5
    weights: Mapping[str, float] = field(default_factory=lambda: {str(i): 1.0 for i in range(1, 10)})
    beam_width: int = 3
    planning_horizon: int = 200
    max_attempts: int = 50
    team_enumeration_cap: int = 10_000
    max_priority: int = 5
    full_time_prob: float = 0.8
    include_prob: float = 0.1
    exclude_prob: float = 0.1
    proposal_mask: float = 1.0
    observer_weights: Mapping[str, float] = field(
        default_factory=lambda: {"review": 1.0, "self": 0.8, "peer": 0.5}
    )

    def __post_init__(self) -> None:
        positive_ints = (
            "workers_per_role_per_seniority",
            "hard_skills_per_role",
            "max_team_size",
            "batch_trigger",
            "beam_width",
            "planning_horizon",
            "max_attempts",
            "team_enumeration_cap",
            "max_priority",
        )
        for name in positive_ints:
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        for name in ("sigma_b", "sigma_v", "sigma_r", "arrival_rate", "reject_scale"):
            if getattr(self, name) < 0:
                raise ConfigError(name, "must be >= 0")
        for name in ("full_time_prob", "include_prob", "exclude_prob", "proposal_mask"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(name, "must lie in [0, 1]")
        if self.total_steps < 0:
            raise ConfigError("total_steps", "must be >= 0")
        if not 0 < self.gamma <= 1:
            raise ConfigError("gamma", "must lie in (0, 1]")
        if not self.roles or len(set(self.roles)) != len(self.roles):
            raise ConfigError("roles", "must be a nonempty list of distinct names")
        if not self.soft_skill_names:
            raise ConfigError("soft_skill_names", "must be nonempty")
        if not self.topic_names:
            raise ConfigError("topic_names", "must be nonempty")
        lo, hi = self.duration_range
        if not 1 <= lo <= hi:
            raise ConfigError("duration_range", "must satisfy 1 <= min <= max")
        if hi > self.planning_horizon:
            raise ConfigError("duration_range", "longest task must fit in the planning horizon")
        if self.max_team_size > 2 * self.workers_per_role_per_seniority:
            raise ConfigError("max_team_size", "exceeds the number of workers per role")
        if self.bias_off_at is not None and not 0 <= self.bias_off_at <= max(self.total_steps, 0):
            raise ConfigError("bias_off_at", "must lie in [0, total_steps]")
        if not any(float(v) != 0 for v in self.weights.values()):
            raise ConfigError("weights", "degenerate weight vector")
        for k in self.weights:
            if str(k) not in {str(i) for i in range(1, 10)}:
                raise ConfigError("weights", f"unknown criterion id {k!r}")
        for k in ("review", "self", "peer"):
            if float(self.observer_weights.get(k, 1.0)) <= 0:
                raise ConfigError("observer_weights", f"{k} must be > 0")

    @property
    def n_workers(self) -> int:
        return len(self.roles) * 2 * self.workers_per_role_per_seniority

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, Mapping):
                v = dict(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> EnvConfig:
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
            kwargs[key] = _coerce(key, value, known[key].default)
        try:
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError("config", str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path) -> EnvConfig:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        return cls.from_dict(data)

    def with_overrides(self, overrides: Mapping[str, Any]) -> EnvConfig:
        data = self.to_dict()
        data.update(overrides)
        return EnvConfig.from_dict(data)


def _coerce(key: str, value: Any, default: Any) -> Any:
    """Coerce JSON or command-line values to the field's type."""
    if isinstance(value, str) and not isinstance(default, str) and key != "bias_off_at":
        try:
            value = json.loads(value)
        except json.JSONDecodeError as exc:
            raise ConfigError(key, f"cannot parse {value!r}") from exc
    try:
        if key == "bias_off_at":
            if value in (None, "", "none", "None", "null"):
                return None
            return int(value)
        if key in ("roles", "soft_skill_names", "topic_names"):
            return tuple(str(x) for x in value)
        if key == "duration_range":
            lo, hi = value
            return (int(lo), int(hi))
        if key in ("weights", "observer_weights"):
            return {str(k): float(v) for k, v in dict(value).items()}
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ConfigError(key, f"expected an integer, got {value!r}")
            return int(value)
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(key, f"invalid value {value!r}") from exc
    return value
