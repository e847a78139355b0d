"""Closed-loop workforce simulation."""

from staffsim.simulation.config import ConfigError, EnvConfig
from staffsim.simulation.engine import SimState, init_state, run, step, task_outcome_oracle
from staffsim.simulation.environment import BiasTable, Environment, generate_environment, generate_task

__all__ = [
    "BiasTable",
    "ConfigError",
    "EnvConfig",
    "Environment",
    "SimState",
    "generate_environment",
    "generate_task",
    "init_state",
    "run",
    "step",
    "task_outcome_oracle",
]
