"""Command-line front end.

    staffsim gen-env  [--config FILE] [--seed N] --out FILE [--key=value ...]
    staffsim run      --env FILE --out-dir DIR [--steps N] [--bias-off-at N] [--beam K] [--seed N] [--key=value ...]
    staffsim reschedule-demo --env FILE --scenario FILE [--out FILE]
    staffsim report   --metrics-dir DIR

Exit codes: 0 success, 2 invalid configuration, 3 I/O or parse failure,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

from staffsim import __version__
from staffsim.criteria import CRITERIA, EvaluationContext, WeightVector, aggregate_V
from staffsim.domain import Schedule, TaskSpec
from staffsim.profiling import ObserverWeights, ProfileStore
from staffsim.rescheduler import reschedule
from staffsim.scheduler import Scheduler
from staffsim.simulation.config import ConfigError, EnvConfig
from staffsim.simulation.engine import InvariantError, final_state_dict, run
from staffsim.simulation.environment import Environment, generate_environment
from staffsim.simulation.report import metrics_csv, optimality_csv, summarize

log = logging.getLogger("staffsim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INVARIANT = 4

# Fields that shape the generated environment; changing them on an existing env file is meaningless.
ENV_SHAPE_KEYS = frozenset(
    {"roles", "workers_per_role_per_seniority", "hard_skills_per_role", "soft_skill_names", "topic_names"}
)


class InputError(Exception):
    """Unreadable or malformed input file."""


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(data: Any) -> str:
    return json.dumps(data, indent=2) + "\n"


def load_json(path: str | Path, what: str) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} {path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_environment(path: str | Path) -> Environment:
    data = load_json(path, "environment")
    try:
        return Environment.from_dict(data)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"environment {path}: malformed content ({type(exc).__name__}: {exc})") from exc


def parse_overrides(extra: Sequence[str]) -> dict[str, str]:
    """Turn leftover ``--key=value`` arguments into config overrides."""
    out = {}
    for arg in extra:
        if not arg.startswith("--") or "=" not in arg:
            raise ConfigError(arg, "expected an override of the form --key=value")
        key, value = arg[2:].split("=", 1)
        out[key.replace("-", "_")] = value
    return out


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_gen_env(args: argparse.Namespace, overrides: Mapping[str, str]) -> int:
    cfg = EnvConfig.from_file(args.config) if args.config else EnvConfig()
    overrides = dict(overrides)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if overrides:
        cfg = cfg.with_overrides(overrides)
    env = generate_environment(cfg)
    write_atomic(Path(args.out), dump_json(env.to_dict()))
    print(f"wrote {args.out}: {len(env.workers)} workers, seed {cfg.seed}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace, overrides: Mapping[str, str]) -> int:
    env = load_environment(args.env)
    overrides = dict(overrides)
    shaped = sorted(ENV_SHAPE_KEYS & overrides.keys())
    if shaped:
        raise ConfigError(shaped[0], "fixed by the environment file; regenerate it with gen-env")
    if args.steps is not None:
        overrides["total_steps"] = str(args.steps)
    if args.bias_off_at is not None:
        overrides["bias_off_at"] = str(args.bias_off_at)
    if args.beam is not None:
        overrides["beam_width"] = str(args.beam)
    if overrides:
        env.config = env.config.with_overrides(overrides)
    seed = env.config.seed if args.seed is None else args.seed
    steps = env.config.total_steps

    started = time.perf_counter()
    state = run(env, steps=steps, seed=seed)
    elapsed = time.perf_counter() - started

    out = Path(args.out_dir)
    outputs = {
        "metrics": "metrics.csv",
        "optimality": "optimality.csv",
        "final_state": "final_state.json",
    }
    write_atomic(out / outputs["metrics"], metrics_csv(state))
    write_atomic(out / outputs["optimality"], optimality_csv(state))
    write_atomic(out / outputs["final_state"], dump_json(final_state_dict(state)))
    manifest = {
        "version": __version__,
        "seed": seed,
        "steps": steps,
        "env_path": str(args.env),
        "env_sha256": _sha256(Path(args.env)),
        "config": env.config.to_dict(),
        "outputs": outputs,
        "wall_clock_seconds": round(elapsed, 3),
    }
    write_atomic(out / "manifest.json", dump_json(manifest))
    print(f"ran {steps} steps with seed {seed} in {elapsed:.1f}s; outputs in {out}")
    return EXIT_OK


def _scenario_tasks(raw: Any, what: str) -> list[TaskSpec]:
    if isinstance(raw, Mapping):
        raw = [raw]
    try:
        return [TaskSpec.from_dict(t) for t in raw]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"scenario: bad {what} entry ({type(exc).__name__}: {exc})") from exc


def reschedule_report(env: Environment, scenario: Mapping[str, Any]) -> dict[str, Any]:
    """Run the rescheduler on a scenario and describe what changed."""
    cfg = env.config
    now = int(scenario.get("now", 0))
    known = _scenario_tasks(scenario.get("tasks", []), "tasks")
    injected = _scenario_tasks(scenario.get("inject", []), "inject")
    try:
        before = Schedule.from_dict(scenario.get("schedule", {"assignments": {}}))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"scenario: bad schedule ({type(exc).__name__}: {exc})") from exc
    tasks = {t.id: t for t in known + injected}
    missing = sorted(set(before) - tasks.keys())
    if missing:
        raise InputError(f"scenario: schedule refers to undefined tasks {missing}")

    profiles = ProfileStore(env.catalog.soft_skills, cfg.gamma, ObserverWeights.from_dict(cfg.observer_weights))
    if "profiles" in scenario:
        profiles = ProfileStore.from_dict(scenario["profiles"])
    weights = WeightVector.from_dict(cfg.weights)
    planner = Scheduler(
        beam_width=cfg.beam_width,
        planning_horizon=cfg.planning_horizon,
        team_cap=cfg.team_enumeration_cap,
        weights=weights,
        max_priority=cfg.max_priority,
    )
    max_attempts = int(scenario.get("max_attempts", cfg.max_attempts))
    result = reschedule(injected, env.workers, before, profiles, now, tasks, max_attempts, planner)
    after = result.schedule

    ctx = EvaluationContext(
        tasks=tasks,
        workers={w.id: w for w in env.workers},
        profiles=profiles,
        weights=weights,
        max_priority=cfg.max_priority,
        horizon=cfg.planning_horizon,
    )
    scores_before = ctx.evaluate(before, CRITERIA)
    scores_after = ctx.evaluate(after, CRITERIA)
    criteria = {
        str(i): {
            "before": scores_before[i].value,
            "after": scores_after[i].value,
            "delta": scores_after[i].value - scores_before[i].value,
        }
        for i in CRITERIA
    }
    v_before = aggregate_V({i: s.value for i, s in scores_before.items()}, weights)
    v_after = aggregate_V({i: s.value for i, s in scores_after.items()}, weights)
    start_changes = [
        {"task": t, "before": before[t].alpha, "after": after[t].alpha}
        for t in before
        if t in after and before[t].alpha != after[t].alpha
    ]
    return {
        "now": now,
        "before": before.to_dict(),
        "after": after.to_dict(),
        "canceled": list(result.canceled),
        "stripped": list(result.stripped),
        "added": [t for t in after if t not in before],
        "removed": [t for t in before if t not in after],
        "unscheduled": list(result.unscheduled),
        "start_changes": start_changes,
        "attempts": dict(result.attempts),
        "criteria": criteria,
        "V": {"before": v_before, "after": v_after, "delta": v_after - v_before},
    }


def cmd_reschedule_demo(args: argparse.Namespace, overrides: Mapping[str, str]) -> int:
    env = load_environment(args.env)
    if overrides:
        env.config = env.config.with_overrides(overrides)
    scenario = load_json(args.scenario, "scenario")
    if not isinstance(scenario, Mapping):
        raise InputError(f"scenario {args.scenario}: top level must be an object")
    report = reschedule_report(env, scenario)
    text = dump_json(report)
    if args.out:
        write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    summary = sys.stdout if args.out else sys.stderr
    print(f"canceled: {', '.join(report['canceled']) or 'none'}", file=summary)
    for change in report["start_changes"]:
        print(f"moved {change['task']}: start {change['before']} -> {change['after']}", file=summary)
    for i, c in report["criteria"].items():
        print(f"criterion {i}: {c['before']:.4f} -> {c['after']:.4f} ({c['delta']:+.4f})", file=summary)
    v = report["V"]
    print(f"V: {v['before']:.4f} -> {v['after']:.4f} ({v['delta']:+.4f})", file=summary)
    return EXIT_OK


def cmd_report(args: argparse.Namespace, overrides: Mapping[str, str]) -> int:
    if overrides:
        raise ConfigError(next(iter(overrides)), "report takes no configuration overrides")
    metrics_dir = Path(args.metrics_dir)
    try:
        summary, tables = summarize(metrics_dir)
    except OSError as exc:
        raise InputError(f"cannot read run outputs in {metrics_dir}: {exc.strerror or exc}") from exc
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed run outputs in {metrics_dir}: {exc}") from exc
    for name, text in tables.items():
        write_atomic(metrics_dir / name, text)
    print("\n".join(summary.lines()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="staffsim", description="Staffing and profiling simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-env", help="generate a synthetic environment")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_env)

    p = sub.add_parser("run", help="simulate a generated environment")
    p.add_argument("--env", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--bias-off-at", type=int)
    p.add_argument("--beam", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reschedule-demo", help="replay a rescheduling scenario")
    p.add_argument("--env", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reschedule_demo)

    p = sub.add_parser("report", help="summarize a run directory")
    p.add_argument("--metrics-dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("STAFFSIM_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        return args.func(args, parse_overrides(extra))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvariantError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except RuntimeError as exc:
        log.exception("internal failure")
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
