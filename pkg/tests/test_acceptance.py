"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import itertools
import json
import random
import time
from pathlib import Path

import numpy as np
import pytest

from staffsim.cli import main
from staffsim.criteria import WeightVector
from staffsim.domain import Schedule
from staffsim.profiling import AttributeKind, ObservationRecord, ObserverWeights, Source, estimate_attribute
from staffsim.rescheduler import reschedule
from staffsim.scheduler import Scheduler, check_feasibility, hard_violations
from staffsim.simulation import EnvConfig, generate_environment, run
from staffsim.simulation.environment import BiasTable
from staffsim.simulation.feedback import corrupt_skill_level
from staffsim.simulation.report import least_squares

from _support import (
    brute_earliest,
    brute_problems,
    brute_teams,
    brute_tsos,
    entry,
    make_task,
    make_worker,
    random_instance,
    random_profiles,
)

HORIZON = 40


def _order(tasks):
    return sorted(tasks, key=lambda t: (-t.priority, t.arrival_time, t.id))


# 1 ---------------------------------------------------------------------------


def test_feasibility_soundness(acceptance_line):
    rng = random.Random(20240601)
    started = time.perf_counter()
    failures = []
    checked = 0
    for case in range(1000):
        pending, workers, s_prev, index = random_instance(rng, max_workers=20, max_tasks=10, horizon=HORIZON)
        profiles = random_profiles(rng, workers, pending)
        now = rng.randint(0, 3)
        tasks = {**index, **{t.id: t for t in pending}}
        planner = Scheduler(beam_width=rng.choice([1, 2, 3]), planning_horizon=HORIZON)
        outputs = [leaf.schedule for leaf in planner.schedule(pending, workers, s_prev, profiles, now, index)]
        outputs.append(reschedule(pending, workers, s_prev, profiles, now, index, rng.randint(1, 50), planner).schedule)
        for s in outputs:
            checked += 1
            if hard_violations(check_feasibility(s, tasks, workers)) or brute_problems(s, tasks, workers):
                failures.append(case)
    elapsed = time.perf_counter() - started
    ok = not failures and elapsed <= 120
    acceptance_line(1, ok, f"{checked} schedules from 1000 instances, {len(failures)} infeasible, {elapsed:.1f}s")
    assert not failures, failures[:10]
    assert elapsed <= 120


# 2 ---------------------------------------------------------------------------


def _small_instance(rng):
    """At most 3 workers and 2 satisfiable tasks, with at least two reachable joint schedules."""
    while True:
        n = rng.randint(2, 3)
        workers = [
            make_worker(
                f"w{i}",
                rng.choice("ab"),
                salary=rng.choice([10.0, 20.0, 30.0]),
                capacity=rng.choice([0.8, 1.0]),
                entries=[entry(f"x{i}", rng.randint(0, 6), rng.randint(7, 10), 0.3, rng.random() < 0.5)] if rng.random() < 0.4 else [],
            )
            for i in range(n)
        ]
        present = sorted({w.role for w in workers})
        pending = []
        for j in range(rng.randint(1, 2)):
            role = rng.choice(present)
            pool = sum(1 for w in workers if w.role == role)
            pending.append(
                make_task(
                    f"t{j}",
                    {role: rng.randint(1, pool)},
                    duration=rng.randint(1, 5),
                    rate=rng.choice([0.3, 0.5, 0.7]),
                    priority=rng.randint(1, 5),
                    arrival=rng.randint(0, 2),
                    full_time=rng.random() < 0.7,
                    topics=[f"p{rng.randint(0, 2)}"],
                )
            )
        s_prev, index = Schedule(), {}
        if rng.random() < 0.4:
            role = rng.choice(present)
            prev = make_task("s0", {role: 1}, duration=rng.randint(1, 4), rate=0.5, priority=rng.randint(1, 5))
            options = brute_tsos(prev, s_prev, index, workers, 0, 20)
            if options:
                index["s0"] = prev
                s_prev = s_prev.with_assignment("s0", rng.choice(options))
        if any(len(brute_teams(t, workers)) > 8 for t in pending):
            continue
        if sum(1 for _ in _joint(_order(pending), s_prev, index, workers, 0, 20)) >= 2:
            return pending, workers, s_prev, index


def _joint(order, s, index, workers, now, horizon):
    """Every schedule reachable by giving each task, in order, one of its earliest-start options."""
    if not order:
        yield s
        return
    t, rest = order[0], order[1:]
    idx = {**index, t.id: t}
    options = brute_tsos(t, s, index, workers, now, horizon)
    if not options:
        yield from _joint(rest, s, idx, workers, now, horizon)
        return
    for o in options:
        yield from _joint(rest, s.with_assignment(t.id, o), idx, workers, now, horizon)


def _greedy_values(order, s, index, workers, now, horizon, ctx):
    """Final V of every per-task argmax path (all ways of breaking exact ties)."""
    if not order:
        return {ctx.score(s)[0]}
    t, rest = order[0], order[1:]
    idx = {**index, t.id: t}
    options = brute_tsos(t, s, index, workers, now, horizon)
    if not options:
        return _greedy_values(rest, s, idx, workers, now, horizon, ctx)
    scored = [(ctx.score(s.with_assignment(t.id, o))[0], o) for o in options]
    best = max(v for v, _ in scored)
    out = set()
    for v, o in scored:
        if v == best:
            out |= _greedy_values(rest, s.with_assignment(t.id, o), idx, workers, now, horizon, ctx)
    return out


def test_beam_matches_brute_force(acceptance_line):
    rng = random.Random(7)
    started = time.perf_counter()
    wide_bad, greedy_bad = [], []
    n = 250
    for case in range(n):
        pending, workers, s_prev, index = _small_instance(rng)
        profiles = random_profiles(rng, workers, pending)
        weights = WeightVector({i: rng.choice([0.0, 0.5, 1.0, 2.0]) for i in range(1, 10)} | {rng.randint(1, 9): 1.0})
        now = rng.randint(0, 2)
        horizon_len = 20 - now
        wide = Scheduler(beam_width=1000, planning_horizon=horizon_len, weights=weights)
        ctx = wide.context(pending, workers, s_prev, {**index, **{t.id: t for t in pending}}, profiles)
        order = _order(pending)
        oracle_best = max(ctx.score(s)[0] for s in _joint(order, s_prev, index, workers, now, now + horizon_len))
        got = wide.schedule(pending, workers, s_prev, profiles, now, index)[0].score
        if got != oracle_best:
            wide_bad.append((case, got, oracle_best))
        narrow = Scheduler(beam_width=1, planning_horizon=horizon_len, weights=weights)
        got1 = narrow.schedule(pending, workers, s_prev, profiles, now, index)[0].score
        if got1 not in _greedy_values(order, s_prev, index, workers, now, now + horizon_len, ctx):
            greedy_bad.append(case)
    elapsed = time.perf_counter() - started
    ok = not wide_bad and not greedy_bad and elapsed <= 60
    acceptance_line(
        2, ok, f"{n} instances, wide-beam mismatches {len(wide_bad)}, greedy mismatches {len(greedy_bad)}, {elapsed:.1f}s"
    )
    assert not wide_bad, wide_bad[:5]
    assert not greedy_bad, greedy_bad[:5]
    assert elapsed <= 60


# 3 ---------------------------------------------------------------------------


def test_beam_dominance(acceptance_line):
    rng = random.Random(99)
    violations = []
    for case in range(100):
        pending, workers, s_prev, index = random_instance(rng, max_workers=10, max_tasks=6, horizon=HORIZON)
        profiles = random_profiles(rng, workers, pending)
        best = []
        for k in (1, 2, 3, 5):
            planner = Scheduler(beam_width=k, planning_horizon=HORIZON)
            best.append(planner.schedule(pending, workers, s_prev, profiles, 0, index)[0].score)
        if any(b < a for a, b in zip(best, best[1:])):
            violations.append((case, best))
    acceptance_line(3, not violations, f"100 instances, K in (1,2,3,5), {len(violations)} decreases")
    assert not violations, violations[:5]


# 4 ---------------------------------------------------------------------------


def test_estimator_correctness(acceptance_line):
    def obs(level, t, observer="w"):
        return ObservationRecord("w", observer, AttributeKind.HARD_SKILL, "s", level, t, Source.SELF_EVAL)

    worked = estimate_attribute([obs(4, 9), obs(6, 10)], AttributeKind.HARD_SKILL, 10, gamma=0.5).mean
    err_worked = abs(worked - 16 / 3)
    rng = random.Random(4)
    worst = 0.0
    for _ in range(100):
        levels = [rng.randint(0, 6) for _ in range(rng.randint(1, 40))]
        observer = rng.choice(["w", "review", "peer"])
        hist = [obs(lvl, rng.randint(0, 30), observer) for lvl in levels]
        mean = estimate_attribute(hist, AttributeKind.HARD_SKILL, 30, gamma=1.0).mean
        worst = max(worst, abs(mean - sum(levels) / len(levels)))
    ok = err_worked <= 1e-12 and worst <= 1e-12
    acceptance_line(4, ok, f"worked example error {err_worked:.1e}, worst undiscounted error {worst:.1e}")
    assert ok


# 5 ---------------------------------------------------------------------------


def test_convergence_without_bias(acceptance_line):
    started = time.perf_counter()
    weights = ObserverWeights()
    observers = ("review", None, "peer")
    errors = []
    for seed in range(64):
        env = generate_environment(EnvConfig(seed=seed, sigma_b=0.0))
        bias = BiasTable(seed, 0.0)
        rng = np.random.default_rng(seed)
        for w in env.workers:
            for skill, true_level in sorted(env.truth[w.id].hard_skills.items()):
                hist = []
                for h in range(200):
                    o = observers[h % 3] or w.id
                    level = corrupt_skill_level(true_level, o, w.id, skill, h, bias, rng, 1.5, unbiased=o == "review")
                    hist.append(ObservationRecord(w.id, o, AttributeKind.HARD_SKILL, skill, level, h, Source.PEER_FEEDBACK))
                est = estimate_attribute(hist, AttributeKind.HARD_SKILL, 199, 0.99, weights)
                errors.append(abs(est.rounded - true_level))
    mae = float(np.mean(errors))
    elapsed = time.perf_counter() - started
    ok = mae <= 0.25 and elapsed <= 60
    acceptance_line(5, ok, f"mean |estimate - true| = {mae:.3f} over {len(errors)} attributes, 64 seeds, {elapsed:.1f}s")
    assert mae <= 0.25
    assert elapsed <= 60


# 6, 7, 8 ------------------------------------------------------------------------

SEEDS = range(8)


@pytest.fixture(scope="module")
def replications():
    started = time.perf_counter()
    states = []
    for seed in SEEDS:
        env = generate_environment(EnvConfig(seed=seed, total_steps=400, bias_off_at=200, arrival_rate=0.6))
        states.append(run(env))
    return states, time.perf_counter() - started


def test_mae_drops(acceptance_line, replications):
    states, elapsed = replications
    early = late = 0
    rows = []
    for state in states:
        mae = {m.step: m.mae_hard for m in state.metrics}
        early += mae[200] < mae[20]
        late += mae[400] < mae[200]
        rows.append(f"{mae[20]:.2f}/{mae[200]:.2f}/{mae[400]:.2f}")
    ok = early >= 7 and late >= 7 and elapsed <= 900
    acceptance_line(
        6, ok, f"MAE(200)<MAE(20) in {early}/8, MAE(400)<MAE(200) in {late}/8, runs took {elapsed:.0f}s [{' '.join(rows)}]"
    )
    assert early >= 7 and late >= 7
    assert elapsed <= 900


def test_knowledge_and_questions(acceptance_line, replications):
    states, _ = replications
    monotone = 0
    fewer = 0
    counts = []
    for state in states:
        unknown = [m.unknown for m in state.metrics]
        monotone += all(a >= b for a, b in zip(unknown, unknown[1:]))
        first = sum(m.questions for m in state.metrics if 1 <= m.step <= 100)
        last = sum(m.questions for m in state.metrics if 301 <= m.step <= 400)
        fewer += first > last
        counts.append(f"{first}>{last}")
    ok = monotone == 8 and fewer >= 7
    acceptance_line(7, ok, f"unknown count monotone in {monotone}/8, early questions exceed late in {fewer}/8 [{' '.join(counts)}]")
    assert monotone == 8
    assert fewer >= 7


def test_optimality_trend(acceptance_line, replications):
    states, _ = replications
    slopes = []
    for state in states:
        samples = [o for o in state.optimality if o.step <= 400]
        slopes.append(least_squares([o.step for o in samples], [o.optimality for o in samples])[0])
    positive = sum(s > 0 for s in slopes)
    acceptance_line(8, positive >= 6, f"positive optimality slope in {positive}/8 [{' '.join(f'{s:.2e}' for s in slopes)}]")
    assert positive >= 6


# 9 ---------------------------------------------------------------------------


def _scenario(rng):
    """Busy A-role workers, a few scheduled tasks of mixed priority, and one urgent pending task."""
    now = rng.randint(0, 5)
    workers = [make_worker(f"a{i}", "A") for i in range(rng.randint(1, 3))]
    if rng.random() < 0.5:
        workers.append(make_worker("b0", "B"))
    index = {}
    s = Schedule()
    for i in range(rng.randint(2, 5)):
        roles = {"A": 1}
        if "b0" in {w.id for w in workers} and rng.random() < 0.3:
            roles["B"] = 1
        t = make_task(f"s{i}", roles, duration=rng.randint(2, 5), rate=0.6, priority=rng.randint(1, 5), full_time=rng.random() < 0.85)
        teams = brute_teams(t, workers)
        for _ in range(10):
            team = rng.choice(teams)
            alpha = rng.randint(max(0, now - 3), now + 6)
            from staffsim.domain import TSO
            from staffsim.calendar import Interval

            trial = s.with_assignment(t.id, TSO(team, Interval(alpha, alpha + t.duration)))
            if not brute_problems(trial, {**index, t.id: t}, workers):
                s = trial
                index[t.id] = t
                break
    count = 2 if len(workers) >= 3 and rng.random() < 0.3 else 1
    include = ["a0"] if rng.random() < 0.4 else []
    urgent = make_task("urgent", {"A": count}, duration=rng.randint(2, 4), rate=0.6, priority=rng.randint(3, 5), arrival=now, include=include)
    return now, workers, s, index, urgent


def _minimal_cancellation(now, workers, s, index, t, horizon):
    """Smallest set of not-started, lower-priority tasks whose removal lets ``t`` start earlier."""

    def earliest(schedule):
        starts = [brute_earliest(t, team, schedule, index, workers, now, horizon) for team in brute_teams(t, workers)]
        starts = [a for a in starts if a is not None]
        return min(starts) if starts else horizon

    base = earliest(s)
    eligible = sorted(tid for tid, a in s.items() if a.alpha >= now and index[tid].priority < t.priority)
    for size in range(1, len(eligible) + 1):
        for combo in itertools.combinations(eligible, size):
            if earliest(s.without(combo)) < base:
                return size, base
    return None, base


def test_rescheduler_principles(acceptance_line):
    rng = random.Random(2024)
    horizon_len = 30
    bad_targets, missed_minimal = [], []
    size_one = larger = none = moved_earlier = 0
    for case in range(50):
        now, workers, s, index, urgent = _scenario(rng)
        minimal, base = _minimal_cancellation(now, workers, s, index, urgent, now + horizon_len)
        result = reschedule([urgent], workers, s, _NoProfiles(), now, index, 50, Scheduler(planning_horizon=horizon_len))
        tasks = {**index, "urgent": urgent}
        for advanced, canceled in result.cancellations:
            for c in canceled:
                started_task = c in s and s[c].alpha < now
                if started_task or tasks[c].priority >= tasks[advanced].priority:
                    bad_targets.append((case, advanced, c))
        first = [c for adv, c in result.cancellations if adv == "urgent"]
        if first and result.schedule["urgent"].alpha < base:
            moved_earlier += 1
        if minimal == 1:
            size_one += 1
            if not first or len(first[0]) != 1:
                missed_minimal.append(case)
        elif minimal is None:
            none += 1
            if first:
                missed_minimal.append(case)
        else:
            larger += 1
        if hard_violations(check_feasibility(result.schedule, tasks, workers)):
            bad_targets.append((case, "infeasible", ""))
    ok = not bad_targets and not missed_minimal and size_one >= 10
    acceptance_line(
        9,
        ok,
        f"50 scenarios ({size_one} with a single-task fix, {larger} needing more, {none} with none); "
        f"forbidden cancellations {len(bad_targets)}, non-minimal {len(missed_minimal)}, "
        f"urgent task placed before its old earliest start in {moved_earlier}",
    )
    assert not bad_targets, bad_targets[:5]
    assert not missed_minimal, missed_minimal[:5]
    assert size_one >= 10


class _NoProfiles:
    soft_skill_names = ()

    def query_or_default(self, worker, kind, name, now=None):
        return 0.5, False


# 10 --------------------------------------------------------------------------


def test_determinism(acceptance_line, tmp_path):
    env_a, env_b = tmp_path / "env_a.json", tmp_path / "env_b.json"
    assert main(["gen-env", "--seed", "42", "--out", str(env_a)]) == 0
    assert main(["gen-env", "--seed", "42", "--out", str(env_b)]) == 0
    env_same = env_a.read_bytes() == env_b.read_bytes()
    args = ["--steps", "400", "--bias-off-at", "200", "--seed", "42"]
    assert main(["run", "--env", str(env_a), "--out-dir", str(tmp_path / "a")] + args) == 0
    assert main(["run", "--env", str(env_a), "--out-dir", str(tmp_path / "b")] + args) == 0
    differing = [
        name
        for name in ("metrics.csv", "optimality.csv", "final_state.json")
        if (tmp_path / "a" / name).read_bytes() != (tmp_path / "b" / name).read_bytes()
    ]
    manifests = []
    for d in ("a", "b"):
        m = json.loads((tmp_path / d / "manifest.json").read_text())
        m.pop("wall_clock_seconds")
        manifests.append(m)
    if manifests[0] != manifests[1]:
        differing.append("manifest.json")
    ok = env_same and not differing
    acceptance_line(10, ok, f"environment files identical: {env_same}; differing run outputs: {differing or 'none'}")
    assert ok
