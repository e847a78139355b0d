"""Reading run outputs back and turning them into plot-ready tables."""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from staffsim.simulation.engine import METRIC_COLUMNS, OPTIMALITY_COLUMNS, SimState

MAE_COLUMNS = ("mae_hard", "mae_soft", "mae_task_pref", "mae_teammate_pref")


def least_squares(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Slope and intercept of the ordinary least-squares line through ``(xs, ys)``.

    With fewer than two distinct x values the slope is 0 and the intercept is the mean of ``ys``.
    """
    if len(xs) != len(ys):
        raise ValueError("xs and ys differ in length")
    n = len(xs)
    if n == 0:
        return 0.0, 0.0
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        return 0.0, my
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, my - slope * mx


def csv_text(columns: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def metrics_csv(state: SimState) -> str:
    return csv_text(METRIC_COLUMNS, [row.as_csv_row() for row in state.metrics])


def optimality_csv(state: SimState) -> str:
    rows = [
        [o.step, o.task_id, repr(o.outcome), repr(o.best_outcome), repr(o.optimality), o.alternatives]
        for o in state.optimality
    ]
    return csv_text(OPTIMALITY_COLUMNS, rows)


def _read(path: Path) -> list[dict[str, str]]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass
class RunSummary:
    final: dict[str, str]
    total_questions: int
    slope: float
    intercept: float
    samples: int

    def lines(self) -> list[str]:
        if not self.final:
            return ["no metric rows", f"optimality samples: {self.samples}"]
        out = [f"final step: {self.final['step']}"]
        for c in MAE_COLUMNS:
            out.append(f"{c}: {float(self.final[c]):.4f}")
        for c in ("unknown", "correct", "incorrect"):
            out.append(f"{c}: {self.final[c]}")
        out.append(f"total questions: {self.total_questions}")
        out.append(f"optimality samples: {self.samples}")
        out.append(f"optimality slope: {self.slope:.6g}")
        out.append(f"optimality intercept: {self.intercept:.6g}")
        return out


def summarize(metrics_dir: Path) -> tuple[RunSummary, dict[str, str]]:
    """Summary of a run directory plus the text of each plot-ready table."""
    metrics = _read(metrics_dir / "metrics.csv")
    optimality = _read(metrics_dir / "optimality.csv")
    steps = [int(r["step"]) for r in optimality]
    values = [float(r["optimality"]) for r in optimality]
    slope, intercept = least_squares(steps, values)
    summary = RunSummary(
        final=metrics[-1] if metrics else {},
        total_questions=sum(int(r["questions"]) for r in metrics),
        slope=slope,
        intercept=intercept,
        samples=len(values),
    )
    tables = {
        "questions.csv": csv_text(
            ("step", "questions"), [(r["step"], r["questions"]) for r in metrics]
        ),
        "knowledge.csv": csv_text(
            ("step", "unknown", "correct", "incorrect"),
            [(r["step"], r["unknown"], r["correct"], r["incorrect"]) for r in metrics],
        ),
        "mae.csv": csv_text(
            ("step",) + MAE_COLUMNS, [[r["step"]] + [r[c] for c in MAE_COLUMNS] for r in metrics]
        ),
        "optimality_trend.csv": csv_text(
            ("step", "task_id", "optimality", "fitted"),
            [
                (s, r["task_id"], r["optimality"], repr(slope * s + intercept))
                for s, r in zip(steps, optimality)
            ],
        ),
        "optimality_fit.csv": csv_text(("slope", "intercept", "samples"), [(repr(slope), repr(intercept), len(values))]),
    }
    return summary, tables
