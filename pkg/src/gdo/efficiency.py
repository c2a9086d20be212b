"""Training-efficiency accounting over accuracy-vs-samples trajectories.

Peak match is the first recorded point at or above the reference — no
interpolation. Reduction is the baseline budget over that sample count,
printed to one decimal with half-up rounding.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path


@dataclass
class TrajectoryPoint:
    samples_seen: int
    accuracy: float


@dataclass
class EfficiencyReport:
    reference_score: float
    baseline_budget: int
    final_score: float
    delta_pp: float
    peak_match_samples: int | None = None
    reduction: float | None = None

    def lines(self) -> list[str]:
        out = [
            f"reference     {self.reference_score:.2f}",
            f"final         {self.final_score:.2f}",
            f"delta         {format_delta(self.delta_pp)} pp",
        ]
        if self.peak_match_samples is None:
            out.append("peak match    never reached")
        else:
            out.append(f"peak match    {self.peak_match_samples} samples")
            out.append(f"reduction     {self.reduction:.1f}x of {self.baseline_budget}")
        return out


def round_half_up(value: float, decimals: int = 1) -> float:
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def format_delta(delta: float) -> str:
    return f"{round_half_up(delta, 2):+.2f}"


def validate_trajectory(points: list[TrajectoryPoint]) -> None:
    if not points:
        raise ValueError("trajectory is empty")
    for prev, cur in zip(points, points[1:]):
        if cur.samples_seen <= prev.samples_seen:
            raise ValueError(
                "trajectory must be strictly increasing in samples_seen "
                f"({prev.samples_seen} then {cur.samples_seen})"
            )
    for point in points:
        if point.samples_seen < 0:
            raise ValueError(f"negative samples_seen {point.samples_seen}")
        if not 0.0 <= point.accuracy <= 100.0:
            raise ValueError(f"accuracy {point.accuracy} outside [0, 100]")


def read_trajectory(path: str | Path) -> list[TrajectoryPoint]:
    """Two-column CSV with a ``samples_seen,accuracy`` header."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"samples_seen", "accuracy"}
        if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
            raise ValueError(
                f"trajectory header must contain {sorted(required)}, "
                f"got {reader.fieldnames}"
            )
        points = [
            TrajectoryPoint(int(row["samples_seen"]), float(row["accuracy"]))
            for row in reader
        ]
    validate_trajectory(points)
    return points


def peak_match(
    trajectory: list[TrajectoryPoint], reference_score: float, baseline_budget: int
) -> EfficiencyReport:
    """First crossing of the reference, with reduction and endpoint delta."""
    if not 0.0 <= reference_score <= 100.0:
        raise ValueError(f"reference_score {reference_score} outside [0, 100]")
    validate_trajectory(trajectory)
    final = trajectory[-1].accuracy
    report = EfficiencyReport(
        reference_score=reference_score,
        baseline_budget=baseline_budget,
        final_score=final,
        delta_pp=final - reference_score,
    )
    for point in trajectory:
        if point.accuracy >= reference_score:
            report.peak_match_samples = point.samples_seen
            report.reduction = round_half_up(baseline_budget / point.samples_seen, 1)
            break
    return report


def delta_table(gdo_scores: dict[str, float], baseline_scores: dict[str, float]):
    """Per-benchmark deltas in pp, two decimals, against the fixed baseline."""
    if set(gdo_scores) != set(baseline_scores):
        only_ours = sorted(set(gdo_scores) - set(baseline_scores))
        only_base = sorted(set(baseline_scores) - set(gdo_scores))
        raise ValueError(
            f"benchmark keys mismatch: only in scores {only_ours}, "
            f"only in baseline {only_base}"
        )
    rows = []
    for benchmark in sorted(gdo_scores):
        ours = gdo_scores[benchmark]
        base = baseline_scores[benchmark]
        rows.append(
            {
                "benchmark": benchmark,
                "score": ours,
                "baseline": base,
                "delta_pp": format_delta(ours - base),
            }
        )
    return rows


def render_delta_table(rows) -> str:
    width = max([len(r["benchmark"]) for r in rows] + [9])
    lines = [f"{'benchmark':<{width}}  {'score':>7}  {'baseline':>8}  {'delta':>7}"]
    for row in rows:
        lines.append(
            f"{row['benchmark']:<{width}}  {row['score']:>7.2f}  "
            f"{row['baseline']:>8.2f}  {row['delta_pp']:>7}"
        )
    return "\n".join(lines)
