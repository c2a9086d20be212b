"""Composition and audit reporting for manifests.

Reports are pure functions of (manifest, pool): byte-identical across
runs. The text document summarizes achieved composition; the CSV outputs
are plot-ready (score vs rank, cumulative video ratio vs stage).
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .builder import SubsetManifest, is_temporal_positive, is_vds_positive
from .errors import ManifestError
from .profiles import GoalProfile
from .records import Pool
from .verify import FAIL, verify_manifest


def composition_report(manifest: SubsetManifest, pool: Pool) -> dict:
    """Deterministic composition summary, with red flags when the manifest
    violates its embedded profile."""
    missing = [sample_id for sample_id in manifest.ids() if sample_id not in pool]
    if missing:
        raise ManifestError(
            f"manifest references {len(missing)} unknown ids, e.g. {missing[:3]}"
        )
    records = [pool.get(sample_id) for sample_id in manifest.ids()]
    n = len(records)
    n_video = sum(1 for r in records if r.is_video)
    tpos = sum(1 for r in records if is_temporal_positive(r))
    per_source: dict[str, int] = {}
    for record in records:
        per_source[record.source] = per_source.get(record.source, 0) + 1

    scores = [r.rho for r in records if r.rho is not None]
    if scores:
        arr = np.asarray(scores)
        score_summary = {
            "min": float(arr.min()),
            "q25": float(np.percentile(arr, 25)),
            "median": float(np.median(arr)),
            "q75": float(np.percentile(arr, 75)),
            "max": float(arr.max()),
            "mean": float(arr.mean()),
        }
    else:
        score_summary = None

    red_flags: list[str] = []
    if manifest.profile is not None:
        profile = GoalProfile.from_dict(manifest.profile)
        audit = verify_manifest(manifest, pool, profile)
        red_flags = [check.line() for check in audit.checks if check.status == FAIL]

    return {
        "selected_n": n,
        "n_video": n_video,
        "n_image": n - n_video,
        "video_ratio": (n_video / n) if n else 0.0,
        "temporal_positive_videos": tpos,
        "temporal_video_ratio": (tpos / n_video) if n_video else 0.0,
        "vds_positive": sum(1 for r in records if is_vds_positive(r)),
        "per_source": dict(sorted(per_source.items())),
        "per_stage": dict(sorted(manifest.stage_counts().items())),
        "score_summary": score_summary,
        "red_flags": red_flags,
    }


def render_report(report: dict) -> str:
    lines = [
        "subset composition",
        f"  selected            {report['selected_n']}",
        f"  videos / images     {report['n_video']} / {report['n_image']}",
        f"  video ratio         {report['video_ratio']:.4f}",
        f"  temporal-positive   {report['temporal_positive_videos']} "
        f"({report['temporal_video_ratio']:.4f} of videos)",
        f"  vds-positive        {report['vds_positive']}",
        "  per source:",
    ]
    for source, count in report["per_source"].items():
        lines.append(f"    {source:<24} {count}")
    lines.append("  per stage:")
    for stage, count in report["per_stage"].items():
        lines.append(f"    {stage:<24} {count}")
    if report["score_summary"]:
        s = report["score_summary"]
        lines.append(
            "  score  min/q25/median/q75/max  "
            f"{s['min']:.4f} / {s['q25']:.4f} / {s['median']:.4f} / "
            f"{s['q75']:.4f} / {s['max']:.4f}"
        )
    if report["red_flags"]:
        lines.append("  RED FLAGS:")
        for flag in report["red_flags"]:
            lines.append(f"    {flag}")
    else:
        lines.append("  constraints: no violations")
    return "\n".join(lines)


def score_rank_csv(manifest: SubsetManifest, pool: Pool) -> str:
    """CSV of rho by descending rank over the selected records."""
    records = [pool.get(sample_id) for sample_id in manifest.ids()]
    scored = sorted(
        (r for r in records if r.rho is not None), key=lambda r: (-r.rho, r.id)
    )
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["rank", "id", "rho"])
    for rank, record in enumerate(scored, start=1):
        writer.writerow([rank, record.id, f"{record.rho:.6f}"])
    return buffer.getvalue()


def stage_ratio_csv(manifest: SubsetManifest, pool: Pool) -> str:
    """CSV of cumulative size and video ratio after each selection step,
    labeled by the stage that admitted the record."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["step", "stage", "cumulative_n", "cumulative_video_ratio"])
    n_video = 0
    for step, entry in enumerate(manifest.entries, start=1):
        if pool.get(entry.id).is_video:
            n_video += 1
        writer.writerow([step, entry.stage, step, f"{n_video / step:.6f}"])
    return buffer.getvalue()


def write_report_files(manifest: SubsetManifest, pool: Pool, out_dir: str | Path) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = composition_report(manifest, pool)
    (out_dir / "report.txt").write_text(render_report(report) + "\n")
    (out_dir / "score_vs_rank.csv").write_text(score_rank_csv(manifest, pool))
    (out_dir / "ratio_vs_stage.csv").write_text(stage_ratio_csv(manifest, pool))
    return report
