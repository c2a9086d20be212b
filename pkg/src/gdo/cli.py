"""Command-line surface.

Exit codes: 0 all checks pass, 2 constraint violation detected,
3 profile infeasible for the pool.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .builder import SubsetManifest, build_subset, draw_uniform_control
from .descriptors import ExtractionConfig, extract_all
from .efficiency import (
    delta_table,
    peak_match,
    read_trajectory,
    render_delta_table,
)
from .errors import GdoError, InfeasibleProfileError
from .normalize import NormalizationStats
from .pool_io import (
    attach_descriptors,
    ingest_pool,
    load_descriptor_table,
    write_descriptor_table,
    write_scored_table,
)
from .probes import MockProbe
from .profiles import PRESET_NAMES, resolve_profile
from .report import composition_report, render_report, write_report_files
from .scoring import score_pool
from .verify import verify_manifest

EXIT_VIOLATION = 2
EXIT_INFEASIBLE = 3


def _load_pool(path: str, skip_invalid: bool):
    pool, diagnostics = ingest_pool(path, strict=not skip_invalid)
    if diagnostics:
        click.echo(f"skipped {len(diagnostics)} invalid rows", err=True)
    return pool


def _ablate_set(ablate: str) -> frozenset[str]:
    if not ablate:
        return frozenset()
    return frozenset(part.strip().lower() for part in ablate.split(",") if part.strip())


def _prepare_scored_pool(pool, probe, descriptors, seed, n_jobs, ablate):
    """Shared extract+score path for build/score commands."""
    if probe == "external":
        if not descriptors:
            raise click.UsageError("--probe external requires --descriptors")
        rows, warnings = load_descriptor_table(descriptors)
        for warning in warnings:
            click.echo(f"descriptor table: {warning}", err=True)
        orphans = attach_descriptors(pool, rows)
        if orphans:
            click.echo(f"descriptor table: {len(orphans)} ids not in pool", err=True)
    else:
        report = extract_all(
            pool, MockProbe(seed), ExtractionConfig(seed=seed, n_jobs=n_jobs)
        )
        if report.failed:
            click.echo(report.summary(), err=True)
    stats = score_pool(pool, ablate=_ablate_set(ablate))
    return stats


@click.group()
def main():
    """Goal-driven data curation: score a pool, build subsets, audit them."""


@main.command()
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--probe", type=click.Choice(["mock", "external"]), default="mock")
@click.option("--descriptors", type=click.Path(exists=True), help="table for --probe external")
@click.option("--seed", default=0, show_default=True)
@click.option("--n-jobs", default=1, show_default=True)
@click.option("--skip-invalid", is_flag=True, help="skip malformed pool rows")
@click.option("--out", "out_path", required=True, type=click.Path())
def extract(pool_path, probe, descriptors, seed, n_jobs, skip_invalid, out_path):
    """Compute the descriptor table for a pool."""
    pool = _load_pool(pool_path, skip_invalid)
    if probe == "external":
        if not descriptors:
            raise click.UsageError("--probe external requires --descriptors")
        rows, warnings = load_descriptor_table(descriptors)
        for warning in warnings:
            click.echo(f"descriptor table: {warning}", err=True)
        attach_descriptors(pool, rows)
    else:
        report = extract_all(
            pool, MockProbe(seed), ExtractionConfig(seed=seed, n_jobs=n_jobs)
        )
        click.echo(report.summary(), err=True)
    write_descriptor_table(pool, out_path)
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--probe", type=click.Choice(["mock", "external"]), default="mock")
@click.option("--descriptors", type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--n-jobs", default=1, show_default=True)
@click.option("--ablate", default="", help="comma list from vds,ppl,sc")
@click.option("--skip-invalid", is_flag=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--stats-out", type=click.Path(), help="persist normalization stats")
def score(pool_path, probe, descriptors, seed, n_jobs, ablate, skip_invalid, out_path, stats_out):
    """Score a pool: descriptor table plus rho and breakdown columns."""
    pool = _load_pool(pool_path, skip_invalid)
    stats = _prepare_scored_pool(pool, probe, descriptors, seed, n_jobs, ablate)
    write_scored_table(pool, out_path)
    if stats_out:
        stats.save(stats_out)
    click.echo(f"wrote {out_path} (stats snapshot {stats.snapshot_id()})")


@main.command()
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--profile", "profile_name", required=True,
              help=f"preset ({', '.join(PRESET_NAMES)}) or profile file")
@click.option("--probe", type=click.Choice(["mock", "external"]), default="mock")
@click.option("--descriptors", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="overrides the profile seed")
@click.option("--n-jobs", default=1, show_default=True)
@click.option("--ablate", default="")
@click.option("--skip-invalid", is_flag=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def build(pool_path, profile_name, probe, descriptors, seed, n_jobs, ablate, skip_invalid, out_path):
    """Build the 1x optimized subset for a goal profile."""
    pool = _load_pool(pool_path, skip_invalid)
    profile = resolve_profile(profile_name)
    run_seed = profile.seed if seed is None else seed
    stats = _prepare_scored_pool(pool, probe, descriptors, run_seed, n_jobs, ablate)
    try:
        manifest = build_subset(
            pool, profile, seed=run_seed, stats_snapshot=stats.snapshot_id()
        )
    except InfeasibleProfileError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_INFEASIBLE)
    manifest.write(out_path)
    audit = manifest.audit
    click.echo(
        f"wrote {out_path}: {audit['selected_n']} ids, "
        f"video ratio {audit['video_ratio']:.4f}, "
        f"temporal ratio {audit['temporal_video_ratio']:.4f}"
    )


@main.command()
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--size", required=True, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--skip-invalid", is_flag=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def control(pool_path, size, seed, skip_invalid, out_path):
    """Draw the seeded uniform control subset."""
    pool = _load_pool(pool_path, skip_invalid)
    manifest = draw_uniform_control(pool, size, seed)
    manifest.write(out_path)
    click.echo(f"wrote {out_path}: {manifest.audit['selected_n']} ids")


def _ensure_descriptors(pool, descriptors, seed, warn_mock: bool) -> None:
    """Attach a descriptor table, or fall back to mock re-extraction."""
    if descriptors:
        rows, warnings = load_descriptor_table(descriptors)
        for warning in warnings:
            click.echo(f"descriptor table: {warning}", err=True)
        attach_descriptors(pool, rows)
    elif any(record.descriptors is None for record in pool):
        if warn_mock:
            click.echo(
                f"pool carries no descriptors; re-deriving with the mock probe "
                f"(seed {seed}) — pass --descriptors if the build used an "
                "external probe",
                err=True,
            )
        extract_all(pool, MockProbe(seed), ExtractionConfig(seed=seed))


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--profile", "profile_name", required=True)
@click.option("--descriptors", type=click.Path(exists=True),
              help="descriptor table the build used")
@click.option("--seed", type=int, default=None,
              help="mock-probe seed when re-deriving descriptors (default: manifest seed)")
@click.option("--skip-invalid", is_flag=True)
def verify(manifest_path, pool_path, profile_name, descriptors, seed, skip_invalid):
    """Recompute every constraint of a manifest from scratch."""
    pool = _load_pool(pool_path, skip_invalid)
    manifest = SubsetManifest.read(manifest_path)
    profile = resolve_profile(profile_name)
    _ensure_descriptors(
        pool, descriptors, manifest.seed if seed is None else seed, warn_mock=True
    )
    try:
        report = verify_manifest(manifest, pool, profile)
    except GdoError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_VIOLATION)
    click.echo(report.render())
    if not report.passed:
        sys.exit(EXIT_VIOLATION)


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--descriptors", type=click.Path(exists=True),
              help="descriptor table the build used")
@click.option("--seed", type=int, default=None,
              help="mock-probe seed when re-deriving descriptors (default: manifest seed)")
@click.option("--skip-invalid", is_flag=True)
@click.option("--out-dir", type=click.Path(), default=None)
def report(manifest_path, pool_path, descriptors, seed, skip_invalid, out_dir):
    """Composition report for a manifest (text plus plot-ready CSVs)."""
    pool = _load_pool(pool_path, skip_invalid)
    manifest = SubsetManifest.read(manifest_path)
    _ensure_descriptors(
        pool, descriptors, manifest.seed if seed is None else seed, warn_mock=False
    )
    score_pool(pool)
    if out_dir:
        summary = write_report_files(manifest, pool, out_dir)
    else:
        summary = composition_report(manifest, pool)
    click.echo(render_report(summary))
    if summary["red_flags"]:
        sys.exit(EXIT_VIOLATION)


@main.command()
@click.option("--trajectory", "trajectory_path", required=True, type=click.Path(exists=True))
@click.option("--reference", required=True, type=float, help="baseline reference score")
@click.option("--budget", required=True, type=int, help="baseline training budget in samples")
def efficiency(trajectory_path, reference, budget):
    """Peak match, reduction, and endpoint delta for a trajectory."""
    trajectory = read_trajectory(trajectory_path)
    result = peak_match(trajectory, reference, budget)
    for line in result.lines():
        click.echo(line)


@main.command()
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True),
              help="JSON map benchmark -> score")
@click.option("--baseline", "baseline_path", required=True, type=click.Path(exists=True))
def delta(scores_path, baseline_path):
    """Per-benchmark pp deltas against the fixed baseline."""
    ours = json.loads(Path(scores_path).read_text())
    base = json.loads(Path(baseline_path).read_text())
    click.echo(render_delta_table(delta_table(ours, base)))


@main.command()
@click.option("--pool", "pool_path", type=click.Path(exists=True))
@click.option("--descriptors", "descriptors_path", type=click.Path(exists=True))
def validate(pool_path, descriptors_path):
    """Validate a pool file and/or a descriptor table; exits 2 on warnings."""
    if not pool_path and not descriptors_path:
        raise click.UsageError("provide --pool and/or --descriptors")
    failed = False
    pool = None
    if pool_path:
        try:
            pool, _ = ingest_pool(pool_path, strict=True)
            click.echo(f"pool: {len(pool)} records, 0 warnings")
        except GdoError as exc:
            click.echo(f"pool: {exc}", err=True)
            failed = True
    if descriptors_path:
        rows, warnings = load_descriptor_table(descriptors_path)
        for warning in warnings:
            click.echo(f"descriptors: {warning}", err=True)
        if warnings:
            failed = True
        else:
            click.echo(f"descriptors: {len(rows)} rows, 0 warnings")
        if pool is not None and not warnings:
            missing = [record.id for record in pool if record.id not in rows]
            orphans = [sample_id for sample_id in rows if sample_id not in pool]
            if missing:
                click.echo(f"descriptors: {len(missing)} pool ids missing", err=True)
                failed = True
            if orphans:
                click.echo(f"descriptors: {len(orphans)} ids not in pool", err=True)
                failed = True
    if failed:
        sys.exit(EXIT_VIOLATION)


if __name__ == "__main__":
    main()
