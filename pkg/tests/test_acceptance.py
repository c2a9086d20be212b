"""Acceptance suite: one test per release criterion.

Each test prints a [ACCEPTANCE] pass/fail line (visible with ``pytest -s``
or ``-v`` via the test names). Tolerances are pinned here, not configurable.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from contextlib import contextmanager

import numpy as np
import pytest

from gdo.builder import (
    build_subset,
    is_temporal_positive,
    is_vds_positive,
)
from gdo.descriptors import ExtractionConfig, compute_self_consistency, extract_all
from gdo.efficiency import TrajectoryPoint, format_delta, peak_match
from gdo.errors import InfeasibleProfileError
from gdo.flow import BlockMatchingFlow, compute_flow
from gdo.pool_io import write_descriptor_table
from gdo.probes import MockProbe
from gdo.profiles import GoalProfile, load_preset
from gdo.records import Pool
from gdo.scoring import (
    B_IMG_WEIGHTS,
    B_VID_WEIGHTS,
    RHO_IMG_WEIGHTS,
    RHO_VID_WEIGHTS,
    score_pool,
)
from gdo.verify import verify_manifest

from conftest import described_pool, make_descriptors, make_image, make_video


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"[ACCEPTANCE] {name}: PASS")


def test_coefficient_golden():
    started = time.monotonic()
    with criterion("coefficient-golden"):
        assert B_VID_WEIGHTS == (1.0, 0.85, 0.90, 0.55, 0.15)
        assert B_IMG_WEIGHTS == (1.10, 0.85, 0.90, 0.15)
        assert RHO_VID_WEIGHTS == (0.35, 0.95, 0.35)
        assert RHO_IMG_WEIGHTS == (0.90, 0.15)
        assert time.monotonic() - started < 1.0


def test_descriptor_identities_on_1k_mock_pool():
    started = time.monotonic()
    with criterion("descriptor-identities-1k"):
        rand = random.Random(101)
        records = []
        for i in range(1000):
            if rand.random() < 0.6:
                records.append(make_video(i, rand))
            else:
                records.append(make_image(i, rand))
        pool = Pool(records)
        extract_all(pool, MockProbe(7), ExtractionConfig(seed=7))
        for record in pool:
            d = record.descriptors
            assert abs(d.m_vds - (d.loss_blind - d.loss_video)) <= 1e-12
            assert abs(d.m_ppl - math.exp(d.loss_video)) <= 1e-12
            assert 0.0 <= d.m_sc <= 1.0

        class EchoProbe(MockProbe):
            def sample_answers(self, sample, n, seed):
                return ["the same answer tokens"] * n

        sample = records[0]
        assert compute_self_consistency(sample, EchoProbe(0), 5, 0) == 1.0
        assert time.monotonic() - started < 10.0


def _feasible_case(rand: random.Random, n: int):
    """A pool plus a profile that is feasible by construction."""
    pool = described_pool(
        n,
        seed=rand.randrange(1 << 30),
        video_share=rand.uniform(0.3, 0.7),
        tpos_share=rand.uniform(0.2, 0.8),
    )
    videos = pool.videos()
    images = pool.images()
    tpos = [r for r in videos if is_temporal_positive(r)]
    n_vid = rand.randint(0, len(videos))
    n_img = rand.randint(0 if n_vid else 1, len(images))
    total = n_vid + n_img
    ratio = n_vid / total
    ratio_min = ratio * rand.uniform(0.2, 1.0)
    ratio_max = min(1.0, ratio + (1.0 - ratio) * rand.uniform(0.05, 0.8))
    if n_vid and tpos:
        t_min = min(0.95 * len(tpos) / n_vid, rand.uniform(0.0, 0.5))
    else:
        t_min = 0.0
    floors = {}
    if rand.random() < 0.4:
        source = rand.choice([r.source for r in pool])
        available = sum(1 for r in pool if r.source == source)
        floors[source] = rand.randint(0, max(1, min(available // 2, total // 4)))
    vds_available = sum(1 for r in pool if is_vds_positive(r))
    profile = GoalProfile(
        name="fuzz",
        n_target=total + (rand.randint(0, n) if rand.random() < 0.3 else 0),
        video_ratio=min(max(ratio, ratio_min), ratio_max),
        vds_positive_target=rand.randint(0, int(0.8 * min(vds_available, total))),
        video_ratio_min=ratio_min,
        video_ratio_max=ratio_max,
        temporal_video_min=t_min,
        source_floors=floors,
        qa_per_video_cap=rand.randint(1, 4),
    )
    return pool, profile


def _infeasible_case(rand: random.Random, kind: int):
    n = rand.randint(20, 80)
    if kind == 0:
        # no videos, but a positive video-ratio floor
        pool = described_pool(n, seed=rand.randrange(1 << 30), video_share=0.0)
        floor_ratio = rand.uniform(0.1, 0.9)
        profile = GoalProfile(
            name="bad", n_target=10, video_ratio=max(0.5, floor_ratio),
            vds_positive_target=0,
            video_ratio_min=floor_ratio, video_ratio_max=1.0,
            temporal_video_min=0.0,
        )
    elif kind == 1:
        # videos but zero temporal-positive, with a temporal floor
        pool = described_pool(
            n, seed=rand.randrange(1 << 30), video_share=0.6, tpos_share=0.0
        )
        profile = GoalProfile(
            name="bad", n_target=10, video_ratio=0.5, vds_positive_target=0,
            video_ratio_min=rand.uniform(0.1, 0.5), video_ratio_max=0.9,
            temporal_video_min=rand.uniform(0.05, 1.0),
        )
    else:
        # all videos, but a ratio cap that requires images
        pool = described_pool(n, seed=rand.randrange(1 << 30), video_share=1.0)
        cap = rand.uniform(0.1, 0.8)
        profile = GoalProfile(
            name="bad", n_target=10, video_ratio=cap, vds_positive_target=0,
            video_ratio_min=0.0, video_ratio_max=cap, temporal_video_min=0.0,
        )
    return pool, profile


def test_constraint_satisfaction_fuzz():
    started = time.monotonic()
    with criterion("constraint-fuzz-200-feasible-50-infeasible"):
        rand = random.Random(2024)
        sizes = [rand.randint(60, 600) for _ in range(196)] + [1500, 2500, 4000, 5000]
        for case, n in enumerate(sizes):
            pool, profile = _feasible_case(rand, n)
            score_pool(pool)
            manifest = build_subset(pool, profile)
            report = verify_manifest(manifest, pool, profile)
            assert report.passed, f"case {case}: {report.render()}"
        for case in range(50):
            pool, profile = _infeasible_case(rand, case % 3)
            score_pool(pool)
            with pytest.raises(InfeasibleProfileError) as excinfo:
                build_subset(pool, profile)
            assert excinfo.value.constraint, f"case {case} lacked a binding constraint"
        assert time.monotonic() - started < 120.0


def _tiny_case(rand: random.Random):
    n = rand.randint(4, 16)
    records = []
    for i in range(n):
        if rand.random() < 0.5:
            record = make_video(i, rand, video_id=f"c{i:03d}")
            record.descriptors = make_descriptors(
                rand, True, temporal_positive=rand.random() < 0.5
            )
        else:
            record = make_image(i, rand)
            record.descriptors = make_descriptors(rand, False)
        # unique text so dedup stays out of the oracle's way
        record.question = f"what happens in scene {i}?"
        record.answer = f"event {i} occurs"
        records.append(record)
    pool = Pool(records)
    from gdo.strata import refresh_strata

    refresh_strata(pool)
    score_pool(pool)

    videos = pool.videos()
    tpos = [r for r in videos if is_temporal_positive(r)]
    images = pool.images()
    n_vid = rand.randint(0, len(videos))
    n_img = rand.randint(0 if n_vid else 1, len(images))
    total = n_vid + n_img
    ratio = n_vid / total
    t_min = (
        min(0.9 * len(tpos) / n_vid, rand.uniform(0.0, 0.6)) if n_vid and tpos else 0.0
    )
    profile = GoalProfile(
        name="tiny", n_target=total, video_ratio=ratio,
        vds_positive_target=0, video_ratio_min=ratio, video_ratio_max=ratio,
        temporal_video_min=t_min,
    )
    return pool, profile


def _subset_feasible(records, n_vid_lo, n_vid_hi, t_floor):
    n_vid = sum(1 for r in records if r.is_video)
    if not n_vid_lo <= n_vid <= n_vid_hi:
        return False
    tpos = sum(1 for r in records if is_temporal_positive(r))
    return tpos >= math.ceil(t_floor * n_vid - 1e-9)


def test_oracle_equivalence_on_tiny_pools():
    started = time.monotonic()
    with criterion("exhaustive-oracle-100-tiny-pools"):
        rand = random.Random(77)
        for case in range(100):
            pool, profile = _tiny_case(rand)
            manifest = build_subset(pool, profile)
            chosen = [pool.get(sample_id) for sample_id in manifest.ids()]
            n = len(chosen)

            # 1) the emitted subset satisfies the constraints
            lo = math.ceil(profile.video_ratio_min * n - 1e-9)
            hi = math.floor(profile.video_ratio_max * n + 1e-9)
            assert _subset_feasible(chosen, lo, hi, profile.temporal_video_min), (
                f"case {case}: emitted subset violates constraints"
            )

            # 2) no larger subset is feasible (exhaustive over sizes)
            for size in range(min(profile.n_target, len(pool)), n, -1):
                size_lo = math.ceil(profile.video_ratio_min * size - 1e-9)
                size_hi = math.floor(profile.video_ratio_max * size + 1e-9)
                found = any(
                    _subset_feasible(combo, size_lo, size_hi, profile.temporal_video_min)
                    for combo in itertools.combinations(pool.records, size)
                )
                assert not found, f"case {case}: builder under-filled at size {size}"

            # 3) stage-greedy: within each stage the picks are the top-rho
            # eligible candidates (independent reconstruction)
            order = sorted(pool.records, key=lambda r: (-r.rho, r.id))
            stages = {e.id: e.stage for e in manifest.entries}
            n_vid_goal = sum(1 for r in chosen if r.is_video)
            t_need = math.ceil(profile.temporal_video_min * n_vid_goal - 1e-9)
            expected_stage1 = [
                r.id for r in order if is_temporal_positive(r)
            ][: max(t_need, 0)]
            actual_stage1 = [i for i, s in stages.items() if s == "temporal_min"]
            assert sorted(actual_stage1) == sorted(expected_stage1), (
                f"case {case}: temporal_min stage not top-rho"
            )

            taken = set(expected_stage1)
            min_videos = math.ceil(profile.video_ratio_min * n - 1e-9)
            have_videos = len(expected_stage1)
            expected_stage2 = []
            for record in order:
                if have_videos >= min_videos:
                    break
                if record.is_video and record.id not in taken:
                    expected_stage2.append(record.id)
                    taken.add(record.id)
                    have_videos += 1
            actual_stage2 = [i for i, s in stages.items() if s == "video_ratio_min"]
            assert sorted(actual_stage2) == sorted(expected_stage2), (
                f"case {case}: video_ratio_min stage not top-rho"
            )
        assert time.monotonic() - started < 120.0


def _pipeline_manifest_bytes(tmp_path, tag: str, n_jobs: int) -> bytes:
    rand = random.Random(55)
    records = []
    for i in range(300):
        if rand.random() < 0.6:
            records.append(make_video(i, rand))
        else:
            records.append(make_image(i, rand))
    pool = Pool(records)
    extract_all(pool, MockProbe(3), ExtractionConfig(seed=3, n_jobs=n_jobs))
    stats = score_pool(pool)
    profile = GoalProfile(
        name="det", n_target=120, video_ratio=0.5, vds_positive_target=30,
        video_ratio_min=0.35, video_ratio_max=0.65, temporal_video_min=0.2,
    )
    manifest = build_subset(pool, profile, seed=11, stats_snapshot=stats.snapshot_id())
    path = tmp_path / f"manifest_{tag}.jsonl"
    manifest.write(path)
    return path.read_bytes()


def test_determinism_across_runs_and_workers(tmp_path):
    with criterion("byte-identical-manifests-3-runs-1-4-8-workers"):
        runs = [
            _pipeline_manifest_bytes(tmp_path, f"run{i}", n_jobs=1) for i in range(3)
        ]
        assert runs[0] == runs[1] == runs[2]
        workers = [
            _pipeline_manifest_bytes(tmp_path, f"jobs{j}", n_jobs=j) for j in (1, 4, 8)
        ]
        assert workers[0] == workers[1] == workers[2]
        assert runs[0] == workers[0]


def test_released_preset_fidelity():
    with criterion("released-preset-table-exact"):
        expected = {
            "minloss": (12900, 0.32, 2600, 0.15, 0.32, 0.05),
            "diverse": (42900, 0.45, 5000, 0.25, 0.45, 0.15),
            "temp": (33300, 0.50, 6500, 0.35, 0.50, 0.20),
            "temp_plus": (53300, 0.59, 9000, 0.50, 0.64, 0.38),
        }
        for name, cells in expected.items():
            profile = load_preset(name)
            assert (
                profile.n_target,
                profile.video_ratio,
                profile.vds_positive_target,
                profile.video_ratio_min,
                profile.video_ratio_max,
                profile.temporal_video_min,
            ) == cells


def test_efficiency_arithmetic_reproduces_released_rows():
    with criterion("efficiency-arithmetic-four-rows"):
        rows = [
            (62.27, 35_400, 63.65, 14.5, "+1.38"),
            (61.22, 26_600, 62.89, 19.2, "+1.67"),
            (43.81, 27_300, 46.89, 18.8, "+3.08"),
            (40.22, 34_700, 41.06, 14.8, "+0.84"),
        ]
        for reference, crossing, final, reduction, delta in rows:
            trajectory = [
                TrajectoryPoint(crossing - 5000, reference - 1.0),
                TrajectoryPoint(crossing, reference),
                TrajectoryPoint(crossing + 40_000, final),
            ]
            report = peak_match(trajectory, reference, 512_000)
            assert report.peak_match_samples == crossing
            assert report.reduction == reduction
            assert format_delta(report.delta_pp) == delta


def _profile_order_pool(seed: int) -> Pool:
    """Temporal supply is scarce and anticorrelated with score, so the
    profile floors bind: the regime the released presets are shaped for."""
    rand = random.Random(seed)
    n = rand.randint(700, 1300)
    n_videos = int(0.42 * n)
    n_tpos = max(4, n // 160)
    records = []
    for i in range(n_videos):
        tpos = i < n_tpos
        record = make_video(i, rand, source="vid_a" if i % 2 else "vid_b")
        record.descriptors = make_descriptors(
            rand, True, temporal_positive=tpos, vds_positive=False if tpos else None
        )
        if tpos:
            record.descriptors.m_sc = rand.uniform(0.0, 0.15)
            record.descriptors.m_cov = rand.uniform(0.0, 0.15)
        records.append(record)
    for i in range(n_videos, n):
        record = make_image(i, rand, source="img_a" if i % 2 else "img_b")
        record.descriptors = make_descriptors(rand, False)
        records.append(record)
    pool = Pool(records)
    from gdo.strata import refresh_strata

    refresh_strata(pool)
    score_pool(pool)
    return pool


def test_profile_order_property():
    with criterion("profile-order-20-synthetic-pools"):
        for seed in range(20):
            pool = _profile_order_pool(3000 + seed)
            video_ratios = []
            temporal_ratios = []
            for name in ("minloss", "diverse", "temp", "temp_plus"):
                manifest = build_subset(pool, load_preset(name), seed=seed)
                video_ratios.append(manifest.audit["video_ratio"])
                temporal_ratios.append(manifest.audit["temporal_video_ratio"])
            for a, b in zip(video_ratios, video_ratios[1:]):
                assert b >= a - 1e-12, f"seed {seed}: video ratios {video_ratios}"
            for a, b in zip(temporal_ratios, temporal_ratios[1:]):
                assert b >= a - 1e-12, f"seed {seed}: temporal ratios {temporal_ratios}"


def test_flow_sanity():
    with criterion("flow-constant-zero-and-translation-five"):
        frame = np.full((48, 48), 11.0)
        assert compute_flow([frame, frame, frame]) == 0.0

        canvas = np.random.default_rng(5).uniform(0.0, 255.0, size=(80, 80))
        frame_a = canvas[:64, :64]
        frame_b = canvas[3 : 64 + 3, 4 : 64 + 4]
        estimator = BlockMatchingFlow(block_size=8, search_radius=5)
        value = compute_flow([frame_a, frame_b], estimator)
        assert abs(value - 5.0) <= 0.25


def test_descriptor_table_round_trip_smoke(tmp_path):
    # not a numbered criterion, but the acceptance run should prove the
    # wire format used above is the shipped one
    rand = random.Random(9)
    records = [make_video(i, rand) for i in range(10)]
    pool = Pool(records)
    extract_all(pool, MockProbe(0))
    path = tmp_path / "desc.jsonl"
    write_descriptor_table(pool, path)
    from gdo.pool_io import load_descriptor_table

    rows, warnings = load_descriptor_table(path)
    assert warnings == []
    assert len(rows) == 10
