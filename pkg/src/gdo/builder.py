"""Staged construction of budget- and composition-constrained subsets.

The fill is priority-ordered and cumulative: temporal-video minima, then
video-ratio minima, source floors, stratum quotas from per-stratum top-k
reservoirs, and finally the global score tail (reservoir union first, full
candidate list as fallback). Records admitted by an earlier stage count
toward every later stage's totals. Everything is deterministic given
(pool order, profile, seed): candidates are ranked by descending rho with
ids breaking ties.

Feasibility: the builder emits exactly ``min(n_target, feasible size)``
ids. When no subset size at all can satisfy the ratio band and temporal
floor against pool availability, it raises
:class:`~gdo.errors.InfeasibleProfileError` naming the binding constraint —
never a silently violating manifest. Stratum quotas and source floors are
soft: they degrade first and every relaxation lands in the audit.
"""

from __future__ import annotations

import heapq
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .dedup import dedup_and_cap, dedup_key
from .errors import InfeasibleProfileError, ManifestError
from .profiles import GoalProfile
from .records import Pool, SampleRecord
from .strata import TEMPORAL_POSITIVE_THRESHOLD

BUILD_STAGES = (
    "temporal_min",
    "video_ratio_min",
    "source_floor",
    "stratum_quota",
    "score_tail",
    "reservoir_fallback",
)
CONTROL_STAGE = "uniform_control"

_EPS = 1e-9


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _ceil_ratio(ratio: float, n: int) -> int:
    return int(math.ceil(ratio * n - _EPS))


def _floor_ratio(ratio: float, n: int) -> int:
    return int(math.floor(ratio * n + _EPS))


def is_temporal_positive(record: SampleRecord) -> bool:
    return (
        record.is_video
        and record.descriptors is not None
        and record.descriptors.m_tnc >= TEMPORAL_POSITIVE_THRESHOLD
    )


def is_vds_positive(record: SampleRecord) -> bool:
    return record.descriptors is not None and record.descriptors.m_vds > 0.0


@dataclass
class ManifestEntry:
    id: str
    stage: str


@dataclass
class SubsetManifest:
    """Ordered selection with per-stage provenance and an audit summary."""

    entries: list[ManifestEntry]
    audit: dict
    profile: dict | None = None
    seed: int = 0
    stats_snapshot: str | None = None

    def ids(self) -> list[str]:
        return [entry.id for entry in self.entries]

    def stage_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for entry in self.entries:
            counts[entry.stage] = counts.get(entry.stage, 0) + 1
        return counts

    def write(self, path: str | Path) -> None:
        path = Path(path)
        with path.open("w", encoding="utf-8") as handle:
            for entry in self.entries:
                handle.write(
                    json.dumps({"id": entry.id, "stage": entry.stage}, sort_keys=True)
                    + "\n"
                )
            summary = {
                "audit": self.audit,
                "profile": self.profile,
                "seed": self.seed,
                "stats_snapshot": self.stats_snapshot,
            }
            handle.write(json.dumps(summary, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "SubsetManifest":
        path = Path(path)
        entries: list[ManifestEntry] = []
        summary: dict | None = None
        with path.open("r", encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                obj = json.loads(line)
                if "audit" in obj:
                    summary = obj
                elif "id" in obj:
                    entries.append(ManifestEntry(id=obj["id"], stage=obj["stage"]))
                else:
                    raise ManifestError(f"unrecognized manifest line: {line.strip()}")
        if summary is None:
            raise ManifestError(f"manifest {path} has no audit summary line")
        return cls(
            entries=entries,
            audit=summary["audit"],
            profile=summary.get("profile"),
            seed=summary.get("seed", 0),
            stats_snapshot=summary.get("stats_snapshot"),
        )


class _RankedId:
    """Inverts string ordering so a min-heap keeps lexicographically
    smaller ids on equal scores."""

    __slots__ = ("value",)

    def __init__(self, value: str):
        self.value = value

    def __lt__(self, other: "_RankedId") -> bool:
        return self.value > other.value


class Reservoir:
    """Bounded max-score buffer: top-k by rho, ties to the smaller id."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"reservoir capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._heap: list[tuple[float, _RankedId, SampleRecord]] = []

    def offer(self, record: SampleRecord) -> None:
        item = (record.rho, _RankedId(record.id), record)
        if len(self._heap) < self.capacity:
            heapq.heappush(self._heap, item)
        elif self._heap[0] < item:
            heapq.heapreplace(self._heap, item)

    def records(self) -> list[SampleRecord]:
        """Members ordered by descending rho, then ascending id."""
        return [
            item[2]
            for item in sorted(self._heap, key=lambda it: (-it[0], it[2].id))
        ]

    def __len__(self) -> int:
        return len(self._heap)


def fill_reservoirs(pool, capacity) -> dict[str, Reservoir]:
    """One streaming pass building a top-k reservoir per stratum.

    ``capacity`` is an int applied to every stratum or a mapping from
    stratum key to capacity.
    """
    reservoirs: dict[str, Reservoir] = {}
    for record in pool:
        if record.rho is None:
            raise ValueError(f"record {record.id} is not scored")
        key = record.strata.key()
        if key not in reservoirs:
            cap = capacity.get(key, 1) if isinstance(capacity, dict) else capacity
            reservoirs[key] = Reservoir(cap)
        reservoirs[key].offer(record)
    return reservoirs


@dataclass
class SelectionPlan:
    n_total: int
    n_video: int
    n_image: int
    t_need: int


def plan_counts(
    n_videos: int, n_images: int, n_temporal_positive: int, profile: GoalProfile
) -> SelectionPlan:
    """Find the largest feasible subset size and its modality split.

    Scans budget sizes downward until an integer video count exists inside
    the ratio band that availability (videos, images, temporal-positive
    videos) can support. Raises when even size 1 fails.
    """
    cap = min(profile.n_target, n_videos + n_images)
    for n in range(cap, 0, -1):
        lo = max(_ceil_ratio(profile.video_ratio_min, n), n - n_images)
        hi = min(_floor_ratio(profile.video_ratio_max, n), n_videos)
        if profile.temporal_video_min > 0:
            hi = min(
                hi, int(math.floor(n_temporal_positive / profile.temporal_video_min + _EPS))
            )
        if lo <= hi:
            n_video = min(max(_round_half_up(profile.video_ratio * n), lo), hi)
            t_need = _ceil_ratio(profile.temporal_video_min, n_video)
            return SelectionPlan(n, n_video, n - n_video, t_need)

    if n_videos == 0 and profile.video_ratio_min > 0:
        raise InfeasibleProfileError(
            "video_ratio_min",
            f"video_ratio_min={profile.video_ratio_min} but the pool has no videos",
        )
    if (
        profile.temporal_video_min > 0
        and n_temporal_positive == 0
        and profile.video_ratio_min > 0
    ):
        raise InfeasibleProfileError(
            "temporal_floor",
            f"temporal_video_min={profile.temporal_video_min} but the pool has "
            "no temporal-positive videos",
        )
    if n_images == 0 and profile.video_ratio_max < 1:
        raise InfeasibleProfileError(
            "video_ratio_max",
            f"video_ratio_max={profile.video_ratio_max} requires images but the "
            "pool has none",
        )
    raise InfeasibleProfileError(
        "video_ratio_band",
        "no subset size admits a video count inside "
        f"[{profile.video_ratio_min}, {profile.video_ratio_max}] with "
        f"{n_videos} videos / {n_images} images / {n_temporal_positive} "
        "temporal-positive available",
    )


def _stratum_quotas(candidates: list[SampleRecord], plan: SelectionPlan) -> dict[str, int]:
    """Pool-marginal quotas within each modality lane.

    Quotas floor rather than round so their sum never exceeds the lane;
    the rounding slack goes to the score tail.
    """
    video_counts: dict[str, int] = {}
    image_counts: dict[str, int] = {}
    n_vid = n_img = 0
    for record in candidates:
        key = record.strata.key()
        if record.is_video:
            video_counts[key] = video_counts.get(key, 0) + 1
            n_vid += 1
        else:
            image_counts[key] = image_counts.get(key, 0) + 1
            n_img += 1
    quotas: dict[str, int] = {}
    for key, count in video_counts.items():
        quotas[key] = (plan.n_video * count) // n_vid if n_vid else 0
    for key, count in image_counts.items():
        quotas[key] = (plan.n_image * count) // n_img if n_img else 0
    return quotas


def build_subset(
    pool: Pool,
    profile: GoalProfile,
    seed: int | None = None,
    stats_snapshot: str | None = None,
    max_stage: int = 5,
) -> SubsetManifest:
    """Run the staged fill and return the audited manifest.

    ``max_stage`` truncates the pipeline after the given stage (1-5); the
    default runs everything. Useful for auditing stage contributions.
    """
    profile.validate()
    seed = profile.seed if seed is None else seed

    scored = [r for r in pool if r.rho is not None and r.descriptors is not None]
    excluded = len(pool) - len(scored)
    candidates_pool = dedup_and_cap(Pool(scored), profile.qa_per_video_cap)
    candidates = candidates_pool.records

    if not candidates:
        flags = ["budget_shortfall_pool"]
        if excluded:
            flags.append("unscored_records_excluded")
        audit = _audit(candidates_pool, [], None, profile, [], flags, excluded)
        return SubsetManifest(
            entries=[],
            audit=audit,
            profile=profile.to_dict(),
            seed=seed,
            stats_snapshot=stats_snapshot,
        )

    videos = [r for r in candidates if r.is_video]
    images = [r for r in candidates if not r.is_video]
    tpos_avail = sum(1 for r in videos if is_temporal_positive(r))
    plan = plan_counts(len(videos), len(images), tpos_avail, profile)

    flags: list[str] = []
    if len(candidates) < profile.n_target:
        flags.append("budget_shortfall_pool")
    if plan.n_total < min(profile.n_target, len(candidates)):
        flags.append("budget_reduced_for_feasibility")
    if excluded:
        flags.append("unscored_records_excluded")

    order = sorted(candidates, key=lambda r: (-r.rho, r.id))
    selected: dict[str, str] = {}
    counts = {"video": 0, "image": 0}

    def lane_open(record: SampleRecord) -> bool:
        if record.is_video:
            return counts["video"] < plan.n_video
        return counts["image"] < plan.n_image

    def take(record: SampleRecord, stage: str) -> None:
        selected[record.id] = stage
        counts[record.modality] += 1

    # Stage 1: temporal-video minimum.
    t_taken = 0
    for record in order:
        if t_taken >= plan.t_need:
            break
        if is_temporal_positive(record) and record.id not in selected and lane_open(record):
            take(record, "temporal_min")
            t_taken += 1

    # Stage 2: video-ratio minimum.
    if max_stage >= 2:
        min_videos = _ceil_ratio(profile.video_ratio_min, plan.n_total)
        for record in order:
            if counts["video"] >= min_videos:
                break
            if record.is_video and record.id not in selected and lane_open(record):
                take(record, "video_ratio_min")

    relaxations: list[dict] = []

    # Stage 3: source floors.
    if max_stage >= 3:
        floors = profile.resolved_source_floors()
        for source in sorted(floors):
            have = sum(
                1 for rid in selected if candidates_pool.get(rid).source == source
            )
            need = floors[source] - have
            if need <= 0:
                continue
            for record in order:
                if need <= 0:
                    break
                if (
                    record.source == source
                    and record.id not in selected
                    and lane_open(record)
                ):
                    take(record, "source_floor")
                    need -= 1
            if need > 0:
                unselected = [
                    r for r in candidates if r.source == source and r.id not in selected
                ]
                relaxations.append(
                    {
                        "constraint": "source_floor",
                        "source": source,
                        "requested": floors[source],
                        "achieved": floors[source] - need,
                        "reason": "source_exhausted" if not unselected else "lane_budget",
                    }
                )

    # Stage 4: stratum quotas, served from per-stratum reservoirs.
    quotas = _stratum_quotas(candidates, plan)
    capacities = {
        key: max(1, math.ceil(profile.oversample_factor * quota))
        for key, quota in quotas.items()
    }
    reservoirs = fill_reservoirs(candidates_pool, capacities)
    if max_stage >= 4:
        stratum_have: dict[str, int] = {}
        for rid in selected:
            key = candidates_pool.get(rid).strata.key()
            stratum_have[key] = stratum_have.get(key, 0) + 1
        quota_unmet = 0
        for key in sorted(quotas):
            need = quotas[key] - stratum_have.get(key, 0)
            for record in reservoirs[key].records():
                if need <= 0:
                    break
                if record.id not in selected and lane_open(record):
                    take(record, "stratum_quota")
                    need -= 1
            if need > 0:
                quota_unmet += need
        if quota_unmet:
            relaxations.append(
                {
                    "constraint": "stratum_quota",
                    "requested": sum(quotas.values()),
                    "achieved": sum(quotas.values()) - quota_unmet,
                    "reason": "reservoir_or_lane_budget",
                }
            )

    # Stage 5: score tail — video-dependence top-up first, then pure rank.
    if max_stage >= 5:
        in_reservoir = {
            record.id for reservoir in reservoirs.values() for record in reservoir.records()
        }

        def tail_stage(record: SampleRecord) -> str:
            return "score_tail" if record.id in in_reservoir else "reservoir_fallback"

        vds_need = profile.vds_positive_target - sum(
            1 for rid in selected if is_vds_positive(candidates_pool.get(rid))
        )
        if vds_need > 0:
            for record in order:
                if vds_need <= 0:
                    break
                if (
                    is_vds_positive(record)
                    and record.id not in selected
                    and lane_open(record)
                ):
                    take(record, tail_stage(record))
                    vds_need -= 1
            if vds_need > 0:
                remaining = [
                    r for r in candidates if is_vds_positive(r) and r.id not in selected
                ]
                relaxations.append(
                    {
                        "constraint": "vds_positive",
                        "requested": profile.vds_positive_target,
                        "achieved": profile.vds_positive_target - vds_need,
                        "reason": "pool_exhausted" if not remaining else "lane_budget",
                    }
                )

        for record in order:
            if counts["video"] >= plan.n_video and counts["image"] >= plan.n_image:
                break
            if record.id not in selected and lane_open(record):
                take(record, tail_stage(record))

    entries = [ManifestEntry(id=rid, stage=stage) for rid, stage in selected.items()]
    audit = _audit(candidates_pool, entries, plan, profile, relaxations, flags, excluded)
    return SubsetManifest(
        entries=entries,
        audit=audit,
        profile=profile.to_dict(),
        seed=seed,
        stats_snapshot=stats_snapshot,
    )


def _audit(
    pool: Pool,
    entries: list[ManifestEntry],
    plan: SelectionPlan | None,
    profile: GoalProfile | None,
    relaxations: list[dict],
    flags: list[str],
    excluded_unscored: int = 0,
) -> dict:
    records = [pool.get(entry.id) for entry in entries]
    n = len(records)
    n_video = sum(1 for r in records if r.is_video)
    tpos = sum(1 for r in records if is_temporal_positive(r))
    per_source: dict[str, int] = {}
    for record in records:
        per_source[record.source] = per_source.get(record.source, 0) + 1
    per_stage: dict[str, int] = {}
    for entry in entries:
        per_stage[entry.stage] = per_stage.get(entry.stage, 0) + 1
    return {
        "requested_n": profile.n_target if profile else n,
        "selected_n": n,
        "n_video": n_video,
        "n_image": n - n_video,
        "video_ratio": (n_video / n) if n else 0.0,
        "temporal_positive_videos": tpos,
        "temporal_video_ratio": (tpos / n_video) if n_video else 0.0,
        "vds_positive": sum(1 for r in records if is_vds_positive(r)),
        "per_source": dict(sorted(per_source.items())),
        "per_stage": dict(sorted(per_stage.items())),
        "relaxations": relaxations,
        "flags": sorted(flags),
        "excluded_unscored": excluded_unscored,
        "planned": (
            {
                "n_total": plan.n_total,
                "n_video": plan.n_video,
                "n_image": plan.n_image,
                "temporal_need": plan.t_need,
            }
            if plan
            else None
        ),
    }


def draw_uniform_control(pool: Pool, size: int, seed: int = 0) -> SubsetManifest:
    """Seeded uniform sample without replacement (the 10x control).

    Requests above the pool size saturate and set a ``control_saturated``
    audit flag.
    """
    if size < 0:
        raise ValueError(f"size must be >= 0, got {size}")
    flags = []
    n = size
    if size > len(pool):
        n = len(pool)
        flags.append("control_saturated")
    rng = random.Random(seed)
    chosen = rng.sample(pool.records, n)
    entries = [ManifestEntry(id=record.id, stage=CONTROL_STAGE) for record in chosen]
    audit = _audit(pool, entries, None, None, [], flags)
    audit["requested_n"] = size
    return SubsetManifest(entries=entries, audit=audit, profile=None, seed=seed)


def check_no_duplicate_keys(records: list[SampleRecord]) -> list[tuple[str, str]]:
    """Pairs of ids sharing a dedup key (first occurrence vs offender)."""
    seen: dict = {}
    pairs = []
    for record in records:
        key = dedup_key(record)
        if key in seen:
            pairs.append((seen[key], record.id))
        else:
            seen[key] = record.id
    return pairs
