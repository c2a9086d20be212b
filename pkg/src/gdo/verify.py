"""Independent constraint checker for manifests.

This module recomputes every constraint from the manifest's id list and the
pool records alone — it deliberately shares no selection logic with the
builder, so a builder bug cannot hide itself. Relaxations the builder
declared in the audit downgrade a miss to RELAXED (visible, not silent);
an undeclared miss is a FAIL.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass

from .errors import ManifestError
from .profiles import GoalProfile
from .records import Pool
from .strata import TEMPORAL_POSITIVE_THRESHOLD

PASS = "PASS"
FAIL = "FAIL"
RELAXED = "RELAXED"

_EPS = 1e-9


@dataclass
class ConstraintCheck:
    name: str
    status: str
    achieved: float
    required: float
    note: str = ""

    def line(self) -> str:
        text = f"{self.status:7s} {self.name}: achieved {self.achieved:g}, required {self.required:g}"
        if self.note:
            text += f" ({self.note})"
        return text


@dataclass
class AuditReport:
    checks: list[ConstraintCheck]

    @property
    def passed(self) -> bool:
        return all(check.status != FAIL for check in self.checks)

    def failures(self) -> list[ConstraintCheck]:
        return [check for check in self.checks if check.status == FAIL]

    def render(self) -> str:
        return "\n".join(check.line() for check in self.checks)


def _declared(audit: dict, constraint: str, source: str | None = None) -> dict | None:
    for entry in audit.get("relaxations", []):
        if entry.get("constraint") != constraint:
            continue
        if source is not None and entry.get("source") != source:
            continue
        return entry
    return None


def _normalized_text(text: str) -> str:
    return " ".join(re.sub(r"[^\w\s]", "", text.lower()).split())


def verify_manifest(manifest, pool: Pool, profile: GoalProfile) -> AuditReport:
    """Recompute every profile constraint against the pool, from scratch."""
    ids = manifest.ids()
    dangling = [sample_id for sample_id in ids if sample_id not in pool]
    if dangling:
        raise ManifestError(
            f"manifest references {len(dangling)} unknown ids, e.g. {dangling[:3]}"
        )
    audit = manifest.audit if isinstance(manifest.audit, dict) else {}
    records = [pool.get(sample_id) for sample_id in ids]
    if profile.temporal_video_min > 0 or profile.vds_positive_target > 0:
        bare = sum(1 for r in records if r.descriptors is None)
        if bare:
            raise ManifestError(
                f"{bare} selected records carry no descriptors; the temporal and "
                "video-dependence constraints need the descriptor table that was "
                "used for the build"
            )
    checks: list[ConstraintCheck] = []

    unique = len(set(ids))
    checks.append(
        ConstraintCheck(
            "unique_ids",
            PASS if unique == len(ids) else FAIL,
            achieved=unique,
            required=len(ids),
        )
    )

    n = len(records)
    checks.append(
        ConstraintCheck(
            "budget",
            PASS if n <= profile.n_target else FAIL,
            achieved=n,
            required=profile.n_target,
            note="" if n == profile.n_target else "under budget",
        )
    )

    n_video = sum(1 for r in records if r.is_video)
    lo = int(math.ceil(profile.video_ratio_min * n - _EPS))
    hi = int(math.floor(profile.video_ratio_max * n + _EPS))
    checks.append(
        ConstraintCheck(
            "video_ratio",
            PASS if lo <= n_video <= hi else FAIL,
            achieved=(n_video / n) if n else 0.0,
            required=profile.video_ratio,
            note=f"count {n_video} must lie in [{lo}, {hi}] of {n}",
        )
    )

    tpos = sum(
        1
        for r in records
        if r.is_video
        and r.descriptors is not None
        and r.descriptors.m_tnc >= TEMPORAL_POSITIVE_THRESHOLD
    )
    t_need = int(math.ceil(profile.temporal_video_min * n_video - _EPS))
    checks.append(
        ConstraintCheck(
            "temporal_floor",
            PASS if tpos >= t_need else FAIL,
            achieved=tpos,
            required=t_need,
        )
    )

    per_source: dict[str, int] = {}
    for record in records:
        per_source[record.source] = per_source.get(record.source, 0) + 1
    for source, floor in sorted(profile.resolved_source_floors().items()):
        achieved = per_source.get(source, 0)
        if achieved >= floor:
            status, note = PASS, ""
        else:
            declared = _declared(audit, "source_floor", source)
            if declared is not None and declared.get("achieved") == achieved:
                status, note = RELAXED, declared.get("reason", "declared")
            else:
                status, note = FAIL, "miss not declared in audit"
        checks.append(
            ConstraintCheck(
                f"source_floor[{source}]", status, achieved=achieved, required=floor, note=note
            )
        )

    vds_pos = sum(
        1 for r in records if r.descriptors is not None and r.descriptors.m_vds > 0.0
    )
    if vds_pos >= profile.vds_positive_target:
        status, note = PASS, ""
    else:
        declared = _declared(audit, "vds_positive")
        if declared is not None and declared.get("achieved") == vds_pos:
            status, note = RELAXED, declared.get("reason", "declared")
        else:
            status, note = FAIL, "miss not declared in audit"
    checks.append(
        ConstraintCheck(
            "vds_positive",
            status,
            achieved=vds_pos,
            required=profile.vds_positive_target,
            note=note,
        )
    )

    # Duplicates by normalized text + visual asset, recomputed locally.
    seen: dict[tuple[str, str], str] = {}
    duplicate_pairs = 0
    for record in records:
        payload = (
            _normalized_text(record.question) + "\x1f" + _normalized_text(record.answer)
        )
        key = (
            hashlib.sha256(payload.encode("utf-8")).hexdigest(),
            record.video_id if record.is_video else record.id,
        )
        if key in seen:
            duplicate_pairs += 1
        else:
            seen[key] = record.id
    checks.append(
        ConstraintCheck(
            "dedup", PASS if duplicate_pairs == 0 else FAIL, achieved=duplicate_pairs, required=0
        )
    )

    per_video: dict[str, int] = {}
    for record in records:
        if record.is_video:
            per_video[record.video_id] = per_video.get(record.video_id, 0) + 1
    worst = max(per_video.values(), default=0)
    checks.append(
        ConstraintCheck(
            "qa_per_video_cap",
            PASS if worst <= profile.qa_per_video_cap else FAIL,
            achieved=worst,
            required=profile.qa_per_video_cap,
        )
    )

    return AuditReport(checks=checks)
