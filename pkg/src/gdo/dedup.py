"""Exact-after-normalization deduplication and QA-per-video caps."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

from .records import Pool, SampleRecord

_PUNCT_RE = re.compile(r"[^\w\s]")


def normalize_text(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace."""
    text = _PUNCT_RE.sub("", text.lower())
    return " ".join(text.split())


@dataclass(frozen=True)
class DedupKey:
    """Two records with equal keys are duplicates; only the first is kept."""

    normalized_text_hash: str
    visual_ref: str


def dedup_key(record: SampleRecord) -> DedupKey:
    payload = normalize_text(record.question) + "\x1f" + normalize_text(record.answer)
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    return DedupKey(normalized_text_hash=digest, visual_ref=record.visual_ref())


def dedup_and_cap(pool: Pool, qa_per_video_cap: int) -> Pool:
    """Drop duplicate records, then cap QA pairs per clip.

    Duplicates keep the first occurrence. Within one ``video_id``, at most
    ``qa_per_video_cap`` records survive: the highest-``rho`` ones when the
    whole group is scored, otherwise the first in file order. Output keeps
    the original file order and the operation is idempotent.
    """
    if qa_per_video_cap < 1:
        raise ValueError(f"qa_per_video_cap must be >= 1, got {qa_per_video_cap}")

    seen: set[DedupKey] = set()
    survivors: list[SampleRecord] = []
    for record in pool:
        key = dedup_key(record)
        if key in seen:
            continue
        seen.add(key)
        survivors.append(record)

    groups: dict[str, list[int]] = {}
    for index, record in enumerate(survivors):
        if record.is_video:
            groups.setdefault(record.video_id, []).append(index)

    dropped: set[int] = set()
    for indices in groups.values():
        if len(indices) <= qa_per_video_cap:
            continue
        if all(survivors[i].rho is not None for i in indices):
            ranked = sorted(indices, key=lambda i: (-survivors[i].rho, i))
        else:
            ranked = indices
        dropped.update(ranked[qa_per_video_cap:])

    return Pool([r for i, r in enumerate(survivors) if i not in dropped])
