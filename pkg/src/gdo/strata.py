"""Deterministic bucket assignment for stratification.

Bucket tables are deliberately coarse so strata are reproducible from the
record alone:

* duration: ``na`` (images), ``short`` <= 30 s, ``medium`` <= 120 s, ``long``
* question form: leading interrogative token class
* question/answer length: whitespace-token count, <=8 / 9-24 / >24
* temporal bucket: ``temporal_positive`` iff the temporal-necessity
  descriptor clears :data:`TEMPORAL_POSITIVE_THRESHOLD`
* source type: normalized source tag
"""

from __future__ import annotations

import re

from .records import SampleRecord, StratumKey

#: m_tnc at or above this marks a video sample temporal-positive.
TEMPORAL_POSITIVE_THRESHOLD = 0.5

TEMPORAL_POSITIVE = "temporal_positive"
TEMPORAL_NEGATIVE = "temporal_negative"

_WORD_RE = re.compile(r"[a-z0-9']+")

_WHAT_WHERE_WHO = {"what", "where", "who", "whose", "whom", "which"}
_WHEN_ORDER = {"when", "order"}
_WHY_HOW = {"why", "how"}
_COUNT_LEADS = ("how many", "how much")


def _tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def duration_bucket(record: SampleRecord) -> str:
    if not record.is_video or record.duration_s is None:
        return "na"
    if record.duration_s <= 30.0:
        return "short"
    if record.duration_s <= 120.0:
        return "medium"
    return "long"


def question_form(question: str) -> str:
    """Classify a question by its leading interrogative token."""
    tokens = _tokens(question)
    if not tokens:
        return "other"
    lead_pair = " ".join(tokens[:2])
    if lead_pair in _COUNT_LEADS or tokens[0] == "count":
        return "count"
    head = tokens[0]
    if head in _WHY_HOW:
        return "why_how"
    if head in _WHAT_WHERE_WHO:
        return "what_where_who"
    if head in _WHEN_ORDER:
        return "when_order"
    return "other"


def length_bucket(text: str) -> str:
    n = len(text.split())
    if n <= 8:
        return "short"
    if n <= 24:
        return "medium"
    return "long"


def source_type(source: str) -> str:
    """Normalize a source tag into a stable stratum label."""
    slug = re.sub(r"[^a-z0-9]+", "_", source.lower()).strip("_")
    return slug or "unknown"


def temporal_bucket(
    record: SampleRecord, threshold: float = TEMPORAL_POSITIVE_THRESHOLD
) -> str:
    # Images carry no temporal signal; videos need extracted descriptors.
    if record.is_video and record.descriptors is not None:
        if record.descriptors.m_tnc >= threshold:
            return TEMPORAL_POSITIVE
    return TEMPORAL_NEGATIVE


def assign_strata(
    record: SampleRecord, threshold: float = TEMPORAL_POSITIVE_THRESHOLD
) -> StratumKey:
    """Map a validated record to its stratum. Pure and total."""
    return StratumKey(
        duration_bucket=duration_bucket(record),
        temporal_bucket=temporal_bucket(record, threshold),
        question_form=question_form(record.question),
        qlen_bucket=length_bucket(record.question),
        alen_bucket=length_bucket(record.answer),
        source_type=source_type(record.source),
    )


def refresh_strata(records, threshold: float = TEMPORAL_POSITIVE_THRESHOLD) -> None:
    """Reassign strata in place, e.g. after descriptors arrive."""
    for record in records:
        record.strata = assign_strata(record, threshold)
