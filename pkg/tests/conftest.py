"""Shared factories for synthetic pools.

Two flavors: bare pools for probe-driven extraction tests, and pools with
injected descriptors (identities held by construction) for scorer/builder
tests that should not pay for extraction.
"""

from __future__ import annotations

import math
import random

import pytest

from gdo.records import DescriptorVector, Pool, SampleRecord
from gdo.strata import assign_strata, refresh_strata

QUESTIONS = [
    "what happens after the man opens the door",
    "what color is the car",
    "how many times does she jump",
    "why does the dog bark at the end",
    "where is the red box",
    "when does the light change",
    "what is shown in the picture",
    "how does the game finish",
]
ANSWER_WORDS = [
    "the", "a", "man", "dog", "red", "blue", "jumps", "runs", "first",
    "then", "box", "door", "left", "right", "twice", "slowly",
]


def make_video(i: int, rng: random.Random, source: str = "vid_a", question=None,
               answer=None, video_id=None, duration=None) -> SampleRecord:
    record = SampleRecord(
        id=f"v{i:05d}",
        modality="video",
        source=source,
        question=question or (rng.choice(QUESTIONS) + f" in clip {i}"),
        answer=answer or " ".join(
            rng.choice(ANSWER_WORDS) for _ in range(rng.randint(3, 14))
        ),
        video_id=video_id or f"clip{i:05d}",
        duration_s=duration if duration is not None else rng.uniform(2.0, 240.0),
        frame_count=rng.randint(8, 64),
    )
    record.strata = assign_strata(record)
    return record


def make_image(i: int, rng: random.Random, source: str = "img_a", question=None,
               answer=None) -> SampleRecord:
    record = SampleRecord(
        id=f"i{i:05d}",
        modality="image",
        source=source,
        question=question or (rng.choice(QUESTIONS) + f" in photo {i}"),
        answer=answer or " ".join(
            rng.choice(ANSWER_WORDS) for _ in range(rng.randint(3, 14))
        ),
    )
    record.strata = assign_strata(record)
    return record


def make_descriptors(
    rng: random.Random,
    is_video: bool,
    temporal_positive: bool | None = None,
    vds_positive: bool | None = None,
    loss_video: float | None = None,
) -> DescriptorVector:
    """Random descriptors whose internal identities hold by construction."""
    if loss_video is None:
        loss_video = rng.uniform(0.3, 3.0)
    gap = rng.uniform(-0.5, 1.5)
    if vds_positive is True:
        gap = abs(gap) + 0.01
    elif vds_positive is False:
        gap = -abs(gap) - 0.01
    loss_blind = max(0.0, loss_video + gap)
    if is_video:
        if temporal_positive is None:
            m_tnc = rng.uniform(0.0, 1.0)
        elif temporal_positive:
            m_tnc = rng.uniform(0.5, 1.0)
        else:
            m_tnc = rng.uniform(0.0, 0.499)
        m_flow = rng.uniform(0.0, 6.0)
        diversity = rng.uniform(0.0, 30.0)
    else:
        m_tnc = 0.0
        m_flow = 0.0
        diversity = 0.0
    return DescriptorVector(
        m_flow=m_flow,
        m_vds=loss_blind - loss_video,
        m_tnc=m_tnc,
        m_sc=rng.uniform(0.0, 1.0),
        m_ppl=math.exp(loss_video),
        m_cov=rng.uniform(0.0, 1.0),
        loss_video=loss_video,
        loss_blind=loss_blind,
        frame_diversity=diversity,
    )


def described_pool(
    n: int,
    seed: int = 0,
    video_share: float = 0.6,
    tpos_share: float = 0.5,
    sources=("vid_a", "vid_b", "img_a", "img_b"),
    qa_per_clip: int = 1,
    tpos_low_scores: bool = False,
) -> Pool:
    """Pool with injected descriptors, ready for scoring and building.

    ``tpos_low_scores`` pushes temporal-positive videos toward low loss
    gaps and low stability so score ordering anticorrelates with the
    temporal class (the regime where profile floors bind).
    """
    rng = random.Random(seed)
    records = []
    for i in range(n):
        if rng.random() < video_share:
            tpos = rng.random() < tpos_share
            record = make_video(
                i,
                rng,
                source=sources[i % 2],
                video_id=f"clip{i // max(qa_per_clip, 1):05d}",
            )
            record.descriptors = make_descriptors(
                rng, True, temporal_positive=tpos,
                vds_positive=(False if (tpos_low_scores and tpos) else None),
            )
            if tpos_low_scores and tpos:
                record.descriptors.m_sc = rng.uniform(0.0, 0.2)
                record.descriptors.m_cov = rng.uniform(0.0, 0.2)
        else:
            record = make_image(i, rng, source=sources[2 + i % 2])
            record.descriptors = make_descriptors(rng, False)
        records.append(record)
    pool = Pool(records)
    refresh_strata(pool)
    return pool


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def small_described_pool():
    return described_pool(60, seed=5)
