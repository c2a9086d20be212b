"""Probe interface and the deterministic mock probe.

The mock probe lets the whole pipeline run with no model: losses and
decodes are derived from keyed hashes of ``(sample id, condition, seed)``
mapped into calibrated ranges, and the temporal judgment comes from the
keyword rule table below. Everything is deterministic given the seed.
"""

from __future__ import annotations

import hashlib
from typing import Protocol

from .records import SampleRecord

#: Condition labels for teacher-forced loss probes. ``video`` means
#: visual-conditioned; for image samples it is the image-conditioned loss.
CONDITIONS = ("video", "blind")

#: Rule table behind the mock temporal-necessity judgment. A question scores
#: BASE plus FIRST_HIT for its first keyword hit and EXTRA_HIT for each
#: additional distinct hit, capped at 1. Multi-word entries match as phrases.
TEMPORAL_KEYWORDS = (
    "after",
    "before",
    "then",
    "while",
    "during",
    "until",
    "first",
    "last",
    "next",
    "earlier",
    "later",
    "eventually",
    "finally",
    "begin",
    "begins",
    "beginning",
    "start",
    "starts",
    "end",
    "ends",
    "ending",
    "happen",
    "happens",
    "happened",
    "change",
    "changes",
    "changed",
    "order",
    "sequence",
    "when",
    "previous",
    "following",
    "how long",
    "how many times",
)

TEMPORAL_BASE = 0.1
TEMPORAL_FIRST_HIT = 0.45
TEMPORAL_EXTRA_HIT = 0.15


def keyword_temporal_score(question: str) -> float:
    """Apply the published rule table to a question."""
    text = " ".join(question.lower().replace("?", " ").split())
    padded = f" {text} "
    hits = sum(1 for keyword in TEMPORAL_KEYWORDS if f" {keyword} " in padded)
    if hits == 0:
        return TEMPORAL_BASE
    score = TEMPORAL_BASE + TEMPORAL_FIRST_HIT + TEMPORAL_EXTRA_HIT * (hits - 1)
    return min(1.0, score)


class ProbeInterface(Protocol):
    """What descriptor extraction needs from a probe model."""

    def teacher_forced_loss(self, sample: SampleRecord, condition: str) -> float:
        """Answer loss in nats under ``video`` or ``blind`` conditioning."""

    def sample_answers(self, sample: SampleRecord, n: int, seed: int) -> list[str]:
        """n stochastic decodes for the sample's question."""

    def temporal_judgment(self, question: str) -> float:
        """Score in [0, 1]: does answering need temporal reasoning?"""


def _unit(*parts) -> float:
    """Keyed hash of the parts mapped into [0, 1)."""
    payload = "\x1f".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class MockProbe:
    """Deterministic stand-in for a frozen vision-language probe.

    Stateless, so safe to call from concurrent extraction workers.
    """

    #: Visual-conditioned loss range, nats.
    LOSS_LOW = 0.3
    LOSS_SPAN = 3.0
    #: Blind loss sits at the visual loss plus a gap in [-0.5, 1.5].
    GAP_LOW = -0.5
    GAP_SPAN = 2.0

    def __init__(self, seed: int = 0):
        self.seed = seed

    def teacher_forced_loss(self, sample: SampleRecord, condition: str) -> float:
        if condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}, got {condition!r}")
        visual = self.LOSS_LOW + self.LOSS_SPAN * _unit(sample.id, self.seed, "loss")
        if condition == "video":
            return visual
        gap = self.GAP_LOW + self.GAP_SPAN * _unit(sample.id, self.seed, "gap")
        return max(0.0, visual + gap)

    def sample_answers(self, sample: SampleRecord, n: int, seed: int) -> list[str]:
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        tokens = sample.answer.lower().split() or ["answer"]
        # Per-sample stability controls how much decodes agree.
        stability = _unit(sample.id, self.seed, "stability")
        keep_p = 0.35 + 0.6 * stability
        decodes = []
        for i in range(n):
            kept = [
                token
                for j, token in enumerate(tokens)
                if _unit(sample.id, self.seed, seed, "keep", i, j) < keep_p
            ]
            if not kept:
                kept = [tokens[0]]
            if _unit(sample.id, self.seed, seed, "extra", i) > 0.5 + 0.5 * stability:
                kept.append(f"alt{int(_unit(sample.id, self.seed, seed, 'alt', i) * 7)}")
            decodes.append(" ".join(kept))
        return decodes

    def temporal_judgment(self, question: str) -> float:
        return keyword_temporal_score(question)

    # Flow is not probe-derived in the real system; these mock values keep
    # media-free runs total. Images report zero motion and zero diversity.
    def flow_magnitude(self, sample: SampleRecord) -> float:
        if not sample.is_video:
            return 0.0
        return 6.0 * _unit(sample.id, self.seed, "flow")

    def frame_diversity(self, sample: SampleRecord) -> float:
        if not sample.is_video:
            return 0.0
        return 30.0 * _unit(sample.id, self.seed, "fdiv")
