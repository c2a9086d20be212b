"""Shared preference score over video and image candidates.

One scorer serves every goal profile; profiles only change admissibility.
The mixture weights below are fixed release constants, not tunables — the
golden test pins them exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .normalize import (
    NormalizationStats,
    fit_normalization,
    merged_terms,
)
from .records import Pool, SampleRecord
from .strata import question_form

# Video base-term weights: q_text, d, a, t, r_src.
B_VID_WEIGHTS = (1.0, 0.85, 0.90, 0.55, 0.15)
# Image base term drops t and strengthens the text prior.
B_IMG_QTEXT_WEIGHT = 1.10
B_IMG_WEIGHTS = (B_IMG_QTEXT_WEIGHT, 0.85, 0.90, 0.15)
# Mixture weights: tanh(base/3), z_vds3, z_qual.
RHO_VID_WEIGHTS = (0.35, 0.95, 0.35)
# Image mixture: tanh(base/3), z_qual.
RHO_IMG_WEIGHTS = (0.90, 0.15)
TANH_SCALE = 3.0

#: Answers containing these phrases forfeit the boilerplate credit.
BOILERPLATE_PHRASES = (
    "as an ai",
    "i cannot answer",
    "i'm sorry",
    "i am sorry",
    "no answer",
    "it is impossible to say",
)


@dataclass
class ScoreBreakdown:
    """Every component behind one rho, recomputable to 1e-12."""

    q_text: float
    d: float
    a: float
    t: float
    r_src: float
    base: float
    z_vds3: float
    z_qual: float
    rho: float
    contributions: dict[str, float]

    def recompute(self) -> float:
        return sum(self.contributions.values())

    def to_dict(self) -> dict:
        return {
            "q_text": self.q_text,
            "d": self.d,
            "a": self.a,
            "t": self.t,
            "r_src": self.r_src,
            "base": self.base,
            "z_vds3": self.z_vds3,
            "z_qual": self.z_qual,
            "rho": self.rho,
            "contributions": dict(sorted(self.contributions.items())),
        }


def question_quality(question: str, answer: str) -> float:
    """Rule-based text-quality prior in [0, 2].

    Credits a well-formed question (interrogative lead or trailing '?'),
    an adequately sized answer, and the absence of boilerplate refusals.
    """
    score = 0.0
    if question.rstrip().endswith("?") or question_form(question) != "other":
        score += 0.7
    n_answer = len(answer.split())
    if 2 <= n_answer <= 128:
        score += 0.8
    elif n_answer >= 1:
        score += 0.3
    lowered = answer.lower()
    if not any(phrase in lowered for phrase in BOILERPLATE_PHRASES):
        score += 0.5
    return score


def difficulty_preference(z_loss_video: float) -> float:
    """Medium-difficulty preference: triangular in the loss z-score,
    peaking at 0 and vanishing at |z| = 2."""
    return max(0.0, 1.0 - abs(z_loss_video) / 2.0)


def stratum_alignment(
    pool_share: float, target_share: float, n_strata: int
) -> float:
    """Bin-alignment in [0, 1]: penalizes records from strata that are
    over-represented relative to the quota targets.

    With pool-marginal targets (stand-alone scoring) every stratum sits at
    its target and the term is 1.
    """
    floor = max(target_share, 1.0 / max(n_strata, 1))
    overshoot = max(0.0, pool_share - target_share) / floor
    return 1.0 - min(1.0, overshoot)


def source_rarity(share: float) -> float:
    return 1.0 - share


def base_term_video(q_text: float, d: float, a: float, t: float, r_src: float) -> float:
    w = B_VID_WEIGHTS
    return w[0] * q_text + w[1] * d + w[2] * a + w[3] * t + w[4] * r_src


def base_term_image(q_text: float, d: float, a: float, r_src: float) -> float:
    w = B_IMG_WEIGHTS
    return w[0] * q_text + w[1] * d + w[2] * a + w[3] * r_src


def score_video(base: float, z_vds3: float, z_qual: float) -> float:
    w = RHO_VID_WEIGHTS
    return w[0] * math.tanh(base / TANH_SCALE) + w[1] * z_vds3 + w[2] * z_qual


def score_image(base: float, z_qual: float) -> float:
    w = RHO_IMG_WEIGHTS
    return w[0] * math.tanh(base / TANH_SCALE) + w[1] * z_qual


class ScoreContext:
    """Frozen pool-level inputs for the per-record scoring map.

    ``targets`` maps stratum key to a target share; when omitted the pool
    marginals stand in, which makes the alignment term constant.
    """

    def __init__(self, pool: Pool, stats: NormalizationStats, targets: dict | None = None):
        self.stats = stats
        total = max(len(pool), 1)
        source_counts: dict[str, int] = {}
        stratum_counts: dict[str, int] = {}
        for record in pool:
            source_counts[record.source] = source_counts.get(record.source, 0) + 1
            key = record.strata.key()
            stratum_counts[key] = stratum_counts.get(key, 0) + 1
        self.source_share = {s: c / total for s, c in source_counts.items()}
        self.pool_stratum_share = {k: c / total for k, c in stratum_counts.items()}
        self.targets = targets if targets is not None else dict(self.pool_stratum_share)
        self.n_strata = max(len(self.pool_stratum_share), 1)


def score_record(record: SampleRecord, context: ScoreContext, terms=None) -> ScoreBreakdown:
    stats = context.stats
    if terms is None:
        terms = merged_terms(record, stats)
    ablate = set(stats.ablate)

    q_text = question_quality(record.question, record.answer)
    d = 0.0 if "ppl" in ablate else difficulty_preference(terms.z_loss_video)
    key = record.strata.key()
    a = stratum_alignment(
        context.pool_stratum_share.get(key, 0.0),
        context.targets.get(key, context.pool_stratum_share.get(key, 0.0)),
        context.n_strata,
    )
    r_src = source_rarity(context.source_share.get(record.source, 0.0))

    if record.is_video:
        t = record.descriptors.m_tnc
        base = base_term_video(q_text, d, a, t, r_src)
        rho = score_video(base, terms.z_vds3, terms.z_qual)
        contributions = {
            "tanh_base": RHO_VID_WEIGHTS[0] * math.tanh(base / TANH_SCALE),
            "z_vds3": RHO_VID_WEIGHTS[1] * terms.z_vds3,
            "z_qual": RHO_VID_WEIGHTS[2] * terms.z_qual,
        }
        z_vds3 = terms.z_vds3
    else:
        t = 0.0
        base = base_term_image(q_text, d, a, r_src)
        rho = score_image(base, terms.z_qual)
        contributions = {
            "tanh_base": RHO_IMG_WEIGHTS[0] * math.tanh(base / TANH_SCALE),
            "z_vds3": 0.0,
            "z_qual": RHO_IMG_WEIGHTS[1] * terms.z_qual,
        }
        z_vds3 = 0.0

    return ScoreBreakdown(
        q_text=q_text,
        d=d,
        a=a,
        t=t,
        r_src=r_src,
        base=base,
        z_vds3=z_vds3,
        z_qual=terms.z_qual,
        rho=rho,
        contributions=contributions,
    )


def score_pool(
    pool: Pool,
    stats: NormalizationStats | None = None,
    targets: dict | None = None,
    ablate: frozenset[str] | set[str] = frozenset(),
) -> NormalizationStats:
    """Score every extracted record; returns the stats used.

    Fits normalization stats when none are given. Records without
    descriptors (extraction failures) are left unscored.
    """
    scored = Pool([r for r in pool if r.descriptors is not None])
    if stats is None:
        stats = fit_normalization(scored, ablate=frozenset(ablate))
    elif ablate and set(ablate) != set(stats.ablate):
        raise ValueError(
            "ablation switches disagree with the supplied stats; refit instead"
        )
    context = ScoreContext(scored, stats, targets)
    for record in scored:
        terms = merged_terms(record, stats)
        breakdown = score_record(record, context, terms)
        record.quality_score = terms.quality_score
        record.rho = breakdown.rho
        record.breakdown = breakdown
    return stats
