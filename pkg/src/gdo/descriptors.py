"""Descriptor extraction against a pluggable probe.

Per-sample work is embarrassingly parallel; results merge back by record
order, so the output is identical for any worker count. Pool-level context
(neighbor indices, source stats) is built once, before the map, and is
immutable afterwards.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coverage import (
    DEFAULT_DENSITY_WEIGHT,
    DEFAULT_RARITY_WEIGHT,
    HashingEmbedder,
    NeighborIndex,
    SourceHistogram,
    compute_coverage,
    text_of,
    visual_token_of,
)
from .errors import ExtractionError, ExtractionThresholdError
from .records import DescriptorVector, Pool, SampleRecord
from .strata import refresh_strata


def compute_vds(sample: SampleRecord, probe) -> float:
    """Blind-minus-visual teacher-forced loss gap, in nats."""
    return probe.teacher_forced_loss(sample, "blind") - probe.teacher_forced_loss(
        sample, "video"
    )


def compute_tnc(question: str, probe) -> float:
    """Temporal-necessity judgment, clamped into [0, 1]."""
    if not question.strip():
        raise ValueError("question must be non-empty")
    return min(1.0, max(0.0, probe.temporal_judgment(question)))


def _token_set(text: str) -> frozenset[str]:
    return frozenset(text.lower().split())


def compute_self_consistency(sample: SampleRecord, probe, n: int, seed: int) -> float:
    """Mean pairwise Jaccard agreement over token sets of n decodes."""
    if n < 2:
        raise ValueError(f"self-consistency needs n >= 2 decodes, got {n}")
    answers = probe.sample_answers(sample, n, seed)
    sets = [_token_set(answer) for answer in answers]
    total = 0.0
    pairs = 0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            union = sets[i] | sets[j]
            total += len(sets[i] & sets[j]) / len(union) if union else 1.0
            pairs += 1
    return total / pairs


def compute_ppl(sample: SampleRecord, probe) -> float:
    """Exponentiated visual-conditioned teacher-forced loss."""
    return math.exp(probe.teacher_forced_loss(sample, "video"))


@dataclass
class ExtractionConfig:
    n_decodes: int = 5
    seed: int = 0
    n_jobs: int = 1
    max_failure_fraction: float = 0.1
    embedding_dim: int = 64
    density_weight: float = DEFAULT_DENSITY_WEIGHT
    rarity_weight: float = DEFAULT_RARITY_WEIGHT
    neighbor_radius: float | None = None


@dataclass
class ExtractionReport:
    total: int = 0
    succeeded: int = 0
    failures: list[ExtractionError] = field(default_factory=list)

    @property
    def failed(self) -> int:
        return len(self.failures)

    def summary(self) -> str:
        return f"extracted {self.succeeded}/{self.total} samples, {self.failed} failures"


def _flow_inputs(sample: SampleRecord, probe, flow_source) -> tuple[float, float]:
    if flow_source is not None:
        return flow_source(sample)
    if hasattr(probe, "flow_magnitude") and hasattr(probe, "frame_diversity"):
        return probe.flow_magnitude(sample), probe.frame_diversity(sample)
    return 0.0, 0.0


def _extract_one(sample, probe, config, context, flow_source) -> DescriptorVector:
    text_index, vision_index, source_stats = context
    stage = "loss"
    try:
        loss_video = float(probe.teacher_forced_loss(sample, "video"))
        loss_blind = float(probe.teacher_forced_loss(sample, "blind"))
        stage = "temporal"
        m_tnc = compute_tnc(sample.question, probe) if sample.is_video else 0.0
        stage = "self_consistency"
        m_sc = compute_self_consistency(sample, probe, config.n_decodes, config.seed)
        stage = "flow"
        m_flow, diversity = _flow_inputs(sample, probe, flow_source)
        if not sample.is_video:
            m_flow, diversity = 0.0, 0.0
        stage = "coverage"
        m_cov = compute_coverage(
            sample,
            text_index,
            vision_index,
            source_stats,
            config.density_weight,
            config.rarity_weight,
        )
    except Exception as exc:  # surfaces as a per-sample error, not an abort
        raise ExtractionError(sample.id, stage, str(exc)) from exc
    return DescriptorVector(
        m_flow=float(m_flow),
        m_vds=loss_blind - loss_video,
        m_tnc=float(m_tnc),
        m_sc=float(m_sc),
        m_ppl=math.exp(loss_video),
        m_cov=float(m_cov),
        loss_video=loss_video,
        loss_blind=loss_blind,
        frame_diversity=float(diversity),
    )


def extract_all(
    pool: Pool,
    probe,
    config: ExtractionConfig | None = None,
    flow_source=None,
) -> ExtractionReport:
    """Attach a DescriptorVector to every record, or record why it failed.

    Raises :class:`ExtractionThresholdError` when the failure fraction
    exceeds ``config.max_failure_fraction``; otherwise failures are listed
    in the report and the surviving records are usable downstream.
    """
    config = config or ExtractionConfig()
    report = ExtractionReport(total=len(pool))
    if len(pool) == 0:
        return report

    embedder = HashingEmbedder(config.embedding_dim)
    text_vectors = np.stack([embedder.embed(text_of(r)) for r in pool])
    vision_vectors = np.stack([embedder.embed(visual_token_of(r)) for r in pool])
    ids = pool.ids()
    context = (
        NeighborIndex(ids, text_vectors, config.neighbor_radius),
        NeighborIndex(ids, vision_vectors, config.neighbor_radius),
        SourceHistogram([r.source for r in pool]),
    )

    def worker(sample):
        try:
            return _extract_one(sample, probe, config, context, flow_source)
        except ExtractionError as exc:
            return exc

    if config.n_jobs <= 1:
        results = [worker(sample) for sample in pool]
    else:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as executor:
            results = list(executor.map(worker, pool.records))

    for sample, result in zip(pool, results):
        if isinstance(result, ExtractionError):
            report.failures.append(result)
            sample.descriptors = None
        else:
            sample.descriptors = result
            report.succeeded += 1

    if report.total and report.failed / report.total > config.max_failure_fraction:
        raise ExtractionThresholdError(
            report.failed, report.total, config.max_failure_fraction
        )

    # Temporal buckets depend on m_tnc, so strata are stale until now.
    refresh_strata(pool)
    return report
