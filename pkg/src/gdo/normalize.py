"""Normalized score inputs: z-columns, merged quality, video-dependence term.

Stats are computed once over the pool (population mean/std, clipped at
``clip`` standard deviations) and persist beside the descriptor table so
re-scoring is bit-exact. Video-only columns (``vds3_raw``,
``frame_diversity``) are normalized over video records only; everything
else is pool-global.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .records import Pool, SampleRecord

DEFAULT_CLIP = 4.0
DEFAULT_FRAME_DIVERSITY_GAIN = 0.25

#: Quality-score ingredients and the ablation switch that removes each.
QUALITY_TERMS = ("sc", "ppl", "cov")
ABLATABLE = frozenset({"vds", "ppl", "sc"})


@dataclass
class ColumnStats:
    mean: float
    std: float


@dataclass
class NormalizationStats:
    """Everything needed to replay normalization and scoring exactly."""

    columns: dict[str, ColumnStats] = field(default_factory=dict)
    clip: float = DEFAULT_CLIP
    ppl_median: float = 0.0
    frame_diversity_gain: float = DEFAULT_FRAME_DIVERSITY_GAIN
    ablate: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "columns": {
                name: {"mean": cs.mean, "std": cs.std}
                for name, cs in sorted(self.columns.items())
            },
            "clip": self.clip,
            "ppl_median": self.ppl_median,
            "frame_diversity_gain": self.frame_diversity_gain,
            "ablate": sorted(self.ablate),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationStats":
        return cls(
            columns={
                name: ColumnStats(values["mean"], values["std"])
                for name, values in data["columns"].items()
            },
            clip=data["clip"],
            ppl_median=data["ppl_median"],
            frame_diversity_gain=data["frame_diversity_gain"],
            ablate=tuple(data.get("ablate", ())),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "NormalizationStats":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def snapshot_id(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:12]


def column_stats(values) -> ColumnStats:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot compute stats for an empty column")
    mean = float(values.mean())
    std = float(values.std())
    # Accumulation noise on a constant column must not masquerade as spread.
    if std < 1e-12 * max(1.0, abs(mean)):
        std = 0.0
    return ColumnStats(mean=mean, std=std)


def znormalize(values, stats: ColumnStats | None = None, clip: float = DEFAULT_CLIP):
    """Center/scale a column and clip to [-clip, +clip].

    A constant column (std 0) maps to all zeros. Passing stored stats
    reproduces a previous normalization exactly.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot normalize an empty column")
    if stats is None:
        stats = column_stats(values)
    if stats.std == 0.0:
        return np.zeros_like(values)
    return np.clip((values - stats.mean) / stats.std, -clip, clip)


def _z_scalar(value: float, stats: ColumnStats, clip: float) -> float:
    if stats.std == 0.0:
        return 0.0
    return float(np.clip((value - stats.mean) / stats.std, -clip, clip))


def _quality_inputs(record: SampleRecord, stats: NormalizationStats) -> dict[str, float]:
    d = record.descriptors
    return {
        "sc": d.m_sc,
        "ppl": -abs(d.m_ppl - stats.ppl_median),
        "cov": d.m_cov,
    }


def _vds3_raw(record: SampleRecord, stats: NormalizationStats) -> float:
    d = record.descriptors
    z_fd = _z_scalar(d.frame_diversity, stats.columns["frame_diversity"], stats.clip)
    return (d.loss_blind - d.loss_video) * (
        1.0 + stats.frame_diversity_gain * max(0.0, z_fd)
    )


def fit_normalization(
    pool: Pool,
    clip: float = DEFAULT_CLIP,
    frame_diversity_gain: float = DEFAULT_FRAME_DIVERSITY_GAIN,
    ablate: frozenset[str] | set[str] = frozenset(),
) -> NormalizationStats:
    """Compute pool statistics for every normalized term.

    ``ablate`` switches (subset of ``{"vds", "ppl", "sc"}``) change which
    terms enter the merged quality score, so its stats are fitted on the
    ablated column.
    """
    unknown = set(ablate) - ABLATABLE
    if unknown:
        raise ValueError(f"unknown ablation switches: {sorted(unknown)}")
    records = [r for r in pool if r.descriptors is not None]
    if not records:
        raise ValueError("no extracted records to fit normalization on")

    stats = NormalizationStats(
        clip=clip,
        frame_diversity_gain=frame_diversity_gain,
        ablate=tuple(sorted(ablate)),
    )
    stats.ppl_median = float(np.median([r.descriptors.m_ppl for r in records]))

    videos = [r for r in records if r.is_video]
    fd_values = [r.descriptors.frame_diversity for r in videos] or [0.0]
    stats.columns["frame_diversity"] = column_stats(fd_values)

    for name in QUALITY_TERMS:
        stats.columns[name] = column_stats(
            [_quality_inputs(r, stats)[name] for r in records]
        )
    stats.columns["loss_video"] = column_stats(
        [r.descriptors.loss_video for r in records]
    )
    vds3_values = [_vds3_raw(r, stats) for r in videos] or [0.0]
    stats.columns["vds3_raw"] = column_stats(vds3_values)

    quality = [
        _merge_quality_value(r, stats) for r in records
    ]
    stats.columns["quality"] = column_stats(quality)
    return stats


def _merge_quality_value(record: SampleRecord, stats: NormalizationStats) -> float:
    inputs = _quality_inputs(record, stats)
    terms = [t for t in QUALITY_TERMS if t not in stats.ablate]
    if not terms:
        return 0.0
    return float(
        np.mean([_z_scalar(inputs[t], stats.columns[t], stats.clip) for t in terms])
    )


def merge_quality(record: SampleRecord, stats: NormalizationStats) -> float:
    """Merged scalar quality: mean of stability, centered-difficulty, and
    coverage z-terms (minus any ablated ones)."""
    if record.descriptors is None:
        raise ValueError(f"record {record.id} has no descriptors")
    return _merge_quality_value(record, stats)


def compute_zvds3(record: SampleRecord, stats: NormalizationStats) -> float:
    """Normalized video-dependence term; exactly 0 for image records.

    The raw term is the loss gap amplified by above-average frame diversity,
    z-normalized over the video subpool.
    """
    if record.descriptors is None:
        raise ValueError(f"record {record.id} has no descriptors")
    if not record.is_video or "vds" in stats.ablate:
        return 0.0
    return _z_scalar(_vds3_raw(record, stats), stats.columns["vds3_raw"], stats.clip)


@dataclass
class MergedTerms:
    """Per-record normalized inputs the scorer consumes."""

    quality_score: float
    z_qual: float
    z_vds3: float
    z_loss_video: float


def merged_terms(record: SampleRecord, stats: NormalizationStats) -> MergedTerms:
    quality = merge_quality(record, stats)
    return MergedTerms(
        quality_score=quality,
        z_qual=_z_scalar(quality, stats.columns["quality"], stats.clip),
        z_vds3=compute_zvds3(record, stats),
        z_loss_video=_z_scalar(
            record.descriptors.loss_video, stats.columns["loss_video"], stats.clip
        ),
    )
