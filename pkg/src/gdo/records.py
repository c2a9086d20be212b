"""Sample data model: records, descriptor vectors, strata keys, pools."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

MODALITIES = ("video", "image")

#: Fields a video record must carry and an image record must not.
VIDEO_ONLY_FIELDS = ("video_id", "duration_s", "frame_count")


def _finite_number(value) -> bool:
    return (
        isinstance(value, (int, float))
        and not isinstance(value, bool)
        and math.isfinite(value)
    )


@dataclass(frozen=True)
class StratumKey:
    """Joint bucket assignment used for quotas and reservoirs.

    Every valid record maps to exactly one key; the mapping is a pure
    function of the record (see :mod:`gdo.strata`).
    """

    duration_bucket: str
    temporal_bucket: str
    question_form: str
    qlen_bucket: str
    alen_bucket: str
    source_type: str

    def key(self) -> str:
        return "/".join(
            (
                self.duration_bucket,
                self.temporal_bucket,
                self.question_form,
                self.qlen_bucket,
                self.alen_bucket,
                self.source_type,
            )
        )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "StratumKey":
        return cls(**{f.name: data[f.name] for f in fields(cls)})


@dataclass
class DescriptorVector:
    """Per-sample descriptor slots plus the raw probe losses behind them.

    Invariants enforced by :meth:`check`:

    * ``m_vds == loss_blind - loss_video``
    * ``m_ppl == exp(loss_video)``
    * ``m_tnc`` and ``m_sc`` lie in [0, 1]
    """

    m_flow: float
    m_vds: float
    m_tnc: float
    m_sc: float
    m_ppl: float
    m_cov: float
    loss_video: float
    loss_blind: float
    frame_diversity: float

    FIELDS = (
        "m_flow",
        "m_vds",
        "m_tnc",
        "m_sc",
        "m_ppl",
        "m_cov",
        "loss_video",
        "loss_blind",
        "frame_diversity",
    )

    def check(self, rel_tol: float = 1e-9) -> list[str]:
        """Return a list of invariant violations (empty when consistent)."""
        problems = []
        for name in self.FIELDS:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                problems.append(f"{name}={value!r} is not a finite number")
        if problems:
            return problems
        if not math.isclose(
            self.m_vds, self.loss_blind - self.loss_video, rel_tol=rel_tol, abs_tol=1e-12
        ):
            problems.append(
                f"m_vds={self.m_vds!r} != loss_blind - loss_video="
                f"{self.loss_blind - self.loss_video!r}"
            )
        if not math.isclose(
            self.m_ppl, math.exp(self.loss_video), rel_tol=rel_tol, abs_tol=1e-12
        ):
            problems.append(
                f"m_ppl={self.m_ppl!r} != exp(loss_video)={math.exp(self.loss_video)!r}"
            )
        if not 0.0 <= self.m_tnc <= 1.0:
            problems.append(f"m_tnc={self.m_tnc!r} outside [0, 1]")
        if not 0.0 <= self.m_sc <= 1.0:
            problems.append(f"m_sc={self.m_sc!r} outside [0, 1]")
        for name in ("m_flow", "loss_video", "loss_blind", "frame_diversity"):
            if getattr(self, name) < 0.0:
                problems.append(f"{name}={getattr(self, name)!r} is negative")
        return problems

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "DescriptorVector":
        return cls(**{name: float(data[name]) for name in cls.FIELDS})


@dataclass
class SampleRecord:
    """One pool candidate.

    ``rho``/``breakdown``/``quality_score`` are filled by the scoring
    stages and are not part of the pool wire format.
    """

    id: str
    modality: str
    source: str
    question: str
    answer: str
    video_id: str | None = None
    duration_s: float | None = None
    frame_count: int | None = None
    strata: StratumKey | None = None
    descriptors: DescriptorVector | None = None
    quality_score: float | None = None
    rho: float | None = None
    breakdown: object | None = None

    def validate(self) -> list[tuple[str, str]]:
        """Return (field, problem) pairs; empty means the record is valid."""
        problems: list[tuple[str, str]] = []
        if not isinstance(self.id, str) or not self.id.strip():
            problems.append(("id", "must be a non-empty string"))
        if self.modality not in MODALITIES:
            problems.append(("modality", f"must be one of {MODALITIES}"))
        if not isinstance(self.source, str) or not self.source.strip():
            problems.append(("source", "must be a non-empty string"))
        for name in ("question", "answer"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                problems.append((name, "must be non-empty after trimming"))
        if self.modality == "video":
            if not isinstance(self.video_id, str) or not self.video_id.strip():
                problems.append(("video_id", "required for video records"))
            if self.duration_s is None:
                problems.append(("duration_s", "required for video records"))
            elif not _finite_number(self.duration_s) or self.duration_s < 0:
                problems.append(("duration_s", "must be a non-negative number"))
            if self.frame_count is None:
                problems.append(("frame_count", "required for video records"))
            elif (
                isinstance(self.frame_count, bool)
                or not isinstance(self.frame_count, int)
                or self.frame_count < 1
            ):
                problems.append(("frame_count", "must be a positive integer"))
        elif self.modality == "image":
            for name in VIDEO_ONLY_FIELDS:
                if getattr(self, name) is not None:
                    problems.append((name, "must be absent for image records"))
        if self.quality_score is not None and not _finite_number(self.quality_score):
            problems.append(("quality_score", "must be a finite number"))
        return problems

    @property
    def is_video(self) -> bool:
        return self.modality == "video"

    def visual_ref(self) -> str:
        """Identity of the visual asset: the clip id, or the record id for images."""
        return self.video_id if self.is_video else self.id


class Pool:
    """An ordered collection of validated records with unique ids."""

    def __init__(self, records: list[SampleRecord]):
        self.records = list(records)
        self._by_id: dict[str, SampleRecord] = {}
        for record in self.records:
            if record.id in self._by_id:
                raise ValueError(f"duplicate record id {record.id!r}")
            self._by_id[record.id] = record

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._by_id

    def get(self, record_id: str) -> SampleRecord:
        return self._by_id[record_id]

    def ids(self) -> list[str]:
        return [record.id for record in self.records]

    def videos(self) -> list[SampleRecord]:
        return [record for record in self.records if record.is_video]

    def images(self) -> list[SampleRecord]:
        return [record for record in self.records if not record.is_video]

    def subset(self, ids: list[str]) -> "Pool":
        return Pool([self._by_id[record_id] for record_id in ids])
