"""Line-delimited wire formats: pools and descriptor tables.

Both formats are UTF-8 JSON, one object per line. Field names match the
in-memory types exactly; normative schema documents ship under
``gdo/schemas/``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import IngestError
from .records import DescriptorVector, Pool, SampleRecord
from .strata import assign_strata, refresh_strata

POOL_FIELDS = {
    "id",
    "modality",
    "source",
    "question",
    "answer",
    "video_id",
    "duration_s",
    "frame_count",
    "strata",
    "descriptors",
    "quality_score",
}

DESCRIPTOR_FIELDS = ("id",) + DescriptorVector.FIELDS


@dataclass
class RowDiagnostic:
    """One rejected row: where it is, which field, and why."""

    row: int
    field: str | None
    message: str

    def __str__(self) -> str:
        where = f"row {self.row}"
        if self.field:
            where += f", field {self.field!r}"
        return f"{where}: {self.message}"


def _parse_record(obj: dict, row: int, diagnostics: list[RowDiagnostic]) -> SampleRecord | None:
    unknown = set(obj) - POOL_FIELDS
    if unknown:
        diagnostics.append(
            RowDiagnostic(row, None, f"unknown fields: {sorted(unknown)}")
        )
        return None

    descriptors = None
    if obj.get("descriptors") is not None:
        try:
            descriptors = DescriptorVector.from_dict(obj["descriptors"])
        except (KeyError, TypeError, ValueError) as exc:
            diagnostics.append(RowDiagnostic(row, "descriptors", f"malformed: {exc}"))
            return None
        problems = descriptors.check()
        if problems:
            diagnostics.append(RowDiagnostic(row, "descriptors", "; ".join(problems)))
            return None

    frame_count = obj.get("frame_count")
    if frame_count is not None and not isinstance(frame_count, bool):
        if isinstance(frame_count, float) and frame_count.is_integer():
            frame_count = int(frame_count)

    record = SampleRecord(
        id=obj.get("id"),
        modality=obj.get("modality"),
        source=obj.get("source"),
        question=obj.get("question"),
        answer=obj.get("answer"),
        video_id=obj.get("video_id"),
        duration_s=obj.get("duration_s"),
        frame_count=frame_count,
        descriptors=descriptors,
        quality_score=obj.get("quality_score"),
    )
    problems = record.validate()
    if problems:
        for field, message in problems:
            diagnostics.append(RowDiagnostic(row, field, message))
        return None
    # Strata in files are informational; the assignment is recomputed so it
    # always reflects the bucket tables of this build.
    record.strata = assign_strata(record)
    return record


def ingest_pool(path: str | Path, format: str = "jsonl", strict: bool = True):
    """Load and validate a pool file.

    Returns ``(pool, diagnostics)``. With ``strict=True`` any malformed row
    raises :class:`IngestError` carrying all diagnostics; with
    ``strict=False`` malformed rows are skipped and reported. A duplicate id
    is always a hard error naming both rows.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported pool format {format!r}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"pool file not found: {path}")

    diagnostics: list[RowDiagnostic] = []
    records: list[SampleRecord] = []
    first_row_of: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as handle:
        for row, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                diagnostics.append(RowDiagnostic(row, None, f"invalid JSON: {exc}"))
                continue
            if not isinstance(obj, dict):
                diagnostics.append(RowDiagnostic(row, None, "row is not an object"))
                continue
            record = _parse_record(obj, row, diagnostics)
            if record is None:
                continue
            if record.id in first_row_of:
                raise IngestError(
                    f"duplicate id {record.id!r} at rows "
                    f"{first_row_of[record.id]} and {row}",
                    diagnostics,
                )
            first_row_of[record.id] = row
            records.append(record)

    if strict and diagnostics:
        raise IngestError(f"{len(diagnostics)} invalid rows in {path}", diagnostics)
    return Pool(records), diagnostics


def record_to_dict(record: SampleRecord) -> dict:
    obj = {
        "id": record.id,
        "modality": record.modality,
        "source": record.source,
        "question": record.question,
        "answer": record.answer,
    }
    if record.is_video:
        obj["video_id"] = record.video_id
        obj["duration_s"] = record.duration_s
        obj["frame_count"] = record.frame_count
    if record.strata is not None:
        obj["strata"] = record.strata.to_dict()
    if record.descriptors is not None:
        obj["descriptors"] = record.descriptors.to_dict()
    if record.quality_score is not None:
        obj["quality_score"] = record.quality_score
    return obj


def write_pool(pool: Pool, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for record in pool:
            handle.write(json.dumps(record_to_dict(record), sort_keys=True) + "\n")


def write_descriptor_table(pool: Pool, path: str | Path) -> None:
    """Emit one descriptor row per extracted record, keyed by sample id."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for record in pool:
            if record.descriptors is None:
                continue
            row = {"id": record.id, **record.descriptors.to_dict()}
            handle.write(json.dumps(row, sort_keys=True) + "\n")


def load_descriptor_table(path: str | Path):
    """Read a descriptor table; returns ``(rows, warnings)``.

    ``rows`` maps sample id to :class:`DescriptorVector`. Warnings cover
    missing fields, out-of-range values, and violations of the loss-gap and
    exp-loss identities; an empty file is valid but warned about.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"descriptor table not found: {path}")
    rows: dict[str, DescriptorVector] = {}
    warnings: list[str] = []
    with path.open("r", encoding="utf-8") as handle:
        for row_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                warnings.append(f"row {row_no}: invalid JSON: {exc}")
                continue
            missing = [f for f in DESCRIPTOR_FIELDS if f not in obj]
            if missing:
                warnings.append(f"row {row_no}: missing fields {missing}")
                continue
            unknown = set(obj) - set(DESCRIPTOR_FIELDS)
            if unknown:
                warnings.append(f"row {row_no}: unknown fields {sorted(unknown)}")
                continue
            sample_id = obj["id"]
            if not isinstance(sample_id, str) or not sample_id:
                warnings.append(f"row {row_no}: bad id {sample_id!r}")
                continue
            if sample_id in rows:
                warnings.append(f"row {row_no}: duplicate id {sample_id!r}")
                continue
            try:
                vector = DescriptorVector.from_dict(obj)
            except (TypeError, ValueError) as exc:
                warnings.append(f"row {row_no}: malformed values: {exc}")
                continue
            problems = vector.check()
            if problems:
                warnings.append(f"row {row_no} ({sample_id}): " + "; ".join(problems))
                continue
            rows[sample_id] = vector
    if not rows and not warnings:
        warnings.append("table has zero rows")
    return rows, warnings


def attach_descriptors(pool: Pool, rows: dict[str, DescriptorVector]) -> list[str]:
    """Attach table rows to pool records and refresh strata.

    Returns ids present in the table but absent from the pool.
    """
    orphans = [sample_id for sample_id in rows if sample_id not in pool]
    for record in pool:
        vector = rows.get(record.id)
        if vector is not None:
            record.descriptors = vector
    refresh_strata(pool)
    return orphans


def write_scored_table(pool: Pool, path: str | Path) -> None:
    """Descriptor table plus rho and per-term breakdown columns."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for record in pool:
            if record.descriptors is None or record.rho is None:
                continue
            row = {"id": record.id, **record.descriptors.to_dict(), "rho": record.rho}
            if record.quality_score is not None:
                row["quality_score"] = record.quality_score
            if record.breakdown is not None:
                row["breakdown"] = record.breakdown.to_dict()
            handle.write(json.dumps(row, sort_keys=True) + "\n")
