"""Exception types shared across the package."""

from __future__ import annotations


class GdoError(Exception):
    """Base class for package errors."""


class IngestError(GdoError):
    """A pool or table file failed validation.

    Carries a list of per-row diagnostics so callers can report every
    offending row and field at once instead of failing on the first.
    """

    def __init__(self, message: str, diagnostics: list | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        lines = [base]
        for diag in self.diagnostics:
            lines.append(f"  {diag}")
        return "\n".join(lines)


class ExtractionError(GdoError):
    """Descriptor extraction failed for a single sample."""

    def __init__(self, sample_id: str, stage: str, message: str):
        super().__init__(f"{sample_id}: {stage}: {message}")
        self.sample_id = sample_id
        self.stage = stage


class ExtractionThresholdError(GdoError):
    """Too many per-sample extraction failures to trust the run."""

    def __init__(self, failed: int, total: int, threshold: float):
        super().__init__(
            f"{failed}/{total} samples failed extraction "
            f"(threshold {threshold:.0%})"
        )
        self.failed = failed
        self.total = total
        self.threshold = threshold


class InfeasibleProfileError(GdoError):
    """No subset of any size can satisfy the profile's hard constraints.

    ``constraint`` names the binding constraint; the message carries the
    achieved-vs-required numbers. Raised instead of ever emitting a
    constraint-violating manifest.
    """

    def __init__(self, constraint: str, message: str):
        super().__init__(f"infeasible ({constraint}): {message}")
        self.constraint = constraint


class ManifestError(GdoError):
    """A manifest references ids that do not exist in the pool."""
