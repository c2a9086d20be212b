"""Goal profiles: feasibility presets applied on top of the shared score.

The four released presets ship as JSON files under ``gdo/presets/`` and are
loaded verbatim — the budget, ratio band, video-dependence target, and
temporal floor are release constants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

PRESET_NAMES = ("minloss", "diverse", "temp", "temp_plus")

_FIELD_ORDER = (
    "name",
    "n_target",
    "video_ratio",
    "vds_positive_target",
    "video_ratio_min",
    "video_ratio_max",
    "temporal_video_min",
    "source_floors",
    "oversample_factor",
    "qa_per_video_cap",
    "seed",
)


@dataclass
class GoalProfile:
    """One feasibility preset.

    ``source_floors`` values of at least 1 are absolute counts; values in
    (0, 1) are ratios of ``n_target`` (resolved at build time).
    """

    name: str
    n_target: int
    video_ratio: float
    vds_positive_target: int
    video_ratio_min: float
    video_ratio_max: float
    temporal_video_min: float
    source_floors: dict[str, float] = field(default_factory=dict)
    oversample_factor: float = 3.0
    qa_per_video_cap: int = 4
    seed: int = 0

    def validate(self, require_budget: bool = True) -> None:
        if require_budget and self.n_target < 1:
            raise ValueError(f"n_target must be >= 1, got {self.n_target}")
        if self.n_target < 0:
            raise ValueError(f"n_target must be >= 0, got {self.n_target}")
        if not (
            0.0 <= self.video_ratio_min <= self.video_ratio <= self.video_ratio_max <= 1.0
        ):
            raise ValueError(
                "need 0 <= video_ratio_min <= video_ratio <= video_ratio_max <= 1, got "
                f"[{self.video_ratio_min}, {self.video_ratio}, {self.video_ratio_max}]"
            )
        if not 0.0 <= self.temporal_video_min <= 1.0:
            raise ValueError(
                f"temporal_video_min must be in [0, 1], got {self.temporal_video_min}"
            )
        if self.vds_positive_target < 0:
            raise ValueError("vds_positive_target must be >= 0")
        if self.oversample_factor < 1.0:
            raise ValueError("oversample_factor must be >= 1")
        if self.qa_per_video_cap < 1:
            raise ValueError("qa_per_video_cap must be >= 1")
        for source, floor in self.source_floors.items():
            if floor < 0:
                raise ValueError(f"source floor for {source!r} must be >= 0")

    def resolved_source_floors(self) -> dict[str, int]:
        """Floors as absolute counts (ratio values scale the budget)."""
        resolved = {}
        for source, floor in self.source_floors.items():
            if 0 < floor < 1:
                resolved[source] = int(round(floor * self.n_target))
            else:
                resolved[source] = int(floor)
        return resolved

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in _FIELD_ORDER}

    @classmethod
    def from_dict(cls, data: dict) -> "GoalProfile":
        unknown = set(data) - set(_FIELD_ORDER)
        if unknown:
            raise ValueError(f"unknown profile fields: {sorted(unknown)}")
        missing = {
            "name",
            "n_target",
            "video_ratio",
            "vds_positive_target",
            "video_ratio_min",
            "video_ratio_max",
            "temporal_video_min",
        } - set(data)
        if missing:
            raise ValueError(f"profile missing fields: {sorted(missing)}")
        profile = cls(**data)
        profile.validate(require_budget=False)
        return profile


def load_profile(path: str | Path) -> GoalProfile:
    return GoalProfile.from_dict(json.loads(Path(path).read_text()))


def save_profile(profile: GoalProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile.to_dict(), indent=2, sort_keys=True) + "\n")


def load_preset(name: str) -> GoalProfile:
    """Load one of the shipped presets by name."""
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    data = resources.files("gdo").joinpath(f"presets/{name}.json").read_text()
    return GoalProfile.from_dict(json.loads(data))


def resolve_profile(name_or_path: str) -> GoalProfile:
    """Accept a preset name or a path to a profile file."""
    if name_or_path in PRESET_NAMES:
        return load_preset(name_or_path)
    path = Path(name_or_path)
    if path.exists():
        return load_profile(path)
    raise ValueError(
        f"{name_or_path!r} is neither a preset ({', '.join(PRESET_NAMES)}) "
        "nor a profile file"
    )
