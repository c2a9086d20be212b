"""Goal-driven curation of multimodal instruction pools."""

from .builder import (
    Reservoir,
    SubsetManifest,
    build_subset,
    draw_uniform_control,
    fill_reservoirs,
)
from .dedup import dedup_and_cap, dedup_key
from .descriptors import (
    ExtractionConfig,
    compute_ppl,
    compute_self_consistency,
    compute_tnc,
    compute_vds,
    extract_all,
)
from .efficiency import delta_table, peak_match, read_trajectory
from .errors import (
    ExtractionError,
    GdoError,
    InfeasibleProfileError,
    IngestError,
    ManifestError,
)
from .flow import BlockMatchingFlow, compute_flow, frame_diversity
from .normalize import NormalizationStats, fit_normalization, znormalize
from .pipeline import (
    DescriptorExtractor,
    PoolScorer,
    SubsetSelector,
    UniformControlSelector,
    make_curation_pipeline,
)
from .pool_io import ingest_pool, load_descriptor_table, write_descriptor_table
from .probes import MockProbe
from .profiles import GoalProfile, load_preset, resolve_profile
from .records import DescriptorVector, Pool, SampleRecord, StratumKey
from .report import composition_report
from .scoring import score_pool
from .strata import assign_strata
from .verify import verify_manifest

__version__ = "0.1.0"

__all__ = [
    "BlockMatchingFlow",
    "DescriptorExtractor",
    "DescriptorVector",
    "ExtractionConfig",
    "ExtractionError",
    "GdoError",
    "GoalProfile",
    "InfeasibleProfileError",
    "IngestError",
    "ManifestError",
    "MockProbe",
    "NormalizationStats",
    "Pool",
    "PoolScorer",
    "Reservoir",
    "SampleRecord",
    "StratumKey",
    "SubsetManifest",
    "SubsetSelector",
    "UniformControlSelector",
    "assign_strata",
    "build_subset",
    "composition_report",
    "compute_flow",
    "compute_ppl",
    "compute_self_consistency",
    "compute_tnc",
    "compute_vds",
    "dedup_and_cap",
    "dedup_key",
    "delta_table",
    "draw_uniform_control",
    "extract_all",
    "fill_reservoirs",
    "fit_normalization",
    "frame_diversity",
    "ingest_pool",
    "load_descriptor_table",
    "load_preset",
    "make_curation_pipeline",
    "peak_match",
    "read_trajectory",
    "resolve_profile",
    "score_pool",
    "verify_manifest",
    "write_descriptor_table",
    "znormalize",
]
