"""Estimator-style wrappers so the stages compose with sklearn tooling.

Each stage is a transformer over a :class:`~gdo.records.Pool`: extraction
annotates descriptors, scoring fits normalization stats and annotates rho,
selection reduces the pool to the built subset. ``get_params`` /
``set_params`` come from ``BaseEstimator``, so the stages work inside
``sklearn.pipeline.Pipeline`` and can be cloned or grid-configured.

>>> pipe = make_curation_pipeline(profile=load_preset("temp"), seed=7)
>>> selected = pipe.fit_transform(pool)   # doctest: +SKIP
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from .builder import build_subset, draw_uniform_control
from .descriptors import ExtractionConfig, extract_all
from .normalize import DEFAULT_CLIP, DEFAULT_FRAME_DIVERSITY_GAIN, fit_normalization
from .probes import MockProbe
from .profiles import GoalProfile, load_preset
from .records import Pool
from .scoring import score_pool


def check_pool(X) -> Pool:
    """Validation helper: accept a Pool or a list of records."""
    if isinstance(X, Pool):
        return X
    if isinstance(X, list):
        return Pool(X)
    raise TypeError(f"expected a Pool or list of SampleRecord, got {type(X).__name__}")


class DescriptorExtractor(BaseEstimator, TransformerMixin):
    """Annotate every record with its descriptor vector.

    ``probe=None`` uses the deterministic mock probe, so the stage runs
    with no model. Extraction mutates the records in place and returns the
    same pool; the per-sample failure report lands on ``report_``.
    """

    def __init__(
        self,
        probe=None,
        n_decodes: int = 5,
        seed: int = 0,
        n_jobs: int = 1,
        max_failure_fraction: float = 0.1,
    ):
        self.probe = probe
        self.n_decodes = n_decodes
        self.seed = seed
        self.n_jobs = n_jobs
        self.max_failure_fraction = max_failure_fraction

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> Pool:
        pool = check_pool(X)
        probe = self.probe if self.probe is not None else MockProbe(self.seed)
        config = ExtractionConfig(
            n_decodes=self.n_decodes,
            seed=self.seed,
            n_jobs=self.n_jobs,
            max_failure_fraction=self.max_failure_fraction,
        )
        self.report_ = extract_all(pool, probe, config)
        return pool


class PoolScorer(BaseEstimator, TransformerMixin):
    """Fit normalization stats on the pool, then annotate quality and rho."""

    def __init__(
        self,
        clip: float = DEFAULT_CLIP,
        frame_diversity_gain: float = DEFAULT_FRAME_DIVERSITY_GAIN,
        ablate: tuple = (),
    ):
        self.clip = clip
        self.frame_diversity_gain = frame_diversity_gain
        self.ablate = ablate

    def fit(self, X, y=None):
        pool = check_pool(X)
        extracted = Pool([r for r in pool if r.descriptors is not None])
        self.stats_ = fit_normalization(
            extracted,
            clip=self.clip,
            frame_diversity_gain=self.frame_diversity_gain,
            ablate=frozenset(self.ablate),
        )
        return self

    def transform(self, X) -> Pool:
        if not hasattr(self, "stats_"):
            raise NotFittedError("PoolScorer must be fitted before transform")
        pool = check_pool(X)
        score_pool(pool, stats=self.stats_)
        return pool


class SubsetSelector(BaseEstimator, TransformerMixin):
    """Reduce a scored pool to the goal profile's subset.

    After ``fit``/``transform``, ``manifest_`` holds the audited manifest.
    """

    def __init__(self, profile: GoalProfile | None = None, seed: int | None = None):
        self.profile = profile
        self.seed = seed

    def fit(self, X, y=None):
        pool = check_pool(X)
        profile = self.profile if self.profile is not None else load_preset("temp")
        self.manifest_ = build_subset(pool, profile, seed=self.seed)
        return self

    def transform(self, X) -> Pool:
        if not hasattr(self, "manifest_"):
            raise NotFittedError("SubsetSelector must be fitted before transform")
        pool = check_pool(X)
        return pool.subset(self.manifest_.ids())


class UniformControlSelector(BaseEstimator, TransformerMixin):
    """Seeded uniform control draw (the 10x comparison subset)."""

    def __init__(self, size: int = 0, seed: int = 0):
        self.size = size
        self.seed = seed

    def fit(self, X, y=None):
        pool = check_pool(X)
        self.manifest_ = draw_uniform_control(pool, self.size, self.seed)
        return self

    def transform(self, X) -> Pool:
        if not hasattr(self, "manifest_"):
            raise NotFittedError("UniformControlSelector must be fitted before transform")
        pool = check_pool(X)
        return pool.subset(self.manifest_.ids())


def make_curation_pipeline(
    profile: GoalProfile, probe=None, seed: int = 0, n_jobs: int = 1
) -> Pipeline:
    """extract -> score -> select, as one sklearn Pipeline."""
    return Pipeline(
        [
            ("extract", DescriptorExtractor(probe=probe, seed=seed, n_jobs=n_jobs)),
            ("score", PoolScorer()),
            ("select", SubsetSelector(profile=profile, seed=seed)),
        ]
    )
