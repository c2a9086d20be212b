"""Coverage signal: local embedding density plus source rarity.

At desk scale embeddings come from a deterministic token-hashing embedder,
so the whole pipeline stays model-free and reproducible. The neighbor
radius defaults to the pool's median pairwise distance.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

from .records import SampleRecord

DEFAULT_DENSITY_WEIGHT = 0.7
DEFAULT_RARITY_WEIGHT = 0.3

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class HashingEmbedder:
    """Signed feature hashing of tokens into a fixed-width L2-normal vector."""

    def __init__(self, dim: int = 64):
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        vector = np.zeros(self.dim)
        for token in _TOKEN_RE.findall(text.lower()):
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            index = value % self.dim
            sign = 1.0 if (value >> 32) & 1 else -1.0
            vector[index] += sign
        norm = np.linalg.norm(vector)
        if norm > 0:
            vector /= norm
        return vector


class NeighborIndex:
    """Brute-force radius-neighbor counts over a fixed set of vectors."""

    def __init__(self, ids: list[str], vectors: np.ndarray, radius: float | None = None):
        if len(ids) == 0:
            raise ValueError("cannot build an index over an empty pool")
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.shape[0] != len(ids):
            raise ValueError("ids and vectors disagree in length")
        self.ids = list(ids)
        self._row = {sample_id: i for i, sample_id in enumerate(self.ids)}
        gram = vectors @ vectors.T
        norms = np.diag(gram)
        sq = norms[:, None] + norms[None, :] - 2.0 * gram
        np.maximum(sq, 0.0, out=sq)
        self._dist = np.sqrt(sq)
        if radius is None:
            radius = self._median_pairwise()
        self.radius = float(radius)

    def _median_pairwise(self) -> float:
        n = self._dist.shape[0]
        if n < 2:
            return 0.0
        upper = self._dist[np.triu_indices(n, k=1)]
        return float(np.median(upper))

    def density(self, sample_id: str) -> float:
        """Fraction of other pool members within the radius."""
        n = self._dist.shape[0]
        if n < 2:
            return 0.0
        row = self._row[sample_id]
        neighbors = int((self._dist[row] <= self.radius).sum()) - 1
        return neighbors / (n - 1)


class SourceHistogram:
    """Pool-level source shares; rarity is one minus the share."""

    def __init__(self, sources: list[str]):
        if not sources:
            raise ValueError("cannot build source statistics over an empty pool")
        self.total = len(sources)
        self.counts: dict[str, int] = {}
        for source in sources:
            self.counts[source] = self.counts.get(source, 0) + 1

    def share(self, source: str) -> float:
        return self.counts.get(source, 0) / self.total

    def rarity(self, source: str) -> float:
        return 1.0 - self.share(source)


def compute_coverage(
    sample: SampleRecord,
    text_neighbors: NeighborIndex,
    vision_neighbors: NeighborIndex,
    source_stats: SourceHistogram,
    density_weight: float = DEFAULT_DENSITY_WEIGHT,
    rarity_weight: float = DEFAULT_RARITY_WEIGHT,
) -> float:
    """Breadth value of a sample: low local density and rare source score high.

    Density over the joined text/vision space is the mean of the two
    per-index densities; a singleton pool scores ``density_weight`` exactly
    (zero density, zero rarity).
    """
    local_density = 0.5 * (
        text_neighbors.density(sample.id) + vision_neighbors.density(sample.id)
    )
    return density_weight * (1.0 - local_density) + rarity_weight * source_stats.rarity(
        sample.source
    )


def text_of(record: SampleRecord) -> str:
    return record.question + " " + record.answer


def visual_token_of(record: SampleRecord) -> str:
    # With no media at desk scale, the visual identity stands in for content:
    # QA pairs on one clip land on the same vector.
    return f"{record.modality} {record.source} {record.visual_ref()}"
