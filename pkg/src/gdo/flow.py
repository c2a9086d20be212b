"""Motion magnitude from dense flow fields.

The reference estimator is exhaustive block matching, meant for small
synthetic frames: anchors tile the interior so every candidate displacement
stays in bounds, each anchor takes the displacement minimizing SSD, and the
per-block displacement is painted over the pixels it owns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FlowField:
    """Per-pixel displacement fields for each adjacent frame pair."""

    fields: list[np.ndarray]  # each (H, W, 2), components (dy, dx)

    def __post_init__(self):
        if not self.fields:
            raise ValueError("a flow field needs at least one frame pair")
        shape = np.asarray(self.fields[0]).shape
        for index, field in enumerate(self.fields):
            field = np.asarray(field)
            if field.ndim != 3 or field.shape[-1] != 2 or field.shape != shape:
                raise ValueError(
                    f"pair {index}: field shape {field.shape} does not match "
                    f"the frame grid {shape}"
                )

    def mean_magnitude(self) -> float:
        total = 0.0
        for field in self.fields:
            total += float(np.linalg.norm(field, axis=-1).mean())
        return total / len(self.fields)


class BlockMatchingFlow:
    """Exhaustive SSD block matcher producing a dense (H, W, 2) field.

    Ties prefer zero, then smaller, displacements, so a constant video
    yields an exactly-zero field.
    """

    def __init__(self, block_size: int = 8, search_radius: int = 4):
        if block_size < 1 or search_radius < 0:
            raise ValueError("block_size must be >= 1 and search_radius >= 0")
        self.block_size = block_size
        self.search_radius = search_radius

    def _anchors(self, length: int) -> list[int]:
        margin = self.search_radius
        last = length - self.block_size - margin
        if last < margin:
            raise ValueError(
                f"frame of length {length} too small for block_size="
                f"{self.block_size} with search_radius={self.search_radius}"
            )
        return list(range(margin, last + 1, self.block_size))

    def estimate(self, frame_a: np.ndarray, frame_b: np.ndarray) -> np.ndarray:
        frame_a = np.asarray(frame_a, dtype=np.float64)
        frame_b = np.asarray(frame_b, dtype=np.float64)
        if frame_a.shape != frame_b.shape or frame_a.ndim != 2:
            raise ValueError("frames must be 2-D grids with identical shape")

        height, width = frame_a.shape
        rows = self._anchors(height)
        cols = self._anchors(width)
        size = self.block_size
        radius = self.search_radius

        block_flow = np.zeros((len(rows), len(cols), 2))
        for i, r in enumerate(rows):
            for j, c in enumerate(cols):
                ref = frame_a[r : r + size, c : c + size]
                best = None
                for dy in range(-radius, radius + 1):
                    for dx in range(-radius, radius + 1):
                        candidate = frame_b[r + dy : r + dy + size, c + dx : c + dx + size]
                        ssd = float(((ref - candidate) ** 2).sum())
                        key = (ssd, dy * dy + dx * dx, dy, dx)
                        if best is None or key < best:
                            best = key
                            block_flow[i, j] = (dy, dx)

        # Every pixel inherits the displacement of its nearest anchor block.
        row_centers = np.array(rows) + size / 2.0
        col_centers = np.array(cols) + size / 2.0
        row_idx = np.abs(np.arange(height)[:, None] - row_centers[None, :]).argmin(axis=1)
        col_idx = np.abs(np.arange(width)[:, None] - col_centers[None, :]).argmin(axis=1)
        return block_flow[row_idx[:, None], col_idx[None, :]]


def compute_flow(frames, estimator=None) -> float:
    """Mean per-pixel flow magnitude averaged over adjacent frame pairs.

    ``estimator`` must expose ``estimate(frame_a, frame_b) -> (H, W, 2)``;
    defaults to :class:`BlockMatchingFlow`.
    """
    frames = [np.asarray(frame, dtype=np.float64) for frame in frames]
    if len(frames) < 2:
        raise ValueError(f"need at least 2 frames, got {len(frames)}")
    shape = frames[0].shape
    for index, frame in enumerate(frames[1:], start=1):
        if frame.shape != shape:
            raise ValueError(
                f"frame {index} has shape {frame.shape}, expected {shape}"
            )
    if estimator is None:
        estimator = BlockMatchingFlow()

    per_pair = []
    for frame_a, frame_b in zip(frames, frames[1:]):
        field = np.asarray(estimator.estimate(frame_a, frame_b), dtype=np.float64)
        per_pair.append(float(np.linalg.norm(field, axis=-1).mean()))
    return float(np.mean(per_pair))


def frame_diversity(frames) -> float:
    """Spread of per-frame mean intensity across sampled frames."""
    means = [float(np.asarray(frame, dtype=np.float64).mean()) for frame in frames]
    if not means:
        raise ValueError("need at least one frame")
    return float(np.std(means))
