"""Patch partitioning, motion-pattern descriptors, and online coherent merging.

Each frame is tiled by a fixed patch grid (30x40 by default).  The motion
vectors falling in a patch are summarized as a magnitude-weighted 16-bin
orientation histogram plus the Gaussian (mean/covariance) parameters of the
displacement samples.  Histograms are clustered online: a new descriptor
merges into the nearest stored pattern by a running mean, or starts a new
pattern when the smallest deviation exceeds the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .klt import TWO_PI, MotionVector

PATCH_ROWS = 30
PATCH_COLS = 40
HIST_BINS = 16
TAU = 0.5

# largest possible L2 distance between two L1-normalized histograms;
# reported as the deviation when a descriptor meets an empty store
MAX_DEVIATION = math.sqrt(2.0)


@dataclass(frozen=True)
class PatchGrid:
    rows: int
    cols: int
    patch_w: int
    patch_h: int

    @classmethod
    def for_frame(cls, width: int, height: int, rows: int = PATCH_ROWS, cols: int = PATCH_COLS) -> "PatchGrid":
        if rows < 1 or cols < 1:
            raise ParameterError("patch grid needs at least one row and column")
        if width < 1 or height < 1:
            raise ParameterError("frame dimensions must be positive")
        return cls(rows, cols, math.ceil(width / cols), math.ceil(height / rows))

    @property
    def padded_width(self) -> int:
        return self.patch_w * self.cols

    @property
    def padded_height(self) -> int:
        return self.patch_h * self.rows


@dataclass(frozen=True)
class PatchDescriptor:
    """Per-patch motion summary.

    hist is the magnitude-weighted orientation histogram (bin 0 starts at
    angle 0); mean_v/cov_v are the sample moments of the (dx, dy) displacement
    vectors, covariance in the population convention (zero for one sample).
    """

    row: int
    col: int
    hist: np.ndarray
    mean_v: np.ndarray
    cov_v: np.ndarray
    count: int


@dataclass(frozen=True)
class CoherentPattern:
    model: np.ndarray
    member_count: int


def assign_to_patches(grid: PatchGrid, vectors) -> dict[tuple[int, int], list[MotionVector]]:
    """Partition vectors into patches by floor(x / patch_w), floor(y / patch_h)."""
    out: dict[tuple[int, int], list[MotionVector]] = {}
    max_row = grid.rows - 1
    max_col = grid.cols - 1
    for v in vectors:
        row = min(max(int(v.y // grid.patch_h), 0), max_row)
        col = min(max(int(v.x // grid.patch_w), 0), max_col)
        out.setdefault((row, col), []).append(v)
    return out


def build_descriptor(vectors, row: int = 0, col: int = 0, bins: int = HIST_BINS) -> PatchDescriptor:
    """Summarize one patch's motion vectors; an empty list gives a zero descriptor."""
    if bins < 1:
        raise ParameterError("histogram needs at least one bin")
    hist = np.zeros(bins)
    if not vectors:
        return PatchDescriptor(row, col, hist, np.zeros(2), np.zeros((2, 2)), 0)
    magnitudes = np.array([v.magnitude for v in vectors])
    directions = np.array([v.direction for v in vectors])
    bin_ids = (directions * (bins / TWO_PI)).astype(np.int64) % bins
    np.add.at(hist, bin_ids, magnitudes)
    d = np.stack([magnitudes * np.cos(directions), magnitudes * np.sin(directions)], axis=1)
    mean = d.mean(axis=0)
    centered = d - mean
    cov = centered.T @ centered / len(vectors)
    return PatchDescriptor(row, col, hist, mean, cov, len(vectors))


def merge_pattern(pattern: CoherentPattern, incoming) -> CoherentPattern:
    """Running-mean merge: model <- P/(N+1) + (1 - 1/(N+1)) * M, count N+1."""
    inc = np.asarray(incoming, dtype=np.float64)
    if inc.shape != pattern.model.shape:
        raise ParameterError("incoming histogram has the wrong number of bins")
    if np.any(inc < 0):
        raise ParameterError("histogram bins must be non-negative")
    f = 1.0 / (pattern.member_count + 1)
    return CoherentPattern(f * inc + (1.0 - f) * pattern.model, pattern.member_count + 1)


def cluster_frame(store: list[CoherentPattern], descriptors, tau: float = TAU) -> list[float]:
    """Merge non-empty descriptors into the store (in place), creating patterns
    where the smallest deviation exceeds tau.

    Deviation is the L2 distance between L1-normalized histograms.  Returns the
    smallest deviation seen for each processed descriptor, in order; a
    descriptor that meets an empty store reports MAX_DEVIATION.  Descriptors
    with no vectors, or with zero histogram mass, are skipped.
    """
    if tau <= 0.0:
        raise ParameterError("tau must be positive")
    deviations: list[float] = []
    for desc in descriptors:
        total = float(desc.hist.sum())
        if desc.count == 0 or total <= 0.0:
            continue
        normalized = desc.hist / total
        if not store:
            store.append(CoherentPattern(np.asarray(desc.hist, dtype=np.float64).copy(), 1))
            deviations.append(MAX_DEVIATION)
            continue
        models = np.stack([p.model for p in store])
        models = models / models.sum(axis=1, keepdims=True)
        dist = np.sqrt(((models - normalized) ** 2).sum(axis=1))
        nearest = int(np.argmin(dist))
        smallest = float(dist[nearest])
        if smallest <= tau:
            store[nearest] = merge_pattern(store[nearest], desc.hist)
        else:
            store.append(CoherentPattern(np.asarray(desc.hist, dtype=np.float64).copy(), 1))
        deviations.append(smallest)
    return deviations


def descriptor_tensor(descriptors, grid: PatchGrid, bins: int = HIST_BINS) -> np.ndarray:
    """Dense (rows, cols, bins) histogram tensor; unlisted patches stay zero."""
    tensor = np.zeros((grid.rows, grid.cols, bins))
    for desc in descriptors:
        tensor[desc.row, desc.col] = desc.hist
    return tensor
