"""Perspective-weighted foreground counting and the magnitude weight model.

The per-row perspective map compensates for far objects occupying fewer
pixels; the weight model rescales each frame's mean flow magnitude so that
the training segment maps into [0, 2] around a center of 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError, TrainingError

W_TOP = 0.5
W_BOTTOM = 1.5


@dataclass(frozen=True)
class PerspectiveMap:
    """One positive weight per frame row, normalized to mean 1."""

    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        if w.ndim != 1 or w.size < 2:
            raise ParameterError("perspective map needs one weight per row (>= 2 rows)")
        if np.any(w <= 0.0):
            raise ParameterError("perspective weights must be positive")
        if abs(float(w.mean()) - 1.0) > 1e-9:
            raise ParameterError("perspective weights must average to 1")

    def __len__(self) -> int:
        return self.weights.size


def linear_perspective(height: int, w_top: float = W_TOP, w_bottom: float = W_BOTTOM) -> PerspectiveMap:
    """Linear ramp from w_top (row 0) to w_bottom (last row), mean-normalized."""
    if height < 2:
        raise ParameterError("perspective map needs at least 2 rows")
    if w_top <= 0.0 or w_bottom <= 0.0:
        raise ParameterError("perspective endpoint weights must be positive")
    raw = np.linspace(w_top, w_bottom, height)
    return PerspectiveMap(raw / raw.mean())


def load_perspective(path) -> PerspectiveMap:
    """Read one weight per line (mean-normalized on load); '#' starts a comment."""
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise FormatError(f"{path}:{lineno}: not a number: {line!r}") from None
    weights = np.asarray(values, dtype=np.float64)
    if weights.size < 2:
        raise FormatError(f"{path}: needs at least 2 weights")
    if np.any(weights <= 0.0):
        raise ParameterError(f"{path}: perspective weights must be positive")
    return PerspectiveMap(weights / weights.mean())


def feat_n(pmap: PerspectiveMap, row_counts) -> float:
    """Perspective-weighted foreground count: sum over rows of W_p(y) * N_T(y)."""
    counts = np.asarray(row_counts, dtype=np.float64)
    if counts.shape != pmap.weights.shape:
        raise ParameterError(
            f"row counts length {counts.size} does not match perspective map {len(pmap)}"
        )
    return float(pmap.weights @ counts)


@dataclass(frozen=True)
class WeightModel:
    """Center and scale of the training-segment magnitudes."""

    mu: float
    sigma_max: float
    n_frames: int


def fit_weight_model(magnitudes) -> WeightModel:
    """mu = mean, sigma_max = max |d - mu| over the training magnitudes."""
    d = np.asarray(magnitudes, dtype=np.float64)
    if d.ndim != 1 or d.size < 2:
        raise TrainingError("need at least 2 training magnitudes")
    if not np.isfinite(d).all():
        raise TrainingError("training magnitudes must be finite")
    mu = float(d.mean())
    sigma_max = float(np.abs(d - mu).max())
    if sigma_max == 0.0:
        raise TrainingError("training magnitudes are all equal; weight scale is degenerate")
    return WeightModel(mu, sigma_max, int(d.size))


def weigh(model: WeightModel, d: float) -> float:
    """(d - mu) / sigma_max + 1; equals 1 at the training mean."""
    return (d - model.mu) / model.sigma_max + 1.0
