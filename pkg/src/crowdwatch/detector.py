"""Frame feature assembly, the normal-behavior dictionary, and anomaly scoring.

Each frame reduces to 7 scored dimensions: the weighted foreground count,
the four texture features, and the mean/max clustering deviation.  Training
vectors, normalized per dimension, form the dictionary; a frame's anomaly
score is the Euclidean distance to its nearest atom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, TrainingError
from .holistic import WeightModel, weigh

FEATURE_DIM = 7
MIN_ATOMS = 10
SCALE_FLOOR = 1e-9
SMOOTH_WINDOW = 5


@dataclass(frozen=True)
class FrameStats:
    """Raw per-frame measurements collected while streaming the pipeline."""

    frame_index: int
    feat_n_raw: float      # perspective-weighted foreground count
    mean_magnitude: float  # mean foreground flow magnitude (0 when no vectors)
    texture: np.ndarray    # (4,) foreground-weighted texture quad
    dev_mean: float
    dev_max: float


@dataclass(frozen=True)
class FrameFeatureVector:
    frame_index: int
    feat_n: float          # weighted count after magnitude weighting
    texture: np.ndarray
    dev_mean: float
    dev_max: float

    def as_array(self) -> np.ndarray:
        return np.array([self.feat_n, *self.texture, self.dev_mean, self.dev_max])


def extract_features(stats: FrameStats, weight_model: WeightModel) -> FrameFeatureVector:
    """Assemble one frame's feature vector; feat_n = W_d(i) * FeatN_i."""
    if weight_model is None:
        raise ParameterError("weight model not fitted; the training stage must run first")
    tex = np.asarray(stats.texture, dtype=np.float64)
    raw = np.array([stats.feat_n_raw, stats.mean_magnitude, stats.dev_mean, stats.dev_max])
    if tex.shape != (4,) or not np.isfinite(tex).all() or not np.isfinite(raw).all():
        raise ParameterError(f"frame {stats.frame_index}: non-finite or missing upstream measurements")
    feat = weigh(weight_model, stats.mean_magnitude) * stats.feat_n_raw
    return FrameFeatureVector(stats.frame_index, feat, tex, stats.dev_mean, stats.dev_max)


@dataclass(frozen=True)
class Dictionary:
    atoms: np.ndarray  # (n, FEATURE_DIM) normalized training vectors
    mean: np.ndarray
    scale: np.ndarray  # per-dimension max-abs-deviation, floored

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale


def build_dictionary(features, min_atoms: int = MIN_ATOMS) -> Dictionary:
    """Normalize training vectors into atoms; per-dimension mean and max-abs scale."""
    if len(features) < min_atoms:
        raise TrainingError(f"need at least {min_atoms} training vectors, got {len(features)}")
    x = np.stack([f.as_array() for f in features])
    if not np.isfinite(x).all():
        raise TrainingError("training features contain non-finite values")
    mean = x.mean(axis=0)
    scale = np.maximum(np.abs(x - mean).max(axis=0), SCALE_FLOOR)
    return Dictionary((x - mean) / scale, mean, scale)


def score(dictionary: Dictionary, feature: FrameFeatureVector) -> float:
    """Distance from the normalized feature to the nearest atom (0 iff an atom)."""
    v = dictionary.normalize(feature.as_array())
    return float(np.sqrt(((dictionary.atoms - v) ** 2).sum(axis=1)).min())


def score_series(dictionary: Dictionary, features) -> np.ndarray:
    """score() over a feature list, vectorized."""
    if not features:
        return np.zeros(0)
    x = dictionary.normalize(np.stack([f.as_array() for f in features]))
    d2 = ((x[:, None, :] - dictionary.atoms[None, :, :]) ** 2).sum(axis=2)
    return np.sqrt(d2.min(axis=1))


def smooth_scores(scores: np.ndarray, window: int = SMOOTH_WINDOW) -> np.ndarray:
    """Centered moving median; the window shrinks at the series edges."""
    if window < 1 or window % 2 == 0:
        raise ParameterError("smoothing window must be odd and positive")
    s = np.asarray(scores, dtype=np.float64)
    r = window // 2
    out = np.empty_like(s)
    for i in range(s.size):
        out[i] = np.median(s[max(0, i - r) : i + r + 1])
    return out
