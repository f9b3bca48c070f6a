"""Adaptive per-pixel Gaussian-mixture background subtraction.

Each pixel carries K weighted Gaussians over intensity (0..255 units).  A new
frame updates the mixture and yields a boolean foreground mask; motion vectors
can then be filtered down to foreground positions.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .imageops import box3_sum

K_COMPONENTS = 3
ALPHA = 0.01
BG_RATIO = 0.7
MATCH_SIGMA = 2.5
VARIANCE_FLOOR = 4.0        # intensity^2
INITIAL_VARIANCE = 225.0
NEW_COMPONENT_WEIGHT = 0.05


class BackgroundMixture:
    """Stauffer-Grimson-style mixture grid; update() adapts and classifies.

    The model initializes itself from the first frame it sees (that frame is
    therefore all background).  weights/means/variances are (K, h, w) arrays.
    """

    def __init__(
        self,
        n_components: int = K_COMPONENTS,
        alpha: float = ALPHA,
        bg_ratio: float = BG_RATIO,
        match_sigma: float = MATCH_SIGMA,
        variance_floor: float = VARIANCE_FLOOR,
        initial_variance: float = INITIAL_VARIANCE,
        new_weight: float = NEW_COMPONENT_WEIGHT,
        cleanup: bool = True,
    ):
        if n_components < 1:
            raise ParameterError("n_components must be >= 1")
        if not 0.0 < alpha < 1.0:
            raise ParameterError("alpha must be in (0, 1)")
        if not 0.0 < bg_ratio < 1.0:
            raise ParameterError("bg_ratio must be in (0, 1)")
        if match_sigma <= 0.0 or variance_floor <= 0.0 or initial_variance <= 0.0:
            raise ParameterError("match_sigma, variance_floor and initial_variance must be positive")
        if not 0.0 < new_weight < 1.0:
            raise ParameterError("new_weight must be in (0, 1)")
        self.n_components = n_components
        self.alpha = alpha
        self.bg_ratio = bg_ratio
        self.match_sigma = match_sigma
        self.variance_floor = variance_floor
        self.initial_variance = initial_variance
        self.new_weight = new_weight
        self.cleanup = cleanup
        self.weights: np.ndarray | None = None
        self.means: np.ndarray | None = None
        self.variances: np.ndarray | None = None

    def _initialize(self, frame: np.ndarray) -> None:
        k = self.n_components
        h, w = frame.shape
        self.weights = np.zeros((k, h, w))
        self.weights[0] = 1.0
        self.means = np.broadcast_to(frame, (k, h, w)).copy()
        self.variances = np.full((k, h, w), self.initial_variance)

    def update(self, frame: np.ndarray) -> np.ndarray:
        """Adapt the mixture with one frame and return its foreground mask."""
        x = np.asarray(frame, dtype=np.float64)
        if x.ndim != 2:
            raise ParameterError("frame must be a 2-D intensity grid")
        if self.weights is None:
            self._initialize(x)
        elif self.weights.shape[1:] != x.shape:
            raise ParameterError(
                f"frame {x.shape[1]}x{x.shape[0]} does not match model "
                f"{self.weights.shape[2]}x{self.weights.shape[1]}"
            )
        w, mu, var = self.weights, self.means, self.variances
        k = self.n_components

        diff = x[None] - mu
        absdiff = np.abs(diff)
        within = absdiff <= self.match_sigma * np.sqrt(var)
        matched = within.any(axis=0)
        # nearest matching component by |x - mu|
        best = np.argmin(np.where(within, absdiff, np.inf), axis=0)
        comp = np.arange(k)[:, None, None]
        hit = (comp == best[None]) & matched[None]

        m = matched[None]
        w = np.where(m, (1.0 - self.alpha) * w, w) + np.where(hit, self.alpha, 0.0)
        mu = mu + np.where(hit, self.alpha * diff, 0.0)
        var = var + np.where(hit, self.alpha * (diff * diff - var), 0.0)

        # no component explains the pixel: recycle the weakest one
        if not matched.all():
            weakest = np.argmin(w, axis=0)
            swap = (comp == weakest[None]) & ~matched[None]
            w = np.where(swap, self.new_weight, w)
            mu = np.where(swap, x[None], mu)
            var = np.where(swap, self.initial_variance, var)

        np.maximum(var, self.variance_floor, out=var)
        w = w / w.sum(axis=0, keepdims=True)
        self.weights, self.means, self.variances = w, mu, var

        # background components: take them in w/sigma order until the
        # cumulative weight before a component exceeds bg_ratio
        rank = np.argsort(-(w / np.sqrt(var)), axis=0, kind="stable")
        w_sorted = np.take_along_axis(w, rank, axis=0)
        prefix = np.cumsum(w_sorted, axis=0) - w_sorted
        bg_sorted = prefix <= self.bg_ratio
        is_bg = np.take_along_axis(bg_sorted, np.argsort(rank, axis=0, kind="stable"), axis=0)
        best_is_bg = np.take_along_axis(is_bg, best[None], axis=0)[0]

        foreground = ~(matched & best_is_bg)
        if self.cleanup:
            foreground = majority_vote(foreground)
        return foreground


def majority_vote(mask: np.ndarray) -> np.ndarray:
    """One 3x3 majority pass; cells outside the image vote background."""
    counts = box3_sum(mask.astype(np.int32))
    return counts >= 5


def filter_vectors(mask: np.ndarray, vectors):
    """Keep the motion vectors whose rounded position is a foreground pixel."""
    h, w = mask.shape
    kept = []
    for v in vectors:
        xi = min(max(int(round(v.x)), 0), w - 1)
        yi = min(max(int(round(v.y)), 0), h - 1)
        if mask[yi, xi]:
            kept.append(v)
    return kept


def count_foreground_rows(mask: np.ndarray) -> np.ndarray:
    """Foreground pixels per row; sums to the mask's population count."""
    return np.count_nonzero(mask, axis=1).astype(np.int64)
