"""Low-level raster helpers shared by the tracking and background modules."""

from __future__ import annotations

import numpy as np

_BINOMIAL3 = np.array([1.0, 2.0, 1.0]) / 4.0
_BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def separable_filter(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Apply an odd-length 1-D kernel along both axes, edge-replicated borders."""
    r = len(kernel) // 2
    h, w = image.shape
    p = np.pad(image, ((r, r), (0, 0)), mode="edge")
    rows = kernel[0] * p[0:h]
    for i in range(1, len(kernel)):
        rows = rows + kernel[i] * p[i : i + h]
    p = np.pad(rows, ((0, 0), (r, r)), mode="edge")
    out = kernel[0] * p[:, 0:w]
    for i in range(1, len(kernel)):
        out = out + kernel[i] * p[:, i : i + w]
    return out


def smooth3(image: np.ndarray) -> np.ndarray:
    """3-tap binomial (Gaussian-like) smoothing."""
    return separable_filter(image, _BINOMIAL3)


def smooth5(image: np.ndarray) -> np.ndarray:
    """5-tap binomial smoothing, used before pyramid decimation."""
    return separable_filter(image, _BINOMIAL5)


def box3_sum(image: np.ndarray) -> np.ndarray:
    """Sum over each pixel's 3x3 neighbourhood, zero outside the image."""
    p = np.pad(image, 1)
    return (
        p[:-2, :-2] + p[:-2, 1:-1] + p[:-2, 2:]
        + p[1:-1, :-2] + p[1:-1, 1:-1] + p[1:-1, 2:]
        + p[2:, :-2] + p[2:, 1:-1] + p[2:, 2:]
    )


def max3_filter(image: np.ndarray) -> np.ndarray:
    """Maximum over each pixel's 3x3 neighbourhood (zero-padded)."""
    p = np.pad(image, 1)
    return np.maximum.reduce([
        p[:-2, :-2], p[:-2, 1:-1], p[:-2, 2:],
        p[1:-1, :-2], p[1:-1, 1:-1], p[1:-1, 2:],
        p[2:, :-2], p[2:, 1:-1], p[2:, 2:],
    ])


def bilinear_sample(image: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bilinear interpolation at (x, y); samples outside clamp to the border."""
    h, w = image.shape
    x = np.clip(x, 0.0, w - 1.0)
    y = np.clip(y, 0.0, h - 1.0)
    x0 = np.minimum(x.astype(np.int64), w - 2)
    y0 = np.minimum(y.astype(np.int64), h - 2)
    fx = x - x0
    fy = y - y0
    p00 = image[y0, x0]
    p01 = image[y0, x0 + 1]
    p10 = image[y0 + 1, x0]
    p11 = image[y0 + 1, x0 + 1]
    top = p00 + fx * (p01 - p00)
    bottom = p10 + fx * (p11 - p10)
    return top + fy * (bottom - top)
