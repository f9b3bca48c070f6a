"""Gray-level co-occurrence matrices per patch and the four texture features.

Intensities quantize to G uniform levels; pixel pairs at a fixed offset
accumulate symmetrically into a GxG matrix normalized to probabilities.
Features: contrast, correlation (covariance form, optionally normalized),
energy, homogeneity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .patches import PatchGrid

GLCM_LEVELS = 8
GLCM_OFFSET = (1, 0)  # (dx, dy): partner pixel is (x + dx, y + dy)


@dataclass(frozen=True)
class Glcm:
    levels: int
    p: np.ndarray  # (G, G) co-occurrence probabilities, symmetric
    mu_i: float
    mu_j: float


@dataclass(frozen=True)
class TextureQuad:
    contrast: float
    correlation: float
    energy: float
    homogeneity: float

    def as_array(self) -> np.ndarray:
        return np.array([self.contrast, self.correlation, self.energy, self.homogeneity])


def quantize(patch, levels: int) -> np.ndarray:
    """Map 0..255 intensities to levels uniform bins: floor(v * G / 256)."""
    q = np.floor(np.asarray(patch, dtype=np.float64) * (levels / 256.0)).astype(np.int64)
    return np.clip(q, 0, levels - 1)


def _offset_slices(h: int, w: int, dx: int, dy: int) -> tuple[slice, slice, slice, slice]:
    ys = slice(max(0, -dy), h - max(0, dy))
    xs = slice(max(0, -dx), w - max(0, dx))
    yd = slice(ys.start + dy, ys.stop + dy)
    xd = slice(xs.start + dx, xs.stop + dx)
    return ys, xs, yd, xd


def glcm(patch, levels: int = GLCM_LEVELS, offset: tuple[int, int] = GLCM_OFFSET) -> Glcm:
    """Symmetric co-occurrence matrix of one patch at the given offset."""
    if levels < 2:
        raise ParameterError("levels must be >= 2")
    dx, dy = offset
    if dx == 0 and dy == 0:
        raise ParameterError("offset must be nonzero")
    a = np.asarray(patch)
    if a.ndim != 2:
        raise ParameterError("patch must be a 2-D intensity grid")
    h, w = a.shape
    if h <= abs(dy) or w <= abs(dx):
        raise ParameterError(f"patch {w}x{h} has no pixel pairs at offset ({dx}, {dy})")
    q = quantize(a, levels)
    ys, xs, yd, xd = _offset_slices(h, w, dx, dy)
    src = q[ys, xs].ravel()
    dst = q[yd, xd].ravel()
    counts = np.bincount(src * levels + dst, minlength=levels * levels)
    counts = counts.reshape(levels, levels).astype(np.float64)
    counts = counts + counts.T
    p = counts / counts.sum()
    mu = float((np.arange(levels) * p.sum(axis=1)).sum())
    return Glcm(levels, p, mu, mu)


def texture_quad(g: Glcm, normalized_correlation: bool = False) -> TextureQuad:
    """The four features of one GLCM.

    Correlation defaults to the covariance form sum p(i,j)(i-mu_i)(j-mu_j);
    normalized_correlation divides by sigma_i*sigma_j (0 when degenerate).
    """
    n = g.levels
    i = np.arange(n, dtype=np.float64)[:, None]
    j = np.arange(n, dtype=np.float64)[None, :]
    d = i - j
    contrast = float((g.p * d * d).sum())
    energy = float((g.p * g.p).sum())
    homogeneity = float((g.p / (1.0 + np.abs(d))).sum())
    correlation = float((g.p * (i - g.mu_i) * (j - g.mu_j)).sum())
    if normalized_correlation:
        idx = np.arange(n, dtype=np.float64)
        var_i = float((g.p.sum(axis=1) * (idx - g.mu_i) ** 2).sum())
        var_j = float((g.p.sum(axis=0) * (idx - g.mu_j) ** 2).sum())
        denom = np.sqrt(var_i * var_j)
        correlation = correlation / denom if denom > 0.0 else 0.0
    return TextureQuad(contrast, correlation, energy, homogeneity)


def pad_frame(pixels: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """Zero-pad right/bottom so the patch grid tiles exactly; no-op when aligned."""
    h, w = pixels.shape
    ph, pw = grid.padded_height, grid.padded_width
    if h > ph or w > pw:
        raise ParameterError(f"frame {w}x{h} exceeds the padded grid {pw}x{ph}")
    if (h, w) == (ph, pw):
        return pixels
    out = np.zeros((ph, pw), dtype=pixels.dtype)
    out[:h, :w] = pixels
    return out


def frame_texture(
    padded: np.ndarray,
    grid: PatchGrid,
    levels: int = GLCM_LEVELS,
    offset: tuple[int, int] = GLCM_OFFSET,
    normalized_correlation: bool = False,
) -> np.ndarray:
    """Texture quads for every patch of a padded frame: (rows, cols, 4).

    Pixel pairs crossing a patch boundary are not counted; each patch gets an
    independent GLCM, computed for all patches in one vectorized pass.
    """
    if levels < 2:
        raise ParameterError("levels must be >= 2")
    dx, dy = offset
    if dx == 0 and dy == 0:
        raise ParameterError("offset must be nonzero")
    h, w = padded.shape
    if (h, w) != (grid.padded_height, grid.padded_width):
        raise ParameterError("frame must be padded to the grid before texture extraction")
    if grid.patch_h <= abs(dy) or grid.patch_w <= abs(dx):
        raise ParameterError(
            f"patches {grid.patch_w}x{grid.patch_h} have no pixel pairs at offset ({dx}, {dy})"
        )
    q = quantize(padded, levels)
    patch_id = (
        (np.arange(h) // grid.patch_h)[:, None] * grid.cols
        + (np.arange(w) // grid.patch_w)[None, :]
    )
    ys, xs, yd, xd = _offset_slices(h, w, dx, dy)
    src = q[ys, xs]
    dst = q[yd, xd]
    pid_src = patch_id[ys, xs]
    same_patch = pid_src == patch_id[yd, xd]
    pid = pid_src[same_patch]
    a = src[same_patch]
    b = dst[same_patch]
    n_patches = grid.rows * grid.cols
    size = n_patches * levels * levels
    counts = np.bincount((pid * levels + a) * levels + b, minlength=size)
    counts = counts + np.bincount((pid * levels + b) * levels + a, minlength=size)
    p = counts.reshape(grid.rows, grid.cols, levels, levels).astype(np.float64)
    p /= p.sum(axis=(2, 3), keepdims=True)

    idx = np.arange(levels, dtype=np.float64)
    d = idx[:, None] - idx[None, :]
    contrast = np.einsum("rcij,ij->rc", p, d * d)
    energy = (p * p).sum(axis=(2, 3))
    homogeneity = np.einsum("rcij,ij->rc", p, 1.0 / (1.0 + np.abs(d)))
    marginal = p.sum(axis=3)
    mu = marginal @ idx
    e_ij = np.einsum("rcij,i,j->rc", p, idx, idx)
    correlation = e_ij - mu * mu
    if normalized_correlation:
        # symmetric matrix: both marginals coincide, so sigma_i*sigma_j = var
        var = (marginal * (idx[None, None, :] - mu[..., None]) ** 2).sum(axis=2)
        correlation = np.where(var > 0.0, correlation / np.where(var > 0.0, var, 1.0), 0.0)
    return np.stack([contrast, correlation, energy, homogeneity], axis=-1)


def patch_foreground_fraction(mask: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """Fraction of foreground pixels per patch; padding counts as background."""
    padded = pad_frame(np.asarray(mask, dtype=np.float64), grid)
    return padded.reshape(grid.rows, grid.patch_h, grid.cols, grid.patch_w).mean(axis=(1, 3))


def weighted_mean_quad(quads: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Foreground-weighted mean quad; plain mean when nothing is foreground."""
    total = float(weights.sum())
    if total == 0.0:
        return quads.mean(axis=(0, 1))
    return (quads * weights[..., None]).sum(axis=(0, 1)) / total
