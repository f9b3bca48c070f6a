"""Sparse KLT tracking: minimum-eigenvalue corners plus pyramidal Lucas-Kanade flow.

Corners are scored by the smaller eigenvalue of the 2x2 gradient structure
tensor over a binomial-weighted 3x3 window; gradients are central differences
of the 3-tap-smoothed image.  Tracking solves the LK normal equations per
corner, coarse to fine, with bilinear subpixel sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .imageops import bilinear_sample, max3_filter, separable_filter, smooth3, smooth5

TWO_PI = 2.0 * math.pi

MAX_CORNERS = 500
QUALITY = 0.01
MIN_DISTANCE = 5.0
WINDOW = 5        # half-size; the LK window is (2*WINDOW+1)^2
LEVELS = 3
MAX_ITERS = 10
EPSILON = 0.01    # px; iteration stops when the update step is shorter

# per-sample normalized structure-tensor eigenvalue below this is untrackable
_MIN_EIG_FLOOR = 1e-9


@dataclass(frozen=True)
class CornerPoint:
    x: float
    y: float
    response: float


@dataclass(frozen=True)
class MotionVector:
    """Displacement of one tracked feature between consecutive frames."""

    x: float
    y: float
    magnitude: float
    direction: float  # radians in [0, 2*pi)

    @property
    def dx(self) -> float:
        return self.magnitude * math.cos(self.direction)

    @property
    def dy(self) -> float:
        return self.magnitude * math.sin(self.direction)


def spatial_gradients(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(gx, gy): central differences of the 3-tap-smoothed image."""
    s = smooth3(image)
    gy, gx = np.gradient(s)
    return gx, gy


def build_pyramid(image: np.ndarray, levels: int) -> list[np.ndarray]:
    """Level 0 is the input; each next level is 5-tap smoothed and decimated by 2."""
    if levels < 1:
        raise ParameterError("pyramid needs at least one level")
    h, w = image.shape
    need = (2 ** (levels - 1)) * 8
    if h < need or w < need:
        raise ParameterError(
            f"image {w}x{h} too small for {levels} pyramid levels (needs >= {need} px per side)"
        )
    pyramid = [image]
    for _ in range(levels - 1):
        pyramid.append(np.ascontiguousarray(smooth5(pyramid[-1])[::2, ::2]))
    return pyramid


_WINDOW_TAPS = np.array([1.0, 2.0, 1.0])  # binomial-weighted 3x3 tensor window


def min_eig_response(image: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Smaller structure-tensor eigenvalue over a weighted 3x3 window.

    The binomial window weighting keeps the peak on the corner instead of
    drifting into the bright side of one-sided (L-shaped) junctions.
    """
    gx, gy = spatial_gradients(image)
    sxx = separable_filter(gx * gx, _WINDOW_TAPS)
    sxy = separable_filter(gx * gy, _WINDOW_TAPS)
    syy = separable_filter(gy * gy, _WINDOW_TAPS)
    root = np.sqrt((sxx - syy) ** 2 + 4.0 * sxy * sxy)
    response = 0.5 * ((sxx + syy) - root)
    np.maximum(response, 0.0, out=response)
    # gradient/window support is incomplete on a 2 px border
    response[:2] = 0.0
    response[-2:] = 0.0
    response[:, :2] = 0.0
    response[:, -2:] = 0.0
    if mask is not None:
        if mask.shape != image.shape:
            raise ParameterError("mask dimensions must match the image")
        response = np.where(mask, response, 0.0)
    return response


def _parabolic_offset(left: float, center: float, right: float) -> float:
    denom = left - 2.0 * center + right
    if denom >= 0.0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def detect_corners(
    image: np.ndarray,
    max_corners: int = MAX_CORNERS,
    quality: float = QUALITY,
    min_distance: float = MIN_DISTANCE,
    mask: np.ndarray | None = None,
) -> list[CornerPoint]:
    """Strongest corners, pairwise at least min_distance apart, response-sorted.

    Every returned corner scores at least quality * (max response); an optional
    boolean mask restricts both the candidates and that maximum.  Positions are
    refined to subpixel accuracy with a parabolic fit.
    """
    if not 0.0 < quality <= 1.0:
        raise ParameterError("quality must be in (0, 1]")
    if min_distance < 1.0:
        raise ParameterError("min_distance must be >= 1")
    if max_corners < 1:
        raise ParameterError("max_corners must be >= 1")
    response = min_eig_response(image, mask)
    peak = float(response.max())
    if peak <= 0.0:
        return []
    threshold = quality * peak
    candidates = (response >= max3_filter(response)) & (response >= threshold)
    cy, cx = np.nonzero(candidates)
    if cy.size == 0:
        return []
    order = np.argsort(-response[cy, cx], kind="stable")

    sel_x = np.empty(min(max_corners, order.size))
    sel_y = np.empty_like(sel_x)
    corners: list[CornerPoint] = []
    min_d2 = min_distance * min_distance
    for idx in order:
        y, x = int(cy[idx]), int(cx[idx])
        fx = x + _parabolic_offset(response[y, x - 1], response[y, x], response[y, x + 1])
        fy = y + _parabolic_offset(response[y - 1, x], response[y, x], response[y + 1, x])
        n = len(corners)
        if n and np.min((sel_x[:n] - fx) ** 2 + (sel_y[:n] - fy) ** 2) < min_d2:
            continue
        sel_x[n] = fx
        sel_y[n] = fy
        corners.append(CornerPoint(fx, fy, float(response[y, x])))
        if len(corners) == max_corners:
            break
    return corners


def _check_pyramids(prev_pyramid, next_pyramid) -> None:
    if len(prev_pyramid) != len(next_pyramid) or not prev_pyramid:
        raise ParameterError("pyramids must have the same (nonzero) number of levels")
    for a, b in zip(prev_pyramid, next_pyramid):
        if a.shape != b.shape:
            raise ParameterError("pyramid levels differ in geometry")


def track(
    prev_pyramid: list[np.ndarray],
    next_pyramid: list[np.ndarray],
    corners: list[CornerPoint],
    window: int = WINDOW,
    max_iters: int = MAX_ITERS,
    epsilon: float = EPSILON,
) -> list[MotionVector | None]:
    """Track corners from prev to next; None marks features that were lost.

    A feature counts as tracked when its finest-level iteration converged
    (update step < epsilon), its structure tensor stayed well conditioned,
    and the displaced position lands inside the image.
    """
    _check_pyramids(prev_pyramid, next_pyramid)
    if window < 1:
        raise ParameterError("window half-size must be >= 1")
    if max_iters < 1:
        raise ParameterError("max_iters must be >= 1")
    if epsilon <= 0.0:
        raise ParameterError("epsilon must be positive")
    n = len(corners)
    if n == 0:
        return []

    h0, w0 = prev_pyramid[0].shape
    px = np.array([c.x for c in corners])
    py = np.array([c.y for c in corners])
    # the source window must fit inside the finest level
    ok = (
        (px >= window) & (px <= w0 - 1 - window)
        & (py >= window) & (py <= h0 - 1 - window)
    )

    offsets = np.arange(-window, window + 1, dtype=np.float64)
    oxg, oyg = np.meshgrid(offsets, offsets)
    ox = oxg.ravel()
    oy = oyg.ravel()
    n_samples = ox.size
    runaway = 2.0 * window + 2.0

    flow = np.zeros((n, 2))
    converged_finest = np.zeros(n, dtype=bool)
    for level in range(len(prev_pyramid) - 1, -1, -1):
        prev_img = prev_pyramid[level]
        next_img = next_pyramid[level]
        gx, gy = spatial_gradients(prev_img)
        scale = 2.0 ** level
        wx = px[:, None] / scale + ox[None, :]
        wy = py[:, None] / scale + oy[None, :]
        ix = bilinear_sample(gx, wx, wy)
        iy = bilinear_sample(gy, wx, wy)
        template = bilinear_sample(prev_img, wx, wy)
        g11 = np.einsum("nk,nk->n", ix, ix)
        g12 = np.einsum("nk,nk->n", ix, iy)
        g22 = np.einsum("nk,nk->n", iy, iy)
        det = g11 * g22 - g12 * g12
        trace = g11 + g22
        lmin = 0.5 * (trace - np.sqrt(np.maximum((g11 - g22) ** 2 + 4.0 * g12 * g12, 0.0)))
        ok &= lmin / n_samples > _MIN_EIG_FLOOR

        v = np.zeros((n, 2))
        active = ok.copy()
        converged = np.zeros(n, dtype=bool)
        for _ in range(max_iters):
            ids = np.nonzero(active)[0]
            if ids.size == 0:
                break
            tx = wx[ids] + (flow[ids, 0] + v[ids, 0])[:, None]
            ty = wy[ids] + (flow[ids, 1] + v[ids, 1])[:, None]
            residual = bilinear_sample(next_img, tx, ty) - template[ids]
            b1 = np.einsum("nk,nk->n", residual, ix[ids])
            b2 = np.einsum("nk,nk->n", residual, iy[ids])
            d = det[ids]
            step_x = -(g22[ids] * b1 - g12[ids] * b2) / d
            step_y = -(g11[ids] * b2 - g12[ids] * b1) / d
            v[ids, 0] += step_x
            v[ids, 1] += step_y
            done = np.hypot(step_x, step_y) < epsilon
            converged[ids[done]] = True
            active[ids[done]] = False
            lost = ids[np.hypot(v[ids, 0], v[ids, 1]) > runaway]
            ok[lost] = False
            active[lost] = False
        if level == 0:
            converged_finest = converged
            flow = flow + v
        else:
            flow = 2.0 * (flow + v)

    target_x = px + flow[:, 0]
    target_y = py + flow[:, 1]
    in_bounds = (
        (target_x >= 0.0) & (target_x <= w0 - 1.0)
        & (target_y >= 0.0) & (target_y <= h0 - 1.0)
    )
    good = ok & converged_finest & in_bounds

    results: list[MotionVector | None] = []
    for i, corner in enumerate(corners):
        if not good[i]:
            results.append(None)
            continue
        magnitude = float(np.hypot(flow[i, 0], flow[i, 1]))
        direction = float(np.arctan2(flow[i, 1], flow[i, 0])) % TWO_PI
        if direction >= TWO_PI:  # float mod can round back up to 2*pi
            direction = 0.0
        results.append(MotionVector(float(corner.x), float(corner.y), magnitude, direction))
    return results
