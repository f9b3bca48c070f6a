"""Shared synthetic-image helpers for the test suite."""

import numpy as np
import pytest

from crowdwatch.imageops import smooth5


def textured_image(seed: int, height: int, width: int, margin: int = 8) -> np.ndarray:
    """Smoothed random texture in [0, 1] with `margin` extra pixels per side.

    The returned array is (height + 2*margin, width + 2*margin), so shifted
    crops of it are exact translations with valid content everywhere.
    """
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((height + 2 * margin, width + 2 * margin))
    tex = smooth5(smooth5(noise))
    return (tex - tex.min()) / (tex.max() - tex.min())


def translation_pair(tex: np.ndarray, height: int, width: int, dx: int, dy: int,
                     margin: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Crop (prev, next) so that features flow by exactly (dx, dy)."""
    assert abs(dx) <= margin and abs(dy) <= margin
    prev = tex[margin : margin + height, margin : margin + width]
    nxt = tex[margin - dy : margin - dy + height, margin - dx : margin - dx + width]
    return np.ascontiguousarray(prev), np.ascontiguousarray(nxt)


@pytest.fixture
def announce(capfd):
    """Print one pass/fail line straight to the terminal (acceptance reporting)."""

    def _announce(name: str, ok: bool, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        with capfd.disabled():
            print(f"[{status}] {name}{suffix}")

    return _announce
