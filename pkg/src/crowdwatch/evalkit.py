"""Frame-level ROC evaluation: threshold sweep, trapezoidal AUC, CSV/SVG reports.

A frame is predicted abnormal when its score is >= the threshold (ties count
as abnormal).  The sweep visits every distinct score plus an infinite
sentinel, so the curve always spans (0,0) to (1,1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EvaluationError, ParameterError

_SVG_COLORS = ["#1f4fab", "#c03028", "#222222", "#2e8b57", "#b8860b", "#8b3a9e"]


@dataclass(frozen=True)
class RocCurve:
    """points: (threshold, fpr, tpr) with fpr non-decreasing; auc in [0, 1]."""

    points: tuple[tuple[float, float, float], ...]
    auc: float


def _validate(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    l = np.asarray(labels)
    if s.ndim != 1 or s.shape != l.shape:
        raise ParameterError("scores and labels must be 1-D and the same length")
    n_pos = int((l == 1).sum())
    n_neg = int((l == 0).sum())
    if n_pos + n_neg != l.size:
        raise ParameterError("labels must be 0 (normal) or 1 (abnormal)")
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("both classes must be present to evaluate")
    return s, l.astype(np.int64), n_pos, n_neg


def confusion_at(scores, labels, threshold: float) -> tuple[float, float]:
    """(tpr, fpr) when flagging scores >= threshold as abnormal."""
    s, l, n_pos, n_neg = _validate(scores, labels)
    predicted = s >= threshold
    tp = int((predicted & (l == 1)).sum())
    fp = int((predicted & (l == 0)).sum())
    return tp / n_pos, fp / n_neg


def roc(scores, labels) -> RocCurve:
    """Threshold sweep over all distinct scores; trapezoidal AUC."""
    s, l, n_pos, n_neg = _validate(scores, labels)
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    l_sorted = l[order]
    tp = np.cumsum(l_sorted == 1)
    fp = np.cumsum(l_sorted == 0)
    # last index of each run of equal scores
    boundary = np.nonzero(np.append(s_sorted[1:] != s_sorted[:-1], True))[0]
    points = [(math.inf, 0.0, 0.0)]
    for b in boundary:
        points.append((float(s_sorted[b]), fp[b] / n_neg, tp[b] / n_pos))
    fprs = np.array([p[1] for p in points])
    tprs = np.array([p[2] for p in points])
    auc = float(np.trapezoid(tprs, fprs))
    return RocCurve(tuple(points), auc)


def emit_reports(curves, out_csv, out_svg) -> None:
    """Write named curves as a CSV table and a unit-square SVG plot.

    curves: non-empty list of (name, RocCurve).
    """
    if not curves:
        raise ParameterError("at least one curve is required")
    lines = ["name,threshold,fpr,tpr"]
    for name, curve in curves:
        for threshold, fpr, tpr in curve.points:
            lines.append(f"{name},{threshold:.12g},{fpr:.12g},{tpr:.12g}")
    Path(out_csv).write_text("\n".join(lines) + "\n")
    Path(out_svg).write_text(render_roc_svg(curves))


def render_roc_svg(curves) -> str:
    """Deterministic hand-built SVG: axes, diagonal reference, one polyline per curve."""
    left, top, right, bottom = 70.0, 20.0, 620.0, 430.0
    width = right - left
    height = bottom - top

    def px(fpr: float) -> float:
        return left + fpr * width

    def py(tpr: float) -> float:
        return bottom - tpr * height

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 640 480">',
        '<rect x="0" y="0" width="640" height="480" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{width}" height="{height}" '
        'fill="none" stroke="#444" stroke-width="1"/>',
        f'<line x1="{px(0)}" y1="{py(0)}" x2="{px(1)}" y2="{py(1)}" '
        'stroke="#999" stroke-width="1" stroke-dasharray="6,4"/>',
    ]
    for k in range(6):
        t = k / 5.0
        parts.append(
            f'<line x1="{px(t):.1f}" y1="{bottom}" x2="{px(t):.1f}" y2="{bottom + 6}" '
            'stroke="#444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{px(t):.1f}" y="{bottom + 22}" font-size="13" '
            f'text-anchor="middle" fill="#222">{t:.1f}</text>'
        )
        parts.append(
            f'<line x1="{left - 6}" y1="{py(t):.1f}" x2="{left}" y2="{py(t):.1f}" '
            'stroke="#444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{left - 10}" y="{py(t) + 4:.1f}" font-size="13" '
            f'text-anchor="end" fill="#222">{t:.1f}</text>'
        )
    parts.append(
        '<text x="345" y="470" font-size="15" text-anchor="middle" fill="#222">'
        "false positive rate</text>"
    )
    parts.append(
        '<text x="18" y="225" font-size="15" text-anchor="middle" fill="#222" '
        'transform="rotate(-90 18 225)">true positive rate</text>'
    )
    for i, (name, curve) in enumerate(curves):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        coords = " ".join(f"{px(p[1]):.2f},{py(p[2]):.2f}" for p in curve.points)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        ly = bottom - 14.0 - 18.0 * (len(curves) - 1 - i)
        parts.append(
            f'<rect x="{right - 190}" y="{ly - 10}" width="14" height="4" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{right - 170}" y="{ly}" font-size="13" fill="#222">'
            f"{name} (AUC {curve.auc:.4f})</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
