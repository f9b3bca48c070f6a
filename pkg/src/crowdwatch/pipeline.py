"""End-to-end detection pipeline and its flat key=value configuration.

Per frame: background-mixture update -> corners on the previous frame's
foreground -> pyramidal LK flow -> foreground filtering -> patch descriptors
and coherent clustering -> perspective-weighted count and texture.  After the
stream: fit the magnitude weight model on the leading normal span, build the
dictionary, score every frame, optionally median-smooth the score series.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bgmodel, detector, holistic, klt, patches, texture
from .errors import ConfigError, FormatError
from .framesource import NORMAL, open_sequence, to_grayscale_f32, write_pgm


@dataclass
class PipelineConfig:
    """Every tunable of the pipeline; defaults mirror the module constants."""

    patch_rows: int = patches.PATCH_ROWS
    patch_cols: int = patches.PATCH_COLS
    hist_bins: int = patches.HIST_BINS
    tau: float = patches.TAU
    gmm_components: int = bgmodel.K_COMPONENTS
    gmm_alpha: float = bgmodel.ALPHA
    gmm_bg_ratio: float = bgmodel.BG_RATIO
    gmm_match_sigma: float = bgmodel.MATCH_SIGMA
    gmm_variance_floor: float = bgmodel.VARIANCE_FLOOR
    gmm_initial_variance: float = bgmodel.INITIAL_VARIANCE
    gmm_new_weight: float = bgmodel.NEW_COMPONENT_WEIGHT
    mask_cleanup: bool = True
    klt_max_corners: int = klt.MAX_CORNERS
    klt_quality: float = klt.QUALITY
    klt_min_distance: float = klt.MIN_DISTANCE
    klt_window: int = klt.WINDOW
    klt_levels: int = klt.LEVELS
    klt_max_iters: int = klt.MAX_ITERS
    klt_epsilon: float = klt.EPSILON
    min_flow_magnitude: float = 0.1  # px; slower vectors are measurement noise
    persp_w_top: float = holistic.W_TOP
    persp_w_bottom: float = holistic.W_BOTTOM
    persp_file: str = ""
    glcm_levels: int = texture.GLCM_LEVELS
    glcm_offset_dx: int = 1
    glcm_offset_dy: int = 0
    normalized_correlation: bool = False
    training_cap: int = 0  # frame-count cap for training; 0 = full first normal span
    smoothing: bool = True

    def validate(self) -> None:
        checks = [
            ("patch_rows", self.patch_rows >= 1),
            ("patch_cols", self.patch_cols >= 1),
            ("hist_bins", self.hist_bins >= 1),
            ("tau", self.tau > 0),
            ("gmm_components", self.gmm_components >= 1),
            ("gmm_alpha", 0 < self.gmm_alpha < 1),
            ("gmm_bg_ratio", 0 < self.gmm_bg_ratio < 1),
            ("gmm_match_sigma", self.gmm_match_sigma > 0),
            ("gmm_variance_floor", self.gmm_variance_floor > 0),
            ("gmm_initial_variance", self.gmm_initial_variance > 0),
            ("gmm_new_weight", 0 < self.gmm_new_weight < 1),
            ("klt_max_corners", self.klt_max_corners >= 1),
            ("klt_quality", 0 < self.klt_quality <= 1),
            ("klt_min_distance", self.klt_min_distance >= 1),
            ("klt_window", self.klt_window >= 1),
            ("klt_levels", self.klt_levels >= 1),
            ("klt_max_iters", self.klt_max_iters >= 1),
            ("klt_epsilon", self.klt_epsilon > 0),
            ("min_flow_magnitude", self.min_flow_magnitude >= 0),
            ("persp_w_top", self.persp_w_top > 0),
            ("persp_w_bottom", self.persp_w_bottom > 0),
            ("glcm_levels", self.glcm_levels >= 2),
            ("glcm_offset_dx", self.glcm_offset_dx != 0 or self.glcm_offset_dy != 0),
            ("training_cap", self.training_cap >= 0),
        ]
        for key, ok in checks:
            if not ok:
                raise ConfigError(f"invalid value for config key {key!r}: {getattr(self, key)!r}")

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        """Parse `key = value` lines; '#' starts a comment."""
        cfg = cls()
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        overrides = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            overrides[key] = value
        cfg.apply_overrides(overrides)
        return cfg

    def apply_overrides(self, overrides: dict[str, str]) -> None:
        """Set fields from raw strings, rejecting unknown keys and bad values."""
        fields = {f.name: f for f in dataclasses.fields(self)}
        for key, value in overrides.items():
            f = fields.get(key)
            if f is None:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                setattr(self, key, _parse_value(f.type, value))
            except ValueError:
                raise ConfigError(f"invalid value for config key {key!r}: {value!r}") from None
        self.validate()

    def to_text(self) -> str:
        lines = [f"{f.name} = {_format_value(getattr(self, f.name))}" for f in dataclasses.fields(self)]
        return "\n".join(lines) + "\n"


def _parse_value(type_name: str, value: str):
    if type_name == "bool":
        lowered = value.lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        raise ValueError(value)
    if type_name == "int":
        return int(value)
    if type_name == "float":
        return float(value)
    return value


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


@dataclass
class FeatureDump:
    """Optional intermediate-artifact writers used by the `features` command."""

    out_dir: Path
    vectors: bool = True
    descriptors: bool = True
    texture: bool = True
    masks: bool = False
    _vector_lines: list[str] = field(default_factory=lambda: ["frame,x,y,magnitude,direction"])
    _descriptor_lines: list[str] = field(
        default_factory=lambda: ["frame,patch_row,patch_col," + ",".join(f"b{i}" for i in range(16))]
    )
    _texture_lines: list[str] = field(
        default_factory=lambda: ["frame,patch_row,patch_col,contrast,correlation,energy,homogeneity"]
    )

    def on_frame(self, index, vectors, descriptors, quads, mask) -> None:
        if self.vectors:
            for v in vectors:
                self._vector_lines.append(
                    f"{index},{v.x:.6g},{v.y:.6g},{v.magnitude:.6g},{v.direction:.6g}"
                )
        if self.descriptors:
            for d in descriptors:
                bins = ",".join(format(b, ".6g") for b in d.hist)
                self._descriptor_lines.append(f"{index},{d.row},{d.col},{bins}")
        if self.texture:
            rows, cols, _ = quads.shape
            for r in range(rows):
                for c in range(cols):
                    q = quads[r, c]
                    self._texture_lines.append(
                        f"{index},{r},{c},{q[0]:.6g},{q[1]:.6g},{q[2]:.6g},{q[3]:.6g}"
                    )
        if self.masks:
            mask_dir = self.out_dir / "masks"
            mask_dir.mkdir(parents=True, exist_ok=True)
            write_pgm(mask_dir / f"mask_{index:06d}.pgm", np.where(mask, 255, 0).astype(np.uint8))

    def flush(self) -> list[Path]:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if self.vectors:
            p = self.out_dir / "vectors.csv"
            p.write_text("\n".join(self._vector_lines) + "\n")
            written.append(p)
        if self.descriptors:
            p = self.out_dir / "descriptors.csv"
            p.write_text("\n".join(self._descriptor_lines) + "\n")
            written.append(p)
        if self.texture:
            p = self.out_dir / "texture.csv"
            p.write_text("\n".join(self._texture_lines) + "\n")
            written.append(p)
        if self.masks:
            written.append(self.out_dir / "masks")
        return written


@dataclass
class DetectionResult:
    scores: np.ndarray
    labels: np.ndarray
    features: list[detector.FrameFeatureVector]
    stats: list[detector.FrameStats]
    weight_model: holistic.WeightModel
    n_frames: int
    n_atoms: int
    width: int
    height: int
    elapsed: float


def run_detection(manifest_path, config: PipelineConfig | None = None,
                  dump: FeatureDump | None = None) -> DetectionResult:
    """Run the full pipeline over one manifest; deterministic for fixed inputs."""
    cfg = config if config is not None else PipelineConfig()
    cfg.validate()
    frames, labeltrack = open_sequence(manifest_path)
    training_span = labeltrack.first_normal_span()
    if training_span is None:
        raise ConfigError("manifest must start with a normal span to train on")

    started = time.perf_counter()
    mixture = bgmodel.BackgroundMixture(
        n_components=cfg.gmm_components,
        alpha=cfg.gmm_alpha,
        bg_ratio=cfg.gmm_bg_ratio,
        match_sigma=cfg.gmm_match_sigma,
        variance_floor=cfg.gmm_variance_floor,
        initial_variance=cfg.gmm_initial_variance,
        new_weight=cfg.gmm_new_weight,
        cleanup=cfg.mask_cleanup,
    )
    offset = (cfg.glcm_offset_dx, cfg.glcm_offset_dy)
    store: list[patches.CoherentPattern] = []
    stats: list[detector.FrameStats] = []
    grid = None
    pmap = None
    width = height = 0
    prev_gray = prev_pyramid = prev_mask = None

    for frame in frames:
        if grid is None:
            width, height = frame.width, frame.height
            grid = patches.PatchGrid.for_frame(width, height, cfg.patch_rows, cfg.patch_cols)
            if cfg.persp_file:
                pmap = holistic.load_perspective(cfg.persp_file)
                if len(pmap) != height:
                    raise ConfigError(
                        f"perspective file has {len(pmap)} rows, frames have {height}"
                    )
            else:
                pmap = holistic.linear_perspective(height, cfg.persp_w_top, cfg.persp_w_bottom)

        mask = mixture.update(frame.pixels)
        gray = to_grayscale_f32(frame)
        pyramid = klt.build_pyramid(gray, cfg.klt_levels)

        vectors: list[klt.MotionVector] = []
        if prev_pyramid is not None:
            corners = klt.detect_corners(
                prev_gray,
                max_corners=cfg.klt_max_corners,
                quality=cfg.klt_quality,
                min_distance=cfg.klt_min_distance,
                mask=prev_mask,
            )
            tracked = klt.track(
                prev_pyramid, pyramid, corners,
                window=cfg.klt_window,
                max_iters=cfg.klt_max_iters,
                epsilon=cfg.klt_epsilon,
            )
            vectors = bgmodel.filter_vectors(prev_mask, [v for v in tracked if v is not None])
            # drop sub-noise displacements: their direction is meaningless and
            # would seed orientation patterns from static ghost corners
            vectors = [v for v in vectors if v.magnitude >= cfg.min_flow_magnitude]

        mean_magnitude = float(np.mean([v.magnitude for v in vectors])) if vectors else 0.0
        feat_n_raw = holistic.feat_n(pmap, bgmodel.count_foreground_rows(mask))

        by_patch = patches.assign_to_patches(grid, vectors)
        descriptors = [
            patches.build_descriptor(vecs, row, col, cfg.hist_bins)
            for (row, col), vecs in sorted(by_patch.items())
        ]
        deviations = patches.cluster_frame(store, descriptors, cfg.tau)
        dev_mean = float(np.mean(deviations)) if deviations else 0.0
        dev_max = float(np.max(deviations)) if deviations else 0.0

        padded = texture.pad_frame(frame.pixels, grid)
        quads = texture.frame_texture(
            padded, grid, cfg.glcm_levels, offset, cfg.normalized_correlation
        )
        fractions = texture.patch_foreground_fraction(mask, grid)
        quad = texture.weighted_mean_quad(quads, fractions)

        stats.append(detector.FrameStats(
            frame.index, feat_n_raw, mean_magnitude, quad, dev_mean, dev_max,
        ))
        if dump is not None:
            dump.on_frame(frame.index, vectors, descriptors, quads, mask)
        prev_gray, prev_pyramid, prev_mask = gray, pyramid, mask

    n_frames = len(stats)
    if n_frames == 0:
        raise FormatError("sequence contains no frames")

    train_end = min(training_span.end, n_frames - 1)
    train_indices = range(training_span.start, train_end + 1)
    if cfg.training_cap:
        train_indices = train_indices[: cfg.training_cap]
    weight_model = holistic.fit_weight_model([stats[i].mean_magnitude for i in train_indices])
    features = [detector.extract_features(s, weight_model) for s in stats]
    dictionary = detector.build_dictionary([features[i] for i in train_indices])
    scores = detector.score_series(dictionary, features)
    if cfg.smoothing:
        scores = detector.smooth_scores(scores)
    labels = labeltrack.labels(n_frames)

    if dump is not None:
        dump.flush()
    return DetectionResult(
        scores=scores,
        labels=labels,
        features=features,
        stats=stats,
        weight_model=weight_model,
        n_frames=n_frames,
        n_atoms=len(train_indices),
        width=width,
        height=height,
        elapsed=time.perf_counter() - started,
    )


def write_scores_csv(path, scores: np.ndarray, labels: np.ndarray) -> None:
    """Header `frame,score,label`; label is 0/1 or -1 for unlabeled frames."""
    lines = ["frame,score,label"]
    for i, (s, l) in enumerate(zip(scores, labels)):
        lines.append(f"{i},{s:.12g},{int(l)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_scores_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Parse a scores CSV; malformed rows name their line number."""
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise FormatError(f"missing scores file: {path}") from None
    lines = text.splitlines()
    if not lines or lines[0].strip() != "frame,score,label":
        raise FormatError(f"{path}: line 1: expected header 'frame,score,label'")
    scores = []
    labels = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"{path}: line {lineno}: expected 3 comma-separated fields")
        try:
            scores.append(float(parts[1]))
            label = int(parts[2])
        except ValueError:
            raise FormatError(f"{path}: line {lineno}: malformed number") from None
        if label not in (-1, 0, 1):
            raise FormatError(f"{path}: line {lineno}: label must be -1, 0 or 1")
        labels.append(label)
    return np.asarray(scores, dtype=np.float64), np.asarray(labels, dtype=np.int64)
