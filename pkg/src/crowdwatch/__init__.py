"""Crowd anomaly detection for grayscale video sequences.

Pipeline: corner tracking (pyramidal Lucas-Kanade) fused with adaptive
Gaussian-mixture background subtraction; per-patch motion-pattern descriptors
merged online into coherent patterns; perspective-weighted foreground counts
and co-occurrence texture features; nearest-atom dictionary scoring with
ROC/AUC evaluation.  A deterministic synthetic scene generator supports
end-to-end verification without external datasets.
"""

from .bgmodel import BackgroundMixture, count_foreground_rows, filter_vectors
from .detector import (
    Dictionary,
    FrameFeatureVector,
    FrameStats,
    build_dictionary,
    extract_features,
    score,
    score_series,
    smooth_scores,
)
from .errors import (
    ConfigError,
    CrowdwatchError,
    EvaluationError,
    FormatError,
    IngestionError,
    ParameterError,
    TrainingError,
)
from .evalkit import RocCurve, confusion_at, emit_reports, roc
from .framesource import (
    Frame,
    LabelSpan,
    LabelTrack,
    open_sequence,
    read_pgm,
    to_grayscale_f32,
    write_pgm,
)
from .holistic import (
    PerspectiveMap,
    WeightModel,
    feat_n,
    fit_weight_model,
    linear_perspective,
    weigh,
)
from .klt import CornerPoint, MotionVector, build_pyramid, detect_corners, track
from .patches import (
    CoherentPattern,
    PatchDescriptor,
    PatchGrid,
    assign_to_patches,
    build_descriptor,
    cluster_frame,
    descriptor_tensor,
    merge_pattern,
)
from .pipeline import DetectionResult, PipelineConfig, run_detection
from .synthgen import AgentSpec, SceneScript, preset, render
from .texture import Glcm, TextureQuad, glcm, pad_frame, texture_quad

__version__ = "0.1.0"
