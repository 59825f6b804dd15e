"""Extreme-condition training data synthesis and detector robustness evaluation.

The pipeline: extract a style vector from any reference image, re-render
content images under it at a chosen strength, or run one of five classical
weather simulators; cross contents, styles, and strengths into a synthesis
plan with provenance manifests; score detector outputs COCO-style and
compare robustness across test sets.
"""

from .core import (
    AnnotatedImage,
    BBox,
    ConditionKind,
    Dataset,
    Detection,
    ImageBuffer,
    dataset_scan,
    load_annotations,
    load_detections,
    load_image,
    save_image,
)
from .classical import (
    FogParams,
    IntenseLightParams,
    LowLightParams,
    RainParams,
    SandDustParams,
    default_params,
    simulate,
)
from .errors import ExtremeForgeError
from .evaluation import (
    EvalReport,
    MatchResult,
    RobustnessReport,
    average_precision,
    evaluate,
    iou,
    match_detections,
    robustness_report,
)
from .planner import (
    Manifest,
    SynthesisPlan,
    build_plan,
    execute_plan,
    plan_cardinality,
)
from .stylize import (
    FeaturePyramid,
    StyleVector,
    apply_style,
    collapse_pyramid,
    encode_pyramid,
    extract_style,
    transfer_statistics,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedImage",
    "BBox",
    "ConditionKind",
    "Dataset",
    "Detection",
    "EvalReport",
    "ExtremeForgeError",
    "FeaturePyramid",
    "FogParams",
    "ImageBuffer",
    "IntenseLightParams",
    "LowLightParams",
    "Manifest",
    "MatchResult",
    "RainParams",
    "RobustnessReport",
    "SandDustParams",
    "StyleVector",
    "SynthesisPlan",
    "apply_style",
    "average_precision",
    "build_plan",
    "collapse_pyramid",
    "dataset_scan",
    "default_params",
    "encode_pyramid",
    "evaluate",
    "execute_plan",
    "extract_style",
    "iou",
    "load_annotations",
    "load_detections",
    "load_image",
    "match_detections",
    "plan_cardinality",
    "robustness_report",
    "save_image",
    "simulate",
    "transfer_statistics",
]
