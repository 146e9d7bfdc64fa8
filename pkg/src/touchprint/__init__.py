"""Touchless four-finger fingerprint toolkit.

Photo of a four-finger hand pose in, touch-equivalent fingerprint images,
minutiae templates, match scores, and biometric error rates out.
"""

from .config import DEFAULT_CONFIG, PipelineConfig, load_config
from .enhancement import FingerprintImage, render_fingerprint
from .errors import TouchprintError
from .evaluation import EvaluationReport, build_report, cross_compare, equal_error_rate
from .geometry import HandSide
from .matcher import MatchScore, compare_templates, fuse_scores
from .minutiae import (Minutia, MinutiaTemplate, build_template, decode_template,
                       encode_template)
from .pipeline import ProcessedFinger, process_frame
from .quality import QualityReport, assess_quality, select_best
from .segmentation import segment_hand

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONFIG",
    "EvaluationReport",
    "FingerprintImage",
    "HandSide",
    "MatchScore",
    "Minutia",
    "MinutiaTemplate",
    "PipelineConfig",
    "ProcessedFinger",
    "QualityReport",
    "TouchprintError",
    "__version__",
    "assess_quality",
    "build_report",
    "build_template",
    "compare_templates",
    "cross_compare",
    "decode_template",
    "encode_template",
    "equal_error_rate",
    "fuse_scores",
    "load_config",
    "process_frame",
    "render_fingerprint",
    "segment_hand",
    "select_best",
]
