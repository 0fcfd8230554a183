"""screenlag: user-perceived GUI responsiveness measured from screencasts.

The pipeline detects tap indicators frame by frame, groups them into user
interactions, locates response and finish keyframes from frame-to-frame SSIM
anomalies, and reports response/finish times with alerting flags. A synthetic
screencast generator with exact ground truth backs the evaluation harness.
"""

from .frameio import Frame, FrameSequence, load_manifest, load_y4m, parse_y4m, to_grayscale
from .keyframes import ForestConfig, KeyframeResult, KeyframeStatus, ResponsivenessMeasurement
from .pipeline import AnalysisConfig, AnalysisResult, analyze_sequence
from .report import AlertThresholds, ReportDocument, build_report, emit_report, parse_report
from .segmenter import Gesture, Interaction, TapSequence
from .similarity import SimilaritySeries, SsimParams, similarity_series, ssim
from .synthgen import GroundTruthRecord, Scenario, TouchSpec, canonical_corpus, generate_screencast
from .tapdetect import DetectorConfig, TapDetection, detect_taps

__version__ = "0.1.0"
