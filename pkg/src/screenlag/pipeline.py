"""End-to-end analysis of one frame sequence: detections -> interactions ->
similarity series -> keyframes -> measurements -> report."""

from __future__ import annotations

from dataclasses import dataclass, field

from .frameio import FrameSequence
from .keyframes import (
    ForestConfig,
    KeyframeResult,
    ResponsivenessMeasurement,
    compute_responsiveness,
    detect_anomalies,
    locate_keyframes,
)
from .report import AlertThresholds, ReportDocument, build_report
from .segmenter import (
    DEFAULT_GAP_TOLERANCE,
    DEFAULT_TAP_RADIUS_PX,
    Interaction,
    group_detections,
    segment_interactions,
)
from .similarity import SimilaritySeries, SsimParams, similarity_series
from .tapdetect import DetectorConfig, detect_taps


@dataclass(frozen=True)
class AnalysisConfig:
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    ssim: SsimParams = field(default_factory=SsimParams)
    forest: ForestConfig = field(default_factory=ForestConfig)
    thresholds: AlertThresholds = field(default_factory=AlertThresholds)
    gap_tolerance: int = DEFAULT_GAP_TOLERANCE
    tap_radius_px: float = DEFAULT_TAP_RADIUS_PX


@dataclass(eq=False)
class AnalysisResult:
    interactions: list[Interaction]
    series: list[SimilaritySeries]
    keyframes: list[KeyframeResult]
    measurements: list[ResponsivenessMeasurement]
    report: ReportDocument


def analyze_sequence(seq: FrameSequence, cfg: AnalysisConfig | None = None) -> AnalysisResult:
    cfg = cfg or AnalysisConfig()
    detections = detect_taps(seq, cfg.detector)
    sequences = group_detections(detections, cfg.gap_tolerance)
    interactions = segment_interactions(sequences, len(seq), cfg.tap_radius_px)

    series_list: list[SimilaritySeries] = []
    keyframes: list[KeyframeResult] = []
    measurements: list[ResponsivenessMeasurement] = []
    for itx in interactions:
        series = similarity_series(seq, itx, cfg.ssim)
        anomalies = detect_anomalies(series, cfg.forest)
        kf = locate_keyframes(itx, series, anomalies, cfg.forest)
        m = compute_responsiveness(seq, itx, kf, cfg.thresholds)
        series_list.append(series)
        keyframes.append(kf)
        measurements.append(m)

    doc = build_report(seq, interactions, measurements)
    return AnalysisResult(
        interactions=interactions,
        series=series_list,
        keyframes=keyframes,
        measurements=measurements,
        report=doc,
    )
