import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from screenlag.frameio import GRAY, Frame, FrameSequence
from screenlag.pipeline import AnalysisConfig, AnalysisResult, analyze_sequence
from screenlag.segmenter import Gesture, Interaction, TapSequence
from screenlag.similarity import SsimParams
from screenlag.synthgen import (
    Scenario,
    TouchSpec,
    canonical_corpus,
    generate_screencast,
)
from screenlag.tapdetect import TapDetection

# accuracy runs disable SSIM downscaling (design decision: downscale serves
# the throughput budget, not the accuracy evaluation)
ACCURACY_CONFIG = AnalysisConfig(ssim=SsimParams(downscale_max_dim=None))


@dataclass
class VideoRun:
    source_id: str
    scenario: Scenario
    truth: list
    result: AnalysisResult
    total_frames: int


def run_scenario(source_id: str, scenario: Scenario, cfg: AnalysisConfig = ACCURACY_CONFIG) -> VideoRun:
    seq, truth = generate_screencast(scenario)
    result = analyze_sequence(seq, cfg)
    return VideoRun(
        source_id=source_id,
        scenario=scenario,
        truth=truth,
        result=result,
        total_frames=len(seq),
    )


@pytest.fixture(scope="session")
def crisp_corpus_runs():
    """All 20 canonical scenarios, banner noise stripped; timed for criterion 3."""
    t0 = time.perf_counter()
    runs = [run_scenario(sid, sc) for sid, sc in canonical_corpus(with_noise=False)]
    elapsed = time.perf_counter() - t0
    return runs, elapsed


@pytest.fixture(scope="session")
def full_corpus_runs(crisp_corpus_runs):
    """The canonical corpus with banner noise on 25% of scenarios.

    Non-banner scenarios are identical to their crisp variants, so those runs
    are reused and only the banner variants are re-analyzed.
    """
    crisp, _ = crisp_corpus_runs
    runs = []
    for i, (sid, sc) in enumerate(canonical_corpus(with_noise=True)):
        if sc.noise is None:
            runs.append(crisp[i])
        else:
            runs.append(run_scenario(sid, sc))
    return runs


def make_frames(arrays, fps: float = 60.0, source_id: str = "test") -> FrameSequence:
    frames = tuple(
        Frame(index=i, pts_ms=i * 1000.0 / fps, pixels=np.asarray(a, dtype=np.uint8), colorspace=GRAY)
        for i, a in enumerate(arrays)
    )
    return FrameSequence(frames=frames, nominal_fps=fps, source_id=source_id)


def make_interaction(
    start: int, end: int, itx_id: int = 0, gesture: Gesture = Gesture.TAP,
    detections: tuple[TapDetection, ...] | None = None,
) -> Interaction:
    if detections is None:
        detections = (TapDetection(frame_index=start, bbox=(0, 0, 2, 2), confidence=1.0),)
    return Interaction(
        id=itx_id,
        start_frame=start,
        end_frame=end,
        gesture=gesture,
        tap_sequence=TapSequence(detections=detections),
    )


def small_scenario(seed: int, n_touches: int = 4) -> Scenario:
    """A compact deterministic scenario for fast CLI / IO tests."""
    touches = []
    onset = 8
    for i in range(n_touches):
        if i % 2 == 0:
            gesture = Gesture.TAP
            path = ((onset, 60 + 30 * i, 340),)
            radius = 16
        else:
            gesture = Gesture.SWIPE
            path = tuple((onset + j, 40 + 22 * j, 350) for j in range(6))
            radius = 9
        lag = (3, 8, 12, 7, 5)[i % 5]
        if gesture is Gesture.SWIPE:
            lag = max(lag, 7)
        kind = ("partial_region", "fade", "full_screen")[i % 3]
        touches.append(
            TouchSpec(
                onset_frame=onset,
                gesture=gesture,
                path=path,
                indicator_radius_px=radius,
                indicator_opacity=0.45,
                fade_frames=4,
                response_lag_frames=lag,
                transition_frames={"partial_region": 2, "fade": 3, "full_screen": 5}[kind],
                transition_kind=kind,
            )
        )
        onset += 44 + 6 * i
    return Scenario(
        width=240,
        height=400,
        fps=60.0,
        duration_frames=onset,
        touches=tuple(touches),
        noise=None,
        seed=seed,
    )
