"""Keyframe location: isolation-forest anomalies over the similarity series.

Dissimilarity points x_j = 1 - ssim(pair j) are scored by an isolation
forest; anomalous pairs mark visible GUI change. The first anomaly passing a
substantial-change filter gives the response frame, the last anomaly the
finish frame, and presentation timestamps turn both into response/finish
times. Everything here is deterministic for a fixed seed.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from ._rng import SplitMix64
from .frameio import FrameSequence
from .segmenter import Gesture, Interaction
from .similarity import SimilaritySeries

_EULER_GAMMA = 0.5772156649015329


class KeyframeStatus(str, enum.Enum):
    RESPONSIVE = "responsive"
    NO_VISIBLE_FEEDBACK = "no_visible_feedback"
    TOO_SHORT = "too_short"


@dataclass(frozen=True)
class ForestConfig:
    tree_count: int = 100
    subsample_size: int = 64
    score_threshold: float = 0.6
    seed: int = 42
    substantial_change_fraction: float = 0.3
    min_series_length: int = 8
    fallback_dissimilarity: float = 0.02

    def __post_init__(self):
        if self.tree_count < 1 or self.subsample_size < 1 or self.min_series_length < 1:
            raise ValueError("tree_count, subsample_size, min_series_length must be >= 1")
        if not (0 < self.score_threshold < 1):
            raise ValueError("score_threshold must be in (0, 1)")
        if not (0 <= self.substantial_change_fraction <= 1):
            raise ValueError("substantial_change_fraction must be in [0, 1]")
        if not (0 < self.fallback_dissimilarity < 1):
            raise ValueError("fallback_dissimilarity must be in (0, 1)")


@dataclass(frozen=True)
class KeyframeResult:
    status: KeyframeStatus
    response_frame: int | None = None
    finish_frame: int | None = None
    anomaly_indices: tuple[int, ...] = ()


@dataclass(frozen=True)
class ResponsivenessMeasurement:
    interaction_id: int
    gesture: Gesture
    status: KeyframeStatus
    response_frame: int | None = None
    finish_frame: int | None = None
    response_ms: float | None = None
    finish_ms: float | None = None
    severity: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Isolation forest (1-D)
# ---------------------------------------------------------------------------


def _avg_path_length(n: int) -> float:
    """c(n): expected path length of an unsuccessful BST search (Liu et al.)."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + _EULER_GAMMA) - 2.0 * (n - 1) / n


def _build_tree(vals: np.ndarray, depth: int, cap: int, rng: SplitMix64):
    # vals is sorted, so the node range is vals[0]..vals[-1]
    n = len(vals)
    if depth >= cap or n <= 1 or vals[0] == vals[-1]:
        return n  # leaf: remember only the subset size
    lo, hi = float(vals[0]), float(vals[-1])
    p = lo + rng.random() * (hi - lo)
    left = vals[vals < p]
    right = vals[vals >= p]
    if len(left) == 0 or len(right) == 0:
        # degenerate split (p rounded onto the range edge); burn the level
        return _build_tree(vals, depth + 1, cap, rng)
    return (p, _build_tree(left, depth + 1, cap, rng), _build_tree(right, depth + 1, cap, rng))


def _path_length(x: float, node) -> float:
    depth = 0
    while isinstance(node, tuple):
        p, left, right = node
        node = left if x < p else right
        depth += 1
    return depth + _avg_path_length(node)


def _subsample_sorted(sorted_vals: np.ndarray, psi: int, rng: SplitMix64) -> np.ndarray:
    n = len(sorted_vals)
    if psi >= n:
        return sorted_vals
    idx = np.arange(n)
    for j in range(psi):  # partial Fisher-Yates
        k = j + rng.below(n - j)
        idx[j], idx[k] = idx[k], idx[j]
    return np.sort(sorted_vals[idx[:psi]])


def isolation_forest_scores(values, cfg: ForestConfig) -> list[float]:
    """Anomaly score 2^(-E[h(x)]/c(m)) per point of a 1-D series.

    Trees are built on the sorted value multiset so scores depend only on the
    values, not their order: permuting the input permutes the scores. Each
    tree uses a subsample of size min(subsample_size, m), uniform splits in
    the node's value range, and depth capped at ceil(log2(subsample_size));
    per-tree seeds are seed + tree index.
    """
    vals = np.asarray(list(values), dtype=np.float64)
    m = len(vals)
    if m == 0:
        raise ValueError("isolation forest needs a non-empty series")
    if m == 1:
        return [0.5]  # a lone point is neither isolable nor typical
    sorted_vals = np.sort(vals)
    psi = min(cfg.subsample_size, m)
    cap = math.ceil(math.log2(cfg.subsample_size)) if cfg.subsample_size > 1 else 0
    norm = _avg_path_length(m)

    depth_sum = np.zeros(m, dtype=np.float64)
    for t in range(cfg.tree_count):
        rng = SplitMix64(cfg.seed + t)
        tree = _build_tree(_subsample_sorted(sorted_vals, psi, rng), 0, cap, rng)
        depth_sum += [_path_length(float(v), tree) for v in vals]
    expected = depth_sum / cfg.tree_count
    return [float(s) for s in 2.0 ** (-expected / norm)]


# ---------------------------------------------------------------------------
# Anomaly selection and keyframes
# ---------------------------------------------------------------------------


def detect_anomalies(series: SimilaritySeries, cfg: ForestConfig) -> list[int]:
    """Indices into the similarity series whose transitions look anomalous.

    Short series fall back to a plain dissimilarity threshold (a forest over a
    handful of points is statistically meaningless). Otherwise a point must
    both score above the forest threshold and sit above the median
    dissimilarity, so unusually *static* transitions are never flagged.
    """
    values = series.values
    if not values:
        return []
    dissim = np.asarray([1.0 - v for v in values], dtype=np.float64)
    if len(values) < cfg.min_series_length:
        return [j for j, x in enumerate(dissim) if x >= cfg.fallback_dissimilarity]
    scores = isolation_forest_scores(dissim, cfg)
    med = float(np.median(dissim))
    return [
        j
        for j in range(len(values))
        if scores[j] >= cfg.score_threshold and dissim[j] > med
    ]


def locate_keyframes(
    interaction: Interaction,
    series: SimilaritySeries,
    anomalies: list[int],
    cfg: ForestConfig,
) -> KeyframeResult:
    """Map anomalous transitions to response and finish frames.

    A transition at series index j first shows its change at frame
    start + j + 1. The response skips leading anomalies whose dissimilarity
    falls below substantial_change_fraction of the strongest anomaly (minor
    effects such as a button dimming should not count as the response); the
    finish is simply the last anomaly.
    """
    if series.too_short or not series.values:
        return KeyframeResult(status=KeyframeStatus.TOO_SHORT)
    if not anomalies:
        return KeyframeResult(status=KeyframeStatus.NO_VISIBLE_FEEDBACK)

    dissim = [1.0 - series.values[j] for j in anomalies]
    cutoff = cfg.substantial_change_fraction * max(dissim)
    response_j = anomalies[0]
    for j, x in zip(anomalies, dissim):
        if x >= cutoff:
            response_j = j
            break
    finish_j = anomalies[-1]
    return KeyframeResult(
        status=KeyframeStatus.RESPONSIVE,
        response_frame=interaction.start_frame + response_j + 1,
        finish_frame=interaction.start_frame + finish_j + 1,
        anomaly_indices=tuple(anomalies),
    )


def compute_responsiveness(
    seq: FrameSequence,
    interaction: Interaction,
    kf: KeyframeResult,
    thresholds,
) -> ResponsivenessMeasurement:
    """Turn keyframes into response/finish times with severity flags."""
    if kf.status is not KeyframeStatus.RESPONSIVE:
        return ResponsivenessMeasurement(
            interaction_id=interaction.id,
            gesture=interaction.gesture,
            status=kf.status,
        )
    start_pts = seq.pts(interaction.start_frame)
    response_ms = seq.pts(kf.response_frame) - start_pts
    finish_ms = seq.pts(kf.finish_frame) - start_pts
    measurement = ResponsivenessMeasurement(
        interaction_id=interaction.id,
        gesture=interaction.gesture,
        status=kf.status,
        response_frame=kf.response_frame,
        finish_frame=kf.finish_frame,
        response_ms=response_ms,
        finish_ms=finish_ms,
    )
    from .report import classify_severity  # single home for the threshold rule

    return dataclasses.replace(measurement, severity=classify_severity(measurement, thresholds))
