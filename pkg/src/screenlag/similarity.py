"""Frame-to-frame structural similarity (SSIM) over an interaction.

The per-pair values feed the anomaly detector, so the exact SSIM variant is
pinned here: uniform square window, stride 1, valid positions only,
population moments, C1=(k1*L)^2, C2=(k2*L)^2. Windowed sums are computed via
prefix sums; the test suite cross-checks against a window-by-window
brute-force implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frameio import Frame, FrameSequence, gray_values


@dataclass(frozen=True)
class SsimParams:
    window: int = 8
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0
    downscale_max_dim: int | None = 320
    exclude_indicator: bool = True

    def __post_init__(self):
        # window=8 (even) is the shipped default; only a lower bound is enforced
        if self.window < 3:
            raise ValueError("ssim window must be >= 3")
        if not (0 < self.k1 < 1 and 0 < self.k2 < 1):
            raise ValueError("k1, k2 must be in (0, 1)")
        if self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be positive")
        if self.downscale_max_dim is not None and self.downscale_max_dim < self.window:
            raise ValueError("downscale_max_dim must be >= window")


@dataclass(eq=False)
class SimilaritySeries:
    """SSIM per adjacent frame pair of one interaction (length n-1)."""

    values: tuple[float, ...]
    interaction_id: int
    too_short: bool = False


def ssim(a: Frame, b: Frame, p: SsimParams) -> float:
    """Mean SSIM between two frames (grayscale, optionally downscaled)."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"ssim dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    ga = gray_values(a).astype(np.float64)
    gb = gray_values(b).astype(np.float64)
    if p.downscale_max_dim is not None:
        ga = _area_downscale(ga, p.downscale_max_dim)
        gb = _area_downscale(gb, p.downscale_max_dim)
    return _ssim_pair(_FrameStats(ga, p.window), _FrameStats(gb, p.window), p)


def similarity_series(
    seq: FrameSequence, interaction, p: SsimParams
) -> SimilaritySeries:
    """SSIM values for all adjacent frame pairs inside the interaction span.

    With exclude_indicator, any pair where either frame carries a tap
    detection gets the detection bboxes (dilated by 4 px) masked out of both
    frames: the fading indicator is user input, not GUI feedback, and must
    not register as a visual change.
    """
    start, end = interaction.start_frame, interaction.end_frame
    if not (0 <= start <= end < len(seq)):
        raise ValueError(
            f"interaction span [{start}, {end}] outside sequence of {len(seq)} frames"
        )
    if end - start < 1:
        return SimilaritySeries(values=(), interaction_id=interaction.id, too_short=True)

    det_by_frame = {}
    if p.exclude_indicator and interaction.tap_sequence is not None:
        det_by_frame = {d.frame_index: d for d in interaction.tap_sequence.detections}

    scale = 1
    if p.downscale_max_dim is not None:
        scale = _downscale_factor(seq.width, seq.height, p.downscale_max_dim)

    values = []
    raw_prev = gray_values(seq[start])
    stats_prev: _FrameStats | None = None
    for j in range(end - start):
        raw_cur = gray_values(seq[start + j + 1])
        if np.array_equal(raw_prev, raw_cur):
            values.append(1.0)  # identical frames; mask irrelevant
            raw_prev = raw_cur
            continue
        if stats_prev is None:
            stats_prev = _FrameStats(_prepare(raw_prev, scale), p.window)
        stats_cur = _FrameStats(_prepare(raw_cur, scale), p.window)
        valid = None
        rects = [
            det_by_frame[f].bbox for f in (start + j, start + j + 1) if f in det_by_frame
        ]
        if rects:
            mask = _mask_from_bboxes(rects, seq.height, seq.width, scale, dilate_px=4)
            valid = _window_sums(mask.astype(np.float64), p.window) == 0
        values.append(_ssim_pair(stats_prev, stats_cur, p, valid=valid))
        raw_prev, stats_prev = raw_cur, stats_cur
    return SimilaritySeries(values=tuple(values), interaction_id=interaction.id)


# ---------------------------------------------------------------------------
# internals
# ---------------------------------------------------------------------------


def _downscale_factor(width: int, height: int, max_dim: int) -> int:
    return max(1, math.ceil(max(width, height) / max_dim))


def _prepare(raw: np.ndarray, scale: int) -> np.ndarray:
    g = raw.astype(np.float64)
    return _block_mean(g, scale) if scale > 1 else g


def _area_downscale(img: np.ndarray, max_dim: int) -> np.ndarray:
    k = _downscale_factor(img.shape[1], img.shape[0], max_dim)
    return _block_mean(img, k) if k > 1 else img


def _block_mean(img: np.ndarray, k: int) -> np.ndarray:
    """k x k block averaging; edges are replicated up to a block multiple."""
    h, w = img.shape
    pad_h = (-h) % k
    pad_w = (-w) % k
    if pad_h or pad_w:
        img = np.pad(img, ((0, pad_h), (0, pad_w)), mode="edge")
    hh, ww = img.shape
    return img.reshape(hh // k, k, ww // k, k).mean(axis=(1, 3))


def _window_sums(img: np.ndarray, w: int) -> np.ndarray:
    """Sum over every w x w window (valid positions), via separable prefix sums."""
    if w > min(img.shape):
        raise ValueError(f"ssim window {w} larger than image {img.shape}")
    cs = np.cumsum(img, axis=1)
    rows = np.empty((img.shape[0], img.shape[1] - w + 1), dtype=np.float64)
    rows[:, 0] = cs[:, w - 1]
    np.subtract(cs[:, w:], cs[:, :-w], out=rows[:, 1:])
    cs2 = np.cumsum(rows, axis=0)
    out = np.empty((img.shape[0] - w + 1, rows.shape[1]), dtype=np.float64)
    out[0, :] = cs2[w - 1, :]
    np.subtract(cs2[w:, :], cs2[:-w, :], out=out[1:, :])
    return out


class _FrameStats:
    """Windowed first/second-moment sums of one frame, reusable across pairs."""

    __slots__ = ("img", "s1", "s2")

    def __init__(self, img: np.ndarray, window: int):
        self.img = img
        self.s1 = _window_sums(img, window)
        self.s2 = _window_sums(img * img, window)


def _ssim_pair(a: _FrameStats, b: _FrameStats, p: SsimParams, valid: np.ndarray | None = None) -> float:
    if a.img.shape != b.img.shape:
        raise ValueError(f"ssim dimension mismatch: {a.img.shape} vs {b.img.shape}")
    w = p.window
    n = float(w * w)
    c1 = (p.k1 * p.dynamic_range) ** 2
    c2 = (p.k2 * p.dynamic_range) ** 2

    mu_a = a.s1 / n
    mu_b = b.s1 / n
    var_a = a.s2 / n - mu_a * mu_a
    var_b = b.s2 / n - mu_b * mu_b
    cov = _window_sums(a.img * b.img, w) / n - mu_a * mu_b

    terms = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    if valid is None:
        return float(terms.mean())
    # windows overlapping any masked pixel are skipped
    if not valid.any():
        return 1.0  # nothing observable outside the mask: treat as unchanged
    return float(terms[valid].mean())


def _mask_from_bboxes(
    rects, frame_h: int, frame_w: int, scale: int, dilate_px: int
) -> np.ndarray:
    h = math.ceil(frame_h / scale)
    w = math.ceil(frame_w / scale)
    mask = np.zeros((h, w), dtype=bool)
    for (x, y, bw, bh) in rects:
        x0 = max(0, (x - dilate_px) // scale)
        y0 = max(0, (y - dilate_px) // scale)
        x1 = min(w, math.ceil((x + bw + dilate_px) / scale))
        y1 = min(h, math.ceil((y + bh + dilate_px) / scale))
        if x1 > x0 and y1 > y0:
            mask[y0:y1, x0:x1] = True
    return mask
