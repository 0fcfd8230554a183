"""Tap-indicator detection: per-frame bounding boxes for the "Show taps" circle.

Two detector routes behind one interface: a builtin classical detector
(frame differencing + connected components + circularity) and an adapter for
detections produced out-of-band by a learned model. The builtin route keeps
the pipeline self-contained; it shares the known failure mode of firing on
small circular UI changes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .frameio import FrameSequence, gray_values

MODE_BUILTIN = "builtin"
MODE_EXTERNAL = "external"


class DetectionFileError(ValueError):
    """Malformed or out-of-range external detection file."""


@dataclass(frozen=True)
class TapDetection:
    frame_index: int
    bbox: tuple[int, int, int, int]  # x, y, w, h; top-left origin
    confidence: float

    @property
    def center(self) -> tuple[float, float]:
        x, y, w, h = self.bbox
        return (x + w / 2.0, y + h / 2.0)


@dataclass(frozen=True)
class DetectorConfig:
    mode: str = MODE_BUILTIN
    min_radius_px: float = 8.0
    max_radius_px: float = 60.0
    diff_threshold: int = 12
    circularity_min: float = 0.6
    confidence_threshold: float = 0.5
    external_path: str | Path | None = None

    def __post_init__(self):
        if self.mode not in (MODE_BUILTIN, MODE_EXTERNAL):
            raise ValueError(f"unknown detector mode {self.mode!r}")
        if not (0 < self.min_radius_px < self.max_radius_px):
            raise ValueError("need 0 < min_radius_px < max_radius_px")
        if not (0 <= self.diff_threshold <= 255):
            raise ValueError("diff_threshold must be an 8-bit intensity delta")
        if not (0 <= self.circularity_min <= 1):
            raise ValueError("circularity_min must be in [0, 1]")
        if not (0 <= self.confidence_threshold <= 1):
            raise ValueError("confidence_threshold must be in [0, 1]")


def detect_taps(seq: FrameSequence, cfg: DetectorConfig) -> list[TapDetection]:
    """Detect at most one tap indicator per frame, sorted by frame index."""
    if cfg.mode == MODE_EXTERNAL:
        if cfg.external_path is None:
            raise DetectionFileError("external detector mode requires external_path")
        return ingest_external_detections(cfg.external_path, seq, cfg)
    return _detect_builtin(seq, cfg)


def _detect_builtin(seq: FrameSequence, cfg: DetectorConfig) -> list[TapDetection]:
    n = len(seq)
    if n < 2:
        return []
    out: list[TapDetection] = []

    def emit(i: int, diff: np.ndarray):
        det = _best_circular_component(diff, cfg)
        if det is not None:
            bbox, conf = det
            out.append(TapDetection(frame_index=i, bbox=bbox, confidence=conf))

    # rolling pair of luma planes; frame 0 diffs against frame 1 so an
    # indicator already present at the clip start still registers
    prev = gray_values(seq[0]).astype(np.int16)
    cur = gray_values(seq[1]).astype(np.int16)
    emit(0, np.abs(prev - cur))
    emit(1, np.abs(cur - prev))
    prev = cur
    for i in range(2, n):
        cur = gray_values(seq[i]).astype(np.int16)
        emit(i, np.abs(cur - prev))
        prev = cur
    return out


def _best_circular_component(diff: np.ndarray, cfg: DetectorConfig):
    fg = diff >= cfg.diff_threshold
    if not fg.any():
        return None
    labels, nlab = ndimage.label(fg)  # default structure = 4-connectivity
    if nlab == 0:
        return None
    areas = np.bincount(labels.ravel())[1:].astype(np.float64)
    radius = np.sqrt(areas / math.pi)
    in_gate = (radius >= cfg.min_radius_px) & (radius <= cfg.max_radius_px)
    if not in_gate.any():
        return None

    slices = ndimage.find_objects(labels, max_label=nlab)
    best: tuple[tuple[int, int, int, int], float] | None = None
    for lab in np.flatnonzero(in_gate) + 1:
        sl = slices[lab - 1]
        mask = labels[sl] == lab
        perimeter = _contour_length(mask)
        if perimeter <= 0:
            continue
        circ = 4.0 * math.pi * areas[lab - 1] / (perimeter * perimeter)
        if circ < cfg.circularity_min:
            continue
        conf = min(circ, 1.0)
        if best is None or conf > best[1]:  # ties keep the smallest label
            y0, y1 = sl[0].start, sl[0].stop
            x0, x1 = sl[1].start, sl[1].stop
            best = ((x0, y0, x1 - x0, y1 - y0), conf)
    return best


# marching-squares segment lengths per 2x2 cell: one corner cut costs
# sqrt(2)/2, a straight crossing 1, a double-diagonal two corner cuts
_DIAG_HALF = math.sqrt(2.0) / 2.0


def _contour_length(mask: np.ndarray) -> float:
    """Marching-squares contour length of a binary mask.

    Accurate for digitized disks (~2*pi*r) and axis-aligned rectangles
    (~2*(w+h)), so rectangles are not over-credited the way plain
    crack-length counting with an isotropy correction would.
    """
    m = np.pad(mask, 1).astype(np.int8)
    a = m[:-1, :-1]
    b = m[:-1, 1:]
    c = m[1:, :-1]
    d = m[1:, 1:]
    s = a + b + c + d
    corners = int(np.count_nonzero((s == 1) | (s == 3)))
    two = s == 2
    diag = int(np.count_nonzero(two & (a == d)))  # fg pairs on a diagonal
    straight = int(np.count_nonzero(two)) - diag
    return corners * _DIAG_HALF + straight * 1.0 + diag * 2.0 * _DIAG_HALF


def ingest_external_detections(
    path: str | Path, seq: FrameSequence, cfg: DetectorConfig
) -> list[TapDetection]:
    """Read a JSON-lines detection file produced by an external detector.

    Rows below the confidence threshold are dropped; duplicate rows for a
    frame keep the highest confidence. Frame indices and bboxes are validated
    against the sequence, with errors naming the 1-based line number.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DetectionFileError(f"cannot read detections {path}: {exc}") from exc

    best: dict[int, TapDetection] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            frame = int(row["frame"])
            x, y = int(row["x"]), int(row["y"])
            w, h = int(row["w"]), int(row["h"])
            conf = float(row["confidence"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DetectionFileError(f"malformed detection at line {lineno}: {exc}") from exc
        if not (0 <= frame < len(seq)):
            raise DetectionFileError(
                f"frame index {frame} out of range at line {lineno} "
                f"(sequence has {len(seq)} frames)"
            )
        if w < 1 or h < 1 or x < 0 or y < 0 or x + w > seq.width or y + h > seq.height:
            raise DetectionFileError(f"bbox outside frame bounds at line {lineno}")
        if not (0 <= conf <= 1):
            raise DetectionFileError(f"confidence outside [0, 1] at line {lineno}")
        if conf < cfg.confidence_threshold:
            continue
        existing = best.get(frame)
        if existing is None or conf > existing.confidence:
            best[frame] = TapDetection(frame_index=frame, bbox=(x, y, w, h), confidence=conf)
    return [best[k] for k in sorted(best)]
