"""Group tap detections into touches and cut the video into user interactions.

An interaction runs from the onset frame of one tap indicator to the frame
just before the next indicator's onset (the last interaction runs to the end
of the video). Frames before the first detected touch belong to no
interaction: there is no user input to attribute them to.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .tapdetect import TapDetection

DEFAULT_GAP_TOLERANCE = 2  # ~33 ms at 60 FPS; rides out single-frame dropouts
DEFAULT_TAP_RADIUS_PX = 10.0


class Gesture(str, enum.Enum):
    TAP = "tap"
    SWIPE = "swipe"


class SegmentationError(ValueError):
    pass


@dataclass(frozen=True)
class TapSequence:
    """Consecutive detections belonging to one physical touch."""

    detections: tuple[TapDetection, ...]

    def __post_init__(self):
        if not self.detections:
            raise ValueError("tap sequence must not be empty")
        frames = [d.frame_index for d in self.detections]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("tap sequence frames must be strictly increasing")

    @property
    def first_frame(self) -> int:
        return self.detections[0].frame_index

    @property
    def last_frame(self) -> int:
        return self.detections[-1].frame_index


@dataclass(frozen=True)
class Interaction:
    id: int
    start_frame: int
    end_frame: int
    gesture: Gesture
    tap_sequence: TapSequence

    def __post_init__(self):
        if self.start_frame != self.tap_sequence.first_frame:
            raise ValueError("interaction must start at its tap sequence onset")
        if self.start_frame > self.end_frame:
            raise ValueError("interaction start must not exceed its end")


def group_detections(
    dets: list[TapDetection], gap_tolerance: int = DEFAULT_GAP_TOLERANCE
) -> list[TapSequence]:
    """Split sorted detections into tap sequences at gaps > gap_tolerance."""
    if not dets:
        return []
    groups: list[list[TapDetection]] = [[dets[0]]]
    for prev, cur in zip(dets, dets[1:]):
        if cur.frame_index - prev.frame_index <= gap_tolerance:
            groups[-1].append(cur)
        else:
            groups.append([cur])
    return [TapSequence(detections=tuple(g)) for g in groups]


def classify_gesture(seq: TapSequence, tap_radius_px: float = DEFAULT_TAP_RADIUS_PX) -> Gesture:
    """Tap if the indicator centroid moved less than tap_radius_px, else Swipe."""
    x0, y0 = seq.detections[0].center
    x1, y1 = seq.detections[-1].center
    dist = math.hypot(x1 - x0, y1 - y0)
    return Gesture.TAP if dist < tap_radius_px else Gesture.SWIPE


def segment_interactions(
    seqs: list[TapSequence],
    total_frames: int,
    tap_radius_px: float = DEFAULT_TAP_RADIUS_PX,
) -> list[Interaction]:
    """Turn ordered tap sequences into disjoint interactions covering the video tail."""
    out: list[Interaction] = []
    for k, ts in enumerate(seqs):
        if k + 1 < len(seqs):
            nxt = seqs[k + 1]
            if nxt.first_frame <= ts.last_frame:
                raise SegmentationError(
                    f"overlapping tap sequences: #{k} spans frames "
                    f"[{ts.first_frame}, {ts.last_frame}] but #{k + 1} starts at "
                    f"frame {nxt.first_frame}"
                )
            end = nxt.first_frame - 1
        else:
            end = total_frames - 1
        if ts.last_frame >= total_frames:
            raise SegmentationError(
                f"tap sequence #{k} ends at frame {ts.last_frame}, beyond the "
                f"{total_frames}-frame video"
            )
        out.append(
            Interaction(
                id=k,
                start_frame=ts.first_frame,
                end_frame=end,
                gesture=classify_gesture(ts, tap_radius_px),
                tap_sequence=ts,
            )
        )
    return out
