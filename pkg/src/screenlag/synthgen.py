"""Synthetic screencast generation with exact ground truth.

Scenarios script user touches (onset, path, response lag, transition) on an
app-like grayscale canvas; the renderer derives a 5-tuple ground-truth record
[f_start, f_response, f_finish, f_end, type] per touch directly from the
frames it draws. Rendering is fully deterministic under (scenario, seed).

Content is drawn from two separated luminance bands so that every scripted
transition changes every affected pixel by a wide margin: transitions stay
connected for the frame-difference detector and produce unambiguous SSIM
dips, which is what makes the corpus a usable oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ._rng import SplitMix64, derive
from .frameio import GRAY, Frame, FrameSequence
from .segmenter import Gesture

TRANSITION_FULL = "full_screen"
TRANSITION_PARTIAL = "partial_region"
TRANSITION_FADE = "fade"

NOISE_NONE = "none"
NOISE_BANNER = "animated_banner"

_INDICATOR_GRAY = 10
_BAND_LOW = (60, 105)
_BAND_HIGH = (170, 215)
_BAND_SPLIT = 140  # pixels below this are "low"; targets always cross it
_BANNER_BAND = (150, 190)
_PHASE_SLABS = 3  # slab count per phase of a long transition


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class BannerNoise:
    region: tuple[int, int, int, int]  # x, y, w, h
    period_frames: int

    def __post_init__(self):
        if self.period_frames < 1:
            raise ScenarioError("banner period must be >= 1 frame")


@dataclass(frozen=True)
class TouchSpec:
    onset_frame: int
    gesture: Gesture
    path: tuple[tuple[int, int, int], ...]  # (frame, x, y) waypoints
    indicator_radius_px: int = 20
    indicator_opacity: float = 0.45
    fade_frames: int = 4
    response_lag_frames: int = 6
    transition_frames: int = 5
    transition_kind: str = TRANSITION_PARTIAL

    @property
    def last_path_frame(self) -> int:
        return self.path[-1][0]

    @property
    def response_frame(self) -> int:
        return self.onset_frame + self.response_lag_frames

    @property
    def finish_frame(self) -> int:
        return self.onset_frame + self.response_lag_frames + self.transition_frames - 1

    @property
    def indicator_last_frame(self) -> int:
        # the vanish transition still produces a frame delta at lpf + fade
        return self.last_path_frame + self.fade_frames


@dataclass(frozen=True)
class Scenario:
    width: int
    height: int
    fps: float
    duration_frames: int
    touches: tuple[TouchSpec, ...]
    noise: BannerNoise | None = None
    seed: int = 0

    def __post_init__(self):
        _validate_scenario(self)


@dataclass(frozen=True)
class GroundTruthRecord:
    f_start: int
    f_response: int
    f_finish: int
    f_end: int
    type: Gesture

    def __post_init__(self):
        if not (self.f_start < self.f_response <= self.f_finish <= self.f_end):
            raise ScenarioError(
                f"invalid ground truth: start={self.f_start} response={self.f_response} "
                f"finish={self.f_finish} end={self.f_end}"
            )

    def response_ms(self, fps: float) -> float:
        return (self.f_response - self.f_start) * 1000.0 / fps

    def finish_ms(self, fps: float) -> float:
        return (self.f_finish - self.f_start) * 1000.0 / fps


def _validate_scenario(sc: Scenario):
    if sc.width < 16 or sc.height < 16:
        raise ScenarioError("scenario frame must be at least 16x16")
    if sc.fps <= 0:
        raise ScenarioError("fps must be positive")
    if sc.duration_frames < 1:
        raise ScenarioError("duration must be at least one frame")
    prev_onset = 0
    for k, t in enumerate(sc.touches):
        if t.onset_frame < 1:
            raise ScenarioError(f"touch {k}: onset must be >= 1 (needs a preceding frame)")
        if k > 0 and t.onset_frame <= prev_onset:
            raise ScenarioError(f"touch {k}: onset frames must be strictly increasing")
        prev_onset = t.onset_frame
    for k, t in enumerate(sc.touches):
        tag = f"touch {k}"
        if t.response_lag_frames < 1:
            raise ScenarioError(f"{tag}: response must begin after the onset (lag >= 1)")
        if t.transition_frames < 1:
            raise ScenarioError(f"{tag}: transition needs at least one frame")
        if t.fade_frames < 1 or t.indicator_radius_px < 1:
            raise ScenarioError(f"{tag}: indicator fade/radius must be >= 1")
        if not (0 < t.indicator_opacity <= 1):
            raise ScenarioError(f"{tag}: indicator opacity must be in (0, 1]")
        if not t.path or t.path[0][0] != t.onset_frame:
            raise ScenarioError(f"{tag}: path must start at the onset frame")
        if any(b[0] <= a[0] for a, b in zip(t.path, t.path[1:])):
            raise ScenarioError(f"{tag}: path frames must be strictly increasing")
        r = t.indicator_radius_px
        for (_, x, y) in t.path:
            if x - r < 0 or y - r < 0 or x + r >= sc.width or y + r >= sc.height:
                raise ScenarioError(f"{tag}: indicator leaves the frame at ({x}, {y})")
        if t.transition_kind not in (TRANSITION_FULL, TRANSITION_PARTIAL, TRANSITION_FADE):
            raise ScenarioError(f"{tag}: unknown transition kind {t.transition_kind!r}")
        end = sc.touches[k + 1].onset_frame - 1 if k + 1 < len(sc.touches) else sc.duration_frames - 1
        if t.finish_frame > end:
            raise ScenarioError(
                f"{tag}: transition ends at frame {t.finish_frame}, past its window end {end}"
            )
        if t.indicator_last_frame > end:
            raise ScenarioError(
                f"overlapping touch windows: {tag} indicator lasts to frame "
                f"{t.indicator_last_frame}, past its window end {end}"
            )


def ground_truth(sc: Scenario) -> list[GroundTruthRecord]:
    records = []
    for k, t in enumerate(sc.touches):
        end = sc.touches[k + 1].onset_frame - 1 if k + 1 < len(sc.touches) else sc.duration_frames - 1
        records.append(
            GroundTruthRecord(
                f_start=t.onset_frame,
                f_response=t.response_frame,
                f_finish=t.finish_frame,
                f_end=end,
                type=t.gesture,
            )
        )
    return records


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def generate_screencast(sc: Scenario) -> tuple[FrameSequence, list[GroundTruthRecord]]:
    """Render a scenario into frames plus its derived ground truth."""
    canvas = _base_canvas(sc)
    mutations = _plan_mutations(sc, canvas.copy())

    frame_ms = 1000.0 / sc.fps
    frames = []
    for f in range(sc.duration_frames):
        for (y0, y1, x0, x1, values) in mutations.get(f, ()):
            canvas[y0:y1, x0:x1] = values
        px = canvas.copy()
        for t in sc.touches:
            _draw_indicator(px, t, f)
        frames.append(Frame(index=f, pts_ms=f * frame_ms, pixels=px, colorspace=GRAY))
    seq = FrameSequence(frames=tuple(frames), nominal_fps=sc.fps, source_id="")
    return seq, ground_truth(sc)


def _strip_height(sc: Scenario) -> int:
    return min(64, sc.height // 8)


def _base_canvas(sc: Scenario) -> np.ndarray:
    rng = SplitMix64(derive(sc.seed, 0x1))
    canvas = np.empty((sc.height, sc.width), dtype=np.uint8)
    y = 0
    while y < sc.height:  # horizontal app panels
        band_h = 40 + rng.below(51)
        canvas[y : y + band_h, :] = _BAND_HIGH[0] + rng.below(_BAND_HIGH[1] - _BAND_HIGH[0] + 1)
        y += band_h
    strip = _strip_height(sc)
    if strip >= 8:
        canvas[:strip, :] = _banner_pattern(sc, variant=0)
    return canvas


def _strip_pattern(h: int, w: int, band: tuple[int, int], rng: SplitMix64) -> np.ndarray:
    out = np.empty((h, w), dtype=np.uint8)
    x = 0
    while x < w:
        sw = 16 + rng.below(25)
        out[:, x : x + sw] = band[0] + rng.below(band[1] - band[0] + 1)
        x += sw
    return out


def _banner_pattern(sc: Scenario, variant: int) -> np.ndarray:
    strip = _strip_height(sc)
    rng = SplitMix64(derive(sc.seed, 0xB0))
    base = _strip_pattern(strip, sc.width, _BANNER_BAND, rng)
    if variant == 0:
        return base
    # flipped state: everything drops by 14, every other 8px column by 20;
    # deltas stay above the detector threshold (connected full-strip diff,
    # radius-gated away) yet the SSIM dip lands well under transition dips
    out = base.astype(np.int16) - 14
    cols = (np.arange(sc.width) // 8) % 2 == 1
    out[:, cols] -= 6
    return np.clip(out, 0, 255).astype(np.uint8)


def _opposite_target(cur: np.ndarray, rng: SplitMix64) -> np.ndarray:
    """New content whose every pixel crosses the low/high band split."""
    h, w = cur.shape
    low = _strip_pattern(h, w, _BAND_LOW, rng)
    high = _strip_pattern(h, w, _BAND_HIGH, rng)
    return np.where(cur < _BAND_SPLIT, high, low).astype(np.uint8)


def _touch_region(sc: Scenario, ti: int, touch: TouchSpec) -> tuple[int, int, int, int]:
    """Response region (y0, y1, x0, x1) for a touch, derived from the seed."""
    strip = _strip_height(sc)
    if touch.transition_kind == TRANSITION_FULL:
        return (strip, sc.height, 0, sc.width)
    rng = SplitMix64(derive(sc.seed, 0x2, ti))
    w_r = max(8, int(sc.width * 0.75) + rng.below(max(1, int(sc.width * 0.125))))
    h_r = max(8, int(sc.height * 0.42) + rng.below(max(1, int(sc.height * 0.11))))
    w_r = min(w_r, sc.width - 16)
    h_r = min(h_r, max(8, int(sc.height * 0.75) - strip - 16))
    x0 = 8 + rng.below(max(1, sc.width - w_r - 15))
    y0 = strip + 8 + rng.below(max(1, int(sc.height * 0.75) - strip - h_r - 15))
    return (y0, y0 + h_r, x0, x0 + w_r)


def _plan_mutations(sc: Scenario, canvas: np.ndarray) -> dict[int, list]:
    """Precompute all content changes frame by frame on a virtual canvas."""
    muts: dict[int, list] = {}

    def add(frame: int, y0: int, y1: int, x0: int, x1: int, values: np.ndarray):
        muts.setdefault(frame, []).append((y0, y1, x0, x1, values))
        canvas[y0:y1, x0:x1] = values

    if sc.noise is not None:
        period = sc.noise.period_frames
        rng = SplitMix64(derive(sc.seed, 0xB1))
        bx, by, bw, bh = sc.noise.region
        patterns = [_banner_pattern(sc, 0)[by : by + bh, bx : bx + bw],
                    _banner_pattern(sc, 1)[by : by + bh, bx : bx + bw]]
        first = 6 + rng.below(period)
        f, state = first, 1
        while f < sc.duration_frames:
            add(f, by, by + bh, bx, bx + bw, patterns[state])
            state = 1 - state
            f += period

    for ti, touch in enumerate(sc.touches):
        rng = SplitMix64(derive(sc.seed, 0x3, ti))
        y0, y1, x0, x1 = _touch_region(sc, ti, touch)
        first = touch.response_frame
        total = touch.transition_frames
        if touch.transition_kind == TRANSITION_FADE:
            start = canvas[y0:y1, x0:x1].astype(np.float64)
            target = _opposite_target(canvas[y0:y1, x0:x1], rng).astype(np.float64)
            for k in range(1, total + 1):
                blend = np.rint(start + (target - start) * (k / total)).astype(np.uint8)
                add(first + k - 1, y0, y1, x0, x1, blend)
        else:
            # slab wipes; long transitions get a reveal phase and a settle
            # phase with a quiet stretch between (content pops in after a load)
            if total <= 2 * _PHASE_SLABS + 1:
                phases = [(first, total)]
            else:
                phases = [(first, _PHASE_SLABS), (first + total - _PHASE_SLABS, _PHASE_SLABS)]
            for (pf, nslabs) in phases:
                target = _opposite_target(canvas[y0:y1, x0:x1], rng)
                bounds = np.linspace(0, y1 - y0, nslabs + 1).round().astype(int)
                for k in range(nslabs):
                    sy0, sy1 = y0 + bounds[k], y0 + bounds[k + 1]
                    if sy1 > sy0:
                        add(pf + k, sy0, sy1, x0, x1, target[bounds[k] : bounds[k + 1], :])
    return muts


def _indicator_alpha(touch: TouchSpec, frame: int) -> float:
    if frame < touch.onset_frame:
        return 0.0
    lpf = touch.last_path_frame
    if frame <= lpf:
        return touch.indicator_opacity
    k = frame - lpf
    if k >= touch.fade_frames:
        return 0.0
    return touch.indicator_opacity * (1.0 - k / touch.fade_frames)


def _indicator_pos(touch: TouchSpec, frame: int) -> tuple[int, int]:
    path = touch.path
    if frame >= path[-1][0]:
        return path[-1][1], path[-1][2]
    for (f0, px0, py0), (f1, px1, py1) in zip(path, path[1:]):
        if f0 <= frame < f1:
            frac = (frame - f0) / (f1 - f0)
            return int(round(px0 + frac * (px1 - px0))), int(round(py0 + frac * (py1 - py0)))
    return path[0][1], path[0][2]


def _draw_indicator(px: np.ndarray, touch: TouchSpec, frame: int):
    alpha = _indicator_alpha(touch, frame)
    if alpha <= 0.0:
        return
    x, y = _indicator_pos(touch, frame)
    r = touch.indicator_radius_px
    yy, xx = np.ogrid[-r : r + 1, -r : r + 1]
    disk = (yy * yy + xx * xx) <= r * r
    patch = px[y - r : y + r + 1, x - r : x + r + 1]
    blended = np.rint(patch * (1.0 - alpha) + _INDICATOR_GRAY * alpha).astype(np.uint8)
    patch[disk] = blended[disk]


# ---------------------------------------------------------------------------
# Scenario / ground-truth files
# ---------------------------------------------------------------------------


def scenario_to_dict(sc: Scenario) -> dict:
    d = {
        "width": sc.width,
        "height": sc.height,
        "fps": sc.fps,
        "duration_frames": sc.duration_frames,
        "seed": sc.seed,
        "noise": {"kind": NOISE_NONE},
        "touches": [
            {
                "onset_frame": t.onset_frame,
                "gesture": t.gesture.value,
                "path": [list(p) for p in t.path],
                "indicator_radius_px": t.indicator_radius_px,
                "indicator_opacity": t.indicator_opacity,
                "fade_frames": t.fade_frames,
                "response_lag_frames": t.response_lag_frames,
                "transition_frames": t.transition_frames,
                "transition_kind": t.transition_kind,
            }
            for t in sc.touches
        ],
    }
    if sc.noise is not None:
        d["noise"] = {
            "kind": NOISE_BANNER,
            "region": list(sc.noise.region),
            "period_frames": sc.noise.period_frames,
        }
    return d


def scenario_from_dict(d: dict) -> Scenario:
    try:
        noise = None
        nd = d.get("noise") or {"kind": NOISE_NONE}
        if nd["kind"] == NOISE_BANNER:
            noise = BannerNoise(region=tuple(nd["region"]), period_frames=int(nd["period_frames"]))
        elif nd["kind"] != NOISE_NONE:
            raise ScenarioError(f"unknown noise kind {nd['kind']!r}")
        touches = tuple(
            TouchSpec(
                onset_frame=int(t["onset_frame"]),
                gesture=Gesture(t["gesture"]),
                path=tuple(tuple(int(v) for v in p) for p in t["path"]),
                indicator_radius_px=int(t.get("indicator_radius_px", 20)),
                indicator_opacity=float(t.get("indicator_opacity", 0.45)),
                fade_frames=int(t.get("fade_frames", 4)),
                response_lag_frames=int(t["response_lag_frames"]),
                transition_frames=int(t["transition_frames"]),
                transition_kind=t.get("transition_kind", TRANSITION_PARTIAL),
            )
            for t in d["touches"]
        )
        return Scenario(
            width=int(d["width"]),
            height=int(d["height"]),
            fps=float(d["fps"]),
            duration_frames=int(d["duration_frames"]),
            touches=touches,
            noise=noise,
            seed=int(d.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"malformed scenario: {exc}") from exc


def load_scenario(path: str | Path) -> Scenario:
    try:
        return scenario_from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc


def save_scenario(sc: Scenario, path: str | Path):
    Path(path).write_text(json.dumps(scenario_to_dict(sc), sort_keys=True, indent=2) + "\n")


def save_truth(records: Iterable[GroundTruthRecord], path: str | Path):
    lines = [
        json.dumps(
            {
                "f_start": r.f_start,
                "f_response": r.f_response,
                "f_finish": r.f_finish,
                "f_end": r.f_end,
                "type": r.type.value,
            },
            sort_keys=True,
        )
        for r in records
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_truth(path: str | Path) -> list[GroundTruthRecord]:
    records = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            records.append(
                GroundTruthRecord(
                    f_start=int(d["f_start"]),
                    f_response=int(d["f_response"]),
                    f_finish=int(d["f_finish"]),
                    f_end=int(d["f_end"]),
                    type=Gesture(d["type"]),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed ground truth at line {lineno} of {path}: {exc}") from exc
    return records


# ---------------------------------------------------------------------------
# Canonical corpus (seeds 0-19)
# ---------------------------------------------------------------------------

CORPUS_SEEDS = tuple(range(20))
CORPUS_WIDTH = 320
CORPUS_HEIGHT = 568
CORPUS_FPS = 60.0
# lag pools in frames at 60 FPS; 6 frames sits exactly on the 100 ms alert
# threshold and is excluded so every touch has a well-defined truth side
_FAST_LAGS = (1, 2, 3, 4, 5)
_SLOW_LAGS = (7, 8, 10, 12, 15, 18, 22, 26, 30)


def corpus_scenario(seed: int, with_noise: bool) -> Scenario:
    """One canonical corpus scenario; banner noise lands on seeds 3 mod 4."""
    rng = SplitMix64(derive(0x5EED, seed))
    n_touches = 10 + rng.below(6)
    slow_a = rng.below(n_touches)
    slow_b = (slow_a + 1 + rng.below(n_touches - 1)) % n_touches
    borderline = rng.below(n_touches)

    touches = []
    onset = 10 + rng.below(10)
    for i in range(n_touches):
        is_swipe = rng.random() >= 0.6
        motion = 5 + rng.below(3) if is_swipe else 0
        if i in (slow_a, slow_b):
            kind = TRANSITION_FULL
            lag = 8 + rng.below(13)
            if is_swipe:
                lag = max(lag, motion + 2)
            total = 66 - lag + rng.below(12)  # finish lands 65..77 (> 1000 ms)
        elif i == borderline:
            kind = TRANSITION_FULL
            lag = 8 + rng.below(8)
            if is_swipe:
                lag = max(lag, motion + 2)
            total = 49 + rng.below(8) - lag + 1  # finish lands 49..56 (< 1000 ms)
        else:
            kind = rng.choice((TRANSITION_FULL, TRANSITION_PARTIAL, TRANSITION_FADE))
            if kind == TRANSITION_FADE:
                total = 2 + rng.below(2)
            elif kind == TRANSITION_PARTIAL:
                total = 2 + rng.below(5)
            else:
                total = 4 + rng.below(5)
            lag = rng.choice(_FAST_LAGS) if rng.random() < 0.45 else rng.choice(_SLOW_LAGS)
            if kind == TRANSITION_FULL:
                lag = max(lag, 7)
            if is_swipe:
                lag = max(lag, motion + 2)

        if is_swipe:
            radius = 10
            step = 24 + rng.below(7)
            span_px = motion * step
            direction = 1 if rng.random() < 0.5 else -1
            y = 460 + rng.below(51)
            if direction > 0:
                x0 = 20 + rng.below(max(1, CORPUS_WIDTH - 20 - span_px - 20))
            else:
                x0 = CORPUS_WIDTH - 20 - rng.below(max(1, CORPUS_WIDTH - 40 - span_px))
            path = tuple((onset + j, x0 + direction * step * j, y) for j in range(motion + 1))
            gesture = Gesture.SWIPE
        else:
            radius = 20
            path = ((onset, 40 + rng.below(241), 455 + rng.below(61)),)
            gesture = Gesture.TAP

        fade = 4
        ind_end_rel = motion + fade
        span = max(2 * (lag + total) + 10, ind_end_rel + 8, 40) + rng.below(21)
        touches.append(
            TouchSpec(
                onset_frame=onset,
                gesture=gesture,
                path=path,
                indicator_radius_px=radius,
                indicator_opacity=0.45,
                fade_frames=fade,
                response_lag_frames=lag,
                transition_frames=total,
                transition_kind=kind,
            )
        )
        onset += span

    noise = None
    if with_noise and seed % 4 == 3:
        period = (6, 8, 10)[rng.below(3)]
        noise = BannerNoise(region=(0, 0, CORPUS_WIDTH, 64), period_frames=period)
    return Scenario(
        width=CORPUS_WIDTH,
        height=CORPUS_HEIGHT,
        fps=CORPUS_FPS,
        duration_frames=onset,
        touches=tuple(touches),
        noise=noise,
        seed=seed,
    )


def canonical_corpus(with_noise: bool = True) -> list[tuple[str, Scenario]]:
    """The 20-scenario acceptance corpus; 25% carry an animated banner."""
    return [(f"corpus{seed:02d}", corpus_scenario(seed, with_noise)) for seed in CORPUS_SEEDS]
