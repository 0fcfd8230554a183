"""Frame sequence loading: JSON-lines manifests of PNG frames and Y4M streams.

Both formats are codec-free on purpose: compressed videos are converted by an
external decoder before they reach this module, so analysis results never
depend on a codec build. Timestamps are kept as float milliseconds; at 60 FPS
an integer grid would accumulate rounding across a clip.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np
from PIL import Image

RGB = "rgb"
GRAY = "gray"

_LUMA_R = 0.299
_LUMA_G = 0.587
_LUMA_B = 0.114


class FrameFormatError(ValueError):
    """Raised for malformed manifests or Y4M streams."""


@dataclass(eq=False)
class Frame:
    """One raster frame with its presentation timestamp in milliseconds."""

    index: int
    pts_ms: float
    pixels: np.ndarray  # uint8, (h, w) for gray or (h, w, 3) for rgb
    colorspace: str

    def __post_init__(self):
        if self.colorspace not in (RGB, GRAY):
            raise ValueError(f"unknown colorspace {self.colorspace!r}")
        px = self.pixels
        if px.dtype != np.uint8:
            raise ValueError("frame pixels must be uint8")
        if self.colorspace == RGB and (px.ndim != 3 or px.shape[2] != 3):
            raise ValueError("rgb frame must have shape (h, w, 3)")
        if self.colorspace == GRAY and px.ndim != 2:
            raise ValueError("gray frame must have shape (h, w)")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("frame must be at least 1x1")
        if self.pts_ms < 0:
            raise ValueError("pts_ms must be non-negative")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(eq=False)
class FrameSequence:
    """An ordered, immutable run of frames sharing one geometry."""

    frames: tuple[Frame, ...]
    nominal_fps: float
    source_id: str = ""

    def __post_init__(self):
        if not self.frames:
            raise ValueError("frame sequence must not be empty")
        if self.nominal_fps <= 0:
            raise ValueError("nominal_fps must be positive")
        first = self.frames[0]
        prev_pts = -1.0
        for f in self.frames:
            if (f.width, f.height, f.colorspace) != (first.width, first.height, first.colorspace):
                raise ValueError(f"frame {f.index} geometry differs from frame 0")
            if f.pts_ms <= prev_pts:
                raise ValueError(f"non-monotonic pts at frame index {f.index}")
            prev_pts = f.pts_ms

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i: int) -> Frame:
        return self.frames[i]

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def pts(self, i: int) -> float:
        return self.frames[i].pts_ms


def to_grayscale(frame: Frame) -> Frame:
    """BT.601 full-range luma; gray input is returned as-is (idempotent)."""
    if frame.colorspace == GRAY:
        return frame
    px = frame.pixels.astype(np.float64)
    luma = _LUMA_R * px[:, :, 0] + _LUMA_G * px[:, :, 1] + _LUMA_B * px[:, :, 2]
    gray = np.clip(np.rint(luma), 0, 255).astype(np.uint8)
    return Frame(index=frame.index, pts_ms=frame.pts_ms, pixels=gray, colorspace=GRAY)


def gray_values(frame: Frame) -> np.ndarray:
    """uint8 luma plane of a frame regardless of its colorspace."""
    return to_grayscale(frame).pixels


# ---------------------------------------------------------------------------
# Frame manifests (JSON-lines header + one line per PNG frame)
# ---------------------------------------------------------------------------


def load_manifest(path: str | Path) -> FrameSequence:
    """Load a frame manifest.

    Line 1 is the header ``{"nominal_fps", "width", "height"}``; every later
    line is ``{"index", "pts_ms", "image"}`` with image paths relative to the
    manifest. Entries must already be in strictly increasing pts order.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FrameFormatError(f"cannot read manifest {path}: {exc}") from exc
    if not lines:
        raise FrameFormatError(f"manifest {path} is empty")
    try:
        header = json.loads(lines[0])
        fps = float(header["nominal_fps"])
        width = int(header["width"])
        height = int(header["height"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FrameFormatError(f"bad manifest header: {exc}") from exc

    frames: list[Frame] = []
    prev_pts = -1.0
    for entry_idx, line in enumerate(lines[1:]):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            index = int(entry["index"])
            pts_ms = float(entry["pts_ms"])
            image_rel = entry["image"]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FrameFormatError(f"bad manifest entry {entry_idx}: {exc}") from exc
        if index != entry_idx:
            raise FrameFormatError(
                f"manifest entry {entry_idx} carries index {index}, expected {entry_idx}"
            )
        if pts_ms <= prev_pts:
            raise FrameFormatError(f"non-monotonic timestamp at entry {entry_idx}")
        prev_pts = pts_ms

        image_path = path.parent / image_rel
        try:
            with Image.open(image_path) as img:
                if img.mode == "L":
                    px = np.asarray(img, dtype=np.uint8)
                    colorspace = GRAY
                else:
                    px = np.asarray(img.convert("RGB"), dtype=np.uint8)
                    colorspace = RGB
        except OSError as exc:
            raise FrameFormatError(f"cannot decode image for entry {entry_idx}: {exc}") from exc
        if px.shape[1] != width or px.shape[0] != height:
            raise FrameFormatError(
                f"dimension mismatch at entry {entry_idx}: "
                f"got {px.shape[1]}x{px.shape[0]}, manifest says {width}x{height}"
            )
        frames.append(Frame(index=index, pts_ms=pts_ms, pixels=px, colorspace=colorspace))

    if not frames:
        raise FrameFormatError(f"manifest {path} lists no frames")
    source_id = path.parent.name if path.name == "manifest.jsonl" else path.stem
    return FrameSequence(frames=tuple(frames), nominal_fps=fps, source_id=source_id)


def write_manifest(seq: FrameSequence, out_dir: str | Path) -> Path:
    """Write a sequence as PNG frames plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    frames_dir = out_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    lines = [
        json.dumps(
            {"nominal_fps": seq.nominal_fps, "width": seq.width, "height": seq.height},
            sort_keys=True,
        )
    ]
    for f in seq.frames:
        rel = f"frames/{f.index:06d}.png"
        img = Image.fromarray(f.pixels, mode="L" if f.colorspace == GRAY else "RGB")
        img.save(out_dir / rel, format="PNG")
        lines.append(json.dumps({"index": f.index, "pts_ms": f.pts_ms, "image": rel}, sort_keys=True))
    manifest = out_dir / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


# ---------------------------------------------------------------------------
# YUV4MPEG2 (uncompressed, for decoder-free ingestion)
# ---------------------------------------------------------------------------


def parse_y4m(stream: BinaryIO | bytes, fps_hint: float | None = None) -> FrameSequence:
    """Parse a YUV4MPEG2 stream (4:2:0 or mono) into RGB frames.

    pts_ms[i] = i * 1000 * rate_den / rate_num from the F header parameter;
    chroma is upsampled by replication and converted with BT.601 full-range.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    header = _read_line(stream)
    if header is None or not header.startswith(b"YUV4MPEG2"):
        raise FrameFormatError("not a YUV4MPEG2 stream (missing signature)")

    width = height = None
    rate_num, rate_den = None, None
    chroma = "420"
    for token in header.split()[1:]:
        tag, val = token[:1], token[1:]
        if tag == b"W":
            width = int(val)
        elif tag == b"H":
            height = int(val)
        elif tag == b"F":
            num, _, den = val.partition(b":")
            rate_num, rate_den = int(num), int(den or b"1")
        elif tag == b"C":
            chroma = val.decode("ascii", "replace")
        # interlacing / aspect / extension params are ignored

    if not width or not height:
        raise FrameFormatError("Y4M header missing W or H")
    if rate_num is None or rate_num <= 0 or rate_den is None or rate_den <= 0:
        if fps_hint is not None and fps_hint > 0:
            rate_num, rate_den = int(round(fps_hint * 1000)), 1000
        else:
            raise FrameFormatError("Y4M header missing frame rate (F) and no fps hint given")

    mono = chroma.startswith("mono")
    if not mono and not chroma.startswith("420"):
        raise FrameFormatError(f"unsupported Y4M chroma mode C{chroma}")
    if not mono and (width % 2 or height % 2):
        raise FrameFormatError("4:2:0 Y4M requires even dimensions")

    y_size = width * height
    c_size = 0 if mono else (width // 2) * (height // 2)
    frame_ms = 1000.0 * rate_den / rate_num
    fps = rate_num / rate_den

    frames: list[Frame] = []
    idx = 0
    while True:
        marker = _read_line(stream)
        if marker is None:
            break
        if not marker.startswith(b"FRAME"):
            raise FrameFormatError(f"expected FRAME marker before frame {idx}")
        payload = stream.read(y_size + 2 * c_size)
        if len(payload) != y_size + 2 * c_size:
            raise FrameFormatError(f"truncated payload at frame {idx}")
        y = np.frombuffer(payload, dtype=np.uint8, count=y_size).reshape(height, width)
        if mono:
            rgb = np.repeat(y[:, :, None], 3, axis=2)
        else:
            u = np.frombuffer(payload, np.uint8, c_size, y_size).reshape(height // 2, width // 2)
            v = np.frombuffer(payload, np.uint8, c_size, y_size + c_size).reshape(height // 2, width // 2)
            rgb = _yuv420_to_rgb(y, u, v)
        frames.append(Frame(index=idx, pts_ms=idx * frame_ms, pixels=rgb, colorspace=RGB))
        idx += 1

    if not frames:
        raise FrameFormatError("Y4M stream contains no frames")
    return FrameSequence(frames=tuple(frames), nominal_fps=fps, source_id="")


def load_y4m(path: str | Path, fps_hint: float | None = None) -> FrameSequence:
    path = Path(path)
    with open(path, "rb") as fh:
        seq = parse_y4m(fh, fps_hint=fps_hint)
    return FrameSequence(frames=seq.frames, nominal_fps=seq.nominal_fps, source_id=path.stem)


def write_y4m(seq: FrameSequence, sink: BinaryIO | str | Path, rate: tuple[int, int] | None = None):
    """Write a sequence as Y4M: mono for gray frames, 4:2:0 for RGB.

    Gray sequences round-trip with byte-identical luma; RGB goes through
    BT.601 and loses chroma resolution.
    """
    own = False
    if isinstance(sink, (str, Path)):
        sink = open(sink, "wb")
        own = True
    try:
        if rate is None:
            num = int(round(seq.nominal_fps * 1000))
            rate = (num, 1000)
        mono = seq.frames[0].colorspace == GRAY
        chroma = b"Cmono" if mono else b"C420jpeg"
        if not mono and (seq.width % 2 or seq.height % 2):
            raise FrameFormatError("RGB->4:2:0 Y4M needs even dimensions")
        sink.write(
            b"YUV4MPEG2 W%d H%d F%d:%d Ip A1:1 %s\n" % (seq.width, seq.height, rate[0], rate[1], chroma)
        )
        for f in seq.frames:
            sink.write(b"FRAME\n")
            if mono:
                sink.write(f.pixels.tobytes())
            else:
                y, u, v = _rgb_to_yuv420(f.pixels)
                sink.write(y.tobytes())
                sink.write(u.tobytes())
                sink.write(v.tobytes())
    finally:
        if own:
            sink.close()


def _read_line(stream: BinaryIO) -> bytes | None:
    chunks = []
    while True:
        ch = stream.read(1)
        if not ch:
            return b"".join(chunks) if chunks else None
        if ch == b"\n":
            return b"".join(chunks)
        chunks.append(ch)


def _yuv420_to_rgb(y: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    yf = y.astype(np.float64)
    uf = np.repeat(np.repeat(u, 2, axis=0), 2, axis=1).astype(np.float64) - 128.0
    vf = np.repeat(np.repeat(v, 2, axis=0), 2, axis=1).astype(np.float64) - 128.0
    r = yf + 1.402 * vf
    g = yf - 0.344136 * uf - 0.714136 * vf
    b = yf + 1.772 * uf
    rgb = np.stack([r, g, b], axis=2)
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def _rgb_to_yuv420(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    px = rgb.astype(np.float64)
    r, g, b = px[:, :, 0], px[:, :, 1], px[:, :, 2]
    y = _LUMA_R * r + _LUMA_G * g + _LUMA_B * b
    u = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    v = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    y8 = np.clip(np.rint(y), 0, 255).astype(np.uint8)
    u8 = np.clip(np.rint(_box2(u)), 0, 255).astype(np.uint8)
    v8 = np.clip(np.rint(_box2(v)), 0, 255).astype(np.uint8)
    return y8, u8, v8


def _box2(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
