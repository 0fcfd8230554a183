import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import luma_loop
from screenlag import frameio
from screenlag.frameio import (
    GRAY,
    RGB,
    Frame,
    FrameFormatError,
    FrameSequence,
    load_manifest,
    parse_y4m,
    to_grayscale,
    write_manifest,
    write_y4m,
)
from screenlag.synthgen import generate_screencast

from conftest import small_scenario


def _rgb_frame(px, index=0, pts=0.0):
    return Frame(index=index, pts_ms=pts, pixels=np.asarray(px, dtype=np.uint8), colorspace=RGB)


def _write_sample_manifest(tmp_path, pts_list, fps=60.0, size=(8, 6)):
    from PIL import Image

    (tmp_path / "frames").mkdir(exist_ok=True)
    lines = [json.dumps({"nominal_fps": fps, "width": size[0], "height": size[1]})]
    for i, pts in enumerate(pts_list):
        rel = f"frames/{i:03d}.png"
        Image.fromarray(np.full((size[1], size[0]), i * 10, dtype=np.uint8), mode="L").save(tmp_path / rel)
        lines.append(json.dumps({"index": i, "pts_ms": pts, "image": rel}))
    manifest = tmp_path / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


class TestManifest:
    def test_three_frames_echo(self, tmp_path):
        manifest = _write_sample_manifest(tmp_path, [0, 16, 33])
        seq = load_manifest(manifest)
        assert len(seq) == 3
        assert [f.pts_ms for f in seq.frames] == [0, 16, 33]
        assert seq.nominal_fps == 60.0
        assert seq.source_id == tmp_path.name

    def test_non_monotonic_pts_rejected(self, tmp_path):
        manifest = _write_sample_manifest(tmp_path, [0, 16, 16])
        with pytest.raises(FrameFormatError, match="non-monotonic timestamp at entry 2"):
            load_manifest(manifest)

    def test_dimension_mismatch_names_entry(self, tmp_path):
        from PIL import Image

        manifest = _write_sample_manifest(tmp_path, [0, 16, 33])
        Image.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="L").save(tmp_path / "frames/001.png")
        with pytest.raises(FrameFormatError, match="entry 1"):
            load_manifest(manifest)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FrameFormatError, match="cannot read"):
            load_manifest(tmp_path / "nope.jsonl")

    def test_roundtrip_300_frames_at_60fps(self, tmp_path):
        # generated upstream, rewritten to disk, read back
        seq, _ = generate_screencast(small_scenario(seed=5, n_touches=6))
        assert len(seq) >= 300
        sub = FrameSequence(frames=seq.frames[:300], nominal_fps=60.0, source_id="x")
        manifest = write_manifest(sub, tmp_path / "vid")
        loaded = load_manifest(manifest)
        assert len(loaded) == 300
        assert loaded.nominal_fps == 60.0
        assert loaded.pts(299) == pytest.approx(4983.33, abs=0.01)
        for a, b in zip(sub.frames, loaded.frames):
            assert np.array_equal(a.pixels, b.pixels)
            assert a.pts_ms == b.pts_ms


class TestY4m:
    def test_60fps_header_timestamps(self):
        payload = b"YUV4MPEG2 W320 H180 F60:1 Ip A1:1 C420jpeg\n"
        frame = b"FRAME\n" + bytes(320 * 180) + bytes(2 * 160 * 90)
        seq = parse_y4m(payload + frame * 10)
        assert len(seq) == 10
        assert seq.pts(0) == 0.0
        assert seq.pts(1) == pytest.approx(16.67, abs=0.01)
        assert seq.pts(9) == pytest.approx(150.0, abs=0.01)
        assert seq.nominal_fps == 60.0

    def test_ntsc_frame_gap(self):
        payload = b"YUV4MPEG2 W16 H16 F30000:1001 Cmono\n"
        frame = b"FRAME\n" + bytes(16 * 16)
        seq = parse_y4m(payload + frame * 2)
        assert seq.pts(1) - seq.pts(0) == pytest.approx(33.367, abs=0.001)

    def test_bad_header(self):
        with pytest.raises(FrameFormatError, match="signature"):
            parse_y4m(b"NOPE W2 H2\n")
        with pytest.raises(FrameFormatError, match="missing W or H"):
            parse_y4m(b"YUV4MPEG2 F30:1\n")

    def test_truncated_payload(self):
        payload = b"YUV4MPEG2 W16 H16 F30:1 Cmono\nFRAME\n" + bytes(100)
        with pytest.raises(FrameFormatError, match="truncated"):
            parse_y4m(payload)

    def test_gray_roundtrip_luma_identical(self):
        seq, _ = generate_screencast(small_scenario(seed=9, n_touches=2))
        sub = FrameSequence(frames=seq.frames[:40], nominal_fps=60.0, source_id="y")
        buf = io.BytesIO()
        write_y4m(sub, buf)
        parsed = parse_y4m(buf.getvalue())
        assert len(parsed) == 40
        for orig, back in zip(sub.frames, parsed.frames):
            assert np.array_equal(to_grayscale(back).pixels, orig.pixels)


class TestGrayscale:
    def test_white_is_255(self):
        f = _rgb_frame(np.full((4, 4, 3), 255))
        assert np.all(to_grayscale(f).pixels == 255)

    def test_pure_red_is_76(self):
        f = _rgb_frame(np.tile([255, 0, 0], (4, 4, 1)))
        assert np.all(to_grayscale(f).pixels == 76)

    def test_random_matches_scalar_loop(self):
        rng = np.random.default_rng(7)
        px = rng.integers(0, 256, size=(12, 9, 3), dtype=np.uint8)
        got = to_grayscale(_rgb_frame(px)).pixels
        assert np.array_equal(got, luma_loop(px))

    @given(arrays(np.uint8, (5, 4, 3), elements=st.integers(0, 255)))
    @settings(max_examples=40, deadline=None)
    def test_idempotent(self, px):
        f = _rgb_frame(px)
        once = to_grayscale(f)
        twice = to_grayscale(once)
        assert twice is once  # gray input returned unchanged
        assert np.array_equal(once.pixels, twice.pixels)


class TestSequenceInvariants:
    def test_rejects_non_monotonic(self):
        f0 = Frame(index=0, pts_ms=5.0, pixels=np.zeros((4, 4), np.uint8), colorspace=GRAY)
        f1 = Frame(index=1, pts_ms=5.0, pixels=np.zeros((4, 4), np.uint8), colorspace=GRAY)
        with pytest.raises(ValueError, match="non-monotonic"):
            FrameSequence(frames=(f0, f1), nominal_fps=30.0)

    def test_rejects_empty_and_mixed_geometry(self):
        with pytest.raises(ValueError, match="empty"):
            FrameSequence(frames=(), nominal_fps=30.0)
        f0 = Frame(index=0, pts_ms=0.0, pixels=np.zeros((4, 4), np.uint8), colorspace=GRAY)
        f1 = Frame(index=1, pts_ms=10.0, pixels=np.zeros((4, 5), np.uint8), colorspace=GRAY)
        with pytest.raises(ValueError, match="geometry"):
            FrameSequence(frames=(f0, f1), nominal_fps=30.0)
