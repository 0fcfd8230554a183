import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import ssim_brute
from screenlag.frameio import GRAY, Frame
from screenlag.similarity import SsimParams, similarity_series, ssim
from screenlag.tapdetect import TapDetection

from conftest import make_frames, make_interaction

NO_SCALE = SsimParams(downscale_max_dim=None)


def gray_frame(px, index=0, pts=0.0):
    return Frame(index=index, pts_ms=pts, pixels=np.asarray(px, dtype=np.uint8), colorspace=GRAY)


class TestSsim:
    def test_identical_frames_are_one(self):
        rng = np.random.default_rng(0)
        px = rng.integers(0, 256, size=(32, 48), dtype=np.uint8)
        assert ssim(gray_frame(px), gray_frame(px), NO_SCALE) == pytest.approx(1.0, abs=1e-9)

    def test_black_vs_white_matches_oracle(self):
        a = np.zeros((16, 16), dtype=np.uint8)
        b = np.full((16, 16), 255, dtype=np.uint8)
        got = ssim(gray_frame(a), gray_frame(b), NO_SCALE)
        assert got == pytest.approx(ssim_brute(a, b), abs=1e-6)

    def test_random_pairs_match_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            a = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
            b = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
            assert ssim(gray_frame(a), gray_frame(b), NO_SCALE) == pytest.approx(
                ssim_brute(a, b), abs=1e-6
            )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            ssim(gray_frame(np.zeros((8, 8))), gray_frame(np.zeros((8, 9))), NO_SCALE)

    @given(
        arrays(np.uint8, (12, 12), elements=st.integers(0, 255)),
        arrays(np.uint8, (12, 12), elements=st.integers(0, 255)),
    )
    @settings(max_examples=30, deadline=None)
    def test_symmetry(self, a, b):
        fa, fb = gray_frame(a), gray_frame(b)
        assert ssim(fa, fb, NO_SCALE) == pytest.approx(ssim(fb, fa, NO_SCALE), abs=1e-12)

    def test_window_validation(self):
        with pytest.raises(ValueError):
            SsimParams(window=2)
        with pytest.raises(ValueError):
            SsimParams(k1=0.0)


def _transition_frames(n=12, change_pair=5, size=(40, 60)):
    """n static frames with one full-frame content swap at the given pair."""
    rng = np.random.default_rng(3)
    before = rng.integers(150, 220, size=size).astype(np.uint8)
    after = rng.integers(30, 100, size=size).astype(np.uint8)
    return [before if i <= change_pair else after for i in range(n)]


class TestSeries:
    def test_all_identical_gives_ones(self):
        seq = make_frames([np.full((20, 20), 99)] * 10)
        s = similarity_series(seq, make_interaction(0, 9), NO_SCALE)
        assert len(s.values) == 9
        assert all(v == pytest.approx(1.0, abs=1e-9) for v in s.values)

    def test_single_transition_minimum_at_change(self):
        seq = make_frames(_transition_frames(change_pair=3))
        s = similarity_series(seq, make_interaction(0, 11), NO_SCALE)
        assert int(np.argmin(s.values)) == 3

    def test_downscale_preserves_argmin(self):
        seq = make_frames(_transition_frames(n=14, change_pair=6, size=(80, 100)))
        plain = similarity_series(seq, make_interaction(0, 13), NO_SCALE)
        scaled = similarity_series(seq, make_interaction(0, 13), SsimParams(downscale_max_dim=32))
        assert int(np.argmin(plain.values)) == int(np.argmin(scaled.values)) == 6

    def test_fig1_shape_dip_then_recover(self):
        # change starts at the (f3, f4) pair and stabilizes after (f9, f10):
        # 1-indexed paper frames, so series indices 2..8 carry the dips
        size = (40, 60)
        base = np.full(size, 200, dtype=np.uint8)
        frames = [base.copy() for _ in range(12)]
        # wipe a region in 7 steps, one slab per pair (2..8)
        rows = np.linspace(5, 35, 8).round().astype(int)
        content = np.full(size, 60, dtype=np.uint8)
        for step in range(7):
            for f in frames[3 + step :]:
                f[rows[step] : rows[step + 1], 8:52] = content[rows[step] : rows[step + 1], 8:52]
        seq = make_frames(frames)
        s = similarity_series(seq, make_interaction(0, 11), NO_SCALE)
        assert s.values[0] > 0.999 and s.values[1] > 0.999
        assert all(v < 0.98 for v in s.values[2:9])
        assert s.values[9] > 0.999 and s.values[10] > 0.999

    def test_too_short_interaction_flagged(self):
        seq = make_frames([np.zeros((20, 20))] * 5)
        s = similarity_series(seq, make_interaction(2, 2), NO_SCALE)
        assert s.too_short and s.values == ()

    def test_indicator_mask_suppresses_fade(self):
        # a fading indicator is the only change; masking hides it entirely
        base = np.full((60, 80), 200, dtype=np.uint8)
        faded = base.copy()
        faded[20:40, 30:50] = 150  # indicator remnant changes
        seq = make_frames([base, faded, faded])
        det = (
            TapDetection(frame_index=0, bbox=(30, 20, 20, 20), confidence=0.9),
            TapDetection(frame_index=1, bbox=(30, 20, 20, 20), confidence=0.9),
        )
        itx = make_interaction(0, 2, detections=det)
        masked = similarity_series(seq, itx, SsimParams(downscale_max_dim=None, exclude_indicator=True))
        unmasked = similarity_series(seq, itx, SsimParams(downscale_max_dim=None, exclude_indicator=False))
        assert masked.values[0] == pytest.approx(1.0, abs=1e-9)
        assert unmasked.values[0] < 0.999

    def test_series_length_matches_span(self):
        seq = make_frames([np.zeros((20, 20))] * 8)
        s = similarity_series(seq, make_interaction(2, 7), NO_SCALE)
        assert len(s.values) == 5
