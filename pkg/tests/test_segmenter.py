import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from screenlag.pipeline import analyze_sequence
from screenlag.segmenter import (
    Gesture,
    SegmentationError,
    TapSequence,
    classify_gesture,
    group_detections,
    segment_interactions,
)
from screenlag.synthgen import generate_screencast
from screenlag.tapdetect import TapDetection

from conftest import ACCURACY_CONFIG, small_scenario


def det(frame, x=10, y=10, w=4, h=4, conf=0.9):
    return TapDetection(frame_index=frame, bbox=(x, y, w, h), confidence=conf)


class TestGrouping:
    def test_gap_rule_splits(self):
        seqs = group_detections([det(1), det(2), det(3), det(40), det(41)], gap_tolerance=2)
        assert [(s.first_frame, s.last_frame) for s in seqs] == [(1, 3), (40, 41)]

    def test_gap_boundary_joins(self):
        seqs = group_detections([det(1), det(3)], gap_tolerance=2)
        assert len(seqs) == 1

    def test_empty_input(self):
        assert group_detections([], gap_tolerance=2) == []

    @given(st.lists(st.integers(0, 400), min_size=1, max_size=40, unique=True), st.integers(1, 5))
    @settings(max_examples=60, deadline=None)
    def test_groups_partition_and_respect_gaps(self, frames, tol):
        dets = [det(f) for f in sorted(frames)]
        seqs = group_detections(dets, gap_tolerance=tol)
        regrouped = [d.frame_index for s in seqs for d in s.detections]
        assert regrouped == sorted(frames)
        for s in seqs:
            fr = [d.frame_index for d in s.detections]
            assert all(b - a <= tol for a, b in zip(fr, fr[1:]))
        for a, b in zip(seqs, seqs[1:]):
            assert b.first_frame - a.last_frame > tol

    def test_five_programmed_touches_grouped(self):
        sc = small_scenario(seed=2, n_touches=5)
        seq, truth = generate_screencast(sc)
        result = analyze_sequence(seq, ACCURACY_CONFIG)
        assert len(result.interactions) == 5
        assert [i.start_frame for i in result.interactions] == [t.f_start for t in truth]


class TestInteractions:
    def test_boundary_arithmetic(self):
        seqs = [TapSequence((det(1), det(2))), TapSequence((det(61), det(62)))]
        out = segment_interactions(seqs, total_frames=120)
        assert [(i.start_frame, i.end_frame) for i in out] == [(1, 60), (61, 119)]

    def test_single_sequence_spans_to_video_end(self):
        out = segment_interactions([TapSequence((det(10),))], total_frames=300)
        assert [(i.start_frame, i.end_frame) for i in out] == [(10, 299)]

    def test_fig2_layout_ends_before_next_onset(self):
        # indicator at f1..f3, the next at f_{n+1}: interaction is [f1, f_n]
        n = 47
        seqs = [TapSequence((det(1), det(2), det(3))), TapSequence((det(n + 1),))]
        out = segment_interactions(seqs, total_frames=n + 40)
        assert out[0].start_frame == 1 and out[0].end_frame == n

    def test_overlap_is_structural_error_naming_pair(self):
        seqs = [TapSequence((det(5), det(9))), TapSequence((det(8),))]
        with pytest.raises(SegmentationError, match="#0.*#1"):
            segment_interactions(seqs, total_frames=50)

    def test_partition_no_gaps_no_overlaps(self):
        seqs = [TapSequence((det(f),)) for f in (4, 30, 77, 120)]
        out = segment_interactions(seqs, total_frames=200)
        for a, b in zip(out, out[1:]):
            assert b.start_frame == a.end_frame + 1
        assert out[-1].end_frame == 199
        assert [i.id for i in out] == [0, 1, 2, 3]


class TestGesture:
    def test_small_move_is_tap(self):
        seq = TapSequence((det(1, x=98, y=98), det(2, x=101, y=102)))
        assert classify_gesture(seq) is Gesture.TAP  # distance 5 < 10

    def test_zero_move_is_tap(self):
        seq = TapSequence((det(1, x=98, y=98), det(4, x=98, y=98)))
        assert classify_gesture(seq) is Gesture.TAP

    def test_long_move_is_swipe(self):
        seq = TapSequence((det(1, x=98, y=98), det(6, x=198, y=98)))
        assert classify_gesture(seq) is Gesture.SWIPE

    def test_exact_threshold_is_swipe(self):
        # strictly-less-than comparison: exactly 10 px is not a tap
        seq = TapSequence((det(1, x=100, y=100), det(2, x=110, y=100)))
        assert classify_gesture(seq) is Gesture.SWIPE

    @given(st.integers(-300, 300), st.integers(-300, 300))
    @settings(max_examples=40, deadline=None)
    def test_translation_invariant(self, dx, dy):
        a = TapSequence((det(1, x=500, y=500), det(3, x=504, y=503)))
        b = TapSequence((det(1, x=500 + dx, y=500 + dy), det(3, x=504 + dx, y=503 + dy)))
        assert classify_gesture(a) is classify_gesture(b)
