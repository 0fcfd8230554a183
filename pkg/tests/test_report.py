import json

import numpy as np
import pytest

from screenlag.keyframes import KeyframeStatus, ResponsivenessMeasurement
from screenlag.pipeline import analyze_sequence
from screenlag.report import (
    SLOW_FINISH,
    SLOW_RESPONSE,
    AlertThresholds,
    build_report,
    classify_severity,
    emit_report,
    parse_report,
)
from screenlag.segmenter import Gesture
from screenlag.synthgen import generate_screencast

from conftest import ACCURACY_CONFIG, make_frames, small_scenario


def measurement(rt, ft, status=KeyframeStatus.RESPONSIVE):
    return ResponsivenessMeasurement(
        interaction_id=0,
        gesture=Gesture.TAP,
        status=status,
        response_frame=5,
        finish_frame=9,
        response_ms=rt,
        finish_ms=ft,
    )


class TestSeverity:
    def test_paper_medians_flag_response_only(self):
        flags = classify_severity(measurement(105.0, 482.0), AlertThresholds())
        assert flags == (SLOW_RESPONSE,)

    def test_exact_threshold_not_flagged(self):
        assert classify_severity(measurement(100.0, 900.0), AlertThresholds()) == ()

    def test_slow_finish_only(self):
        assert classify_severity(measurement(48.0, 1440.0), AlertThresholds()) == (SLOW_FINISH,)

    def test_no_feedback_gets_no_flags(self):
        m = ResponsivenessMeasurement(
            interaction_id=0, gesture=Gesture.TAP, status=KeyframeStatus.NO_VISIBLE_FEEDBACK
        )
        assert classify_severity(m, AlertThresholds()) == ()

    def test_thresholds_validated(self):
        with pytest.raises(ValueError):
            AlertThresholds(response_ms=0)


class TestReportDocument:
    def test_empty_report_is_valid_json(self):
        seq = make_frames([np.zeros((8, 8))] * 3, source_id="empty")
        doc = build_report(seq, [], [])
        payload = json.loads(emit_report(doc, "json"))
        assert payload["summary"]["interaction_count"] == 0
        assert payload["interactions"] == []
        assert payload["source_id"] == "empty"

    def test_end_to_end_records_match_measurements(self):
        sc = small_scenario(seed=3, n_touches=5)
        seq, _ = generate_screencast(sc)
        result = analyze_sequence(seq, ACCURACY_CONFIG)
        doc = result.report
        assert doc.summary.interaction_count == 5
        assert [r.id for r in doc.interactions] == [0, 1, 2, 3, 4]
        for rec, itx, m in zip(doc.interactions, result.interactions, result.measurements):
            assert rec.start_frame == itx.start_frame
            assert rec.end_frame == itx.end_frame
            assert rec.response_frame == m.response_frame
            assert rec.finish_frame == m.finish_frame
            if m.response_ms is not None:
                assert rec.response_ms == pytest.approx(m.response_ms, abs=0.005)

    def test_same_analysis_emits_identical_bytes(self):
        sc = small_scenario(seed=4, n_touches=3)
        seq, _ = generate_screencast(sc)
        a = emit_report(analyze_sequence(seq, ACCURACY_CONFIG).report, "json")
        b = emit_report(analyze_sequence(seq, ACCURACY_CONFIG).report, "json")
        assert a == b

    def test_roundtrip_equality(self):
        sc = small_scenario(seed=6, n_touches=4)
        seq, _ = generate_screencast(sc)
        doc = analyze_sequence(seq, ACCURACY_CONFIG).report
        assert parse_report(emit_report(doc, "json")) == doc

    def test_summary_counts_match_flags(self):
        sc = small_scenario(seed=7, n_touches=5)
        seq, _ = generate_screencast(sc)
        doc = analyze_sequence(seq, ACCURACY_CONFIG).report
        assert doc.summary.slow_response_count == sum(
            SLOW_RESPONSE in r.severity for r in doc.interactions
        )
        assert doc.summary.slow_finish_count == sum(
            SLOW_FINISH in r.severity for r in doc.interactions
        )

    def test_medians_over_responsive_only(self):
        seq = make_frames([np.zeros((8, 8))] * 3, source_id="m")
        from conftest import make_interaction

        itxs = [make_interaction(0, 1, itx_id=0), make_interaction(2, 2, itx_id=1)]
        ms = [
            measurement(40.0, 200.0),
            ResponsivenessMeasurement(
                interaction_id=1, gesture=Gesture.TAP, status=KeyframeStatus.TOO_SHORT
            ),
        ]
        doc = build_report(seq, itxs, ms)
        assert doc.summary.median_response_ms == 40.0
        assert doc.summary.median_finish_ms == 200.0

    def test_text_format_renders_rows(self):
        sc = small_scenario(seed=8, n_touches=3)
        seq, _ = generate_screencast(sc)
        doc = analyze_sequence(seq, ACCURACY_CONFIG).report
        text = emit_report(doc, "text").decode()
        assert text.count("\n") >= 5
        assert "slow_response" in text or "interactions: 3" in text

    def test_unknown_format_rejected(self):
        seq = make_frames([np.zeros((8, 8))] * 3)
        doc = build_report(seq, [], [])
        with pytest.raises(ValueError, match="format"):
            emit_report(doc, "yaml")
