"""Accuracy evaluation of pipeline output against ground truth.

Detection matching follows the two-condition rule: a predicted interaction is
a true positive iff an unmatched truth record has the identical start frame
AND the identical gesture type (greedy one-to-one, in order). Timing and
alerting metrics are then computed over those matches; alerting additionally
counts unmatched positives on either side.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .keyframes import KeyframeStatus
from .report import AlertThresholds, InteractionRecord
from .synthgen import GroundTruthRecord

RESPONSE_BUCKETS = (0, 1, 2, 3)  # cumulative frame-error bounds, then ">3"
FINISH_BUCKETS = (0, 1, 3, 6)  # cumulative frame-error bounds, then ">6"


@dataclass(frozen=True)
class ClassCounts:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return 1.0 if self.tp + self.fp == 0 else self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float:
        return 1.0 if self.tp + self.fn == 0 else self.tp / (self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 0.0 if p + r == 0 else 2 * p * r / (p + r)


@dataclass(frozen=True)
class DetectionMetrics:
    true_positives: int
    predicted_count: int
    truth_count: int
    gesture_correct: int
    start_matches: int

    @property
    def precision(self) -> float:
        if self.predicted_count == 0:
            return 1.0  # no predictions, no false positives
        return self.true_positives / self.predicted_count

    @property
    def recall(self) -> float:
        if self.truth_count == 0:
            return 1.0
        return self.true_positives / self.truth_count

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 0.0 if p + r == 0 else 2 * p * r / (p + r)

    @property
    def gesture_accuracy(self) -> float:
        """Type accuracy over predictions aligned with a truth start frame."""
        if self.start_matches == 0:
            return 1.0
        return self.gesture_correct / self.start_matches


@dataclass(frozen=True)
class TimingSide:
    mae_frames: float | None
    mae_ms: float | None
    buckets: dict[str, float]
    match_count: int
    measured_count: int


@dataclass(frozen=True)
class TimingMetrics:
    response: TimingSide
    finish: TimingSide


@dataclass(frozen=True)
class AlertingSide:
    threshold_ms: float
    counts: ClassCounts


@dataclass(frozen=True)
class AlertingMetrics:
    response: AlertingSide
    finish: AlertingSide


@dataclass(frozen=True)
class EvalSummary:
    detection: DetectionMetrics
    timing: TimingMetrics
    alerting: AlertingMetrics

    def to_dict(self) -> dict:
        d = self.detection
        return {
            "detection": {
                "precision": round(d.precision, 4),
                "recall": round(d.recall, 4),
                "f1": round(d.f1, 4),
                "gesture_accuracy": round(d.gesture_accuracy, 4),
                "true_positives": d.true_positives,
                "predicted_count": d.predicted_count,
                "truth_count": d.truth_count,
            },
            "response": _timing_side_dict(self.timing.response),
            "finish": _timing_side_dict(self.timing.finish),
            "alerting": {
                "response": _alerting_side_dict(self.alerting.response),
                "finish": _alerting_side_dict(self.alerting.finish),
            },
        }


def _timing_side_dict(side: TimingSide) -> dict:
    return {
        "mae_frames": None if side.mae_frames is None else round(side.mae_frames, 4),
        "mae_ms": None if side.mae_ms is None else round(side.mae_ms, 4),
        "buckets": {k: round(v, 4) for k, v in side.buckets.items()},
        "match_count": side.match_count,
        "measured_count": side.measured_count,
    }


def _alerting_side_dict(side: AlertingSide) -> dict:
    c = side.counts
    return {
        "threshold_ms": side.threshold_ms,
        "precision": round(c.precision, 4),
        "recall": round(c.recall, 4),
        "f1": round(c.f1, 4),
        "tp": c.tp,
        "fp": c.fp,
        "fn": c.fn,
    }


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------


def match_interactions(
    records: Sequence[InteractionRecord], truths: Sequence[GroundTruthRecord]
):
    """Greedy in-order one-to-one matching on (start frame, gesture type)."""
    matches: list[tuple[InteractionRecord, GroundTruthRecord]] = []
    used = [False] * len(truths)
    unmatched_records = []
    for rec in records:
        hit = None
        for idx, truth in enumerate(truths):
            if used[idx]:
                continue
            if truth.f_start == rec.start_frame and truth.type.value == rec.gesture:
                hit = idx
                break
        if hit is None:
            unmatched_records.append(rec)
        else:
            used[hit] = True
            matches.append((rec, truths[hit]))
    unmatched_truths = [t for idx, t in enumerate(truths) if not used[idx]]
    return matches, unmatched_records, unmatched_truths


def _start_only_matches(records, truths):
    """(aligned, correct-type) counts for gesture accuracy, start frame only."""
    used = [False] * len(truths)
    aligned = correct = 0
    for rec in records:
        for idx, truth in enumerate(truths):
            if not used[idx] and truth.f_start == rec.start_frame:
                used[idx] = True
                aligned += 1
                correct += truth.type.value == rec.gesture
                break
    return aligned, correct


# ---------------------------------------------------------------------------
# Per-video metric entry points
# ---------------------------------------------------------------------------


def evaluate_detection(
    records: Sequence[InteractionRecord], truths: Sequence[GroundTruthRecord]
) -> DetectionMetrics:
    matches, _, _ = match_interactions(records, truths)
    aligned, correct = _start_only_matches(records, truths)
    return DetectionMetrics(
        true_positives=len(matches),
        predicted_count=len(records),
        truth_count=len(truths),
        gesture_correct=correct,
        start_matches=aligned,
    )


def evaluate_timing(
    records: Sequence[InteractionRecord],
    truths: Sequence[GroundTruthRecord],
    fps: float,
) -> TimingMetrics:
    matches, _, _ = match_interactions(records, truths)
    return _timing_from_matches([(m, fps) for m in matches])


def evaluate_alerting(
    records: Sequence[InteractionRecord],
    truths: Sequence[GroundTruthRecord],
    thresholds: AlertThresholds,
    fps: float,
) -> AlertingMetrics:
    matches, extra_records, missed_truths = match_interactions(records, truths)
    return _alerting_from_pool(
        [(m, fps) for m in matches],
        [(r, fps) for r in extra_records],
        [(t, fps) for t in missed_truths],
        thresholds,
    )


def summarize_corpus(
    videos: Iterable[tuple[Sequence[InteractionRecord], Sequence[GroundTruthRecord], float]],
    thresholds: AlertThresholds | None = None,
) -> EvalSummary:
    """Pool per-video matches into one corpus-level summary.

    Matching is within-video; counts, errors and alert classes are pooled
    across the corpus before computing precision/recall/MAE/buckets.
    """
    thresholds = thresholds or AlertThresholds()
    pooled_matches: list = []
    pooled_extra: list = []
    pooled_missed: list = []
    n_pred = n_truth = aligned_total = correct_total = 0
    for records, truths, fps in videos:
        matches, extra, missed = match_interactions(records, truths)
        pooled_matches += [(m, fps) for m in matches]
        pooled_extra += [(r, fps) for r in extra]
        pooled_missed += [(t, fps) for t in missed]
        n_pred += len(records)
        n_truth += len(truths)
        a, c = _start_only_matches(records, truths)
        aligned_total += a
        correct_total += c
    detection = DetectionMetrics(
        true_positives=len(pooled_matches),
        predicted_count=n_pred,
        truth_count=n_truth,
        gesture_correct=correct_total,
        start_matches=aligned_total,
    )
    timing = _timing_from_matches(pooled_matches)
    alerting = _alerting_from_pool(pooled_matches, pooled_extra, pooled_missed, thresholds)
    return EvalSummary(detection=detection, timing=timing, alerting=alerting)


# ---------------------------------------------------------------------------
# Internals shared by single-video and pooled paths
# ---------------------------------------------------------------------------


def _timing_from_matches(matches_with_fps) -> TimingMetrics:
    sides = []
    for pred_attr, truth_attr, bounds in (
        ("response_frame", "f_response", RESPONSE_BUCKETS),
        ("finish_frame", "f_finish", FINISH_BUCKETS),
    ):
        frame_errors: list[float] = []  # measured matches only
        ms_errors: list[float] = []
        overflow = 0  # matches without a measurement land past the last bound
        for (rec, truth), fps in matches_with_fps:
            pred = getattr(rec, pred_attr)
            if rec.status != KeyframeStatus.RESPONSIVE.value or pred is None:
                overflow += 1
                continue
            err = abs(pred - getattr(truth, truth_attr))
            frame_errors.append(err)
            ms_errors.append(err * 1000.0 / fps)
        total = len(frame_errors) + overflow
        buckets: dict[str, float] = {}
        for b in bounds:
            key = "eq0" if b == 0 else f"le{b}"
            buckets[key] = (
                sum(e <= b for e in frame_errors) / total if total else 1.0
            )
        buckets[f"gt{bounds[-1]}"] = (
            (sum(e > bounds[-1] for e in frame_errors) + overflow) / total if total else 0.0
        )
        sides.append(
            TimingSide(
                mae_frames=sum(frame_errors) / len(frame_errors) if frame_errors else None,
                mae_ms=sum(ms_errors) / len(ms_errors) if ms_errors else None,
                buckets=buckets,
                match_count=total,
                measured_count=len(frame_errors),
            )
        )
    return TimingMetrics(response=sides[0], finish=sides[1])


def _alerting_from_pool(matches_with_fps, extra_records, missed_truths, thresholds) -> AlertingMetrics:
    sides = []
    for pred_attr, truth_ms, thr in (
        ("response_ms", lambda t, fps: t.response_ms(fps), thresholds.response_ms),
        ("finish_ms", lambda t, fps: t.finish_ms(fps), thresholds.finish_ms),
    ):
        tp = fp = fn = 0
        for (rec, truth), fps in matches_with_fps:
            pred_val = getattr(rec, pred_attr)
            pred_pos = pred_val is not None and pred_val > thr
            true_pos = truth_ms(truth, fps) > thr
            tp += pred_pos and true_pos
            fp += pred_pos and not true_pos
            fn += true_pos and not pred_pos
        for rec, fps in extra_records:
            pred_val = getattr(rec, pred_attr)
            if pred_val is not None and pred_val > thr:
                fp += 1
        for truth, fps in missed_truths:
            if truth_ms(truth, fps) > thr:
                fn += 1
        sides.append(AlertingSide(threshold_ms=thr, counts=ClassCounts(tp=tp, fp=fp, fn=fn)))
    return AlertingMetrics(response=sides[0], finish=sides[1])
