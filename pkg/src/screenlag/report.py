"""Per-video analysis reports: severity flagging and canonical serialization.

The JSON form is canonical (sorted keys, ms fields pre-rounded to 2 decimals
at build time) so identical analyses produce byte-identical files and reports
round-trip exactly.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .keyframes import KeyframeStatus, ResponsivenessMeasurement
from .segmenter import Interaction

if TYPE_CHECKING:
    from .frameio import FrameSequence

SLOW_RESPONSE = "slow_response"
SLOW_FINISH = "slow_finish"


@dataclass(frozen=True)
class AlertThresholds:
    response_ms: float = 100.0
    finish_ms: float = 1000.0

    def __post_init__(self):
        if self.response_ms <= 0 or self.finish_ms <= 0:
            raise ValueError("alert thresholds must be positive")


def classify_severity(m: ResponsivenessMeasurement, t: AlertThresholds) -> tuple[str, ...]:
    """Severity flags; strictly greater than the threshold raises a flag."""
    if m.status is not KeyframeStatus.RESPONSIVE:
        return ()
    flags = []
    if m.response_ms is not None and m.response_ms > t.response_ms:
        flags.append(SLOW_RESPONSE)
    if m.finish_ms is not None and m.finish_ms > t.finish_ms:
        flags.append(SLOW_FINISH)
    return tuple(flags)


@dataclass(frozen=True)
class InteractionRecord:
    id: int
    gesture: str
    start_frame: int
    start_pts_ms: float
    end_frame: int
    status: str
    response_frame: int | None = None
    response_ms: float | None = None
    finish_frame: int | None = None
    finish_ms: float | None = None
    severity: tuple[str, ...] = ()


@dataclass(frozen=True)
class ReportSummary:
    interaction_count: int
    slow_response_count: int
    slow_finish_count: int
    median_response_ms: float | None = None
    median_finish_ms: float | None = None


@dataclass(frozen=True)
class ReportDocument:
    source_id: str
    nominal_fps: float
    interactions: tuple[InteractionRecord, ...]
    summary: ReportSummary


def build_report(
    seq: "FrameSequence",
    interactions: Iterable[Interaction],
    measurements: Iterable[ResponsivenessMeasurement],
) -> ReportDocument:
    """Assemble the per-video document; ms values are rounded here, once."""
    records = []
    for itx, m in zip(interactions, measurements):
        records.append(
            InteractionRecord(
                id=itx.id,
                gesture=itx.gesture.value,
                start_frame=itx.start_frame,
                start_pts_ms=round(seq.pts(itx.start_frame), 2),
                end_frame=itx.end_frame,
                status=m.status.value,
                response_frame=m.response_frame,
                response_ms=None if m.response_ms is None else round(m.response_ms, 2),
                finish_frame=m.finish_frame,
                finish_ms=None if m.finish_ms is None else round(m.finish_ms, 2),
                severity=tuple(sorted(m.severity)),
            )
        )
    responsive = [r for r in records if r.status == KeyframeStatus.RESPONSIVE.value]
    summary = ReportSummary(
        interaction_count=len(records),
        slow_response_count=sum(SLOW_RESPONSE in r.severity for r in records),
        slow_finish_count=sum(SLOW_FINISH in r.severity for r in records),
        median_response_ms=(
            round(statistics.median(r.response_ms for r in responsive), 2) if responsive else None
        ),
        median_finish_ms=(
            round(statistics.median(r.finish_ms for r in responsive), 2) if responsive else None
        ),
    )
    return ReportDocument(
        source_id=seq.source_id,
        nominal_fps=seq.nominal_fps,
        interactions=tuple(records),
        summary=summary,
    )


def emit_report(doc: ReportDocument, fmt: str = "json") -> bytes:
    """Serialize a report; json is canonical, text is a human-readable table."""
    if fmt == "json":
        payload = {
            "source_id": doc.source_id,
            "nominal_fps": doc.nominal_fps,
            "interactions": [_record_to_dict(r) for r in doc.interactions],
            "summary": _summary_to_dict(doc.summary),
        }
        return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")
    if fmt == "text":
        return _emit_text(doc)
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(data: bytes | str) -> ReportDocument:
    """Inverse of emit_report(json); parse(emit(doc)) == doc."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    payload = json.loads(data)
    records = tuple(
        InteractionRecord(
            id=r["id"],
            gesture=r["gesture"],
            start_frame=r["start_frame"],
            start_pts_ms=r["start_pts_ms"],
            end_frame=r["end_frame"],
            status=r["status"],
            response_frame=r.get("response_frame"),
            response_ms=r.get("response_ms"),
            finish_frame=r.get("finish_frame"),
            finish_ms=r.get("finish_ms"),
            severity=tuple(r.get("severity", ())),
        )
        for r in payload["interactions"]
    )
    s = payload["summary"]
    summary = ReportSummary(
        interaction_count=s["interaction_count"],
        slow_response_count=s["slow_response_count"],
        slow_finish_count=s["slow_finish_count"],
        median_response_ms=s.get("median_response_ms"),
        median_finish_ms=s.get("median_finish_ms"),
    )
    return ReportDocument(
        source_id=payload["source_id"],
        nominal_fps=payload["nominal_fps"],
        interactions=records,
        summary=summary,
    )


def _record_to_dict(r: InteractionRecord) -> dict:
    d = {
        "id": r.id,
        "gesture": r.gesture,
        "start_frame": r.start_frame,
        "start_pts_ms": r.start_pts_ms,
        "end_frame": r.end_frame,
        "status": r.status,
        "severity": list(r.severity),
    }
    if r.response_frame is not None:
        d["response_frame"] = r.response_frame
        d["response_ms"] = r.response_ms
    if r.finish_frame is not None:
        d["finish_frame"] = r.finish_frame
        d["finish_ms"] = r.finish_ms
    return d


def _summary_to_dict(s: ReportSummary) -> dict:
    d = {
        "interaction_count": s.interaction_count,
        "slow_response_count": s.slow_response_count,
        "slow_finish_count": s.slow_finish_count,
    }
    if s.median_response_ms is not None:
        d["median_response_ms"] = s.median_response_ms
    if s.median_finish_ms is not None:
        d["median_finish_ms"] = s.median_finish_ms
    return d


def _emit_text(doc: ReportDocument) -> bytes:
    rows = [f"source: {doc.source_id}  fps: {doc.nominal_fps:g}"]
    rows.append(f"{'id':>3} {'gesture':<6} {'start':>6} {'status':<20} {'rt_ms':>8} {'ft_ms':>8}  flags")
    for r in doc.interactions:
        rt = f"{r.response_ms:.2f}" if r.response_ms is not None else "-"
        ft = f"{r.finish_ms:.2f}" if r.finish_ms is not None else "-"
        flags = ",".join(r.severity) or "-"
        rows.append(f"{r.id:>3} {r.gesture:<6} {r.start_frame:>6} {r.status:<20} {rt:>8} {ft:>8}  {flags}")
    s = doc.summary
    rows.append(
        f"interactions: {s.interaction_count}  slow_response: {s.slow_response_count}  "
        f"slow_finish: {s.slow_finish_count}"
    )
    return ("\n".join(rows) + "\n").encode("utf-8")
