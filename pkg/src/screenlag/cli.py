"""Command-line front end: analyze screencasts, synthesize corpora, evaluate.

Exit codes: 0 success, 1 partial failure (some videos failed, others were
still processed), 2 invalid invocation or config. MP4 input is out of scope;
convert first, e.g.:

    ffmpeg -i clip.mp4 -pix_fmt yuv420p clip.y4m
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import evaluation, frameio, report, synthgen
from .keyframes import ForestConfig
from .pipeline import AnalysisConfig, analyze_sequence
from .report import AlertThresholds
from .similarity import SsimParams
from .tapdetect import MODE_BUILTIN, MODE_EXTERNAL, DetectorConfig

log = logging.getLogger("screenlag")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="screenlag")
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="analyze screencasts into JSON reports")
    p_an.add_argument("--in", dest="inputs", action="append", required=True,
                      help="manifest/Y4M file or directory of videos (repeatable)")
    p_an.add_argument("--out", required=True, help="output directory for reports")
    p_an.add_argument("--fps-hint", type=float, default=None)
    p_an.add_argument("--detector", choices=[MODE_BUILTIN, MODE_EXTERNAL], default=MODE_BUILTIN)
    p_an.add_argument("--detections", default=None, help="external detection JSONL file")
    p_an.add_argument("--ssim-window", type=int, default=8)
    p_an.add_argument("--downscale", type=int, default=320,
                      help="max SSIM dimension; 0 disables downscaling")
    p_an.add_argument("--forest-seed", type=int, default=42)
    p_an.add_argument("--score-threshold", type=float, default=0.6)
    p_an.add_argument("--response-threshold-ms", type=float, default=100.0)
    p_an.add_argument("--finish-threshold-ms", type=float, default=1000.0)
    p_an.add_argument("--workers", type=int, default=1)

    p_sy = sub.add_parser("synth", help="render synthetic screencasts with ground truth")
    p_sy.add_argument("--scenario", action="append", default=[], help="scenario JSON file (repeatable)")
    p_sy.add_argument("--corpus", action="store_true", help="render the canonical 20-scenario corpus")
    p_sy.add_argument("--no-noise", action="store_true", help="strip banner noise from the corpus")
    p_sy.add_argument("--out", required=True)

    p_ev = sub.add_parser("eval", help="score reports against ground truth")
    p_ev.add_argument("--reports", required=True)
    p_ev.add_argument("--truth", required=True)
    p_ev.add_argument("--out", default=None, help="summary path (default: <reports>/eval_summary.json)")
    p_ev.add_argument("--response-threshold-ms", type=float, default=100.0)
    p_ev.add_argument("--finish-threshold-ms", type=float, default=1000.0)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "synth":
            return cmd_synth(args)
        return cmd_eval(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def _discover_videos(inputs: list[str]) -> list[Path]:
    found: list[Path] = []
    for raw in inputs:
        path = Path(raw)
        if path.is_file():
            found.append(path)
        elif path.is_dir():
            if (path / "manifest.jsonl").is_file():
                found.append(path / "manifest.jsonl")
                continue
            for child in sorted(path.iterdir()):
                if child.is_dir() and (child / "manifest.jsonl").is_file():
                    found.append(child / "manifest.jsonl")
                elif child.suffix == ".y4m":
                    found.append(child)
                elif child.suffix == ".jsonl" and not child.name.endswith(".truth.jsonl"):
                    found.append(child)
        else:
            raise ValueError(f"input path does not exist: {path}")
    return found


def _load_video(path: Path, fps_hint: float | None) -> frameio.FrameSequence:
    if path.suffix == ".y4m":
        return frameio.load_y4m(path, fps_hint=fps_hint)
    return frameio.load_manifest(path)


def cmd_analyze(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    videos = _discover_videos(args.inputs)
    if not videos:
        log.warning("no analyzable videos found under %s", ", ".join(args.inputs))
        return 0
    if args.workers < 1:
        raise ValueError("--workers must be >= 1")
    if args.detector == MODE_EXTERNAL and not args.detections:
        raise ValueError("--detector external requires --detections")

    cfg = AnalysisConfig(
        detector=DetectorConfig(
            mode=args.detector,
            external_path=args.detections,
        ),
        ssim=SsimParams(
            window=args.ssim_window,
            downscale_max_dim=args.downscale if args.downscale > 0 else None,
        ),
        forest=ForestConfig(seed=args.forest_seed, score_threshold=args.score_threshold),
        thresholds=AlertThresholds(
            response_ms=args.response_threshold_ms, finish_ms=args.finish_threshold_ms
        ),
    )

    def run_one(path: Path) -> tuple[Path, Exception | None]:
        try:
            seq = _load_video(path, args.fps_hint)
            result = analyze_sequence(seq, cfg)
            target = out_dir / f"{seq.source_id}.json"
            target.write_bytes(report.emit_report(result.report, "json"))
            log.info("%s: %d interaction(s) -> %s", seq.source_id,
                     len(result.interactions), target)
            return path, None
        except Exception as exc:  # keep analyzing the other videos
            return path, exc

    failures = 0
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        for path, err in pool.map(run_one, videos):
            if err is not None:
                failures += 1
                log.error("failed to analyze %s: %s", path, err)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs: list[tuple[str, synthgen.Scenario]] = []
    if args.corpus:
        jobs += synthgen.canonical_corpus(with_noise=not args.no_noise)
    for sc_path in args.scenario:
        jobs.append((Path(sc_path).stem, synthgen.load_scenario(sc_path)))
    if not jobs:
        raise ValueError("nothing to synthesize: pass --scenario and/or --corpus")
    for source_id, scenario in jobs:
        seq, truth = synthgen.generate_screencast(scenario)
        video_dir = out_dir / source_id
        frameio.write_manifest(seq, video_dir)
        synthgen.save_truth(truth, out_dir / f"{source_id}.truth.jsonl")
        log.info("%s: %d frames, %d touches", source_id, len(seq), len(truth))
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    reports_dir = Path(args.reports)
    truth_dir = Path(args.truth)
    report_files = {
        p.stem: p for p in sorted(reports_dir.glob("*.json")) if p.name != "eval_summary.json"
    }
    truth_files = {}
    for p in sorted(truth_dir.glob("*.jsonl")):
        stem = p.name[: -len(".truth.jsonl")] if p.name.endswith(".truth.jsonl") else p.stem
        truth_files[stem] = p
    orphan_reports = sorted(set(report_files) - set(truth_files))
    orphan_truths = sorted(set(truth_files) - set(report_files))
    if orphan_reports or orphan_truths:
        raise ValueError(
            "unpaired files: reports without truth "
            f"{orphan_reports or '[]'}, truth without reports {orphan_truths or '[]'}"
        )
    if not report_files:
        raise ValueError(f"no reports found in {reports_dir}")

    thresholds = AlertThresholds(
        response_ms=args.response_threshold_ms, finish_ms=args.finish_threshold_ms
    )
    videos = []
    for source_id, rp in sorted(report_files.items()):
        doc = report.parse_report(rp.read_bytes())
        truths = synthgen.load_truth(truth_files[source_id])
        videos.append((doc.interactions, truths, doc.nominal_fps))
    summary = evaluation.summarize_corpus(videos, thresholds)

    out_path = Path(args.out) if args.out else reports_dir / "eval_summary.json"
    out_path.write_text(json.dumps(summary.to_dict(), sort_keys=True, indent=2) + "\n")
    _print_summary(summary)
    log.info("summary written to %s", out_path)
    return 0


def _print_summary(summary: evaluation.EvalSummary):
    d = summary.detection
    print(f"detection  precision={d.precision:.3f} recall={d.recall:.3f} "
          f"f1={d.f1:.3f} gesture_accuracy={d.gesture_accuracy:.3f}")
    for name, side in (("response", summary.timing.response), ("finish", summary.timing.finish)):
        mae_f = "n/a" if side.mae_frames is None else f"{side.mae_frames:.2f}"
        mae_ms = "n/a" if side.mae_ms is None else f"{side.mae_ms:.1f}"
        buckets = " ".join(f"{k}={v:.0%}" for k, v in side.buckets.items())
        print(f"{name:9}  mae_frames={mae_f} mae_ms={mae_ms} {buckets}")
    for name, side in (("alert_rt", summary.alerting.response), ("alert_ft", summary.alerting.finish)):
        c = side.counts
        print(f"{name:9}  >{side.threshold_ms:g}ms precision={c.precision:.3f} "
              f"recall={c.recall:.3f} f1={c.f1:.3f}")


if __name__ == "__main__":
    sys.exit(main())
