"""Command-line surface: calibrate, pose, sync-check, map, stats, compare,
serve.

Every artifact is produced by calling the corresponding library operation
and is written atomically (temp file, then rename), so an interrupted run
never leaves a partial output.  Module errors exit 1 with the error's name
and message; usage errors exit 2 before any work.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

from . import dataio, evaluation, mapping, pose as pose_mod
from .calibration import BoardSpec, calibrate
from .errors import ToolkitError
from .geometry import LensId
from .lm import LMOptions
from .sync import FlashPair, build_sync, expected_mocap_frame

DEFAULT_PORT = int(os.environ.get("OMNIGT_PORT", "8008"))


def atomic_write(path: Path, data: bytes) -> None:
    """Write via a sibling temp file and rename; readers never see partials."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _lm_options(args: argparse.Namespace) -> LMOptions:
    return LMOptions(max_iterations=args.max_iterations,
                     cost_tolerance=args.cost_tolerance)


def _add_lm_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-iterations", type=int, default=200,
                        help="iteration budget for the refinement (default 200)")
    parser.add_argument("--cost-tolerance", type=float, default=1e-12,
                        help="relative cost-change stop tolerance (default 1e-12)")


def _cmd_calibrate(args: argparse.Namespace) -> int:
    board = BoardSpec(cols=args.cols, rows=args.rows, square_size=args.square_size)
    views = dataio.parse_corner_views(Path(args.corners).read_bytes(), board)
    result = calibrate(views, board, _lm_options(args))
    atomic_write(Path(args.out), dataio.write_calibration_json(
        result, [v.view_id for v in views]))
    status = "converged" if result.converged else "NOT converged"
    print(f"calibrated {len(views)} views: rms {result.rms_error:.4g} px "
          f"({status}) -> {args.out}")
    return 0


def _cmd_pose(args: argparse.Namespace) -> int:
    ts = dataio.parse_training_xml(Path(args.training).read_bytes())
    intr = dataio.parse_intrinsics_json(Path(args.intrinsics).read_bytes())
    est = pose_mod.estimate_pose(ts, intr, _lm_options(args))
    atomic_write(Path(args.out),
                 dataio.write_pose_json(est.pose, ts.lens, ts.session))
    if args.report:
        atomic_write(Path(args.report), evaluation.error_map_csv(est.report))
    status = "converged" if est.converged else "NOT converged"
    print(f"pose for {ts.lens.value} from {len(ts.points)} points: "
          f"mean {est.report.mean:.2f} px, sigma {est.report.sigma:.2f} px "
          f"({status}) -> {args.out}")
    return 0


def _cmd_sync_check(args: argparse.Namespace) -> int:
    v1, v2 = args.video_flashes
    m1, m2 = args.mocap_flashes
    model = build_sync(FlashPair(v1, m1), FlashPair(v2, m2))
    print(f"slope: {model.slope:.6f} mocap frames per video frame")
    print(f"implied mocap rate at {args.fps:g} fps video: "
          f"{model.slope * args.fps:.2f} Hz")
    for anchor in (model.first, model.second):
        predicted = expected_mocap_frame(model, anchor.video_frame)
        print(f"anchor video {anchor.video_frame} -> mocap {predicted:.1f} "
              f"(logged {anchor.mocap_frame})")
    if args.mocap:
        records = dataio.parse_mocap_csv(Path(args.mocap).read_bytes())
        flagged = dataio.sync_flagged(records)
        print(f"{len(flagged)} sync-flagged rows in {args.mocap}:")
        for r in flagged:
            print(f"  mocap frame {r.frame} (t={r.timestamp:g}s, sync={r.sync})")
    return 0


def _load_session(path: str) -> dataio.Session:
    header_path = Path(path)
    return dataio.load_session(header_path.read_bytes(),
                               dataio.dir_resolver(header_path.parent))


def _cmd_map(args: argparse.Namespace) -> int:
    session = _load_session(args.session)
    frame_range = tuple(args.frames) if args.frames else None
    run, _ = mapping.prepare_run(session, _lm_options(args),
                                 frame_range=frame_range)
    frames, summary = mapping.map_video(run)
    atomic_write(Path(args.out), dataio.write_groundtruth_xml(frames))
    lines = [f"mapped frames {run.start}..{run.end} -> {args.out}"]
    for name in sorted(summary.per_object):
        s = summary.per_object[name]
        lines.append(
            f"  {name}: emitted {s.emitted}, no-record {s.no_record}, "
            f"no-lens {s.no_lens}, off-frame {s.off_frame}, "
            f"lens-crossings {s.lens_crossings}")
    text = "\n".join(lines) + "\n"
    if args.summary:
        atomic_write(Path(args.summary), text.encode("utf-8"))
    print(text, end="")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    rows = []
    maps = []
    if args.session:
        session = _load_session(args.session)
        for lens, label in ((LensId.BACKSIDE, "Left lens"),
                            (LensId.BUTTONSIDE, "Right lens")):
            est = pose_mod.estimate_pose(
                session.training[lens], session.intrinsics[lens],
                _lm_options(args))
            rows.append((label, est.report))
            maps.append((lens, est.report))
    else:
        if not (args.training and args.intrinsics):
            print("stats: need --session or both --training and --intrinsics",
                  file=sys.stderr)
            return 2
        ts = dataio.parse_training_xml(Path(args.training).read_bytes())
        intr = dataio.parse_intrinsics_json(Path(args.intrinsics).read_bytes())
        if args.pose:
            loaded, _, _ = dataio.parse_pose_json(Path(args.pose).read_bytes())
            report = evaluation.reprojection_errors(ts, intr, loaded)
        else:
            report = pose_mod.estimate_pose(ts, intr, _lm_options(args)).report
        label = ("Left lens" if ts.lens is LensId.BACKSIDE else "Right lens")
        rows.append((label, report))
        maps.append((ts.lens, report))
    table = evaluation.summary_table(rows)
    atomic_write(Path(args.table), table.encode("utf-8"))
    if args.map:
        lines = ["lens,u,v,error"]
        for lens, report in maps:
            for point, err in evaluation.error_map(report):
                lines.append(f"{lens.value},{point.u!r},{point.v!r},{err!r}")
        atomic_write(Path(args.map), ("\n".join(lines) + "\n").encode("utf-8"))
    print(table, end="")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    gt = dataio.parse_groundtruth_xml(Path(args.groundtruth).read_bytes())
    system = dataio.parse_groundtruth_xml(Path(args.system).read_bytes())
    result = evaluation.compare(gt, system, args.min_visible)
    atomic_write(Path(args.out), evaluation.comparison_csv(result))
    text = evaluation.comparison_summary(result)
    if args.summary:
        atomic_write(Path(args.summary), text.encode("utf-8"))
    print(text, end="")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    serve(Path(args.session),
          Path(args.frames_dir) if args.frames_dir else None,
          host=args.host, port=args.port,
          ui_dir=Path(args.ui_dir) if args.ui_dir else None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omnigt",
        description="Motion-capture to dual-fisheye ground-truth toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate",
                       help="intrinsics from chessboard corner views")
    p.add_argument("--corners", required=True, help="corner-view CSV")
    p.add_argument("--cols", type=int, default=9,
                   help="interior corners per row (default 9)")
    p.add_argument("--rows", type=int, default=6,
                   help="interior corner rows (default 6)")
    p.add_argument("--square-size", type=float, default=35.3,
                   help="square side, mm (default 35.3)")
    p.add_argument("--out", required=True, help="calibration JSON output")
    _add_lm_flags(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("pose", help="lens pose from wand training points")
    p.add_argument("--training", required=True, help="training XML")
    p.add_argument("--intrinsics", required=True,
                   help="intrinsics or calibration JSON")
    p.add_argument("--out", required=True, help="pose JSON output")
    p.add_argument("--report", help="per-point error CSV output")
    _add_lm_flags(p)
    p.set_defaults(func=_cmd_pose)

    p = sub.add_parser("sync-check", help="flash anchor diagnostics")
    p.add_argument("--video-flashes", type=int, nargs=2, required=True,
                   metavar=("V1", "V2"), help="video frames of the two flashes")
    p.add_argument("--mocap-flashes", type=int, nargs=2, required=True,
                   metavar=("M1", "M2"), help="mocap frames of the two flashes")
    p.add_argument("--fps", type=float, default=15.0,
                   help="video frame rate (default 15)")
    p.add_argument("--mocap", help="mocap CSV to list sync-flagged rows from")
    p.set_defaults(func=_cmd_sync_check)

    p = sub.add_parser("map", help="mocap streams to ground-truth XML")
    p.add_argument("--session", required=True, help="session header XML")
    p.add_argument("--out", required=True, help="ground-truth XML output")
    p.add_argument("--frames", type=int, nargs=2, metavar=("START", "END"),
                   help="video frame range (default: header range)")
    p.add_argument("--summary", help="run summary text output")
    _add_lm_flags(p)
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("stats", help="re-projection error tables and maps")
    p.add_argument("--session", help="session header XML (both lenses)")
    p.add_argument("--training", help="training XML (single lens)")
    p.add_argument("--intrinsics", help="intrinsics JSON (single lens)")
    p.add_argument("--pose", help="pose JSON (skip re-estimation)")
    p.add_argument("--table", required=True, help="summary table text output")
    p.add_argument("--map", help="per-point error map CSV output")
    _add_lm_flags(p)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("compare",
                       help="tracker output against ground truth")
    p.add_argument("--groundtruth", required=True, help="ground-truth XML")
    p.add_argument("--system", required=True, help="system output XML")
    p.add_argument("--min-visible", type=int, default=1,
                   help="visibility gate (default 1)")
    p.add_argument("--out", required=True, help="distance series CSV output")
    p.add_argument("--summary", help="per-object summary text output")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("serve", help="JSON API for the annotator UI")
    p.add_argument("--session", required=True, help="session header XML")
    p.add_argument("--frames-dir", help="directory of extracted frame images")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT,
                   help=f"port (default {DEFAULT_PORT} or $OMNIGT_PORT)")
    p.add_argument("--ui-dir", help="built UI to serve at /")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: MissingFile: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
