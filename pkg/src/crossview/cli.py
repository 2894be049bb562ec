"""Command-line pipeline: simulate, calibrate, detect, analyze.

Every stage reads and writes plain files, so stages can be run, inspected
and diffed one at a time. Exit status is 0 on success, 1 on data errors and
2 on usage errors. Set ``CROSSVIEW_LOG`` (e.g. ``DEBUG``) for log output.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import analytics, calibration, consistency, geometry, simulator, streams
from .errors import CrossviewError
from .grid import PatchGrid

log = logging.getLogger("crossview")


class UsageError(Exception):
    pass


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    # only show defaults that carry information
    def _get_help_string(self, action):
        if action.default is None or isinstance(action.default, bool):
            return action.help
        return super()._get_help_string(action)


def _grid(text: str) -> PatchGrid:
    try:
        return PatchGrid.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _region(text: str) -> analytics.Region:
    try:
        return analytics.Region.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _frame_range(text: str) -> tuple[int, int]:
    try:
        start, end = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("range must be start,end") from None
    if end < start:
        raise argparse.ArgumentTypeError("range end precedes start")
    return start, end


def _positive(kind):
    def parse(text: str):
        value = kind(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def _non_negative_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return value


def _load_streams(paths: list[str]) -> tuple[streams.DetectionStream, streams.DetectionStream]:
    if len(paths) > 2:
        raise UsageError("give one merged stream file or one file per camera")
    s1 = streams.read_stream(paths[0])
    s2 = streams.read_stream(paths[1]) if len(paths) == 2 else s1
    return s1, s2


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def _check_paths(inputs: list[str], outputs: list[str | None]) -> None:
    ins = {Path(p).resolve() for p in inputs if p}
    for out in outputs:
        if out and out != "-" and Path(out).resolve() in ins:
            raise UsageError(f"output {out} would overwrite an input")


def cmd_simulate(args) -> None:
    cfg = simulator.load_scene_config(args.config)
    overrides = {}
    if args.sigma is not None:
        overrides["noise_sigma"] = args.sigma
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = replace(cfg, **overrides)
    s1, s2, truth = simulator.simulate(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    streams.save_stream(s1, out / "cam1.csv")
    streams.save_stream(s2, out / "cam2.csv")
    (out / "truth.csv").write_text(truth.to_csv(), encoding="utf-8", newline="\n")
    geometry.write_homography(simulator.plane_induced_homography(cfg.cam1, cfg.cam2), out / "plane_h.txt")
    log.info("simulated %d frames into %s", cfg.frames, out)


def cmd_calib_h(args) -> None:
    table = calibration.read_mapping_table(args.correspondences)
    h = geometry.estimate_homography(table.entries)
    _emit(geometry.format_homography(h), args.out)


def cmd_calib_dmap(args) -> None:
    s1, s2 = _load_streams(args.streams)
    if args.labels:
        labels = set(args.labels.split(","))
        s1, s2 = streams.filter_label(s1, labels), streams.filter_label(s2, labels)
    tmap = calibration.build_threshold_map(
        s1, s2, geometry.read_homography(args.h), args.grid, args.bin_width, args.min_samples, args.metric
    )
    log.info("%d measured, %d interpolated patches", tmap.measured.sum(), (~tmap.measured).sum())
    _emit(calibration.format_threshold_map(tmap), args.out)


def cmd_detect(args) -> None:
    if (args.d is None) == (args.dmap is None):
        raise UsageError("give exactly one of --d or --dmap")
    s1, s2 = _load_streams(args.streams)
    thr = args.d if args.d is not None else calibration.read_threshold_map(args.dmap)
    q = consistency.detect_contacts(
        s1, s2, geometry.read_homography(args.h), thr, args.metric, args.same_label, args.workers
    )
    _emit(consistency.format_contacts(q), args.out)


def cmd_heatmap(args) -> None:
    q = consistency.read_contacts(args.contacts)
    hm = analytics.accumulate_heatmap(q, geometry.read_homography(args.h), args.grid)
    _emit(analytics.format_heatmap(hm), args.out)
    if args.pgm:
        analytics.write_pgm(hm, args.pgm)


def cmd_occupancy(args) -> None:
    q = consistency.read_contacts(args.contacts)
    if args.range:
        start, end = args.range
    elif len(q):
        frames = list(q)
        start, end = frames[0], frames[-1]
    else:
        raise CrossviewError("contact set is empty; pass --range")
    series = analytics.raw_occupancy(q, args.region, start, end)
    if args.fill:
        series = analytics.fill_gaps(series, args.max_gap)
    _emit(analytics.format_occupancy(series), args.out)


def cmd_distplot(args) -> None:
    s1, s2 = _load_streams(args.streams)
    if args.range:
        start, end = args.range
    else:
        frames = sorted(set(s1.frames) | set(s2.frames))
        if not frames:
            raise CrossviewError("streams are empty; pass --range")
        start, end = frames[0], frames[-1]
    values = analytics.min_distance_series(s1, s2, geometry.read_homography(args.h), start, end, args.metric)
    _emit(analytics.format_distance_series(values, start), args.out)


def build_parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    parser = argparse.ArgumentParser(
        prog="crossview",
        description="Cross-view contact detection from two synchronized keypoint streams.",
        epilog=(
            f"Frames are {streams.FRAME_PERIOD_S} s apart; the default occupancy gap of "
            f"{analytics.DEFAULT_MAX_GAP} frames is one minute at that period."
        ),
        formatter_class=fmt,
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    def metric(p):
        p.add_argument("--metric", choices=[m.value for m in geometry.Metric], default="manhattan",
                       help="image distance used by the consistency test")

    def stream_inputs(p):
        p.add_argument("streams", nargs="+", metavar="STREAM",
                       help="merged detection file, or camera-1 file then camera-2 file")

    p = sub.add_parser("simulate", help="render a synthetic scene config into streams + ground truth", formatter_class=fmt)
    p.add_argument("--config", required=True, help="scene INI file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sigma", type=_non_negative_float, help="override detection noise (px)")
    p.add_argument("--seed", type=int, help="override random seed")
    p.set_defaults(func=cmd_simulate, inputs=["config"], outputs=[])

    p = sub.add_parser("calib-h", help="fit a homography to x2,y2,x1,y1 correspondences", formatter_class=fmt)
    p.add_argument("correspondences")
    p.add_argument("--out", help="homography file (stdout if omitted)")
    p.set_defaults(func=cmd_calib_h, inputs=["correspondences"], outputs=["out"])

    p = sub.add_parser("calib-dmap", help="learn a per-patch threshold map", formatter_class=fmt)
    stream_inputs(p)
    p.add_argument("--h", required=True, help="camera-2 to camera-1 homography file")
    p.add_argument("--grid", required=True, type=_grid, help="x0,y0,patch,cols,rows in camera-1 pixels")
    p.add_argument("--bin-width", type=_positive(float), default=calibration.DEFAULT_BIN_WIDTH, help="histogram bin (px)")
    p.add_argument("--min-samples", type=_positive(int), default=calibration.DEFAULT_MIN_SAMPLES,
                   help="measurements a patch needs before it is trusted")
    p.add_argument("--labels", help="comma-separated labels to keep, e.g. wrist_l,wrist_r")
    metric(p)
    p.add_argument("--out", help="threshold map file (stdout if omitted)")
    p.set_defaults(func=cmd_calib_dmap, inputs=["streams", "h"], outputs=["out"])

    p = sub.add_parser("detect", help="detect contacts with a global threshold or a threshold map", formatter_class=fmt)
    stream_inputs(p)
    p.add_argument("--h", required=True, help="camera-2 to camera-1 homography file")
    p.add_argument("--d", type=_positive(float), help="global threshold (px)")
    p.add_argument("--dmap", help="threshold map file")
    p.add_argument("--same-label", action="store_true", help="only pair detections with equal labels")
    p.add_argument("--workers", type=_positive(int), default=1, help="frame-parallel worker threads")
    metric(p)
    p.add_argument("--out", help="contact file (stdout if omitted)")
    p.set_defaults(func=cmd_detect, inputs=["streams", "h", "dmap"], outputs=["out"])

    p = sub.add_parser("heatmap", help="accumulate contacts into a top-view grid", formatter_class=fmt)
    p.add_argument("contacts")
    p.add_argument("--h", required=True, help="camera-1 to top-view homography file")
    p.add_argument("--grid", required=True, type=_grid, help="x0,y0,patch,cols,rows in top-view units")
    p.add_argument("--out", help="numeric heat-map dump (stdout if omitted)")
    p.add_argument("--pgm", help="also render a PGM image here")
    p.set_defaults(func=cmd_heatmap, inputs=["contacts", "h"], outputs=["out", "pgm"])

    p = sub.add_parser("occupancy", help="per-frame occupancy of a desk region", formatter_class=fmt)
    p.add_argument("contacts")
    p.add_argument("--region", required=True, type=_region, help="name,x0,y0,x1,y1 in camera-1 pixels")
    p.add_argument("--range", type=_frame_range, help="start,end frames (default: span of contacts)")
    p.add_argument("--fill", action="store_true", help="fill idle gaps shorter than --max-gap")
    p.add_argument("--max-gap", type=_positive(int), default=analytics.DEFAULT_MAX_GAP,
                   help="gap length in frames that is kept (one minute at 0.04 s/frame)")
    p.add_argument("--out", help="series file (stdout if omitted)")
    p.set_defaults(func=cmd_occupancy, inputs=["contacts"], outputs=["out"])

    p = sub.add_parser("distplot", help="per-frame minimum cross-view distance", formatter_class=fmt)
    stream_inputs(p)
    p.add_argument("--h", required=True, help="camera-2 to camera-1 homography file")
    p.add_argument("--range", type=_frame_range, help="start,end frames (default: span of streams)")
    metric(p)
    p.add_argument("--out", help="CSV file (stdout if omitted)")
    p.set_defaults(func=cmd_distplot, inputs=["streams", "h"], outputs=["out"])
    return parser


def _collect(args, names: list[str]) -> list[str]:
    out = []
    for name in names:
        value = getattr(args, name, None)
        if isinstance(value, list):
            out.extend(value)
        elif value:
            out.append(value)
    return out


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("CROSSVIEW_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(name)s: %(message)s")
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        _check_paths(_collect(args, args.inputs), [getattr(args, n, None) for n in args.outputs])
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"crossview: error: {exc}", file=sys.stderr)
        return 2
    except (CrossviewError, OSError, ValueError) as exc:
        print(f"crossview {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
