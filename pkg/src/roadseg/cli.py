"""Command-line pipeline driver.

Subcommands: featurize (scans -> feature/GT tensors + manifest), eval
(predictions -> metric reports), visualize (tensors -> PNGs), and
subsample-stats (layer detection and removal counts per frame). Every
PipelineConfig field is settable three ways, later wins: a flat key=value
config file (--config), then a CLI flag of the same name. The dataset root
additionally falls back to $ROADSEG_DATA_ROOT.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .core import read_scan
from .scoring import run_eval
from .layering import assign_layers, subsample
from .pipeline import (
    DATA_ROOT_ENV,
    PipelineConfig,
    discover_frames,
    load_config_file,
    load_manifest,
    run_featurize,
)
from .visualize import render_frame

log = logging.getLogger(__name__)

_INT_FIELDS = {"resolution", "road_class", "stride", "seed", "workers",
               "subsample_offset"}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--dataset-root", help=f"dataset directory (default ${DATA_ROOT_ENV})")
    p.add_argument("--dataset-kind", choices=["semantic-kitti", "kitti-road"])
    p.add_argument("--view", choices=["sv", "bev"])
    p.add_argument("--resolution", type=int, choices=[64, 32, 16])
    p.add_argument("--features", choices=["classical", "classical+normals"])
    p.add_argument("--road-class", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--split", choices=["train", "val", "test", "all"])
    p.add_argument("--stride", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--subsample-offset", type=int)
    p.add_argument("--gt-dir")
    p.add_argument("--sequences", help="comma-separated sequence list override")


def build_config(args: argparse.Namespace) -> PipelineConfig:
    field_names = {f.name for f in dataclasses.fields(PipelineConfig)}
    values: dict = {}
    if getattr(args, "config", None):
        for key, raw in load_config_file(args.config).items():
            if key not in field_names:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = int(raw) if key in _INT_FIELDS else raw
    for name in field_names:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    return PipelineConfig(**values)


def cmd_featurize(args) -> int:
    cfg = build_config(args)
    manifest = run_featurize(cfg)
    n_ok, n_err = len(manifest["frames"]), len(manifest["errors"])
    print(f"featurized {n_ok} frame(s) -> {cfg.out_dir}")
    if n_err:
        print(f"{n_err} frame(s) failed:", file=sys.stderr)
        for e in manifest["errors"]:
            print(f"  {e['id']}: {e['error']}", file=sys.stderr)
        return 1
    return 0


def cmd_eval(args) -> int:
    cfg = build_config(args)
    manifest = load_manifest(cfg.out_dir)
    summary = run_eval(
        manifest,
        cfg.out_dir,
        args.predictions,
        args.report_dir or f"{cfg.out_dir}/reports",
        threshold=args.threshold,
        aggregation=args.aggregation,
        pr_png=args.pr_png,
    )
    agg = summary["aggregate"]
    for key in ("precision", "recall", "f1", "ap"):
        print(f"{key}={agg[key]}")
    return 0


def cmd_visualize(args) -> int:
    cfg = build_config(args)
    manifest = load_manifest(cfg.out_dir)
    written = render_frame(manifest, cfg.out_dir, args.frame,
                           args.png_dir or f"{cfg.out_dir}/png")
    for path in written:
        print(path)
    return 0


def cmd_subsample_stats(args) -> int:
    cfg = build_config(args)
    frames, _ = discover_frames(cfg)
    if not frames:
        print("no frames selected", file=sys.stderr)
        return 1
    if args.limit:
        frames = frames[: args.limit]
    print(f"{'frame':24} {'points':>8} {'layers':>6} {'min/layer':>9} "
          f"{'max/layer':>9} {'keep 1/2':>8} {'keep 1/4':>8}")
    failures = 0
    for frame in frames:
        try:
            ls = assign_layers(read_scan(frame.scan_path))
            sizes = ls.layer_sizes()
            half = subsample(ls, 2, cfg.subsample_offset % 2).n_points
            quarter = subsample(ls, 4, cfg.subsample_offset % 4).n_points
            print(f"{frame.frame_id:24} {ls.n_points:>8} {ls.n_layers:>6} "
                  f"{sizes.min():>9} {sizes.max():>9} {half:>8} {quarter:>8}")
        except Exception as exc:
            failures += 1
            print(f"{frame.frame_id:24} error: {exc}", file=sys.stderr)
    return 1 if failures else 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roadseg",
        description="LIDAR featurization, scanner-resolution simulation, "
                    "and road-segmentation evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("featurize", help="export per-frame feature/GT tensors")
    _add_config_flags(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("eval", help="score predicted confidence maps")
    _add_config_flags(p)
    p.add_argument("--predictions", required=True, help="dir of <frame>.conf.ltns")
    p.add_argument("--report-dir", help="where to write reports (default OUT/reports)")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--aggregation", choices=["micro", "macro"], default="micro")
    p.add_argument("--pr-png", action="store_true", help="render the aggregate PR curve")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("visualize", help="render a featurized frame to PNGs")
    _add_config_flags(p)
    p.add_argument("--frame", required=True, help="frame id from the manifest")
    p.add_argument("--png-dir", help="output dir (default OUT/png)")
    p.set_defaults(func=cmd_visualize)

    p = sub.add_parser("subsample-stats", help="layer detection / removal summary")
    _add_config_flags(p)
    p.add_argument("--limit", type=int, help="only the first N frames")
    p.set_defaults(func=cmd_subsample_stats)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
