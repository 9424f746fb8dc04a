"""Scoring of predicted confidence maps against featurized ground truth.

Predictions live in a directory as ``<frame key>.conf.ltns`` tensors.
Spherical-view predictions must be 64 x 2048 x 1 no matter which simulated
resolution produced the inputs: every model is compared on the same full
resolution mask. Bird-eye-view predictions are 400 x 200 x 1 and score over
all pixels (the mask is dense); spherical-view scoring is restricted to
pixels that received at least one labeled point.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from .core import read_tensor
from .metrics import MetricsReport, evaluate, evaluate_frames

log = logging.getLogger(__name__)

SV_EVAL_SHAPE = (64, 2048)
BEV_EVAL_SHAPE = (400, 200)


class EvalInputError(ValueError):
    """A prediction file is missing or malformed for a manifest frame."""


def _load_frame_arrays(view: str, out_dir: Path, entry: dict, pred_dir: Path):
    key = entry["id"].replace("/", "_")
    if "gt" not in entry["outputs"]:
        raise EvalInputError(f"frame {entry['id']}: no ground truth was featurized")
    gt_t = read_tensor(out_dir / entry["outputs"]["gt"])

    pred_path = pred_dir / f"{key}.conf.ltns"
    if not pred_path.is_file():
        raise EvalInputError(f"frame {entry['id']}: missing prediction {pred_path}")
    conf_t = read_tensor(pred_path)

    want = SV_EVAL_SHAPE if view == "sv" else BEV_EVAL_SHAPE
    if conf_t.dims != (*want, 1):
        raise EvalInputError(
            f"frame {entry['id']}: prediction shape {conf_t.dims}, "
            f"expected {(*want, 1)}"
        )
    conf = conf_t.data[:, :, 0]

    if view == "sv":
        if gt_t.dims != (*SV_EVAL_SHAPE, 2):
            raise EvalInputError(
                f"frame {entry['id']}: ground truth shape {gt_t.dims}, "
                f"expected {(*SV_EVAL_SHAPE, 2)}"
            )
        gt = gt_t.data[:, :, 0] > 0.5
        valid = gt_t.data[:, :, 1] > 0.5
    else:
        gt = gt_t.data[:, :, 0] > 0.5
        valid = None
    return conf, gt, valid


def run_eval(
    manifest: dict,
    out_dir,
    predictions_dir,
    report_dir,
    threshold: float = 0.5,
    aggregation: str = "micro",
    pr_png: bool = False,
) -> dict:
    """Score every manifest frame; write per-frame and aggregate reports.

    Returns the summary dict (also written as ``summary.json``).
    """
    out_dir = Path(out_dir)
    pred_dir = Path(predictions_dir)
    report_dir = Path(report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    view = manifest["config"]["view"]
    if not manifest["frames"]:
        raise EvalInputError("manifest lists no frames")

    items = []
    per_frame: dict[str, MetricsReport] = {}
    for entry in manifest["frames"]:
        conf, gt, valid = _load_frame_arrays(view, out_dir, entry, pred_dir)
        items.append((conf, gt, valid))
        rep = evaluate(conf, gt, valid, threshold=threshold, curve=False)
        per_frame[entry["id"]] = rep
        key = entry["id"].replace("/", "_")
        (report_dir / f"{key}.metrics.txt").write_text(rep.to_lines())

    agg = evaluate_frames(items, threshold=threshold, mode=aggregation,
                          max_curve_points=512)
    (report_dir / "aggregate.metrics.txt").write_text(agg.to_lines())

    if pr_png and agg.pr_curve is not None:
        _plot_pr(agg, report_dir / "pr_curve.png")

    summary = {
        "aggregation": aggregation,
        "threshold": threshold,
        "frames": {fid: rep.to_dict() for fid, rep in per_frame.items()},
        "aggregate": agg.to_dict(),
    }
    with open(report_dir / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return summary


def _plot_pr(report: MetricsReport, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    curve = report.pr_curve
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(curve.recall, curve.precision, drawstyle="steps-post")
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_xlim(0, 1.02)
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    ax.set_title(f"AP = {report.ap:.3f}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
