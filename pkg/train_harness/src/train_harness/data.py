"""Manifest-driven dataset: stacks feature tensors, pairs them with ground truth.

The featurization tool's ``manifest.json`` lists, per frame, the files it
wrote: ``features`` (and optionally ``normals``) become input channels, in
that order; ``gt`` provides the target road mask plus, for the spherical
view, the labeled-pixel validity mask. Spherical-view ground truth is always
64 rows even when the inputs are 32 or 16.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor_io import read_ltns


@dataclass
class FrameTensors:
    frame_id: str
    features: np.ndarray  # (C, H, W) float32
    gt: np.ndarray        # (H_gt, W) float32, 0/1
    valid: np.ndarray     # (H_gt, W) float32, 0/1


def load_manifest(out_dir) -> dict:
    path = Path(out_dir) / "manifest.json"
    with open(path) as f:
        return json.load(f)


def frame_keys(manifest: dict) -> list[str]:
    return [e["id"] for e in manifest["frames"]]


def load_frames(out_dir, manifest: dict | None = None,
                require_gt: bool = True) -> list[FrameTensors]:
    out_dir = Path(out_dir)
    if manifest is None:
        manifest = load_manifest(out_dir)
    view = manifest["config"]["view"]
    frames = []
    for entry in manifest["frames"]:
        outputs = entry["outputs"]
        planes, _ = read_ltns(out_dir / outputs["features"])
        if "normals" in outputs:
            normals, _ = read_ltns(out_dir / outputs["normals"])
            planes = np.concatenate([planes, normals], axis=-1)
        features = np.ascontiguousarray(planes.transpose(2, 0, 1))

        if "gt" not in outputs:
            if require_gt:
                raise ValueError(f"frame {entry['id']} has no ground truth")
            gt = valid = np.zeros(features.shape[1:], np.float32)
        else:
            gt_t, _ = read_ltns(out_dir / outputs["gt"])
            gt = gt_t[:, :, 0]
            valid = gt_t[:, :, 1] if (view == "sv" and gt_t.shape[2] > 1) else \
                np.ones_like(gt)
        frames.append(FrameTensors(entry["id"], features, gt, valid))
    if not frames:
        raise ValueError(f"manifest under {out_dir} lists no frames")
    return frames


def channel_stats(frames: list[FrameTensors]) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel mean/std over all pixels of the given (training) frames."""
    stacked = np.stack([f.features for f in frames])  # (N, C, H, W)
    mean = stacked.mean(axis=(0, 2, 3))
    std = stacked.std(axis=(0, 2, 3))
    return mean, np.maximum(std, 1e-6)
