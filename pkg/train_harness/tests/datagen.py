"""Synthetic featurized directories matching the featurization tool's layout."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from train_harness.tensor_io import write_ltns


def smooth_field(rng, h, w, scale=6):
    coarse = rng.normal(size=(max(h // scale, 2), max(w // scale, 2)))
    reps = (int(np.ceil(h / coarse.shape[0])), int(np.ceil(w / coarse.shape[1])))
    return np.kron(coarse, np.ones(reps))[:h, :w]


def make_featurized_dir(
    root: Path,
    rng,
    n_frames: int,
    view: str = "sv",
    rows: int = 64,
    width: int = 128,
    with_normals: bool = False,
    gt_rows: int = 64,
):
    """Write LTNS tensors plus a manifest; GT is a learnable function of ch 0.

    The road mask is where the (smooth) first feature channel is positive,
    so a model that overfits the tiny set can drive the loss down hard.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    if view == "bev":
        rows, width, gt_rows = 400, 200, 400
    entries = []
    for i in range(n_frames):
        key = f"{i:06d}"
        base = smooth_field(rng, rows, width)
        feats = np.stack(
            [base]
            + [rng.normal(size=(rows, width)) * 0.3 for _ in range(3 if view == "sv" else 5)],
            axis=-1,
        ).astype(np.float32)
        outputs = {"features": f"{key}.features.ltns"}
        write_ltns(root / outputs["features"],
                   feats, "sv_features" if view == "sv" else "bev_features")
        if with_normals:
            normals = rng.normal(size=(rows, width, 4)).astype(np.float32)
            outputs["normals"] = f"{key}.normals.ltns"
            write_ltns(root / outputs["normals"], normals, "sv_normals")

        road = (base > 0.0).astype(np.float32)
        if gt_rows != rows:
            road = np.repeat(road, gt_rows // rows, axis=0)
        if view == "sv":
            valid = (rng.uniform(size=road.shape) < 0.9).astype(np.float32)
            gt = np.stack([road, valid], axis=-1)
            outputs["gt"] = f"{key}.gt.ltns"
            write_ltns(root / outputs["gt"], gt.astype(np.float32), "sv_gt")
        else:
            outputs["gt"] = f"{key}.gt.ltns"
            write_ltns(root / outputs["gt"], road[:, :, None], "bev_gt")
        entries.append({"id": key, "scan": f"{key}.bin", "outputs": outputs,
                        "checksums": {}})

    manifest = {
        "config": {
            "dataset_kind": "semantic-kitti" if view == "sv" else "kitti-road",
            "view": view,
            "resolution": rows if view == "sv" else 64,
            "features": "classical+normals" if with_normals else "classical",
        },
        "frames": entries,
        "errors": [],
    }
    with open(root / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return root
