"""Batch inference: featurized frames in, confidence-map tensors out."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import torch

from .data import load_frames, load_manifest
from .models import BEV_SHAPE, SV_OUTPUT_ROWS
from .tensor_io import write_ltns
from .train import load_checkpoint

log = logging.getLogger(__name__)


def infer(checkpoint_path, tensor_dir, out_dir) -> list[Path]:
    """Write one ``<frame key>.conf.ltns`` per manifest frame; returns the paths.

    Spherical-view outputs are 64 x 2048 x 1 regardless of the input rows;
    bird-eye-view outputs are 400 x 200 x 1. Values carry through a terminal
    sigmoid, so they always lie in [0, 1].
    """
    model, spec, _ = load_checkpoint(checkpoint_path)
    manifest = load_manifest(tensor_dir)
    frames = load_frames(tensor_dir, manifest, require_gt=False)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written = []
    with torch.no_grad():
        for frame in frames:
            c, h, w = frame.features.shape
            if c != spec.in_channels:
                raise ValueError(
                    f"frame {frame.frame_id}: {c} channels, checkpoint expects "
                    f"{spec.in_channels}"
                )
            if spec.view == "sv" and h != spec.resolution:
                raise ValueError(
                    f"frame {frame.frame_id}: {h} rows, checkpoint expects "
                    f"{spec.resolution}"
                )
            x = torch.from_numpy(frame.features[None])
            conf = model(x)[0, 0].numpy().astype(np.float32)
            expected = (SV_OUTPUT_ROWS, w) if spec.view == "sv" else BEV_SHAPE
            if conf.shape != expected:
                raise RuntimeError(
                    f"frame {frame.frame_id}: model produced {conf.shape}, "
                    f"expected {expected}"
                )
            path = out_dir / f"{frame.frame_id.replace('/', '_')}.conf.ltns"
            write_ltns(path, np.clip(conf, 0.0, 1.0)[:, :, None], "confidence")
            written.append(path)
            log.info("wrote %s", path)
    return written
