"""PNG rendering of featurized tensors for eyeballing a frame."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .core import Tensor, read_tensor
from .normals import NormalMap, normals_to_rgb

# Channels whose values already live in [0, 1] render as value * 255; the
# rest are min-max stretched per frame.
UNIT_RANGE = {"mean_reflectivity", "occupancy", "road", "valid"}

CHANNEL_NAMES = {
    "sv_features": ["min_elevation", "mean_reflectivity", "min_radial", "occupancy"],
    "sv_gt": ["road", "valid"],
    "bev_gt": ["road"],
    "bev_features": [
        "point_count", "mean_reflectivity", "mean_elev",
        "std_elev", "min_elev", "max_elev",
        "normal_x", "normal_y", "normal_z",
    ],
}


def _gray(values: np.ndarray, unit_range: bool) -> np.ndarray:
    if unit_range:
        scaled = values * 255.0
    else:
        lo, hi = float(values.min()), float(values.max())
        scaled = (values - lo) / (hi - lo) * 255.0 if hi > lo else np.zeros_like(values)
    return np.rint(np.clip(scaled, 0, 255)).astype(np.uint8)


def render_tensor_pngs(t: Tensor, out_dir: Path, prefix: str) -> list[Path]:
    """One PNG per channel group; normal triples render as a single RGB map."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def save(name: str, arr: np.ndarray) -> None:
        path = out_dir / f"{prefix}.{name}.png"
        Image.fromarray(arr).save(path)
        written.append(path)

    if t.name == "sv_normals":
        nm = NormalMap(t.data[:, :, :3].astype(np.float64), t.data[:, :, 3] > 0.5)
        save("normals", normals_to_rgb(nm))
        return written

    names = CHANNEL_NAMES.get(t.name)
    if names is None:
        names = [f"ch{k}" for k in range(t.dims[2])]
    names = names[: t.dims[2]]

    scalar = [(n, k) for k, n in enumerate(names) if not n.startswith("normal_")]
    normal_chans = [k for k, n in enumerate(names) if n.startswith("normal_")]
    for name, k in scalar:
        save(name, _gray(t.data[:, :, k].astype(np.float64), name in UNIT_RANGE))
    if normal_chans:
        normals = t.data[:, :, normal_chans].astype(np.float64)
        valid = np.linalg.norm(normals, axis=-1) > 0.0
        save("normals", normals_to_rgb(NormalMap(normals, valid)))
    return written


def render_frame(manifest: dict, out_dir, frame_id: str, png_dir) -> list[Path]:
    """Render every featurized tensor of one manifest frame to PNGs."""
    out_dir = Path(out_dir)
    entry = next((e for e in manifest["frames"] if e["id"] == frame_id), None)
    if entry is None:
        raise ValueError(f"frame {frame_id!r} is not in the manifest")
    written = []
    for kind, filename in sorted(entry["outputs"].items()):
        if kind == "angles":
            continue  # raw angles are not meaningful as an image
        t = read_tensor(out_dir / filename)
        written.extend(render_tensor_pngs(t, Path(png_dir), entry["id"].replace("/", "_")))
    return written
