"""Dataset walking, per-frame featurization, and the output manifest.

A run turns a directory of raw scans into one set of feature/ground-truth
tensors per frame plus a ``manifest.json`` tying frame ids to files and
content checksums. Everything is deterministic for fixed inputs and config:
file bytes, manifest ordering (sorted by frame id regardless of worker
completion order), and the seeded split shuffle.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bev as bev_mod
from . import sv as sv_mod
from .core import (
    DEFAULT_ROAD_CLASS,
    PointCloudScan,
    Tensor,
    read_labels,
    read_scan,
    write_tensor,
)
from .layering import LayeredScan, assign_layers, subsample
from .normals import estimate_normals, normals_to_points

log = logging.getLogger(__name__)

DATA_ROOT_ENV = "ROADSEG_DATA_ROOT"

SEMANTIC_KITTI_TRAIN = [f"{i:02d}" for i in range(1, 11) if i != 8]
SEMANTIC_KITTI_TEST = ["08"]

# Published KITTI-road split sizes; scaled down proportionally for smaller sets.
KITTI_ROAD_TOTAL = 289
KITTI_ROAD_HOLDOUT = 30


@dataclass
class PipelineConfig:
    dataset_root: str = ""
    dataset_kind: str = "semantic-kitti"  # semantic-kitti | kitti-road
    view: str = "sv"                      # sv | bev
    resolution: int = 64                  # 64 | 32 | 16
    features: str = "classical"           # classical | classical+normals
    road_class: int = DEFAULT_ROAD_CLASS
    out_dir: str = "roadseg_out"
    split: str = "all"                    # train | val | test | all
    stride: int = 1
    seed: int = 0
    workers: int = 1
    subsample_offset: int = 0
    gt_dir: str = ""                      # BEV mask images (kitti-road)
    sequences: str = ""                   # comma list, overrides the split's set

    def __post_init__(self):
        if not self.dataset_root:
            self.dataset_root = os.environ.get(DATA_ROOT_ENV, "")
        if self.dataset_kind not in ("semantic-kitti", "kitti-road"):
            raise ValueError(f"unknown dataset kind {self.dataset_kind!r}")
        if self.view not in ("sv", "bev"):
            raise ValueError(f"unknown view {self.view!r}")
        if self.resolution not in (64, 32, 16):
            raise ValueError(f"resolution must be 64, 32 or 16, got {self.resolution}")
        if self.features not in ("classical", "classical+normals"):
            raise ValueError(f"unknown feature set {self.features!r}")
        if self.split not in ("train", "val", "test", "all"):
            raise ValueError(f"unknown split {self.split!r}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def with_normals(self) -> bool:
        return self.features == "classical+normals"


def load_config_file(path) -> dict:
    """Flat key=value config text; blank lines and # comments ignored."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


@dataclass(frozen=True)
class Frame:
    frame_id: str
    scan_path: str
    label_path: str | None = None
    gt_mask_path: str | None = None

    @property
    def key(self) -> str:
        return self.frame_id.replace("/", "_")


def _semantic_kitti_frames(cfg: PipelineConfig) -> list[Frame]:
    root = Path(cfg.dataset_root) / "sequences"
    if cfg.sequences:
        seqs = [s.strip() for s in cfg.sequences.split(",") if s.strip()]
    elif cfg.split == "train":
        seqs = SEMANTIC_KITTI_TRAIN
    elif cfg.split in ("val", "test"):
        seqs = SEMANTIC_KITTI_TEST
    else:
        seqs = sorted(p.name for p in root.iterdir() if p.is_dir()) if root.is_dir() else []
    frames = []
    for seq in seqs:
        vel = root / seq / "velodyne"
        if not vel.is_dir():
            continue
        for bin_path in sorted(vel.glob("*.bin"))[:: cfg.stride]:
            label = vel.parent / "labels" / (bin_path.stem + ".label")
            frames.append(
                Frame(
                    frame_id=f"{seq}/{bin_path.stem}",
                    scan_path=str(bin_path),
                    label_path=str(label) if label.is_file() else None,
                )
            )
    return frames


def _kitti_road_frames(cfg: PipelineConfig) -> tuple[list[Frame], dict]:
    root = Path(cfg.dataset_root)
    vel = root / "velodyne"
    if not vel.is_dir() and (root / "training" / "velodyne").is_dir():
        vel = root / "training" / "velodyne"
    stems = sorted(p.stem for p in vel.glob("*.bin")) if vel.is_dir() else []

    # The published benchmark has 289 train frames split 229/30/30; the
    # concrete assignment is a seeded shuffle recorded in the manifest.
    n = len(stems)
    holdout = KITTI_ROAD_HOLDOUT if n >= KITTI_ROAD_TOTAL else max(
        1, round(n * KITTI_ROAD_HOLDOUT / KITTI_ROAD_TOTAL)
    )
    order = np.random.default_rng(cfg.seed).permutation(n)
    assignment: dict[str, str] = {}
    for rank, idx in enumerate(order):
        if rank < holdout and n > 2 * holdout:
            part = "test"
        elif rank < 2 * holdout and n > 2 * holdout:
            part = "val"
        else:
            part = "train"
        assignment[stems[idx]] = part

    gt_dir = Path(cfg.gt_dir) if cfg.gt_dir else root / "bev_gt"
    frames = []
    for stem in stems[:: cfg.stride]:
        if cfg.split != "all" and assignment[stem] != cfg.split:
            continue
        gt_path = gt_dir / f"{stem}.png"
        frames.append(
            Frame(
                frame_id=stem,
                scan_path=str(vel / f"{stem}.bin"),
                gt_mask_path=str(gt_path) if gt_path.is_file() else None,
            )
        )
    return frames, assignment


def discover_frames(cfg: PipelineConfig) -> tuple[list[Frame], dict]:
    """(frames, kitti-road split assignment or {}) for the configured selection."""
    if not cfg.dataset_root:
        raise ValueError(
            f"no dataset root configured (flag, config file, or ${DATA_ROOT_ENV})"
        )
    if cfg.dataset_kind == "semantic-kitti":
        return _semantic_kitti_frames(cfg), {}
    return _kitti_road_frames(cfg)


# ---------------------------------------------------------------------------
# Per-frame featurization
# ---------------------------------------------------------------------------


def _scan_at_resolution(cfg: PipelineConfig, ls: LayeredScan) -> LayeredScan:
    if ls.n_layers == cfg.resolution:
        return ls
    if ls.n_layers != 64:
        raise ValueError(
            f"scan has {ls.n_layers} layers; cannot simulate {cfg.resolution}"
        )
    keep_every = 64 // cfg.resolution
    return subsample(ls, keep_every, cfg.subsample_offset)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def featurize_frame(cfg: PipelineConfig, frame: Frame, out_dir: Path) -> dict:
    """Build and write every tensor for one frame; returns its manifest entry."""
    scan = read_scan(frame.scan_path)
    outputs: dict[str, Path] = {}

    if cfg.view == "sv":
        ls_full = assign_layers(scan)
        ls = _scan_at_resolution(cfg, ls_full)
        svi = sv_mod.project_sv(ls)
        outputs["features"] = out_dir / f"{frame.key}.features.ltns"
        write_tensor(svi.to_feature_tensor(), outputs["features"])
        outputs["angles"] = out_dir / f"{frame.key}.angles.ltns"
        write_tensor(svi.to_angles_tensor(), outputs["angles"])
        if cfg.with_normals:
            nm = estimate_normals(svi)
            data = np.concatenate(
                [nm.normals, nm.valid[:, :, None].astype(np.float64)], axis=-1
            )
            outputs["normals"] = out_dir / f"{frame.key}.normals.ltns"
            write_tensor(
                Tensor(np.ascontiguousarray(data, np.float32), "sv_normals"),
                outputs["normals"],
            )
        if frame.label_path:
            labels = read_labels(frame.label_path, scan.n_points)
            # Ground truth stays at the full 64-layer resolution: every
            # simulated-resolution model is scored on the same mask.
            mask = sv_mod.project_sv_labels(ls_full, labels, cfg.road_class)
            outputs["gt"] = out_dir / f"{frame.key}.gt.ltns"
            write_tensor(mask.to_tensor(), outputs["gt"])
    else:
        per_point_normals = None
        normals_valid = None
        bev_scan: PointCloudScan = scan
        if cfg.resolution != 64 or cfg.with_normals:
            ls = _scan_at_resolution(cfg, assign_layers(scan))
            bev_scan = ls.scan
            if cfg.with_normals:
                svi = sv_mod.project_sv(ls)
                nm = estimate_normals(svi)
                per_point_normals, normals_valid = normals_to_points(ls, svi, nm)
        bevi = bev_mod.project_bev(bev_scan, per_point_normals, normals_valid)
        outputs["features"] = out_dir / f"{frame.key}.features.ltns"
        write_tensor(bevi.to_tensor(), outputs["features"])
        if frame.gt_mask_path:
            mask = bev_mod.load_bev_gt(frame.gt_mask_path)
            outputs["gt"] = out_dir / f"{frame.key}.gt.ltns"
            write_tensor(mask.to_tensor(), outputs["gt"])

    return {
        "id": frame.frame_id,
        "scan": str(frame.scan_path),
        "outputs": {k: p.name for k, p in outputs.items()},
        "checksums": {k: _sha256(p) for k, p in outputs.items()},
    }


def _featurize_one(args: tuple[PipelineConfig, Frame, str]) -> tuple[str, dict | None, str | None]:
    cfg, frame, out_dir = args
    try:
        return frame.frame_id, featurize_frame(cfg, frame, Path(out_dir)), None
    except Exception as exc:  # per-frame isolation: one bad frame must not kill a run
        return frame.frame_id, None, f"{type(exc).__name__}: {exc}"


def run_featurize(cfg: PipelineConfig) -> dict:
    """Featurize every selected frame and write the manifest.

    Returns the manifest dict; per-frame failures are collected under
    ``errors`` rather than aborting the run.
    """
    frames, assignment = discover_frames(cfg)
    if not frames:
        raise ValueError(
            f"no frames selected under {cfg.dataset_root!r} "
            f"(kind={cfg.dataset_kind}, split={cfg.split})"
        )
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = [(cfg, frame, str(out_dir)) for frame in frames]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_featurize_one, tasks))
    else:
        results = [_featurize_one(t) for t in tasks]

    entries = sorted((e for _, e, _ in results if e is not None), key=lambda e: e["id"])
    errors = sorted(
        ({"id": fid, "error": err} for fid, _, err in results if err is not None),
        key=lambda e: e["id"],
    )
    for e in errors:
        log.error("frame %s failed: %s", e["id"], e["error"])

    manifest = {
        "config": {
            "dataset_kind": cfg.dataset_kind,
            "view": cfg.view,
            "resolution": cfg.resolution,
            "features": cfg.features,
            "road_class": cfg.road_class,
            "split": cfg.split,
            "stride": cfg.stride,
            "seed": cfg.seed,
            "subsample_offset": cfg.subsample_offset,
        },
        "frames": entries,
        "errors": errors,
    }
    if assignment:
        manifest["split_assignment"] = assignment
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


def load_manifest(out_dir) -> dict:
    path = Path(out_dir) / "manifest.json"
    if not path.is_file():
        raise FileNotFoundError(f"no manifest at {path}")
    with open(path) as f:
        return json.load(f)
