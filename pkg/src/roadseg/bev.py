"""Bird-eye-view rasterization onto the 400 x 200 ground grid.

The grid covers x in [6, 46) meters ahead of the sensor and y in [-10, 10)
across, in 0.10 x 0.10 m cells; points outside are dropped (half-open edges:
x = 6 is kept, x = 46 is not). Row 0 is the far edge so renders read
forward-up. Each occupied cell carries the six classical statistics (count,
mean reflectivity, mean/std/min/max elevation) and optionally the mean of the
per-point unit normals projected from the spherical view; that mean is left
unnormalized on purpose, its magnitude encodes how much the cell's normals
agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .core import PointCloudScan, Tensor

BEV_HEIGHT = 400
BEV_WIDTH = 200
X_MIN, X_MAX = 6.0, 46.0
Y_MIN, Y_MAX = -10.0, 10.0
CELL_SIZE = 0.10

BEV_CLASSICAL_CHANNELS = (
    "point_count",
    "mean_reflectivity",
    "mean_elev",
    "std_elev",
    "min_elev",
    "max_elev",
)
BEV_NORMAL_CHANNELS = ("normal_x", "normal_y", "normal_z")


@dataclass(frozen=True, eq=False)
class BEVImage:
    """Per-cell statistics over the ground grid; zeros where empty.

    ``normal_mean`` is None when the scan was rasterized without normals.
    """

    counts: np.ndarray     # (400, 200) int32
    mean_refl: np.ndarray  # (400, 200) float64
    mean_elev: np.ndarray
    std_elev: np.ndarray
    min_elev: np.ndarray
    max_elev: np.ndarray
    normal_mean: np.ndarray | None  # (400, 200, 3) float64 or None

    @property
    def n_channels(self) -> int:
        return 9 if self.normal_mean is not None else 6

    def to_tensor(self, name: str = "bev_features") -> Tensor:
        planes = [
            self.counts.astype(np.float64),
            self.mean_refl,
            self.mean_elev,
            self.std_elev,
            self.min_elev,
            self.max_elev,
        ]
        if self.normal_mean is not None:
            planes.extend(self.normal_mean[:, :, k] for k in range(3))
        data = np.stack(planes, axis=-1)
        return Tensor(np.ascontiguousarray(data, dtype=np.float32), name)


@dataclass(frozen=True, eq=False)
class BEVMask:
    """Dense binary road mask over the BEV grid."""

    road: np.ndarray  # (400, 200) uint8

    def to_tensor(self, name: str = "bev_gt") -> Tensor:
        return Tensor(
            np.ascontiguousarray(self.road[:, :, None], dtype=np.float32), name
        )


def bev_bins(x: np.ndarray, y: np.ndarray):
    """(in_grid, rows, cols) for point coordinates; rows/cols only for kept points."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    in_grid = (x >= X_MIN) & (x < X_MAX) & (y >= Y_MIN) & (y < Y_MAX)
    rows = np.floor((X_MAX - x[in_grid]) / CELL_SIZE).astype(np.int64)
    cols = np.floor((y[in_grid] - Y_MIN) / CELL_SIZE).astype(np.int64)
    # Guard the open/closed edges against float rounding of the division.
    np.clip(rows, 0, BEV_HEIGHT - 1, out=rows)
    np.clip(cols, 0, BEV_WIDTH - 1, out=cols)
    return in_grid, rows, cols


def project_bev(
    scan: PointCloudScan,
    normals: np.ndarray | None = None,
    normals_valid: np.ndarray | None = None,
) -> BEVImage:
    """Rasterize a scan (and optional per-point unit normals) onto the BEV grid.

    ``normals`` is (N, 3) aligned with the scan; ``normals_valid`` masks the
    points whose normal should enter the per-cell mean (defaults to all).
    Elevation std uses the population convention, so single-point cells get 0.
    """
    n_cells = BEV_HEIGHT * BEV_WIDTH
    in_grid, rows, cols = bev_bins(scan.x, scan.y)
    cells = rows * BEV_WIDTH + cols
    z = scan.z.astype(np.float64)[in_grid]
    refl = scan.reflectivity.astype(np.float64)[in_grid]

    counts = np.bincount(cells, minlength=n_cells)
    occupied = counts > 0

    def cell_mean(values: np.ndarray) -> np.ndarray:
        sums = np.bincount(cells, weights=values, minlength=n_cells)
        out = np.zeros(n_cells)
        np.divide(sums, counts, out=out, where=occupied)
        return out

    mean_refl = cell_mean(refl)
    mean_elev = cell_mean(z)
    # Two-pass variance keeps the statistic accurate for tightly clustered z.
    sq_resid = np.bincount(cells, weights=(z - mean_elev[cells]) ** 2,
                           minlength=n_cells)
    var = np.zeros(n_cells)
    np.divide(sq_resid, counts, out=var, where=occupied)
    std_elev = np.sqrt(np.maximum(var, 0.0))

    min_elev = np.full(n_cells, np.inf)
    max_elev = np.full(n_cells, -np.inf)
    np.minimum.at(min_elev, cells, z)
    np.maximum.at(max_elev, cells, z)
    min_elev[~occupied] = 0.0
    max_elev[~occupied] = 0.0

    normal_mean = None
    if normals is not None:
        if normals.shape != (scan.n_points, 3):
            raise ValueError(
                f"normals must be ({scan.n_points}, 3), got {normals.shape}"
            )
        if normals_valid is None:
            normals_valid = np.ones(scan.n_points, dtype=bool)
        nv = normals_valid[in_grid].astype(np.float64)
        n_in = normals[in_grid]
        n_count = np.bincount(cells, weights=nv, minlength=n_cells)
        normal_mean = np.zeros((n_cells, 3))
        for k in range(3):
            sums = np.bincount(cells, weights=n_in[:, k] * nv, minlength=n_cells)
            np.divide(sums, n_count, out=normal_mean[:, k], where=n_count > 0)
        normal_mean = normal_mean.reshape(BEV_HEIGHT, BEV_WIDTH, 3)

    shape = (BEV_HEIGHT, BEV_WIDTH)
    return BEVImage(
        counts=counts.reshape(shape).astype(np.int32),
        mean_refl=mean_refl.reshape(shape),
        mean_elev=mean_elev.reshape(shape),
        std_elev=std_elev.reshape(shape),
        min_elev=min_elev.reshape(shape),
        max_elev=max_elev.reshape(shape),
        normal_mean=normal_mean,
    )


def load_bev_gt(path) -> BEVMask:
    """Load a 400 x 200 single-channel mask image; road = pixel value > 127."""
    with Image.open(path) as img:
        if img.mode != "L":
            img = img.convert("L")
        arr = np.asarray(img)
    if arr.shape != (BEV_HEIGHT, BEV_WIDTH):
        raise ValueError(
            f"{path}: ground-truth mask is {arr.shape}, "
            f"expected ({BEV_HEIGHT}, {BEV_WIDTH})"
        )
    return BEVMask((arr > 127).astype(np.uint8))
