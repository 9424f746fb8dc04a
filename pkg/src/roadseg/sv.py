"""Spherical-view rasterization with layer-indexed rows.

Each point maps to row = its scanning layer (row 0 = topmost) and column =
azimuth bin over a fixed 2048-wide sweep. Binning by layer instead of by an
evenly discretized polar angle avoids the collisions and empty strips the
uneven beam spacing causes in the standard range-image projection (that
variant is kept only as a comparison utility, ``project_sv_uniform``).

Per cell we keep the classical features (minimum elevation, mean reflectivity,
minimum radial distance) plus occupancy, and the exact spherical coordinates
of the nearest binned point so that back-projection and normal estimation can
work with true angles rather than nominal grid centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PointCloudScan, PointLabels, Tensor
from .layering import LayeredScan, compute_azimuth

SV_WIDTH = 2048
SUPPORTED_LAYER_COUNTS = (64, 32, 16)

SV_FEATURE_CHANNELS = ("min_elevation", "mean_reflectivity", "min_radial", "occupancy")


@dataclass(frozen=True)
class SphericalCoords:
    """(rho, phi, theta): range, azimuth in (-pi, pi], polar angle in [0, pi]."""

    rho: float
    phi: float
    theta: float


def to_spherical(p) -> SphericalCoords:
    """Convert one cartesian point; the origin maps to (0, 0, 0) by convention."""
    x, y, z = (float(v) for v in p[:3])
    rho = float(np.sqrt(x * x + y * y + z * z))
    if rho == 0.0:
        return SphericalCoords(0.0, 0.0, 0.0)
    phi = float(np.arctan2(y, x))
    if phi == -np.pi:
        phi = np.pi
    theta = float(np.arccos(np.clip(z / rho, -1.0, 1.0)))
    return SphericalCoords(rho, phi, theta)


def spherical_arrays(xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``to_spherical`` over an (N, 3) array, in float64."""
    xyz = xyz.astype(np.float64)
    rho = np.linalg.norm(xyz, axis=1)
    phi = np.arctan2(xyz[:, 1], xyz[:, 0])
    phi[phi == -np.pi] = np.pi
    phi[rho == 0.0] = 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_theta = np.where(rho > 0.0, xyz[:, 2] / np.where(rho > 0.0, rho, 1.0), 1.0)
    theta = np.arccos(np.clip(cos_theta, -1.0, 1.0))
    return rho, phi, theta


def azimuth_to_col(phi: np.ndarray, width: int = SV_WIDTH) -> np.ndarray:
    """Azimuth in (-pi, pi] to column index: -pi edge = col 0, +pi edge = last col."""
    col = np.floor((np.asarray(phi) + np.pi) / (2.0 * np.pi) * width).astype(np.int64)
    return np.clip(col, 0, width - 1)


@dataclass(frozen=True, eq=False)
class SVImage:
    """Layer-row spherical raster with per-cell features and representative geometry.

    Feature channels use 0.0 as the empty-cell fill; emptiness is carried by
    the occupancy channel, never by NaN (NaN would poison downstream
    convolutions). ``cell_phi/theta/rho`` are the float64 spherical
    coordinates of the min-range point of each cell; ``cell_point_index``
    is that point's index into the source scan, -1 where empty.
    """

    height: int
    width: int
    counts: np.ndarray        # (H, W) int32
    min_elev: np.ndarray      # (H, W) float32
    mean_refl: np.ndarray     # (H, W) float32
    min_radial: np.ndarray    # (H, W) float32
    occupancy: np.ndarray     # (H, W) uint8
    cell_phi: np.ndarray      # (H, W) float64
    cell_theta: np.ndarray    # (H, W) float64
    cell_rho: np.ndarray      # (H, W) float64
    cell_point_index: np.ndarray  # (H, W) int64, -1 where empty

    def to_feature_tensor(self, name: str = "sv_features") -> Tensor:
        data = np.stack(
            [
                self.min_elev,
                self.mean_refl,
                self.min_radial,
                self.occupancy.astype(np.float32),
            ],
            axis=-1,
        )
        return Tensor(np.ascontiguousarray(data, dtype=np.float32), name)

    def to_angles_tensor(self, name: str = "sv_angles") -> Tensor:
        data = np.stack([self.cell_phi, self.cell_theta], axis=-1)
        return Tensor(np.ascontiguousarray(data, dtype=np.float32), name)


@dataclass(frozen=True, eq=False)
class SVMask:
    """Binary ground truth over the SV grid; ``valid`` marks labeled pixels."""

    road: np.ndarray   # (H, W) uint8
    valid: np.ndarray  # (H, W) uint8

    def to_tensor(self, name: str = "sv_gt") -> Tensor:
        data = np.stack(
            [self.road.astype(np.float32), self.valid.astype(np.float32)], axis=-1
        )
        return Tensor(np.ascontiguousarray(data, dtype=np.float32), name)


def _sv_bins(ls: LayeredScan, width: int) -> tuple[np.ndarray, np.ndarray]:
    """(rows, cols) for every point of a layered scan."""
    rows = ls.layer_of.astype(np.int64)
    phi = compute_azimuth(ls.scan).phi
    cols = azimuth_to_col(phi, width)
    return rows, cols


def _rasterize(
    scan: PointCloudScan,
    rows: np.ndarray,
    cols: np.ndarray,
    height: int,
    width: int,
) -> SVImage:
    n_cells = height * width
    cells = rows * width + cols
    rho, phi, theta = spherical_arrays(scan.xyz)
    z = scan.z.astype(np.float64)

    counts = np.bincount(cells, minlength=n_cells)
    occupied = counts > 0

    refl_sum = np.bincount(cells, weights=scan.reflectivity.astype(np.float64),
                           minlength=n_cells)
    mean_refl = np.zeros(n_cells)
    np.divide(refl_sum, counts, out=mean_refl, where=occupied)

    min_elev = np.full(n_cells, np.inf)
    np.minimum.at(min_elev, cells, z)
    min_elev[~occupied] = 0.0

    # Representative point per cell: minimum range, ties broken by scan order
    # so that rasterization is deterministic.
    order = np.lexsort((np.arange(scan.n_points), rho, cells))
    first = np.unique(cells[order], return_index=True)[1]
    rep = order[first]
    rep_cells = cells[rep]

    cell_rho = np.zeros(n_cells)
    cell_phi = np.zeros(n_cells)
    cell_theta = np.zeros(n_cells)
    cell_idx = np.full(n_cells, -1, dtype=np.int64)
    cell_rho[rep_cells] = rho[rep]
    cell_phi[rep_cells] = phi[rep]
    cell_theta[rep_cells] = theta[rep]
    cell_idx[rep_cells] = rep

    shape = (height, width)
    return SVImage(
        height=height,
        width=width,
        counts=counts.reshape(shape).astype(np.int32),
        min_elev=min_elev.reshape(shape).astype(np.float32),
        mean_refl=mean_refl.reshape(shape).astype(np.float32),
        min_radial=cell_rho.reshape(shape).astype(np.float32),
        occupancy=occupied.reshape(shape).astype(np.uint8),
        cell_phi=cell_phi.reshape(shape),
        cell_theta=cell_theta.reshape(shape),
        cell_rho=cell_rho.reshape(shape),
        cell_point_index=cell_idx.reshape(shape),
    )


def project_sv(ls: LayeredScan, width: int = SV_WIDTH) -> SVImage:
    """Project a layered scan onto the layer-indexed spherical raster."""
    if ls.n_layers not in SUPPORTED_LAYER_COUNTS:
        raise ValueError(
            f"unsupported layer count {ls.n_layers}; expected one of "
            f"{SUPPORTED_LAYER_COUNTS}"
        )
    rows, cols = _sv_bins(ls, width)
    return _rasterize(ls.scan, rows, cols, ls.n_layers, width)


def project_sv_labels(
    ls: LayeredScan,
    labels: PointLabels,
    road_class: int,
    width: int = SV_WIDTH,
) -> SVMask:
    """Ground-truth mask: a pixel is road if >= 1 road point lands in it."""
    if labels.n_points != ls.n_points:
        raise ValueError(
            f"labels ({labels.n_points}) are not aligned with the scan "
            f"({ls.n_points} points)"
        )
    rows, cols = _sv_bins(ls, width)
    n_cells = ls.n_layers * width
    cells = rows * width + cols
    valid = np.bincount(cells, minlength=n_cells) > 0
    is_road = labels.class_id == road_class
    road = np.bincount(cells[is_road], minlength=n_cells) > 0
    shape = (ls.n_layers, width)
    return SVMask(road.reshape(shape).astype(np.uint8),
                  valid.reshape(shape).astype(np.uint8))


def project_sv_uniform(
    scan: PointCloudScan,
    height: int,
    width: int = SV_WIDTH,
    theta_range: tuple[float, float] | None = None,
) -> SVImage:
    """Standard evenly-discretized range image, for side-by-side comparison only.

    Rows are uniform polar-angle bins instead of scanner layers; with real
    scans this collides points and leaves empty strips, which is the reason
    the layer-indexed projection above exists.
    """
    _, _, theta = spherical_arrays(scan.xyz)
    if theta_range is None:
        lo, hi = float(theta.min()), float(theta.max())
    else:
        lo, hi = theta_range
    span = max(hi - lo, 1e-12)
    rows = np.clip(((theta - lo) / span * height).astype(np.int64), 0, height - 1)
    phi = compute_azimuth(scan).phi
    cols = azimuth_to_col(phi, width)
    return _rasterize(scan, rows, cols, height, width)
