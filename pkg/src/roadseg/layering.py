"""Scanner-layer recovery from acquisition order, and layer-removal subsampling.

KITTI-convention scans store scanning layers back to back, uppermost layer
first, each layer sweeping a full turn of azimuth. The azimuth trace of such a
scan is a sawtooth with one cycle per layer; a 64-layer scan shows 64 cycles.
We recover the per-point layer index from that sawtooth and simulate 32/16
layer scanners by deleting whole layers (one in two, three in four).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PointCloudScan

TWO_PI = 2.0 * np.pi


class LayerDetectionError(ValueError):
    """The azimuth trace does not support cycle detection."""


@dataclass(frozen=True, eq=False)
class AzimuthTrace:
    """Per-point azimuth in (-pi, pi]; ``n_degenerate`` counts x=y=0 points."""

    phi: np.ndarray
    n_degenerate: int = 0

    @property
    def n_points(self) -> int:
        return self.phi.shape[0]


@dataclass(frozen=True, eq=False)
class LayeredScan:
    """A scan plus per-point scanner-layer indices (0 = topmost layer)."""

    scan: PointCloudScan
    layer_of: np.ndarray  # (N,) int32, non-decreasing in acquisition order
    n_layers: int

    def __post_init__(self):
        if self.layer_of.shape[0] != self.scan.n_points:
            raise ValueError("layer_of length must equal the scan's point count")

    @property
    def n_points(self) -> int:
        return self.scan.n_points

    def layer_sizes(self) -> np.ndarray:
        return np.bincount(self.layer_of, minlength=self.n_layers)


def wrap_angle(phi: np.ndarray | float):
    """Map angles into the principal interval (-pi, pi]."""
    wrapped = np.asarray(phi) - TWO_PI * np.round(np.asarray(phi) / TWO_PI)
    wrapped = np.where(wrapped <= -np.pi, wrapped + TWO_PI, wrapped)
    if np.isscalar(phi):
        return float(wrapped)
    return wrapped


def compute_azimuth(scan: PointCloudScan) -> AzimuthTrace:
    """Four-quadrant arctangent of (y, x) per point, in (-pi, pi].

    Points on the rotation axis (x = y = 0) have no defined azimuth; they get
    0 and are tallied in ``n_degenerate``.
    """
    if scan.n_points == 0:
        raise LayerDetectionError("cannot compute azimuth of an empty scan")
    x = scan.x.astype(np.float64)
    y = scan.y.astype(np.float64)
    phi = np.arctan2(y, x)
    # arctan2 can return -pi (e.g. y = -0.0, x < 0); fold it onto +pi.
    phi[phi == -np.pi] = np.pi
    n_degenerate = int(((x == 0.0) & (y == 0.0)).sum())
    return AzimuthTrace(phi, n_degenerate=n_degenerate)


def assign_layers(scan: PointCloudScan) -> LayeredScan:
    """Split a per-layer-ordered scan into scanning layers.

    A new layer starts whenever the azimuth trace wraps around the circle,
    detected as a jump of magnitude > pi between consecutive points. This is
    robust to jitter near the sweep seam, unlike literal zero-crossing
    counting. The scan must keep its on-disk acquisition order.
    """
    if scan.n_points < 2:
        raise LayerDetectionError(
            f"need at least 2 points to detect layers, got {scan.n_points}"
        )
    trace = compute_azimuth(scan)
    if trace.n_degenerate == trace.n_points:
        raise LayerDetectionError(
            f"all {trace.n_points} points are on the rotation axis; "
            "azimuth trace is degenerate"
        )
    jumps = np.abs(np.diff(trace.phi)) > np.pi
    layer_of = np.zeros(scan.n_points, dtype=np.int32)
    np.cumsum(jumps, out=layer_of[1:])
    return LayeredScan(scan, layer_of, int(layer_of[-1]) + 1)


def subsample(ls: LayeredScan, keep_every: int, offset: int = 0) -> LayeredScan:
    """Simulate a lower-resolution scanner by deleting whole layers.

    Keeps the points whose layer index is congruent to ``offset`` modulo
    ``keep_every`` (2 halves a 64-layer scan to 32 layers, 4 quarters it to
    16), renumbers the survivors densely from 0 top to bottom, and preserves
    acquisition order.
    """
    if keep_every not in (2, 4):
        raise ValueError(f"keep_every must be 2 or 4, got {keep_every}")
    if not 0 <= offset < keep_every:
        raise ValueError(f"offset must be in [0, {keep_every}), got {offset}")
    keep = (ls.layer_of % keep_every) == offset
    new_layers = ((ls.layer_of[keep] - offset) // keep_every).astype(np.int32)
    n_layers = len(range(offset, ls.n_layers, keep_every))
    return LayeredScan(ls.scan.select(keep), new_layers, n_layers)
