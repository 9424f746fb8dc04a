"""Synthetic scan and range-image generators shared across the test suite.

No real KITTI data ships with the repository, so tests that need sensor-like
input build it here: multi-sweep scans with known layer structure, an
HDL-64-style street scene simulator that follows the KITTI storage convention
(layers back to back, top first, each sweeping a full turn cut at the rear
seam), and analytic surfaces sampled over angle grids for the normal oracles.
"""

from __future__ import annotations

import numpy as np

from roadseg import PointCloudScan
from roadseg.layering import LayeredScan
from roadseg.sv import SVImage

ROAD_CLASS = 40
TERRAIN_CLASS = 72
OBSTACLE_CLASS = 50


def sweep_azimuths(rng, n_points, direction=1, jitter=0.2):
    """One full-circle sweep in (-pi, pi], monotone up to sub-step jitter.

    Starts just after the seam and ends just before it, so consecutive sweeps
    produce a boundary jump of magnitude close to 2*pi, as KITTI scans do.
    """
    step = 2.0 * np.pi / n_points
    base = -np.pi + (np.arange(n_points) + 0.5) * step
    phi = base + rng.uniform(-jitter, jitter, n_points) * step
    phi = np.clip(phi, -np.pi + 1e-9, np.pi)
    if direction < 0:
        phi = -phi
    return phi


def multi_sweep_scan(rng, n_layers, pts_range=(80, 400), direction=1):
    """Scan with a known number of full-circle layers; returns (scan, layer_of).

    Layers are stored top to bottom with distinct polar angles and random
    point counts; ranges and reflectivities are arbitrary but finite.
    """
    thetas = np.deg2rad(np.linspace(80.0, 115.0, n_layers))
    pts, layer_of = [], []
    for i, theta in enumerate(thetas):
        n = int(rng.integers(*pts_range))
        phi = sweep_azimuths(rng, n, direction)
        r = rng.uniform(2.0, 80.0, n)
        x = r * np.cos(phi) * np.sin(theta)
        y = r * np.sin(phi) * np.sin(theta)
        z = r * np.cos(theta)
        refl = rng.uniform(0.0, 1.0, n)
        pts.append(np.stack([x, y, z, refl], axis=1))
        layer_of.append(np.full(n, i, np.int32))
    scan = PointCloudScan(np.concatenate(pts).astype(np.float32))
    return scan, np.concatenate(layer_of)


def hdl64_elevations():
    """64 beam elevations (degrees): 1/3 deg steps on top, 1/2 deg below."""
    upper = 2.0 - np.arange(32) / 3.0
    lower = upper[-1] - (np.arange(32) + 1) / 2.0
    return np.concatenate([upper, lower])


def hdl64_scene_scan(rng, points_per_layer=2000, dropout=0.08, sensor_height=1.73):
    """HDL-64-style street scene: ground plane, road strip, box obstacles.

    Returns (scan float32, labels uint16, layer_of). Obstacle walls stand at
    random bearings; beams that clear everything return far clutter. Azimuth
    gaps from dropout stay far below pi, matching real per-layer traces.
    """
    elevations = np.deg2rad(hdl64_elevations())
    obstacles = [
        (rng.uniform(-np.pi, np.pi), rng.uniform(0.4, 1.2), rng.uniform(6.0, 60.0),
         rng.uniform(1.0, 4.0))
        for _ in range(10)
    ]  # (bearing, half-width, distance, height)

    pts, labels, layer_of = [], [], []
    for i, elev in enumerate(elevations):
        keep = rng.uniform(size=points_per_layer) >= dropout
        phi = sweep_azimuths(rng, points_per_layer)[keep]
        n = phi.size
        r = np.full(n, 90.0) + rng.normal(0.0, 0.5, n)
        cls = np.full(n, OBSTACLE_CLASS, np.uint16)
        if elev < np.deg2rad(-1.0):
            r_ground = sensor_height / np.sin(-elev)
            r = np.minimum(r, r_ground + rng.normal(0.0, 0.02, n))
            cls[:] = TERRAIN_CLASS
        for bearing, half_w, dist, height in obstacles:
            hit = np.abs(np.arctan2(np.sin(phi - bearing), np.cos(phi - bearing))) < half_w
            r_wall = dist / max(np.cos(elev), 1e-6)
            z_wall = dist * np.tan(elev)
            reachable = hit & (z_wall > -sensor_height) & (z_wall < height - sensor_height)
            closer = reachable & (r_wall < r)
            r[closer] = r_wall + rng.normal(0.0, 0.02, int(closer.sum()))
            cls[closer] = OBSTACLE_CLASS
        theta = np.pi / 2.0 - elev
        x = r * np.cos(phi) * np.sin(theta)
        y = r * np.sin(phi) * np.sin(theta)
        z = r * np.cos(theta)
        on_ground = np.abs(z + sensor_height) < 0.2
        cls[on_ground & (np.abs(y) < 3.5)] = ROAD_CLASS
        refl = rng.uniform(0.0, 1.0, n)
        pts.append(np.stack([x, y, z, refl], axis=1))
        labels.append(cls)
        layer_of.append(np.full(n, i, np.int32))
    scan = PointCloudScan(np.concatenate(pts).astype(np.float32))
    return scan, np.concatenate(labels), np.concatenate(layer_of)


def grid_layered_scan(thetas, phis, range_fn, reflectivity=0.5):
    """LayeredScan sampling an analytic surface R = range_fn(phi, theta).

    One layer per theta, points in sweep order, float64 coordinates so the
    oracle error is pure finite-difference truncation.
    """
    pts, layer_of = [], []
    for i, theta in enumerate(thetas):
        r = np.asarray(range_fn(phis, np.full_like(phis, theta)), dtype=np.float64)
        x = r * np.cos(phis) * np.sin(theta)
        y = r * np.sin(phis) * np.sin(theta)
        z = r * np.cos(theta)
        pts.append(np.stack([x, y, z, np.full(phis.size, reflectivity)], axis=1))
        layer_of.append(np.full(phis.size, i, np.int32))
    scan = PointCloudScan(np.concatenate(pts))
    return LayeredScan(scan, np.concatenate(layer_of), len(thetas))


def sv_from_grid(phis, thetas, r_grid, reflectivity=0.5) -> SVImage:
    """Fully occupied SVImage straight from an angle grid and range values."""
    h, w = len(thetas), len(phis)
    r_grid = np.asarray(r_grid, dtype=np.float64)
    assert r_grid.shape == (h, w)
    phi_g, theta_g = np.meshgrid(phis, thetas)
    ones = np.ones((h, w), np.uint8)
    return SVImage(
        height=h,
        width=w,
        counts=ones.astype(np.int32),
        min_elev=(r_grid * np.cos(theta_g)).astype(np.float32),
        mean_refl=np.full((h, w), reflectivity, np.float32),
        min_radial=r_grid.astype(np.float32),
        occupancy=ones,
        cell_phi=phi_g.astype(np.float64),
        cell_theta=theta_g.astype(np.float64),
        cell_rho=r_grid,
        cell_point_index=np.arange(h * w, dtype=np.int64).reshape(h, w),
    )


def random_layered_scan(rng, max_layers=64):
    """Arbitrary LayeredScan with random layer sizes (no azimuth realism)."""
    n_layers = int(rng.integers(4, max_layers + 1))
    sizes = rng.integers(1, 40, n_layers)
    layer_of = np.repeat(np.arange(n_layers, dtype=np.int32), sizes)
    n = layer_of.size
    pts = np.stack(
        [
            rng.uniform(-50, 50, n),
            rng.uniform(-50, 50, n),
            rng.uniform(-3, 3, n),
            rng.uniform(0, 1, n),
        ],
        axis=1,
    ).astype(np.float32)
    return LayeredScan(PointCloudScan(pts), layer_of, n_layers)


def write_scan_file(path, scan: PointCloudScan) -> None:
    scan.points.astype("<f4").tofile(path)


def write_label_file(path, class_ids, rng=None) -> None:
    """Semantic-KITTI label records; random instance ids in the high 16 bits."""
    class_ids = np.asarray(class_ids, dtype=np.uint32)
    if rng is not None:
        instance = rng.integers(0, 8, class_ids.size, dtype=np.uint32) << 16
        class_ids = class_ids | instance
    class_ids.astype("<u4").tofile(path)
