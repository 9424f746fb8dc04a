"""Surface normals from the spherical-view range image.

For a range image R over spherical angles, each occupied cell back-projects to
a 3D point P = (R cos(phi) sin(theta), R sin(phi) sin(theta), R cos(theta)).
Two tangent vectors of the scanned surface at P follow from the chain rule:

    v_phi   = dR/dphi   * u_r + R sin(theta) * u_phi
    v_theta = dR/dtheta * u_r + R            * u_theta

with u_r the radial unit vector and u_phi, u_theta the angular unit vectors.
The range derivatives are one-sided finite differences against the next
column (azimuth, circular) and the next row (polar, one beam down), divided
by the *actual* angle gaps between the cells' representative points; layer
rows are not uniformly spaced, so nominal grid constants would be wrong.
The normal is the normalized cross product v_phi x v_theta, flipped to point
toward the sensor so that road surfaces come out consistently +z.

A convolutional network cannot synthesize these maps from the classical
channels: they depend on where a pixel sits in the image, which is exactly
what translation invariance erases. Hence they are computed here and handed
to the model as extra input channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layering import LayeredScan, compute_azimuth, wrap_angle
from .sv import SVImage, azimuth_to_col

MIN_ANGLE_GAP = 1e-6  # rad; below this a finite difference is meaningless


def back_project(phi, theta, r) -> np.ndarray:
    """Spherical (phi, theta, range) to cartesian; broadcasts, stacks on axis -1."""
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    sin_t = np.sin(theta)
    return np.stack(
        [r * np.cos(phi) * sin_t, r * np.sin(phi) * sin_t, r * np.cos(theta)],
        axis=-1,
    )


@dataclass(frozen=True, eq=False)
class RangeGradients:
    """Forward-difference range derivatives over an SV image.

    ``valid`` marks cells where the cell itself and both neighbors (next
    column with azimuth wraparound, next row) are occupied and the angle gaps
    are usable. Border rows are never valid; there is no extrapolation.
    """

    d_phi: np.ndarray      # (H, W) float64, dR/dphi
    d_theta: np.ndarray    # (H, W) float64, dR/dtheta
    delta_phi: np.ndarray  # (H, W) float64, actual azimuth gap used
    delta_theta: np.ndarray
    valid: np.ndarray      # (H, W) bool


def range_gradients(sv: SVImage) -> RangeGradients:
    h, w = sv.height, sv.width
    occ = sv.occupancy.astype(bool)
    r = sv.cell_rho
    phi = sv.cell_phi
    theta = sv.cell_theta

    # Azimuth neighbor: next column, circular (the sweep closes on itself).
    r_pn = np.roll(r, -1, axis=1)
    phi_n = np.roll(phi, -1, axis=1)
    occ_pn = np.roll(occ, -1, axis=1)
    d_phi_gap = wrap_angle(phi_n - phi)

    # Polar neighbor: next row (one layer further down); last row has none.
    r_tn = np.zeros_like(r)
    theta_n = np.zeros_like(theta)
    occ_tn = np.zeros_like(occ)
    r_tn[:-1] = r[1:]
    theta_n[:-1] = theta[1:]
    occ_tn[:-1] = occ[1:]
    d_theta_gap = theta_n - theta

    valid = (
        occ
        & occ_pn
        & occ_tn
        & (np.abs(d_phi_gap) >= MIN_ANGLE_GAP)
        & (np.abs(d_theta_gap) >= MIN_ANGLE_GAP)
    )

    d_phi = np.zeros((h, w))
    d_theta = np.zeros((h, w))
    np.divide(r_pn - r, d_phi_gap, out=d_phi, where=valid)
    np.divide(r_tn - r, d_theta_gap, out=d_theta, where=valid)
    return RangeGradients(d_phi, d_theta, d_phi_gap, d_theta_gap, valid)


def tangent_vectors(
    sv: SVImage, grads: RangeGradients | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(v_phi, v_theta, valid): surface tangents per cell, (H, W, 3) float64."""
    if grads is None:
        grads = range_gradients(sv)
    phi, theta, r = sv.cell_phi, sv.cell_theta, sv.cell_rho
    cp, sp = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    dp, dt = grads.d_phi, grads.d_theta

    v_phi = np.stack(
        [dp * cp * st - r * sp * st, dp * sp * st + r * cp * st, dp * ct],
        axis=-1,
    )
    v_theta = np.stack(
        [dt * cp * st + r * cp * ct, dt * sp * st + r * sp * ct, dt * ct - r * st],
        axis=-1,
    )
    return v_phi, v_theta, grads.valid


@dataclass(frozen=True, eq=False)
class NormalMap:
    """Per-cell unit surface normals; zero vectors where ``valid`` is 0."""

    normals: np.ndarray  # (H, W, 3) float64, unit length where valid
    valid: np.ndarray    # (H, W) bool

    @property
    def height(self) -> int:
        return self.normals.shape[0]

    @property
    def width(self) -> int:
        return self.normals.shape[1]


def estimate_normals(sv: SVImage) -> NormalMap:
    """Normal map of an SV image: n = v_phi x v_theta, unit, sensor-facing.

    Cells whose tangents degenerate to a zero cross product are invalidated
    along with everything the gradient stencil already rejected.
    """
    grads = range_gradients(sv)
    v_phi, v_theta, valid = tangent_vectors(sv, grads)
    n = np.cross(v_phi, v_theta)
    norm = np.linalg.norm(n, axis=-1)
    ok = valid & (norm > 0.0) & np.isfinite(norm)
    n = np.divide(n, norm[..., None], out=np.zeros_like(n), where=ok[..., None])

    # Orient toward the sensor: flip wherever n points away from the origin.
    p = back_project(sv.cell_phi, sv.cell_theta, sv.cell_rho)
    away = (n * p).sum(axis=-1) > 0.0
    n[away & ok] *= -1.0
    n[~ok] = 0.0
    return NormalMap(n, ok)


def normals_to_points(
    ls: LayeredScan, sv: SVImage, nm: NormalMap
) -> tuple[np.ndarray, np.ndarray]:
    """Pull each point's normal from the SV cell it binned into.

    Returns an (N, 3) float64 array and an (N,) bool validity flag; points in
    invalid cells get a zero normal and False.
    """
    if (nm.height, nm.width) != (sv.height, sv.width):
        raise ValueError("normal map and SV image dimensions differ")
    rows = ls.layer_of.astype(np.int64)
    cols = azimuth_to_col(compute_azimuth(ls.scan).phi, sv.width)
    normals = nm.normals[rows, cols]
    valid = nm.valid[rows, cols]
    normals = np.where(valid[:, None], normals, 0.0)
    return normals, valid


def normals_to_rgb(nm: NormalMap) -> np.ndarray:
    """Map components from [-1, 1] to [0, 255]: x->R, y->G, z->B; invalid = black."""
    rgb = np.rint((nm.normals + 1.0) * 127.5).astype(np.uint8)
    rgb[~nm.valid] = 0
    return rgb
