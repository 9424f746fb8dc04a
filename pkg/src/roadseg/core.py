"""Core data types and binary I/O: raw scans, per-point labels, tensor container.

Scans are KITTI-style ``.bin`` files (N x 4 little-endian float32: x, y, z,
reflectivity). Labels are Semantic-KITTI ``.label`` files (N x uint32, semantic
class in the low 16 bits). Feature rasters travel between tools in the "LTNS"
tensor container defined at the bottom of this module; round-trips through it
are bit-exact.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

SCAN_RECORD_BYTES = 16
LABEL_RECORD_BYTES = 4
SEMANTIC_CLASS_MASK = 0xFFFF

# Default road class id from the published Semantic-KITTI label mapping.
DEFAULT_ROAD_CLASS = 40


class FormatError(ValueError):
    """A binary file does not match its declared format."""


@dataclass(frozen=True, eq=False)
class PointCloudScan:
    """One sensor sweep, in acquisition order.

    ``points`` is an (N, 4) float32 array of x, y, z (meters) and reflectivity.
    The row order is exactly the record order of the source file; layer
    detection depends on it, so no operation may permute it.
    """

    points: np.ndarray
    n_reflectivity_clamped: int = 0

    def __post_init__(self):
        pts = self.points
        if pts.ndim != 2 or pts.shape[1] != 4:
            raise ValueError(f"points must be (N, 4), got {pts.shape}")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3]

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self.points[:, 2]

    @property
    def reflectivity(self) -> np.ndarray:
        return self.points[:, 3]

    def select(self, mask_or_index: np.ndarray) -> "PointCloudScan":
        """Subset of points, acquisition order preserved."""
        return PointCloudScan(self.points[mask_or_index])


@dataclass(frozen=True, eq=False)
class PointLabels:
    """Per-point semantic class ids, aligned with the owning scan."""

    class_id: np.ndarray  # (N,) uint16/uint32

    @property
    def n_points(self) -> int:
        return self.class_id.shape[0]


def read_scan(path) -> PointCloudScan:
    """Decode a KITTI ``.bin`` scan file.

    One point per 16-byte record, order preserved. Non-finite coordinates or
    reflectivities are a hard error naming the first offending record;
    reflectivity outside [0, 1] is clamped and counted, not rejected (real
    sensor dumps contain stray calibration values).
    """
    raw = np.fromfile(path, dtype="<f4")
    if (raw.size * 4) % SCAN_RECORD_BYTES != 0:
        raise FormatError(
            f"{path}: byte length {raw.size * 4} is not a multiple of "
            f"{SCAN_RECORD_BYTES}; truncated record?"
        )
    pts = raw.reshape(-1, 4)
    bad = ~np.isfinite(pts)
    if bad.any():
        idx = int(np.argwhere(bad.any(axis=1))[0, 0])
        raise FormatError(f"{path}: non-finite value in record {idx}")
    refl = pts[:, 3]
    out_of_range = (refl < 0.0) | (refl > 1.0)
    n_clamped = int(out_of_range.sum())
    if n_clamped:
        pts = pts.copy()
        np.clip(pts[:, 3], 0.0, 1.0, out=pts[:, 3])
        log.warning("%s: clamped %d reflectivity values into [0, 1]", path, n_clamped)
    return PointCloudScan(pts, n_reflectivity_clamped=n_clamped)


def read_labels(path, expected_len: int) -> PointLabels:
    """Decode a Semantic-KITTI ``.label`` file.

    The semantic class is the low 16 bits of each uint32 record; the high bits
    carry instance ids and are dropped. Record count must match the scan.
    """
    raw = np.fromfile(path, dtype="<u4")
    if raw.size != expected_len:
        raise FormatError(
            f"{path}: {raw.size} label records, expected {expected_len}"
        )
    return PointLabels((raw & SEMANTIC_CLASS_MASK).astype(np.uint16))


# ---------------------------------------------------------------------------
# LTNS tensor container
#
# magic "LTNS" | u16 version=1 | u16 dtype code (0 = f32) | u32 H, W, C |
# 32-byte zero-padded channel-set name | H*W*C little-endian f32, row-major
# (height, then width, then channel). Everything little-endian.
# ---------------------------------------------------------------------------

LTNS_MAGIC = b"LTNS"
LTNS_VERSION = 1
LTNS_DTYPE_F32 = 0
_HEADER = struct.Struct("<4sHHIII32s")
LTNS_HEADER_BYTES = _HEADER.size  # 52


@dataclass(frozen=True)
class Tensor:
    """Dense (H, W, C) float32 raster with a short channel-set name."""

    data: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError(f"tensor data must be (H, W, C), got {self.data.shape}")
        if self.data.dtype != np.float32:
            raise ValueError(f"tensor dtype must be float32, got {self.data.dtype}")
        if not np.isfinite(self.data).all():
            raise ValueError("tensor values must all be finite")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        return (
            self.name == other.name
            and self.dims == other.dims
            and self.data.tobytes() == other.data.tobytes()
        )


def write_tensor(t: Tensor, path) -> None:
    """Serialize to the LTNS container; ``read_tensor`` round-trips bit-exactly."""
    h, w, c = t.dims
    if max(h, w, c) > 0xFFFFFFFF:
        raise FormatError(f"tensor dims {t.dims} overflow the u32 header fields")
    name_bytes = t.name.encode("utf-8")
    if len(name_bytes) > 32:
        raise FormatError(f"channel-set name {t.name!r} longer than 32 bytes")
    header = _HEADER.pack(LTNS_MAGIC, LTNS_VERSION, LTNS_DTYPE_F32, h, w, c, name_bytes)
    payload = np.ascontiguousarray(t.data, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def read_tensor(path) -> Tensor:
    with open(path, "rb") as f:
        header = f.read(LTNS_HEADER_BYTES)
        if len(header) < LTNS_HEADER_BYTES:
            raise FormatError(f"{path}: file shorter than the LTNS header")
        magic, version, dtype_code, h, w, c, name_bytes = _HEADER.unpack(header)
        if magic != LTNS_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != LTNS_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if dtype_code != LTNS_DTYPE_F32:
            raise FormatError(f"{path}: unsupported dtype code {dtype_code}")
        payload = f.read()
    expected = h * w * c * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    name = name_bytes.rstrip(b"\x00").decode("utf-8")
    return Tensor(np.ascontiguousarray(data, dtype=np.float32), name)
