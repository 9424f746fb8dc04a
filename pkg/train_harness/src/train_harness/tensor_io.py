"""Reader/writer for the LTNS tensor container used by the featurization tool.

The layout is the interchange-format contract between the two packages:
magic "LTNS", u16 version=1, u16 dtype code (0 = float32), u32 height/width/
channels, a 32-byte zero-padded channel-set name, then H*W*C little-endian
float32 values in row-major order (height, width, channel).
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"LTNS"
VERSION = 1
DTYPE_F32 = 0
_HEADER = struct.Struct("<4sHHIII32s")
HEADER_BYTES = _HEADER.size  # 52


class TensorFormatError(ValueError):
    pass


def read_ltns(path) -> tuple[np.ndarray, str]:
    """Returns ((H, W, C) float32 array, channel-set name)."""
    with open(path, "rb") as f:
        header = f.read(HEADER_BYTES)
        if len(header) < HEADER_BYTES:
            raise TensorFormatError(f"{path}: shorter than the LTNS header")
        magic, version, dtype_code, h, w, c, name = _HEADER.unpack(header)
        if magic != MAGIC:
            raise TensorFormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION or dtype_code != DTYPE_F32:
            raise TensorFormatError(
                f"{path}: unsupported version/dtype {version}/{dtype_code}"
            )
        payload = f.read()
    if len(payload) != h * w * c * 4:
        raise TensorFormatError(f"{path}: payload/header size mismatch")
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    return np.ascontiguousarray(data), name.rstrip(b"\x00").decode("utf-8")


def write_ltns(path, data: np.ndarray, name: str = "") -> None:
    if data.ndim != 3:
        raise TensorFormatError(f"expected (H, W, C) array, got {data.shape}")
    if not np.isfinite(data).all():
        raise TensorFormatError("tensor values must be finite")
    name_bytes = name.encode("utf-8")
    if len(name_bytes) > 32:
        raise TensorFormatError(f"name {name!r} longer than 32 bytes")
    h, w, c = data.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, DTYPE_F32, h, w, c, name_bytes))
        f.write(np.ascontiguousarray(data, dtype="<f4").tobytes())
