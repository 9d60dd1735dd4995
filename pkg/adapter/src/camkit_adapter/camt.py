"""Minimal writer and reader for the CAMT tensor interchange format.

This is the framework side of the fence: the adapter knows the byte layout
of the format and nothing else about the analysis package, so the two never
share code. Layout: magic ``CAMT``, u16 version (1), u8 dtype code (0 =
float32, the only code), u8 rank, then rank little-endian u64 extents,
then the raw C-order float32 payload.
"""

import struct

import numpy as np

_HEADER = struct.Struct("<4sHBB")
_MAGIC = b"CAMT"


class CamtError(ValueError):
    pass


def write_tensor(path, array) -> None:
    arr = np.asarray(array, dtype=np.float32)
    if arr.ndim == 0:
        raise CamtError("tensor rank must be at least 1")
    if arr.size == 0:
        raise CamtError("all extents must be at least 1")
    if not np.isfinite(arr).all():
        raise CamtError("payload must be finite (no NaN or Inf)")
    arr = np.ascontiguousarray(arr)
    blob = _HEADER.pack(_MAGIC, 1, 0, arr.ndim)
    blob += b"".join(struct.pack("<Q", extent) for extent in arr.shape)
    blob += arr.tobytes("C")
    with open(path, "wb") as fh:
        fh.write(blob)


def read_tensor(path) -> np.ndarray:
    """Reads a CAMT file back into a float32 array.

    Exists so the tests can compare exported bytes against what the analysis
    side computes; exports themselves only write.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise CamtError("truncated header")
    magic, version, dtype, rank = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise CamtError("bad magic bytes")
    if version != 1 or dtype != 0 or rank < 1:
        raise CamtError("unsupported header fields")
    offset = _HEADER.size + 8 * rank
    if len(blob) < offset:
        raise CamtError("truncated shape block")
    shape = struct.unpack_from("<%dQ" % rank, blob, _HEADER.size)
    count = 1
    for extent in shape:
        if extent < 1:
            raise CamtError("zero extent")
        count *= extent
    payload = blob[offset:]
    if len(payload) != 4 * count:
        raise CamtError("payload length mismatch")
    arr = np.frombuffer(payload, dtype="<f4").reshape(shape)
    if not np.isfinite(arr).all():
        raise CamtError("payload must be finite")
    return arr.copy()
