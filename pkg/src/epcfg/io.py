"""Latent file format.

Layout (all little-endian)::

    b"EPL1" | rank: u32 | dims: rank x u32 | payload: prod(dims) x float32

Values are held as float64 in memory and stored as float32 on disk, so a
read/write round trip is the identity on the stored payload.
"""

import math
import struct

import numpy as np

from ._validation import check_latent
from .exceptions import BadMagic, IoFailure, LatentFormatError, NonFiniteValue, TruncatedFile
from .latent import make_latent

MAGIC = b"EPL1"
_U32 = struct.Struct("<I")


def encode_latent(x):
    x = check_latent(x)
    with np.errstate(over="ignore"):
        payload = x.astype("<f4")
    if not np.all(np.isfinite(payload)):
        raise NonFiniteValue("value overflows float32")
    header = MAGIC + _U32.pack(x.ndim) + struct.pack(f"<{x.ndim}I", *x.shape)
    return header + payload.tobytes()


def decode_latent(buf):
    buf = bytes(buf)
    if len(buf) < 4:
        raise TruncatedFile("file shorter than the magic number")
    if buf[:4] != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, got {buf[:4]!r}")
    if len(buf) < 8:
        raise TruncatedFile("missing rank field")
    (rank,) = _U32.unpack_from(buf, 4)
    if rank == 0:
        raise LatentFormatError("rank must be at least 1")
    if len(buf) < 8 + 4 * rank:
        raise TruncatedFile(f"missing dimension fields for rank {rank}")
    dims = struct.unpack_from(f"<{rank}I", buf, 8)
    if 0 in dims:
        raise LatentFormatError(f"zero-sized dimension in {dims}")
    offset = 8 + 4 * rank
    expected = offset + 4 * math.prod(dims)
    if len(buf) < expected:
        raise TruncatedFile(f"expected {expected} bytes, got {len(buf)}")
    if len(buf) > expected:
        raise LatentFormatError(f"{len(buf) - expected} trailing bytes after payload")
    payload = np.frombuffer(buf, dtype="<f4", offset=offset).astype(np.float64)
    return make_latent(dims, payload)


def write_latent(path, x):
    data = encode_latent(x)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_latent(path):
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return decode_latent(buf)
