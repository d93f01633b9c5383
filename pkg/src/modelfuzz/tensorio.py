"""Tensor file format and test-input generation.

Binary layout (little-endian): magic "TNSR", u16 version, u8 dtype tag
(0 = float32, 1 = float64), four u32 dims (NCHW), then the row-major payload.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .backends import Tensor
from .errors import TensorFileError
from .graph import TensorShape

MAGIC = b"TNSR"
FORMAT_VERSION = 1
_DTYPE_TAGS = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_TAG_FOR_DTYPE = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_HEADER = struct.Struct("<4sHB4I")


def write_tensor(path, tensor: Tensor) -> None:
    dims = tensor.shape.as_tuple()
    tag = _TAG_FOR_DTYPE[tensor.data.dtype]
    payload = np.ascontiguousarray(tensor.data, dtype=_DTYPE_TAGS[tag]).tobytes()
    with open(path, "wb") as fp:
        fp.write(_HEADER.pack(MAGIC, FORMAT_VERSION, tag, *dims))
        fp.write(payload)


def read_tensor(path) -> Tensor:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise TensorFileError(f"cannot read tensor file {path}: {exc}", 0) from exc
    if len(blob) < _HEADER.size:
        raise TensorFileError("truncated header", len(blob))
    magic, version, tag, *dims = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise TensorFileError(f"bad magic {magic!r}", 0)
    if version != FORMAT_VERSION:
        raise TensorFileError(f"unsupported version {version}", 4)
    if tag not in _DTYPE_TAGS:
        raise TensorFileError(f"unknown dtype tag {tag}", 6)
    try:
        shape = TensorShape(*dims)
    except ValueError as exc:
        raise TensorFileError(str(exc), 7) from exc
    dtype = _DTYPE_TAGS[tag]
    expected = _HEADER.size + shape.element_count * dtype.itemsize
    if len(blob) != expected:
        raise TensorFileError(
            f"payload length {len(blob) - _HEADER.size} != expected {expected - _HEADER.size}",
            min(len(blob), expected),
        )
    data = np.frombuffer(blob, dtype=dtype, offset=_HEADER.size).reshape(shape.as_tuple())
    return Tensor(data.astype(dtype.newbyteorder("=")))


def random_tensor(shape: TensorShape, rng, dtype=np.float64) -> Tensor:
    """I.i.d. uniform values in [-1, 1]."""
    data = rng.uniform(-1.0, 1.0, size=shape.as_tuple()).astype(dtype)
    return Tensor(data)


def tensor_digest(tensor: Tensor) -> str:
    h = hashlib.sha256()
    h.update(tensor.dtype_tag.encode())
    h.update(repr(tensor.shape.as_tuple()).encode())
    h.update(np.ascontiguousarray(tensor.data).astype("<f8").tobytes())
    return h.hexdigest()
