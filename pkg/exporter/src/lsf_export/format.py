"""Writer (and a small verifying reader) for the LSF1 feature container.

Layout: 4-byte magic "LSF1", then uint32 version / n_layers / T / d, all
little-endian, then the float32 payload in layer-major C order. The trainer
side owns the authoritative reader; this module only has to produce
byte-compatible files, the reader here exists for round-trip checks.
"""

import struct

import numpy as np

from .errors import ExportError, InputError

MAGIC = b"LSF1"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def write_feature_file(path, stack: np.ndarray) -> None:
    stack = np.asarray(stack)
    if stack.ndim != 3:
        raise InputError(f"feature stack must be (n_layers, T, d), got shape {stack.shape}")
    n_layers, t, d = stack.shape
    if min(stack.shape) < 1:
        raise InputError(f"feature stack has an empty axis: {stack.shape}")
    if not np.all(np.isfinite(stack)):
        raise InputError("feature stack contains non-finite values")
    payload = np.ascontiguousarray(stack, dtype="<f4")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, n_layers, t, d))
        f.write(payload.tobytes())


def read_feature_file(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ExportError(f"{path}: truncated header")
        magic, version, n_layers, t, d = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ExportError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise ExportError(f"{path}: unsupported version {version}")
        expected = 4 * n_layers * t * d
        payload = f.read(expected)
        if len(payload) != expected:
            raise ExportError(f"{path}: truncated payload")
    flat = np.frombuffer(payload, dtype="<f4")
    return flat.reshape(n_layers, t, d)
