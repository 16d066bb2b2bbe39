"""Binary named-tensor container and the objects persisted through it.

Layout (all integers little-endian):

    magic           4 bytes, b"OWCW"
    version         u16 (currently 1)
    norm_scale      IEEE 754 double
    tensor_count    u32
    per tensor:
        name_len    u16, then UTF-8 name bytes
        rank        u8
        dims        u32 per axis
        data        IEEE 754 single precision, C order

Model weights store their convolution tensors directly. Correlation sets
store complex matrices as trailing-axis (real, imag) pairs. Files are
written atomically (temp file + rename).
"""

import os
import struct
import tempfile

import numpy as np

from .classical import CorrelationSet
from .nn.model import ModelWeights, derive_arch_tag

MAGIC = b"OWCW"
VERSION = 1


class FormatError(ValueError):
    """Raised for unreadable or inconsistent container files."""


def save_tensors(path, tensors, norm_scale=1.0):
    """Write a named-tensor container atomically."""
    parts = [MAGIC, struct.pack("<H", VERSION), struct.pack("<d", float(norm_scale))]
    parts.append(struct.pack("<I", len(tensors)))
    for name, tensor in tensors.items():
        data = np.ascontiguousarray(tensor, dtype="<f4")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<B", data.ndim))
        parts.append(struct.pack(f"<{data.ndim}I", *data.shape))
        parts.append(data.tobytes())
    blob = b"".join(parts)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, blob, path):
        self.blob = blob
        self.off = 0
        self.path = path

    def take(self, n):
        if self.off + n > len(self.blob):
            raise FormatError(f"{self.path}: truncated file")
        out = self.blob[self.off : self.off + n]
        self.off += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_tensors(path):
    """Read a named-tensor container; returns (tensors, norm_scale)."""
    with open(path, "rb") as f:
        blob = f.read()
    r = _Reader(blob, path)
    if r.take(4) != MAGIC:
        raise FormatError(f"{path}: bad magic bytes")
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    (norm_scale,) = r.unpack("<d")
    (count,) = r.unpack("<I")
    tensors = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (rank,) = r.unpack("<B")
        dims = r.unpack(f"<{rank}I") if rank else ()
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        data = np.frombuffer(r.take(4 * size), dtype="<f4").reshape(dims)
        tensors[name] = data.astype(np.float32)
    if r.off != len(blob):
        raise FormatError(f"{path}: trailing bytes after last tensor")
    return tensors, norm_scale


def save_weights(path, weights):
    """Persist model weights (float32 tensors, norm_scale as double)."""
    save_tensors(path, weights.tensors, norm_scale=weights.norm_scale)


def load_weights(path, expect_arch=None):
    """Load model weights; optionally enforce an architecture fingerprint."""
    tensors, norm_scale = load_tensors(path)
    try:
        w = ModelWeights(tensors=tensors, norm_scale=norm_scale)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if expect_arch is not None and w.arch_tag != expect_arch:
        raise FormatError(
            f"{path}: architecture {w.arch_tag!r} does not match "
            f"expected {expect_arch!r}"
        )
    return w


def _split_complex(a):
    out = np.empty(a.shape + (2,), dtype=np.float32)
    out[..., 0] = a.real
    out[..., 1] = a.imag
    return out


def _join_complex(a):
    return a[..., 0].astype(np.float64) + 1j * a[..., 1].astype(np.float64)


def save_correlations(path, corr):
    """Persist a CorrelationSet (names r_hhp, r_hphp)."""
    save_tensors(
        path,
        {
            "r_hhp": _split_complex(corr.r_hhp),
            "r_hphp": _split_complex(corr.r_hphp),
            "sample_count": np.array([corr.sample_count], dtype=np.float32),
        },
    )


def load_correlations(path):
    tensors, _ = load_tensors(path)
    for key in ("r_hhp", "r_hphp", "sample_count"):
        if key not in tensors:
            raise FormatError(f"{path}: missing tensor {key!r}")
    return CorrelationSet(
        r_hhp=_join_complex(tensors["r_hhp"]),
        r_hphp=_join_complex(tensors["r_hphp"]),
        sample_count=int(tensors["sample_count"][0]),
    )
