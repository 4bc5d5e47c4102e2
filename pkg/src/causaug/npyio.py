"""Strict NPY v1.0/v2.0 codec.

The NPY file is the engine's only computational interchange format, so the
codec is written for bit-exactness rather than generality: headers are
validated field by field with byte offsets in every error, only little-endian
scalar dtypes and C-order layouts are accepted, and the writer emits the
canonical v1.0 header (64-byte aligned) so that save→load→save round-trips
are byte-identical.
"""

from __future__ import annotations

import ast
import struct
from pathlib import Path

import numpy as np

from .errors import NpyFormatError

MAGIC = b"\x93NUMPY"

# dtypes the engine is willing to exchange; everything is widened/narrowed to
# float32 at the tensor boundary.
_SUPPORTED_DESCRS = {
    "<f4": np.dtype("<f4"),
    "<f8": np.dtype("<f8"),
    "|i1": np.dtype("|i1"),
    "<i2": np.dtype("<i2"),
    "<i4": np.dtype("<i4"),
    "<i8": np.dtype("<i8"),
    "|u1": np.dtype("|u1"),
    "<u2": np.dtype("<u2"),
    "<u4": np.dtype("<u4"),
    "<u8": np.dtype("<u8"),
}


def read_npy_bytes(raw: bytes, source: str = "<bytes>") -> np.ndarray:
    """Parse NPY bytes into a C-order array, validating the header strictly."""
    if len(raw) < 8:
        raise NpyFormatError(f"{source}: truncated file ({len(raw)} bytes) at offset 0")
    if raw[:6] != MAGIC:
        raise NpyFormatError(
            f"{source}: bad magic {raw[:6]!r} at offset 0 (expected {MAGIC!r})"
        )
    major, minor = raw[6], raw[7]
    if (major, minor) not in ((1, 0), (2, 0)):
        raise NpyFormatError(
            f"{source}: unsupported format version {major}.{minor} at offset 6"
        )
    if major == 1:
        if len(raw) < 10:
            raise NpyFormatError(f"{source}: truncated header length at offset 8")
        (hlen,) = struct.unpack_from("<H", raw, 8)
        header_start = 10
    else:
        if len(raw) < 12:
            raise NpyFormatError(f"{source}: truncated header length at offset 8")
        (hlen,) = struct.unpack_from("<I", raw, 8)
        header_start = 12
    data_start = header_start + hlen
    if len(raw) < data_start:
        raise NpyFormatError(
            f"{source}: header claims {hlen} bytes but file ends at {len(raw)} "
            f"(offset {header_start})"
        )
    header_bytes = raw[header_start:data_start]
    if not header_bytes.endswith(b"\n"):
        raise NpyFormatError(
            f"{source}: header not newline-terminated at offset {data_start - 1}"
        )
    try:
        header_text = header_bytes.decode("latin1")
        header = ast.literal_eval(header_text.strip())
    except (ValueError, SyntaxError) as exc:
        raise NpyFormatError(
            f"{source}: unparsable header dict at offset {header_start}: {exc}"
        ) from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise NpyFormatError(
            f"{source}: header keys must be exactly descr/fortran_order/shape "
            f"at offset {header_start}, got {sorted(header) if isinstance(header, dict) else type(header).__name__}"
        )
    descr = header["descr"]
    if descr not in _SUPPORTED_DESCRS:
        raise NpyFormatError(
            f"{source}: unsupported dtype descr {descr!r} at offset {header_start} "
            f"(supported: {sorted(_SUPPORTED_DESCRS)})"
        )
    if header["fortran_order"] is not False:
        raise NpyFormatError(
            f"{source}: fortran_order={header['fortran_order']!r} at offset "
            f"{header_start}; only C-order layout is supported"
        )
    shape = header["shape"]
    if (
        not isinstance(shape, tuple)
        or not all(isinstance(s, int) and s >= 0 for s in shape)
        or not 2 <= len(shape) <= 3
    ):
        raise NpyFormatError(
            f"{source}: shape must be a 2-D or 3-D tuple of ints at offset "
            f"{header_start}, got {shape!r}"
        )
    dtype = _SUPPORTED_DESCRS[descr]
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    expected = count * dtype.itemsize
    payload = raw[data_start:]
    if len(payload) != expected:
        raise NpyFormatError(
            f"{source}: payload is {len(payload)} bytes at offset {data_start}, "
            f"expected {expected} for shape {shape} dtype {descr}"
        )
    arr = np.frombuffer(payload, dtype=dtype, count=count).reshape(shape)
    return arr.copy()  # decouple from the input buffer, make writable


def read_npy(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise NpyFormatError(f"{path}: cannot read: {exc}") from exc
    return read_npy_bytes(raw, source=str(path))


def npy_bytes(arr: np.ndarray) -> bytes:
    """Serialize an array as canonical NPY v1.0 bytes."""
    arr = np.ascontiguousarray(arr)
    descr = None
    for d, dt in _SUPPORTED_DESCRS.items():
        if dt == arr.dtype.newbyteorder("<"):
            descr = d
            break
    if descr is None:
        raise NpyFormatError(f"refusing to write unsupported dtype {arr.dtype}")
    if not 2 <= arr.ndim <= 3:
        raise NpyFormatError(f"refusing to write {arr.ndim}-D array (2-D/3-D only)")
    header = "{'descr': '%s', 'fortran_order': False, 'shape': %s, }" % (
        descr,
        str(arr.shape),
    )
    # pad with spaces + newline so magic+version+len+header is 64-byte aligned
    unpadded = len(MAGIC) + 2 + 2 + len(header) + 1
    pad = (64 - unpadded % 64) % 64
    header = header + " " * pad + "\n"
    out = bytearray()
    out += MAGIC
    out += bytes((1, 0))
    out += struct.pack("<H", len(header))
    out += header.encode("latin1")
    out += arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes(order="C")
    return bytes(out)


def write_npy(path: str | Path, arr: np.ndarray) -> None:
    path = Path(path)
    try:
        path.write_bytes(npy_bytes(arr))
    except OSError as exc:
        raise NpyFormatError(f"{path}: cannot write: {exc}") from exc
