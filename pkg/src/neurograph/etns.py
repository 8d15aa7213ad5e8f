"""ETNS: a minimal named-tensor container with a bit-exact round trip.

Layout (all integers little-endian):

    magic   4 bytes  b"ETNS"
    version u32      1
    count   u32      number of entries
    entry   repeated:
        name_len u16, name UTF-8
        dtype    u8   (1 = float32, 2 = float64)
        ndim     u8
        dims     u32 each
        payload  row-major little-endian values

The format is deliberately trivial so any language can parse it.
"""

import struct
from collections import OrderedDict

import numpy as np

MAGIC = b"ETNS"
VERSION = 1

_DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_CODE_FOR_KIND = {"f4": 1, "f8": 2}


class EtnsError(Exception):
    """Base class for container format errors."""


class BadMagicError(EtnsError):
    """File does not start with the ETNS magic bytes."""


class UnsupportedVersionError(EtnsError):
    """File declares a version this reader does not understand."""


class TruncatedFileError(EtnsError):
    """File ends before the declared entries are complete."""


def write_tensors(path, tensors):
    """Write named tensors to ``path``.

    ``tensors`` maps name -> array; float32 stays float32, everything else is
    stored as float64. All values must be finite.
    """
    entries = []
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"tensor {name!r} contains non-finite values")
        if arr.dtype == np.float32:
            arr = arr.astype("<f4", copy=False)
        else:
            arr = arr.astype("<f8", copy=False)
        entries.append((name, arr))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(entries)))
        for name, arr in entries:
            raw_name = name.encode("utf-8")
            if len(raw_name) > 0xFFFF:
                raise ValueError(f"tensor name too long: {name!r}")
            if arr.ndim > 0xFF:
                raise ValueError(f"tensor {name!r} has too many dimensions")
            fh.write(struct.pack("<H", len(raw_name)))
            fh.write(raw_name)
            code = _CODE_FOR_KIND["f4" if arr.dtype == np.dtype("<f4") else "f8"]
            fh.write(struct.pack("<BB", code, arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(np.ascontiguousarray(arr).tobytes())


def read_tensors(path):
    """Read an ETNS file back into an ordered name -> array mapping."""
    with open(path, "rb") as fh:
        blob = fh.read()
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(blob):
            raise TruncatedFileError(f"file ends inside {what} (offset {pos}, need {n} bytes)")
        chunk = blob[pos : pos + n]
        pos += n
        return chunk

    if take(4, "magic") != MAGIC:
        raise BadMagicError(f"{path}: not an ETNS file")
    version, count = struct.unpack("<II", take(8, "header"))
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: version {version}, expected {VERSION}")
    out = OrderedDict()
    for i in range(count):
        (name_len,) = struct.unpack("<H", take(2, f"entry {i} name length"))
        name = take(name_len, f"entry {i} name").decode("utf-8")
        code, ndim = struct.unpack("<BB", take(2, f"entry {i} descriptor"))
        if code not in _DTYPE_CODES:
            raise EtnsError(f"{path}: entry {name!r} has unknown dtype code {code}")
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim, f"entry {i} dims")) if ndim else ()
        dtype = _DTYPE_CODES[code]
        n_items = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        payload = take(n_items * dtype.itemsize, f"entry {i} payload")
        out[name] = np.frombuffer(payload, dtype=dtype).reshape(dims).copy()
    return out
